#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evalkit/alignment.hpp"
#include "evalkit/degradation.hpp"
#include "evalkit/image.hpp"
#include "evalkit/perception.hpp"

namespace evalkit::analysis {

/// PSNR stored for identical images so records stay numeric.
inline constexpr double kPsnrCap = 99.0;

enum class RecordStatus { kOk, kSkipped, kFailed };
std::string_view ToString(RecordStatus s);
RecordStatus ParseRecordStatus(std::string_view s);

/// One (ground truth, low-quality input, restoration) triple's metrics.
/// Metric fields are only meaningful when status is kOk; niqe and alignment
/// are absent when that axis was not requested.
struct EvaluationRecord {
  std::string image_id;
  std::string model;
  degradation::DegradationSpec spec;
  RecordStatus status = RecordStatus::kOk;
  std::string note;

  double psnr = 0.0;
  bool psnr_capped = false;
  double ssim = 0.0;
  std::optional<double> niqe;
  std::optional<alignment::AlignmentScore> alignment;

  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

/// Stores `psnr_db` into the record, capping infinity at kPsnrCap.
void SetPsnr(EvaluationRecord& r, double psnr_db);

struct MetricMean {
  double mean = 0.0;
  std::size_t count = 0;
};

struct Summary {
  std::string model;
  std::optional<degradation::DegradationSpec> spec;  // set when grouped by spec
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  std::size_t psnr_capped = 0;  // excluded from psnr.mean
  MetricMean psnr;
  MetricMean ssim;
  MetricMean niqe;
  MetricMean alignment;
  std::optional<alignment::Orientation> alignment_orientation;
  std::optional<alignment::BackendKind> alignment_backend;
  std::string alignment_modes;  // "gt", "lq", "gt+lq" or empty
};

enum class GroupBy { kModel, kModelAndSpec };

/// Arithmetic means per group over kOk records, folded in (image id, spec)
/// order so the result does not depend on input order. Groups are sorted by
/// (model, spec). Throws ParameterError on an empty record set.
std::vector<Summary> Aggregate(std::span<const EvaluationRecord> records,
                               GroupBy group_by = GroupBy::kModel);

struct Point {
  double x = 0.0;
  double y = 0.0;
  std::size_t index = 0;  // caller's row index, carried through
};

/// Non-dominated subset (both axes lower-better), sorted by (x, y, index).
/// Exact duplicates of a front point are kept.
std::vector<Point> ParetoFront(std::span<const Point> points);

/// One level of a degradation sweep.
struct SweepLevel {
  double parameter = 0.0;  // value written in the "level" column
  degradation::DegradationSpec spec;
};

struct GtImage {
  std::string id;
  ImagePlane image;
};

/// Maps (level index, image id, degraded input) to the restoration to score.
using Restorer = std::function<ImagePlane(std::size_t level, const std::string& id,
                                          const ImagePlane& lq)>;

/// Restorer returning its input unchanged.
Restorer IdentityRestorer();

/// Restorer reading precomputed outputs; throws ManifestError when a level or
/// image is missing.
Restorer TableRestorer(std::map<std::size_t, std::map<std::string, ImagePlane>> outputs);

struct SweepOptions {
  bool psnr = false;
  bool ssim = true;
  bool niqe = true;
  bool alignment = true;
  const perception::PristineModel* pristine = nullptr;  // required for niqe
  const alignment::SemanticBackend* backend = nullptr;  // defaults to builtin
  alignment::ModeSelection mode;
  std::size_t jobs = 1;
};

struct SweepRow {
  double level = 0.0;
  std::string metric;
  double mean = 0.0;
  std::size_t count = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // level-major, metrics in fixed order
  // metric -> [level][image] in corpus order
  std::map<std::string, std::vector<std::vector<double>>> per_image;
};

/// Degrades the corpus at every level, restores with `restorer` and scores
/// the restorations against the ground truth. Restorations whose size differs
/// from the ground truth are cubic-resized to it for distortion metrics.
SweepResult DegradationSweep(std::span<const GtImage> corpus,
                             std::span<const SweepLevel> levels,
                             const Restorer& restorer, const SweepOptions& options);

struct ModelMeta {
  std::string model;
  std::uint64_t param_count = 0;
  std::optional<double> latency_ms;
};

struct ResourceRow {
  std::string model;
  std::uint64_t param_count = 0;
  std::optional<double> latency_ms;
  Summary summary;
};

/// Joins model-level summaries with their metadata, one row per summary.
/// Throws ManifestError for a summarized model without metadata and for
/// metadata naming a model that has no summary.
std::vector<ResourceRow> ResourceReport(std::span<const Summary> summaries,
                                        std::span<const ModelMeta> metas);

}  // namespace evalkit::analysis

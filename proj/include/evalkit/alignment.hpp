#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalkit/degradation.hpp"
#include "evalkit/distortion.hpp"
#include "evalkit/image.hpp"

// Alignment: semantic consistency between a restoration and the input it
// was restored from. Two approximations are provided:
//   gt-side  S(restored, ground truth)        for mild degradations
//   lq-side  S(D(restored), low-quality input) for severe ones, re-applying
//            the exact seeded degradation D that produced the input.
namespace evalkit::alignment {

enum class BackendKind { kBuiltinDescriptor, kEmbeddingManifest, kSsim };
enum class Orientation { kLowerBetter, kHigherBetter };
enum class Mode { kGtSide, kLqSide };

std::string_view ToString(BackendKind kind);
std::string_view ToString(Orientation o);
std::string_view ToString(Mode mode);
BackendKind ParseBackendKind(std::string_view s);
Mode ParseMode(std::string_view s);

inline constexpr std::size_t kDescriptorGrid = 8;
inline constexpr std::size_t kDescriptorBins = 8;
inline constexpr std::size_t kDescriptorSide = 64;
inline constexpr std::size_t kDescriptorDim =
    kDescriptorGrid * kDescriptorGrid * kDescriptorBins;

/// Deterministic 512-d gradient-orientation descriptor: luminance resized to
/// 64x64, magnitude-weighted 8-bin orientation histograms over an 8x8 cell
/// grid, L2-normalized (all-zero maps to the first basis vector).
std::vector<double> BuiltinDescriptor(const ImagePlane& img);

/// 1 - cos(u, v), in [0, 2]. Throws ParameterError on dimension mismatch or
/// a zero vector.
double EmbeddingDistance(std::span<const double> u, std::span<const double> v);

/// Precomputed whole-image embeddings from an external encoder.
class EmbeddingManifest {
 public:
  EmbeddingManifest(std::string encoder, std::size_t dim,
                    std::map<std::string, std::vector<double>> entries);

  static EmbeddingManifest FromJson(const nlohmann::json& j);
  static EmbeddingManifest Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  const std::string& encoder() const { return encoder_; }
  std::size_t dim() const { return dim_; }
  const std::map<std::string, std::vector<double>>& entries() const { return entries_; }
  bool Contains(const std::string& id) const { return entries_.contains(id); }

  /// Throws LookupError for an unknown id.
  std::span<const double> Lookup(const std::string& id) const;

 private:
  std::string encoder_;
  std::size_t dim_;
  std::map<std::string, std::vector<double>> entries_;
};

/// Which embedding table an image is looked up in.
enum class Role { kGt, kLq, kRestored, kRedegraded };
std::string_view ToString(Role role);

/// An image taking part in a comparison plus the key its embedding is
/// stored under (image id for gt/lq, "<model>/<image id>" for restorations).
struct Subject {
  const ImagePlane* image = nullptr;
  std::string key;
};

/// Semantic similarity S(., .). Immutable after construction.
class SemanticBackend {
 public:
  static SemanticBackend Builtin();
  static SemanticBackend Ssim(distortion::SsimParams params = {});
  /// Requires at least one manifest; all manifests must share one dimension.
  static SemanticBackend Embeddings(
      std::map<Role, std::shared_ptr<const EmbeddingManifest>> manifests);

  BackendKind kind() const { return kind_; }
  Orientation orientation() const {
    return kind_ == BackendKind::kSsim ? Orientation::kHigherBetter
                                       : Orientation::kLowerBetter;
  }

  /// Distance (embedding kinds) or SSIM similarity between two subjects.
  /// For SSIM, the smaller image is cubic-resized up to the larger first.
  double Compare(const Subject& a, Role role_a, const Subject& b, Role role_b) const;

 private:
  explicit SemanticBackend(BackendKind kind) : kind_(kind) {}

  std::span<const double> Embedding(const Subject& s, Role role) const;

  BackendKind kind_;
  distortion::SsimParams ssim_params_;
  std::map<Role, std::shared_ptr<const EmbeddingManifest>> manifests_;
};

struct AlignmentScore {
  double value = 0.0;
  Orientation orientation = Orientation::kLowerBetter;
  Mode mode = Mode::kGtSide;
  BackendKind backend = BackendKind::kBuiltinDescriptor;

  /// True when `value` beats `other.value` under this score's orientation.
  bool Better(const AlignmentScore& other) const;

  friend bool operator==(const AlignmentScore&, const AlignmentScore&) = default;
};

AlignmentScore AlignGtSide(const Subject& restored, const Subject& gt,
                           const SemanticBackend& backend);

/// Re-degrades `restored` with `spec` (which must be the exact seeded spec
/// that produced `lq`) and compares the result against `lq`. Set
/// `quantize_8bit` when lq was stored as an 8-bit file so the re-degraded
/// image lands on the same lattice.
/// Throws DimensionError if the re-degraded size differs from lq's.
AlignmentScore AlignLqSide(const Subject& restored, const Subject& lq,
                           const degradation::DegradationSpec& spec,
                           const SemanticBackend& backend,
                           bool quantize_8bit = false);

struct ModeSelection {
  double gamma_threshold = 0.5;
  std::optional<Mode> forced;
  bool quantize_redegraded = false;  // forwarded to AlignLqSide

  /// gt-side when the retention rate is at least the threshold.
  Mode Choose(const degradation::DegradationSpec& spec) const;
};

AlignmentScore AlignAuto(const Subject& restored, const Subject& gt,
                         const Subject& lq,
                         const degradation::DegradationSpec& spec,
                         const SemanticBackend& backend,
                         const ModeSelection& selection = {});

}  // namespace evalkit::alignment

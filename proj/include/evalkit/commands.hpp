#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evalkit/alignment.hpp"

// Subcommand bodies behind the ir-evalkit CLI. Each returns the process exit
// code: 0 success, 1 evaluation failures, 2 usage or manifest errors.
namespace evalkit::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailures = 1;
inline constexpr int kExitUsage = 2;

/// Output files are named by appending a fixed suffix to this prefix, e.g.
/// "out/run_" + "records.csv". A prefix naming a directory (trailing slash or
/// existing directory) places the files inside it.
std::filesystem::path PrefixedPath(const std::string& prefix, const std::string& suffix);

struct DegradeOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

/// Writes <out>/lq/<id>.png per entry and <out>/manifest.json with lq paths.
int RunDegrade(const DegradeOptions& options, std::ostream& log);

struct TrainNiqeOptions {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_path;
  std::size_t patch_size = 96;
  double sharpness_fraction = 0.75;
  std::size_t jobs = 1;
};

int RunTrainNiqe(const TrainNiqeOptions& options, std::ostream& log);

struct AlignmentOverrides {
  std::optional<alignment::BackendKind> backend;
  std::optional<double> gamma_threshold;
  std::optional<alignment::Mode> force_mode;
};

struct EvaluateOptions {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> pristine;
  std::string out_prefix;
  AlignmentOverrides alignment;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

/// Emits records.csv, records.json, summary.csv and summary.md.
int RunEvaluate(const EvaluateOptions& options, std::ostream& log);

struct SweepCommandOptions {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> pristine;
  std::string out_prefix;
  std::vector<double> levels = {1, 2, 4, 8, 12, 16, 20};  // blur sigma
  double downsample_alpha = 1.0;
  double noise_beta = 0.0;
  std::vector<std::string> metrics;  // empty: ssim, niqe (with pristine), alignment
  // <dir>/<level index>/<image id>.png; identity restorer when absent.
  std::optional<std::filesystem::path> outputs_dir;
  AlignmentOverrides alignment;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

/// Emits sweep.csv, sweep_per_image.csv and sweep.svg.
int RunSweep(const SweepCommandOptions& options, std::ostream& log);

struct TradeoffOptions {
  std::filesystem::path records;
  std::optional<std::filesystem::path> metas;
  std::string out_prefix;
};

/// Emits the perception-distortion and alignment-perception planes with
/// their Pareto fronts, an SVG per plane and, with metas, resource.csv.
int RunTradeoff(const TradeoffOptions& options, std::ostream& log);

}  // namespace evalkit::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalkit/alignment.hpp"
#include "evalkit/analysis.hpp"
#include "evalkit/degradation.hpp"

namespace evalkit::harness {

/// Environment variable supplying the seed of entries whose spec has none.
inline constexpr const char* kSeedEnvVar = "IR_EVALKIT_SEED";

struct ManifestEntry {
  std::string id;
  std::filesystem::path gt_path;
  std::optional<std::filesystem::path> lq_path;
  degradation::DegradationSpec spec;
  std::map<std::string, std::filesystem::path> restorations;  // model -> path
};

struct AlignmentConfig {
  alignment::BackendKind backend = alignment::BackendKind::kBuiltinDescriptor;
  alignment::ModeSelection selection;
};

/// Dataset manifest. Paths are stored resolved against the manifest's own
/// directory; ToJson writes them relative to a chosen directory.
struct DatasetManifest {
  std::string task_name;
  AlignmentConfig alignment;
  std::map<alignment::Role, std::filesystem::path> embeddings;
  std::vector<ManifestEntry> entries;  // sorted by id

  /// `default_seed` is used for specs without a "seed"; ids must be unique.
  /// Throws ManifestError on schema violations.
  static DatasetManifest FromJson(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir,
                                  std::uint64_t default_seed);
  static DatasetManifest Load(const std::filesystem::path& path,
                              std::uint64_t default_seed);

  nlohmann::json ToJson(const std::filesystem::path& relative_to) const;
  void Save(const std::filesystem::path& path) const;

  /// Sorted, de-duplicated model names across all entries.
  std::vector<std::string> Models() const;
};

/// Seed for manifest entries lacking one: the --seed flag when given, else
/// IR_EVALKIT_SEED, else 0. Throws ParameterError on an unparsable env value.
std::uint64_t ResolveDefaultSeed(std::optional<std::uint64_t> flag_seed);

nlohmann::json SpecToJson(const degradation::DegradationSpec& spec);
degradation::DegradationSpec SpecFromJson(const nlohmann::json& j,
                                          std::uint64_t default_seed);

/// Model metadata file: {"models":[{"name":..,"params":..,"latency_ms":..}]}.
std::vector<analysis::ModelMeta> LoadModelMetas(const std::filesystem::path& path);

}  // namespace evalkit::harness

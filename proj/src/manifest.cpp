#include "evalkit/manifest.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "evalkit/error.hpp"

namespace evalkit::harness {

namespace fs = std::filesystem;

namespace {

nlohmann::json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot read " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::string Relative(const fs::path& p, const fs::path& dir) {
  return p.lexically_proximate(dir).generic_string();
}

alignment::Role ParseRole(const std::string& s) {
  if (s == "gt") return alignment::Role::kGt;
  if (s == "lq") return alignment::Role::kLq;
  if (s == "restored") return alignment::Role::kRestored;
  if (s == "redegraded") return alignment::Role::kRedegraded;
  throw ManifestError("unknown embedding role '" + s + "'");
}

}  // namespace

nlohmann::json SpecToJson(const degradation::DegradationSpec& spec) {
  return {{"blur_sigma", spec.blur_sigma},
          {"downsample_alpha", spec.downsample_alpha},
          {"noise_beta", spec.noise_beta},
          {"seed", spec.seed}};
}

degradation::DegradationSpec SpecFromJson(const nlohmann::json& j,
                                          std::uint64_t default_seed) {
  degradation::DegradationSpec s;
  s.blur_sigma = j.value("blur_sigma", 0.0);
  s.downsample_alpha = j.value("downsample_alpha", 1.0);
  s.noise_beta = j.value("noise_beta", 0.0);
  s.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : default_seed;
  try {
    s.Validate();
  } catch (const ParameterError& e) {
    throw ManifestError(std::string("invalid degradation spec: ") + e.what());
  }
  return s;
}

std::uint64_t ResolveDefaultSeed(std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return *flag_seed;
  const char* env = std::getenv(kSeedEnvVar);
  if (!env || !*env) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') {
    throw ParameterError(std::string(kSeedEnvVar) + " is not an unsigned integer");
  }
  return v;
}

DatasetManifest DatasetManifest::FromJson(const nlohmann::json& j,
                                          const fs::path& base_dir,
                                          std::uint64_t default_seed) {
  try {
    if (j.value("version", 1) != 1) throw ManifestError("unsupported manifest version");
    DatasetManifest m;
    m.task_name = j.value("task", std::string{});
    if (j.contains("alignment")) {
      const auto& a = j["alignment"];
      m.alignment.backend =
          alignment::ParseBackendKind(a.value("backend", std::string("builtin")));
      m.alignment.selection.gamma_threshold = a.value("gamma_threshold", 0.5);
      if (a.contains("force_mode") && !a["force_mode"].is_null()) {
        m.alignment.selection.forced =
            alignment::ParseMode(a["force_mode"].get<std::string>());
      }
    }
    if (j.contains("embeddings")) {
      for (const auto& [role, path] : j["embeddings"].items()) {
        m.embeddings[ParseRole(role)] = Resolve(base_dir, path.get<std::string>());
      }
    }
    std::set<std::string> seen;
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      const std::string gt = e.at("gt").get<std::string>();
      entry.gt_path = Resolve(base_dir, gt);
      try {
        entry.id = e.contains("id") ? ImageId(e["id"].get<std::string>()).str()
                                    : ImageId::FromRelativePath(gt).str();
      } catch (const ParameterError& err) {
        throw ManifestError(err.what());
      }
      if (!seen.insert(entry.id).second) {
        throw ManifestError("duplicate image id '" + entry.id + "'");
      }
      if (e.contains("lq") && !e["lq"].is_null()) {
        entry.lq_path = Resolve(base_dir, e["lq"].get<std::string>());
      }
      if (!e.contains("spec")) {
        throw ManifestError("entry '" + entry.id + "' has no degradation spec");
      }
      entry.spec = SpecFromJson(e["spec"], default_seed);
      if (e.contains("restorations")) {
        for (const auto& [model, path] : e["restorations"].items()) {
          if (model.empty()) throw ManifestError("empty model name");
          entry.restorations[model] = Resolve(base_dir, path.get<std::string>());
        }
      }
      m.entries.push_back(std::move(entry));
    }
    std::sort(m.entries.begin(), m.entries.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  } catch (const ParameterError& e) {
    throw ManifestError(e.what());
  }
}

DatasetManifest DatasetManifest::Load(const fs::path& path, std::uint64_t default_seed) {
  const fs::path base = fs::absolute(path).parent_path();
  return FromJson(ReadJsonFile(path), base, default_seed);
}

nlohmann::json DatasetManifest::ToJson(const fs::path& relative_to) const {
  const fs::path dir = fs::absolute(relative_to).lexically_normal();
  nlohmann::json j;
  j["version"] = 1;
  j["task"] = task_name;
  nlohmann::json a = {{"backend", std::string(alignment::ToString(alignment.backend))},
                      {"gamma_threshold", alignment.selection.gamma_threshold}};
  a["force_mode"] = alignment.selection.forced
                        ? nlohmann::json(std::string(alignment::ToString(*alignment.selection.forced)))
                        : nlohmann::json(nullptr);
  j["alignment"] = a;
  if (!embeddings.empty()) {
    nlohmann::json e = nlohmann::json::object();
    for (const auto& [role, path] : embeddings) {
      e[std::string(alignment::ToString(role))] = Relative(fs::absolute(path), dir);
    }
    j["embeddings"] = e;
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& entry : this->entries) {
    nlohmann::json e;
    e["id"] = entry.id;
    e["gt"] = Relative(fs::absolute(entry.gt_path), dir);
    if (entry.lq_path) e["lq"] = Relative(fs::absolute(*entry.lq_path), dir);
    e["spec"] = SpecToJson(entry.spec);
    nlohmann::json r = nlohmann::json::object();
    for (const auto& [model, path] : entry.restorations) {
      r[model] = Relative(fs::absolute(path), dir);
    }
    e["restorations"] = r;
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  return j;
}

void DatasetManifest::Save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << ToJson(fs::absolute(path).parent_path()).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> DatasetManifest::Models() const {
  std::set<std::string> names;
  for (const auto& e : entries) {
    for (const auto& [model, path] : e.restorations) names.insert(model);
  }
  return {names.begin(), names.end()};
}

std::vector<analysis::ModelMeta> LoadModelMetas(const fs::path& path) {
  const nlohmann::json j = ReadJsonFile(path);
  try {
    std::vector<analysis::ModelMeta> out;
    for (const auto& m : j.at("models")) {
      analysis::ModelMeta meta;
      meta.model = m.at("name").get<std::string>();
      meta.param_count = m.at("params").get<std::uint64_t>();
      if (m.contains("latency_ms") && !m["latency_ms"].is_null()) {
        meta.latency_ms = m["latency_ms"].get<double>();
      }
      out.push_back(std::move(meta));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

}  // namespace evalkit::harness

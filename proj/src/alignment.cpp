#include "evalkit/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "evalkit/error.hpp"

namespace evalkit::alignment {

std::string_view ToString(BackendKind kind) {
  switch (kind) {
    case BackendKind::kBuiltinDescriptor: return "builtin";
    case BackendKind::kEmbeddingManifest: return "embeddings";
    case BackendKind::kSsim: return "ssim";
  }
  return "?";
}

std::string_view ToString(Orientation o) {
  return o == Orientation::kLowerBetter ? "lower-better" : "higher-better";
}

std::string_view ToString(Mode mode) {
  return mode == Mode::kGtSide ? "gt" : "lq";
}

std::string_view ToString(Role role) {
  switch (role) {
    case Role::kGt: return "gt";
    case Role::kLq: return "lq";
    case Role::kRestored: return "restored";
    case Role::kRedegraded: return "redegraded";
  }
  return "?";
}

BackendKind ParseBackendKind(std::string_view s) {
  if (s == "builtin") return BackendKind::kBuiltinDescriptor;
  if (s == "embeddings") return BackendKind::kEmbeddingManifest;
  if (s == "ssim") return BackendKind::kSsim;
  throw ParameterError("unknown alignment backend '" + std::string(s) + "'");
}

Mode ParseMode(std::string_view s) {
  if (s == "gt") return Mode::kGtSide;
  if (s == "lq") return Mode::kLqSide;
  throw ParameterError("unknown alignment mode '" + std::string(s) + "'");
}

std::vector<double> BuiltinDescriptor(const ImagePlane& img) {
  const ImagePlane small =
      degradation::Resize(ToLuminance(img), kDescriptorSide, kDescriptorSide);
  constexpr auto n = static_cast<std::ptrdiff_t>(kDescriptorSide);
  constexpr std::size_t cell = kDescriptorSide / kDescriptorGrid;
  const auto px = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    return small.at(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x, 0, n - 1)),
                    static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y, 0, n - 1)));
  };

  std::vector<double> desc(kDescriptorDim, 0.0);
  for (std::ptrdiff_t y = 0; y < n; ++y) {
    for (std::ptrdiff_t x = 0; x < n; ++x) {
      const double gx = px(x + 1, y) - px(x - 1, y);
      const double gy = px(x, y + 1) - px(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      const double theta = std::atan2(gy, gx) + std::numbers::pi;  // [0, 2pi]
      auto bin = static_cast<std::size_t>(theta / (2.0 * std::numbers::pi) *
                                          kDescriptorBins);
      bin %= kDescriptorBins;
      const std::size_t c = (static_cast<std::size_t>(y) / cell) * kDescriptorGrid +
                            static_cast<std::size_t>(x) / cell;
      desc[c * kDescriptorBins + bin] += mag;
    }
  }
  double norm = 0.0;
  for (double v : desc) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    desc[0] = 1.0;
    return desc;
  }
  for (double& v : desc) v /= norm;
  return desc;
}

double EmbeddingDistance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw ParameterError("embedding dimensions differ or are empty");
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ParameterError("zero embedding vector");
  // sqrt(uu * vv) rather than sqrt(uu) * sqrt(vv): identical inputs then
  // give cos == 1 exactly.
  const double cosine = std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

EmbeddingManifest::EmbeddingManifest(std::string encoder, std::size_t dim,
                                     std::map<std::string, std::vector<double>> entries)
    : encoder_(std::move(encoder)), dim_(dim), entries_(std::move(entries)) {
  if (dim_ < 1) throw ParameterError("embedding dim must be >= 1");
  for (const auto& [id, vec] : entries_) {
    if (id.empty()) throw FormatError("embedding manifest has an empty id");
    if (vec.size() != dim_) {
      throw FormatError("embedding '" + id + "' has length " +
                        std::to_string(vec.size()) + ", expected " +
                        std::to_string(dim_));
    }
  }
}

EmbeddingManifest EmbeddingManifest::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) {
      throw FormatError("unsupported embedding manifest version");
    }
    const auto& raw = j.at("entries");
    if (!raw.is_object()) throw FormatError("embedding entries must be an object");
    std::map<std::string, std::vector<double>> entries;
    for (const auto& [id, vec] : raw.items()) {
      entries.emplace(id, vec.get<std::vector<double>>());
    }
    return EmbeddingManifest(j.at("encoder").get<std::string>(),
                             j.at("dim").get<std::size_t>(), std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed embedding manifest: ") + e.what());
  }
}

EmbeddingManifest EmbeddingManifest::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return FromJson(j);
}

nlohmann::json EmbeddingManifest::ToJson() const {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [id, vec] : entries_) entries[id] = vec;
  return {{"version", 1}, {"encoder", encoder_}, {"dim", dim_}, {"entries", entries}};
}

std::span<const double> EmbeddingManifest::Lookup(const std::string& id) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw LookupError("no '" + encoder_ + "' embedding for '" + id + "'");
  }
  return it->second;
}

SemanticBackend SemanticBackend::Builtin() {
  return SemanticBackend(BackendKind::kBuiltinDescriptor);
}

SemanticBackend SemanticBackend::Ssim(distortion::SsimParams params) {
  params.Validate();
  SemanticBackend b(BackendKind::kSsim);
  b.ssim_params_ = params;
  return b;
}

SemanticBackend SemanticBackend::Embeddings(
    std::map<Role, std::shared_ptr<const EmbeddingManifest>> manifests) {
  std::optional<std::size_t> dim;
  for (const auto& [role, m] : manifests) {
    if (!m) throw ParameterError("null embedding manifest");
    if (dim && *dim != m->dim()) {
      throw ParameterError("embedding manifests disagree on dimension");
    }
    dim = m->dim();
  }
  if (!dim) throw ParameterError("embedding backend needs at least one manifest");
  SemanticBackend b(BackendKind::kEmbeddingManifest);
  b.manifests_ = std::move(manifests);
  return b;
}

std::span<const double> SemanticBackend::Embedding(const Subject& s, Role role) const {
  const auto it = manifests_.find(role);
  if (it == manifests_.end()) {
    throw LookupError("no embedding manifest for role '" + std::string(ToString(role)) + "'");
  }
  return it->second->Lookup(s.key);
}

double SemanticBackend::Compare(const Subject& a, Role role_a, const Subject& b,
                                Role role_b) const {
  switch (kind_) {
    case BackendKind::kEmbeddingManifest:
      return EmbeddingDistance(Embedding(a, role_a), Embedding(b, role_b));
    case BackendKind::kBuiltinDescriptor: {
      if (!a.image || !b.image) throw ParameterError("builtin backend needs images");
      return EmbeddingDistance(BuiltinDescriptor(*a.image), BuiltinDescriptor(*b.image));
    }
    case BackendKind::kSsim: {
      if (!a.image || !b.image) throw ParameterError("ssim backend needs images");
      const ImagePlane& ia = *a.image;
      const ImagePlane& ib = *b.image;
      if (ia.width() == ib.width() && ia.height() == ib.height()) {
        return distortion::Ssim(ia, ib, ssim_params_);
      }
      const bool a_smaller = ia.width() * ia.height() < ib.width() * ib.height();
      if (a_smaller) {
        return distortion::Ssim(degradation::Resize(ia, ib.width(), ib.height()), ib,
                                ssim_params_);
      }
      return distortion::Ssim(ia, degradation::Resize(ib, ia.width(), ia.height()),
                              ssim_params_);
    }
  }
  throw ParameterError("unknown backend");
}

bool AlignmentScore::Better(const AlignmentScore& other) const {
  return orientation == Orientation::kLowerBetter ? value < other.value
                                                  : value > other.value;
}

AlignmentScore AlignGtSide(const Subject& restored, const Subject& gt,
                           const SemanticBackend& backend) {
  AlignmentScore s;
  s.value = backend.Compare(restored, Role::kRestored, gt, Role::kGt);
  s.orientation = backend.orientation();
  s.mode = Mode::kGtSide;
  s.backend = backend.kind();
  return s;
}

AlignmentScore AlignLqSide(const Subject& restored, const Subject& lq,
                           const degradation::DegradationSpec& spec,
                           const SemanticBackend& backend, bool quantize_8bit) {
  if (!restored.image || !lq.image) {
    throw ParameterError("lq-side alignment needs the restored and lq images");
  }
  ImagePlane redegraded = degradation::Degrade(*restored.image, spec);
  if (quantize_8bit) redegraded = QuantizeTo8Bit(redegraded);
  if (redegraded.width() != lq.image->width() ||
      redegraded.height() != lq.image->height()) {
    throw DimensionError("re-degraded restoration is " +
                         std::to_string(redegraded.width()) + "x" +
                         std::to_string(redegraded.height()) + " but lq is " +
                         std::to_string(lq.image->width()) + "x" +
                         std::to_string(lq.image->height()));
  }
  AlignmentScore s;
  s.value = backend.Compare(Subject{&redegraded, restored.key}, Role::kRedegraded, lq,
                            Role::kLq);
  s.orientation = backend.orientation();
  s.mode = Mode::kLqSide;
  s.backend = backend.kind();
  return s;
}

Mode ModeSelection::Choose(const degradation::DegradationSpec& spec) const {
  if (forced) return *forced;
  return degradation::RetentionRate(spec) >= gamma_threshold ? Mode::kGtSide
                                                              : Mode::kLqSide;
}

AlignmentScore AlignAuto(const Subject& restored, const Subject& gt,
                         const Subject& lq,
                         const degradation::DegradationSpec& spec,
                         const SemanticBackend& backend,
                         const ModeSelection& selection) {
  return selection.Choose(spec) == Mode::kGtSide
             ? AlignGtSide(restored, gt, backend)
             : AlignLqSide(restored, lq, spec, backend, selection.quantize_redegraded);
}

}  // namespace evalkit::alignment

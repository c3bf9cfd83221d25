#include "evalkit/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "evalkit/degradation.hpp"
#include "evalkit/error.hpp"
#include "evalkit/parallel.hpp"

namespace evalkit::perception {

namespace {

constexpr std::size_t kMscnWindow = 7;
constexpr double kMscnSigma = 7.0 / 6.0;
constexpr double kMscnStabilizer = 1.0;

const std::vector<double>& MscnTaps() {
  static const std::vector<double> taps = [] {
    std::vector<double> w(kMscnWindow);
    const auto half = static_cast<double>(kMscnWindow / 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < kMscnWindow; ++i) {
      const double d = static_cast<double>(i) - half;
      w[i] = std::exp(-d * d / (2.0 * kMscnSigma * kMscnSigma));
      sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return taps;
}

// Same-size separable filter with reflect-101 borders.
std::vector<double> FilterSame(std::span<const double> src, std::size_t w,
                               std::size_t h, const std::vector<double>& taps) {
  using degradation::Reflect101;
  const auto r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  std::vector<double> tmp(w * h), out(w * h);
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        acc += taps[k + r] * src[y * sw + Reflect101(x + k, sw)];
      }
      tmp[y * sw + x] = acc;
    }
  }
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        acc += taps[k + r] * tmp[Reflect101(y + k, sh) * sw + x];
      }
      out[y * sw + x] = acc;
    }
  }
  return out;
}

struct ShapeTable {
  std::vector<double> shape;
  std::vector<double> ratio;
};

const ShapeTable& GetShapeTable() {
  static const ShapeTable table = [] {
    ShapeTable t;
    const auto steps = static_cast<std::size_t>(
        std::llround((kShapeGridMax - kShapeGridMin) / kShapeGridStep));
    t.shape.reserve(steps + 1);
    t.ratio.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
      const double a = kShapeGridMin + static_cast<double>(k) * kShapeGridStep;
      t.shape.push_back(a);
      t.ratio.push_back(GgdMomentRatio(a));
    }
    return t;
  }();
  return table;
}

void RequireFitSamples(std::span<const double> samples) {
  if (samples.size() < kMinFitSamples) {
    throw ParameterError("distribution fit needs at least " +
                         std::to_string(kMinFitSamples) + " samples");
  }
}

}  // namespace

MscnField MscnFromField(std::span<const double> field, std::size_t width,
                        std::size_t height) {
  const auto& taps = MscnTaps();
  std::vector<double> sq(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) sq[i] = field[i] * field[i];
  const auto mu = FilterSame(field, width, height, taps);
  const auto second = FilterSame(sq, width, height, taps);

  MscnField out;
  out.width = width;
  out.height = height;
  out.coefficients.resize(field.size());
  out.local_sigma.resize(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double sigma = std::sqrt(std::max(0.0, second[i] - mu[i] * mu[i]));
    out.local_sigma[i] = sigma;
    out.coefficients[i] = (field[i] - mu[i]) / (sigma + kMscnStabilizer);
  }
  return out;
}

MscnField Mscn(const ImagePlane& luma) {
  if (luma.channels() != 1) {
    throw ParameterError("MSCN requires a single-channel luminance plane");
  }
  const auto src = luma.data();
  std::vector<double> scaled(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) scaled[i] = src[i] * 255.0;
  return MscnFromField(scaled, luma.width(), luma.height());
}

double GgdMomentRatio(double shape) {
  return std::exp(2.0 * std::lgamma(2.0 / shape) - std::lgamma(1.0 / shape) -
                  std::lgamma(3.0 / shape));
}

double ShapeFromMomentRatio(double ratio) {
  const auto& t = GetShapeTable();
  std::size_t best = 0;
  double best_err = std::abs(ratio - t.ratio[0]);
  for (std::size_t k = 1; k < t.ratio.size(); ++k) {
    const double err = std::abs(ratio - t.ratio[k]);
    if (err < best_err) {
      best_err = err;
      best = k;
    }
  }
  return t.shape[best];
}

GgdFit FitGgd(std::span<const double> samples) {
  RequireFitSamples(samples);
  double abs_sum = 0.0, sq_sum = 0.0;
  for (double x : samples) {
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  const auto n = static_cast<double>(samples.size());
  const double mean_abs = abs_sum / n;
  const double mean_sq = sq_sum / n;
  if (mean_sq == 0.0) throw DegenerateInputError("GGD fit on all-zero samples");
  return GgdFit{ShapeFromMomentRatio(mean_abs * mean_abs / mean_sq), mean_sq};
}

AggdFit FitAggd(std::span<const double> samples) {
  RequireFitSamples(samples);
  double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  std::size_t left_n = 0, right_n = 0;
  for (double x : samples) {
    if (x < 0.0) {
      left_sq += x * x;
      ++left_n;
    } else if (x > 0.0) {
      right_sq += x * x;
      ++right_n;
    }
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  if (left_n == 0 && right_n == 0) {
    throw DegenerateInputError("AGGD fit on all-zero samples");
  }
  AggdFit fit;
  fit.one_sided = left_n == 0 || right_n == 0;
  const double sigma_l =
      left_n ? std::sqrt(left_sq / static_cast<double>(left_n)) : kAggdEmptySideSigma;
  const double sigma_r =
      right_n ? std::sqrt(right_sq / static_cast<double>(right_n)) : kAggdEmptySideSigma;

  const auto n = static_cast<double>(samples.size());
  const double mean_abs = abs_sum / n;
  const double mean_sq = sq_sum / n;
  const double gamma = sigma_l / sigma_r;
  const double r_hat = mean_abs * mean_abs / mean_sq;
  const double r_norm = r_hat * (gamma * gamma * gamma + 1.0) * (gamma + 1.0) /
                        ((gamma * gamma + 1.0) * (gamma * gamma + 1.0));
  fit.shape = ShapeFromMomentRatio(r_norm);
  const double g1 = std::tgamma(1.0 / fit.shape);
  const double g2 = std::tgamma(2.0 / fit.shape);
  const double g3 = std::tgamma(3.0 / fit.shape);
  fit.mean = (sigma_r - sigma_l) * (g2 / g1) * std::sqrt(g1 / g3);
  fit.left_variance = sigma_l * sigma_l;
  fit.right_variance = sigma_r * sigma_r;
  return fit;
}

namespace {

// local deviation (in [0,255] units) below which a patch counts as flat
constexpr double kFlatPatchSigma = 1e-3;

// 18 features of one patch of an MSCN field. (x0, y0) is the patch origin.
std::array<double, kFeaturesPerScale> PatchFeatures(const MscnField& f,
                                                    std::size_t x0, std::size_t y0,
                                                    std::size_t size) {
  const auto at = [&](std::size_t x, std::size_t y) {
    return f.coefficients[(y0 + y) * f.width + (x0 + x)];
  };
  std::vector<double> values;
  values.reserve(size * size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) values.push_back(at(x, y));
  }
  std::array<double, kFeaturesPerScale> out{};
  const GgdFit ggd = FitGgd(values);
  out[0] = ggd.shape;
  out[1] = ggd.variance;

  std::vector<double> prod;
  prod.reserve(size * size);
  std::size_t slot = 2;
  const auto push_aggd = [&] {
    const AggdFit a = FitAggd(prod);
    out[slot++] = a.shape;
    out[slot++] = a.mean;
    out[slot++] = a.left_variance;
    out[slot++] = a.right_variance;
    prod.clear();
  };
  // horizontal
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x + 1 < size; ++x) prod.push_back(at(x, y) * at(x + 1, y));
  push_aggd();
  // vertical
  for (std::size_t y = 0; y + 1 < size; ++y)
    for (std::size_t x = 0; x < size; ++x) prod.push_back(at(x, y) * at(x, y + 1));
  push_aggd();
  // main diagonal
  for (std::size_t y = 0; y + 1 < size; ++y)
    for (std::size_t x = 0; x + 1 < size; ++x) prod.push_back(at(x, y) * at(x + 1, y + 1));
  push_aggd();
  // anti-diagonal
  for (std::size_t y = 0; y + 1 < size; ++y)
    for (std::size_t x = 0; x + 1 < size; ++x) prod.push_back(at(x + 1, y) * at(x, y + 1));
  push_aggd();
  return out;
}

}  // namespace

std::vector<NiqeFeatures> ExtractFeatures(const ImagePlane& luma,
                                          const FeatureOptions& options) {
  if (luma.channels() != 1) {
    throw ParameterError("feature extraction requires a luminance plane");
  }
  const std::size_t ps = options.patch_size;
  if (ps < 16 || ps % 2 != 0) {
    throw ParameterError("patch size must be even and >= 16");
  }
  if (!(options.sharpness_fraction >= 0.0 && options.sharpness_fraction <= 1.0)) {
    throw ParameterError("sharpness fraction must lie in [0, 1]");
  }
  const std::size_t cols = luma.width() / ps;
  const std::size_t rows = luma.height() / ps;
  if (cols < 2 || rows < 2) {
    throw DimensionError("image too small for NIQE: need at least " +
                         std::to_string(2 * ps) + " pixels per axis");
  }
  const std::size_t w = cols * ps, h = rows * ps;

  std::vector<double> s1(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) s1[y * w + x] = luma.at(x, y) * 255.0;
  }
  const std::size_t w2 = w / 2, h2 = h / 2;
  std::vector<double> s2(w2 * h2);
  for (std::size_t y = 0; y < h2; ++y) {
    for (std::size_t x = 0; x < w2; ++x) {
      s2[y * w2 + x] = 0.25 * (s1[(2 * y) * w + 2 * x] + s1[(2 * y) * w + 2 * x + 1] +
                               s1[(2 * y + 1) * w + 2 * x] +
                               s1[(2 * y + 1) * w + 2 * x + 1]);
    }
  }
  const MscnField m1 = MscnFromField(s1, w, h);
  const MscnField m2 = MscnFromField(s2, w2, h2);

  std::vector<double> sharpness(rows * cols, 0.0);
  for (std::size_t py = 0; py < rows; ++py) {
    for (std::size_t px = 0; px < cols; ++px) {
      double sum = 0.0;
      for (std::size_t y = py * ps; y < (py + 1) * ps; ++y) {
        for (std::size_t x = px * ps; x < (px + 1) * ps; ++x) sum += m1.local_sigma[y * w + x];
      }
      sharpness[py * cols + px] = sum / static_cast<double>(ps * ps);
    }
  }
  const double max_sharp = *std::max_element(sharpness.begin(), sharpness.end());
  const double threshold = options.sharpness_fraction * max_sharp;

  std::vector<NiqeFeatures> out;
  for (std::size_t py = 0; py < rows; ++py) {
    for (std::size_t px = 0; px < cols; ++px) {
      if (sharpness[py * cols + px] < threshold) continue;
      if (sharpness[py * cols + px] < kFlatPatchSigma) continue;
      try {
        const auto f1 = PatchFeatures(m1, px * ps, py * ps, ps);
        const auto f2 = PatchFeatures(m2, px * ps / 2, py * ps / 2, ps / 2);
        NiqeFeatures f{};
        std::copy(f1.begin(), f1.end(), f.begin());
        std::copy(f2.begin(), f2.end(), f.begin() + kFeaturesPerScale);
        out.push_back(f);
      } catch (const DegenerateInputError&) {
        // flat patch: no statistics to fit
      }
    }
  }
  if (out.empty()) {
    throw DegenerateInputError("every NIQE patch is degenerate (flat image?)");
  }
  return out;
}

NiqeFeatures MirrorFeatures(const NiqeFeatures& f) {
  NiqeFeatures out = f;
  for (std::size_t s = 0; s < kFeatureDim; s += kFeaturesPerScale) {
    std::swap_ranges(out.begin() + s + 10, out.begin() + s + 14, out.begin() + s + 14);
  }
  return out;
}

MeanCovariance FitGaussian(std::span<const NiqeFeatures> features) {
  if (features.empty()) throw InsufficientDataError("no feature vectors");
  const auto n = static_cast<double>(features.size());
  MeanCovariance mc;
  mc.mean = Eigen::VectorXd::Zero(kFeatureDim);
  for (const auto& f : features) {
    for (std::size_t d = 0; d < kFeatureDim; ++d) mc.mean[d] += f[d];
  }
  mc.mean /= n;
  mc.covariance = Eigen::MatrixXd::Zero(kFeatureDim, kFeatureDim);
  if (features.size() < 2) return mc;
  for (const auto& f : features) {
    Eigen::VectorXd c(kFeatureDim);
    for (std::size_t d = 0; d < kFeatureDim; ++d) c[d] = f[d] - mc.mean[d];
    mc.covariance.noalias() += c * c.transpose();
  }
  mc.covariance /= (n - 1.0);
  // Exact symmetry regardless of accumulation rounding.
  mc.covariance = 0.5 * (mc.covariance + mc.covariance.transpose()).eval();
  return mc;
}

void PristineModel::Validate() const {
  if (mean.size() != static_cast<Eigen::Index>(kFeatureDim) ||
      covariance.rows() != static_cast<Eigen::Index>(kFeatureDim) ||
      covariance.cols() != static_cast<Eigen::Index>(kFeatureDim)) {
    throw FormatError("pristine model must be 36-dimensional");
  }
  if (!mean.allFinite() || !covariance.allFinite()) {
    throw FormatError("pristine model contains non-finite values");
  }
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw FormatError("pristine covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance,
                                                     Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8) {
    throw FormatError("pristine covariance is not positive semi-definite");
  }
}

nlohmann::json PristineModel::ToJson() const {
  nlohmann::json j;
  j["version"] = 1;
  j["dim"] = kFeatureDim;
  j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < covariance.rows(); ++r) {
    std::vector<double> row(covariance.cols());
    for (Eigen::Index c = 0; c < covariance.cols(); ++c) row[c] = covariance(r, c);
    cov.push_back(row);
  }
  j["cov"] = std::move(cov);
  j["meta"] = {{"corpus", corpus_name},
               {"patch_count", patch_count},
               {"image_count", image_count}};
  return j;
}

PristineModel PristineModel::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported pristine model version");
    if (j.at("dim").get<std::size_t>() != kFeatureDim) {
      throw FormatError("pristine model dim must be 36");
    }
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto cov = j.at("cov").get<std::vector<std::vector<double>>>();
    if (mean.size() != kFeatureDim || cov.size() != kFeatureDim) {
      throw FormatError("pristine model arrays have wrong length");
    }
    PristineModel m;
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), kFeatureDim);
    m.covariance.resize(kFeatureDim, kFeatureDim);
    for (std::size_t r = 0; r < kFeatureDim; ++r) {
      if (cov[r].size() != kFeatureDim) throw FormatError("covariance row has wrong length");
      for (std::size_t c = 0; c < kFeatureDim; ++c) m.covariance(r, c) = cov[r][c];
    }
    if (j.contains("meta")) {
      const auto& meta = j["meta"];
      m.corpus_name = meta.value("corpus", std::string{});
      m.patch_count = meta.value("patch_count", std::size_t{0});
      m.image_count = meta.value("image_count", std::size_t{0});
    }
    m.Validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed pristine model: ") + e.what());
  }
}

void PristineModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << ToJson().dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

PristineModel PristineModel::Load(const std::filesystem::path& path) {
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

PristineModel TrainPristine(std::span<const ImagePlane> corpus,
                            const std::string& corpus_name,
                            const FeatureOptions& options, std::size_t jobs) {
  if (corpus.size() < 10) {
    throw InsufficientDataError("pristine training needs at least 10 images, got " +
                                std::to_string(corpus.size()));
  }
  std::vector<std::vector<NiqeFeatures>> per_image(corpus.size());
  ParallelFor(corpus.size(), jobs, [&](std::size_t i) {
    per_image[i] = ExtractFeatures(ToLuminance(corpus[i]), options);
  });
  std::vector<NiqeFeatures> pooled;
  for (auto& v : per_image) pooled.insert(pooled.end(), v.begin(), v.end());
  if (pooled.size() < kFeatureDim + 1) {
    throw InsufficientDataError("only " + std::to_string(pooled.size()) +
                                " pooled patches; need at least 37");
  }
  const MeanCovariance mc = FitGaussian(pooled);
  PristineModel model;
  model.mean = mc.mean;
  model.covariance = mc.covariance;
  model.corpus_name = corpus_name;
  model.patch_count = pooled.size();
  model.image_count = corpus.size();
  return model;
}

double PseudoMahalanobis(const Eigen::VectorXd& diff, const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = 1e-10 * lambda.maxCoeff();
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * diff;
  double q = 0.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda[k] > cutoff) q += proj[k] * proj[k] / lambda[k];
  }
  return std::sqrt(std::max(0.0, q));
}

double NiqeScore(const ImagePlane& img, const PristineModel& model,
                 std::size_t patch_size) {
  model.Validate();
  FeatureOptions options;
  options.patch_size = patch_size;
  options.sharpness_fraction = 0.0;
  auto features = ExtractFeatures(ToLuminance(img), options);
  const std::size_t n = features.size();
  for (std::size_t i = 0; i < n; ++i) features.push_back(MirrorFeatures(features[i]));
  const MeanCovariance test = FitGaussian(features);
  const Eigen::MatrixXd pooled = 0.5 * (model.covariance + test.covariance);
  return PseudoMahalanobis(model.mean - test.mean, pooled);
}

}  // namespace evalkit::perception

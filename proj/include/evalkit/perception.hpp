#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalkit/image.hpp"

// Natural Image Quality Evaluator: a no-reference score measuring how far an
// image's local natural-scene statistics sit from a multivariate Gaussian
// model fit on pristine photographs. Lower is better.
namespace evalkit::perception {

inline constexpr std::size_t kFeatureDim = 36;
inline constexpr std::size_t kFeaturesPerScale = 18;

/// Per scale: [ggd shape, ggd variance] followed by
/// [shape, mean, left variance, right variance] for the horizontal,
/// vertical, main-diagonal and anti-diagonal neighbour products.
using NiqeFeatures = std::array<double, kFeatureDim>;

/// Mean-subtracted contrast-normalized coefficients of a luminance plane,
/// computed in [0,255] units with a 7x7 (sigma 7/6) Gaussian window.
struct MscnField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> coefficients;
  std::vector<double> local_sigma;
};

/// Throws ParameterError for multi-channel input.
MscnField Mscn(const ImagePlane& luma);

/// MSCN on a raw row-major field already scaled to [0,255].
MscnField MscnFromField(std::span<const double> field, std::size_t width,
                        std::size_t height);

struct GgdFit {
  double shape = 0.0;
  double variance = 0.0;
};

struct AggdFit {
  double shape = 0.0;
  double mean = 0.0;
  double left_variance = 0.0;
  double right_variance = 0.0;
  // One side had no samples; its sigma was replaced by kAggdEmptySideSigma.
  bool one_sided = false;
};

inline constexpr double kShapeGridMin = 0.2;
inline constexpr double kShapeGridMax = 10.0;
inline constexpr double kShapeGridStep = 0.001;
inline constexpr std::size_t kMinFitSamples = 100;
inline constexpr double kAggdEmptySideSigma = 1e-6;

/// Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a)), the generalized Gaussian ratio
/// (E|x|)^2 / E[x^2] for shape a.
double GgdMomentRatio(double shape);

/// Grid value minimizing |ratio - GgdMomentRatio(grid)| over
/// [0.2, 10] in steps of 0.001; the first minimizer wins ties.
double ShapeFromMomentRatio(double ratio);

/// Moment-matching GGD fit. Throws ParameterError for fewer than 100 samples
/// and DegenerateInputError for all-zero samples.
GgdFit FitGgd(std::span<const double> samples);

/// Moment-matching asymmetric GGD fit. Same errors as FitGgd.
AggdFit FitAggd(std::span<const double> samples);

struct FeatureOptions {
  std::size_t patch_size = 96;
  // Patches whose mean local sigma falls below this fraction of the sharpest
  // patch are dropped; 0 keeps every patch.
  double sharpness_fraction = 0.75;
};

/// One feature vector per kept patch, in row-major patch order.
/// Patches whose fits are degenerate (flat content) are skipped; if none
/// survive, DegenerateInputError is thrown. Throws DimensionError when the
/// cropped image is smaller than two patches along either axis.
std::vector<NiqeFeatures> ExtractFeatures(const ImagePlane& luma,
                                          const FeatureOptions& options = {});

/// Features of the horizontally mirrored patch: the main- and
/// anti-diagonal product statistics trade places.
NiqeFeatures MirrorFeatures(const NiqeFeatures& f);

/// Multivariate Gaussian over NIQE features fit on pristine images.
struct PristineModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::string corpus_name;
  std::size_t patch_count = 0;
  std::size_t image_count = 0;

  /// Throws FormatError on wrong dimensions, asymmetry or an indefinite
  /// covariance.
  void Validate() const;

  nlohmann::json ToJson() const;
  static PristineModel FromJson(const nlohmann::json& j);

  void Save(const std::filesystem::path& path) const;
  static PristineModel Load(const std::filesystem::path& path);
};

struct MeanCovariance {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Two-pass sample mean and covariance (divisor n - 1; zero covariance for a
/// single sample).
MeanCovariance FitGaussian(std::span<const NiqeFeatures> features);

/// Pools sharpness-selected patch features across the corpus. Throws
/// InsufficientDataError for fewer than 10 images or 37 pooled patches.
PristineModel TrainPristine(std::span<const ImagePlane> corpus,
                            const std::string& corpus_name = "custom",
                            const FeatureOptions& options = {},
                            std::size_t jobs = 1);

/// sqrt(d^T S^+ d) with S^+ the eigen pseudo-inverse of the symmetric matrix
/// S, discarding eigenvalues at or below 1e-10 * lambda_max.
double PseudoMahalanobis(const Eigen::VectorXd& diff, const Eigen::MatrixXd& s);

/// NIQE score of an image (any channel count) against a pristine model,
/// using every patch at test time together with its mirrored features.
double NiqeScore(const ImagePlane& img, const PristineModel& model,
                 std::size_t patch_size = 96);

}  // namespace evalkit::perception

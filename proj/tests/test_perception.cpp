#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "evalkit/degradation.hpp"
#include "evalkit/error.hpp"
#include "evalkit/perception.hpp"
#include "test_util.hpp"

namespace evalkit::perception {
namespace {

using testing::FixtureDir;

const std::vector<ImagePlane>& Pristine() {
  static const std::vector<ImagePlane> images = testing::LoadAll(FixtureDir() / "pristine");
  return images;
}

const PristineModel& Model() {
  static const PristineModel model = TrainPristine(Pristine(), "fixtures");
  return model;
}

TEST(Ggd, MomentRatioKnownValues) {
  // Gaussian: (E|x|)^2 / E[x^2] = 2 / pi; Laplacian: 1/2.
  EXPECT_NEAR(GgdMomentRatio(2.0), 2.0 / M_PI, 1e-12);
  EXPECT_NEAR(GgdMomentRatio(1.0), 0.5, 1e-12);
  EXPECT_NEAR(ShapeFromMomentRatio(GgdMomentRatio(2.0)), 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(ShapeFromMomentRatio(0.0), kShapeGridMin);
  EXPECT_DOUBLE_EQ(ShapeFromMomentRatio(1.0), kShapeGridMax);
}

TEST(Ggd, RecoversShapeAndVariance) {
  for (double shape : {0.5, 1.0, 2.0, 4.0}) {
    const auto x = testing::SampleGgd(shape, 2.5, 200000, 17);
    const GgdFit fit = FitGgd(x);
    EXPECT_NEAR(fit.shape, shape, 0.05 * shape) << shape;
    EXPECT_NEAR(fit.variance, 2.5, 0.05 * 2.5) << shape;
  }
}

TEST(Ggd, Errors) {
  EXPECT_THROW(FitGgd(std::vector<double>(50, 1.0)), ParameterError);
  EXPECT_THROW(FitGgd(std::vector<double>(200, 0.0)), DegenerateInputError);
  EXPECT_THROW(FitAggd(std::vector<double>(200, 0.0)), DegenerateInputError);
}

TEST(Aggd, RecoversAsymmetricParameters) {
  const auto x = testing::SampleAggd(2.0, 1.0, 2.0, 200000, 5);
  const AggdFit fit = FitAggd(x);
  EXPECT_NEAR(fit.shape, 2.0, 0.1);
  EXPECT_NEAR(fit.left_variance, 1.0, 0.05);
  EXPECT_NEAR(fit.right_variance, 4.0, 0.2);
  const double g1 = std::tgamma(0.5), g2 = std::tgamma(1.0), g3 = std::tgamma(1.5);
  const double expected_mean = (2.0 - 1.0) * (g2 / g1) * std::sqrt(g1 / g3);
  EXPECT_NEAR(fit.mean, expected_mean, 0.05 * expected_mean);
  EXPECT_FALSE(fit.one_sided);
}

TEST(Aggd, SymmetricHasZeroMean) {
  const AggdFit fit = FitAggd(testing::SampleGgd(1.0, 1.0, 200000, 8));
  EXPECT_NEAR(fit.mean, 0.0, 0.01);
  EXPECT_NEAR(fit.shape, 1.0, 0.05);
}

TEST(Aggd, OneSidedFlagged) {
  std::vector<double> x(500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * static_cast<double>(i + 1);
  const AggdFit fit = FitAggd(x);
  EXPECT_TRUE(fit.one_sided);
  EXPECT_DOUBLE_EQ(fit.left_variance, kAggdEmptySideSigma * kAggdEmptySideSigma);
}

TEST(Mscn, FlatImageIsZeroAndRejectsColor) {
  const MscnField f = Mscn(ImagePlane::Filled(20, 20, 1, 0.4));
  for (double c : f.coefficients) EXPECT_NEAR(c, 0.0, 1e-12);
  EXPECT_THROW(Mscn(ImagePlane::Filled(20, 20, 3, 0.4)), ParameterError);
}

TEST(Mscn, WhiteNoiseVarianceNearOne) {
  const MscnField f = Mscn(testing::RandomImage(256, 256, 1, 21));
  EXPECT_EQ(f.coefficients.size(), 256u * 256u);
  double sum = 0.0, sq = 0.0;
  for (double c : f.coefficients) sum += c, sq += c * c;
  const double n = static_cast<double>(f.coefficients.size());
  const double var = sq / n - (sum / n) * (sum / n);
  EXPECT_GT(var, 0.5);
  EXPECT_LT(var, 1.5);
}

TEST(Ggd, ScaleEquivariance) {
  auto x = testing::SampleGgd(1.5, 1.0, 5000, 2);
  const GgdFit a = FitGgd(x);
  for (double& v : x) v *= 3.0;
  const GgdFit b = FitGgd(x);
  EXPECT_DOUBLE_EQ(a.shape, b.shape);
  EXPECT_NEAR(b.variance, 9.0 * a.variance, 1e-9 * b.variance);
}

TEST(Aggd, NegationSwapsSides) {
  auto x = testing::SampleAggd(1.2, 0.7, 1.9, 20000, 4);
  const AggdFit a = FitAggd(x);
  for (double& v : x) v = -v;
  const AggdFit b = FitAggd(x);
  EXPECT_NEAR(b.mean, -a.mean, 1e-12);
  EXPECT_DOUBLE_EQ(b.left_variance, a.right_variance);
  EXPECT_DOUBLE_EQ(b.right_variance, a.left_variance);
}

TEST(Features, ShapeAndErrors) {
  const ImagePlane luma = ToLuminance(Pristine()[0]);
  const auto all = ExtractFeatures(luma, {96, 0.0});
  EXPECT_EQ(all.size(), (luma.width() / 96) * (luma.height() / 96));
  const auto sharp = ExtractFeatures(luma, {96, 0.75});
  EXPECT_LE(sharp.size(), all.size());
  EXPECT_GE(sharp.size(), 1u);
  EXPECT_THROW(ExtractFeatures(ImagePlane::Filled(150, 300, 1, 0.3), {96, 0}), DimensionError);
  EXPECT_THROW(ExtractFeatures(ImagePlane::Filled(300, 300, 1, 0.3), {96, 0}),
               DegenerateInputError);
  EXPECT_THROW(ExtractFeatures(luma, {95, 0}), ParameterError);
  EXPECT_THROW(ExtractFeatures(luma, {96, 1.5}), ParameterError);
}

TEST(Gaussian, TwoPassMeanCovariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(5.0, 2.0);
  std::vector<NiqeFeatures> f(50);
  for (auto& v : f)
    for (double& x : v) x = n(rng);
  const MeanCovariance mc = FitGaussian(f);
  Eigen::MatrixXd m(f.size(), kFeatureDim);
  for (std::size_t r = 0; r < f.size(); ++r)
    for (std::size_t c = 0; c < kFeatureDim; ++c) m(r, c) = f[r][c];
  const Eigen::VectorXd mean = m.colwise().mean();
  const Eigen::MatrixXd centered = m.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / (f.size() - 1.0);
  EXPECT_LT((mc.mean - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((mc.covariance - cov).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(mc.covariance.isApprox(mc.covariance.transpose(), 0.0));
}

TEST(PseudoMahalanobis, MatchesCompleteOrthogonalDecomposition) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int rank : {36, 20, 5}) {
    Eigen::MatrixXd a(36, rank);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    const Eigen::MatrixXd s = a * a.transpose();
    Eigen::VectorXd d(36);
    for (int i = 0; i < 36; ++i) d[i] = n(rng);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s);
    cod.setThreshold(1e-10);
    const double expected = std::sqrt(std::max(0.0, d.dot(cod.pseudoInverse() * d)));
    EXPECT_NEAR(PseudoMahalanobis(d, s), expected, 1e-6 * std::max(1.0, expected)) << rank;
  }
  EXPECT_DOUBLE_EQ(PseudoMahalanobis(Eigen::VectorXd::Zero(36), Eigen::MatrixXd::Zero(36, 36)),
                   0.0);
}

TEST(Pristine, TrainingRoundTripAndDeterminism) {
  const PristineModel& m = Model();
  EXPECT_EQ(m.image_count, Pristine().size());
  EXPECT_GE(m.patch_count, kFeatureDim + 1);
  EXPECT_NO_THROW(m.Validate());
  const auto dir = testing::ScratchDir("pristine");
  m.Save(dir / "model.json");
  const PristineModel back = PristineModel::Load(dir / "model.json");
  EXPECT_EQ(back.mean, m.mean);
  EXPECT_EQ(back.covariance, m.covariance);
  EXPECT_EQ(back.patch_count, m.patch_count);

  const PristineModel again = TrainPristine(Pristine(), "fixtures", {}, 3);
  EXPECT_LT((again.mean - m.mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pristine, DuplicatedSingleImagePoolsToItsMean) {
  const ImagePlane& img = Pristine()[0];
  const std::vector<ImagePlane> corpus(10, img);
  const PristineModel m = TrainPristine(corpus, "dup", {96, 0.0});
  const auto f = ExtractFeatures(ToLuminance(img), {96, 0.0});
  const MeanCovariance mc = FitGaussian(f);
  EXPECT_LT((m.mean - mc.mean).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Pristine, TooFewImages) {
  std::vector<ImagePlane> nine(Pristine().begin(), Pristine().begin() + 9);
  EXPECT_THROW(TrainPristine(nine), InsufficientDataError);
}

TEST(Pristine, RejectsMalformedJson) {
  nlohmann::json j = Model().ToJson();
  j["mean"].erase(0);
  EXPECT_THROW(PristineModel::FromJson(j), FormatError);
  nlohmann::json v = Model().ToJson();
  v["version"] = 7;
  EXPECT_THROW(PristineModel::FromJson(v), FormatError);
}

TEST(Niqe, BlurIncreasesScoreAndDeterministic) {
  const ImagePlane img = testing::LoadAll(FixtureDir() / "corpus")[2];
  const double clean = NiqeScore(img, Model());
  EXPECT_TRUE(std::isfinite(clean));
  EXPECT_EQ(clean, NiqeScore(img, Model()));
  EXPECT_GT(NiqeScore(degradation::Blur(img, 8.0), Model()), clean);
}

TEST(Niqe, HorizontalFlipNearlyInvariant) {
  for (const auto& img : testing::LoadAll(FixtureDir() / "corpus")) {
    const double a = NiqeScore(img, Model());
    const double b = NiqeScore(FlipHorizontal(img), Model());
    EXPECT_NEAR(a, b, 0.02 * a);
  }
}

}  // namespace
}  // namespace evalkit::perception

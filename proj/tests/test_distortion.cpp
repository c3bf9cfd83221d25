#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "evalkit/distortion.hpp"
#include "evalkit/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace evalkit::distortion {
namespace {

using oracle::BruteForceSsim;

TEST(Psnr, AnalyticConstantImages) {
  const ImagePlane a = ImagePlane::Filled(16, 16, 3, 0.5);
  const ImagePlane b = ImagePlane::Filled(16, 16, 3, 0.6);
  EXPECT_NEAR(Psnr(a, b), 20.0, 1e-9);
  EXPECT_NEAR(Mse(a, b), 0.01, 1e-15);
  EXPECT_EQ(Psnr(a, a), kPsnrInfinite);
  EXPECT_THROW(Psnr(a, ImagePlane::Filled(16, 15, 3, 0.5)), DimensionError);
  EXPECT_THROW(Psnr(a, ImagePlane::Filled(16, 16, 1, 0.5)), DimensionError);
}

TEST(SsimWindow, NormalizedSymmetric) {
  const auto w = SsimWindow(11, 1.5);
  ASSERT_EQ(w.size(), 11u);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(w[0], w[10]);
  EXPECT_GT(w[5], w[4]);
}

TEST(Ssim, MatchesBruteForce) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const ImagePlane a = testing::RandomImage(40, 33, s % 2 ? 3 : 1, 2 * s);
    const ImagePlane b = testing::RandomImage(40, 33, s % 2 ? 3 : 1, 2 * s + 1);
    EXPECT_NEAR(Ssim(a, b), BruteForceSsim(a, b), 1e-10);
  }
}

TEST(Ssim, IdentityAndSymmetry) {
  const ImagePlane a = testing::RandomImage(32, 32, 3, 1);
  const ImagePlane b = testing::RandomImage(32, 32, 3, 2);
  EXPECT_EQ(Ssim(a, a), 1.0);
  EXPECT_DOUBLE_EQ(Ssim(a, b), Ssim(b, a));
  EXPECT_LT(Ssim(a, b), 0.2);
}

TEST(Ssim, Errors) {
  const ImagePlane a = testing::RandomImage(10, 20, 1, 1);
  EXPECT_THROW(Ssim(a, a), DimensionError);
  const ImagePlane b = testing::RandomImage(20, 20, 1, 1);
  EXPECT_THROW(Ssim(b, testing::RandomImage(20, 21, 1, 1)), DimensionError);
  SsimParams bad;
  bad.window_size = 0;
  EXPECT_THROW(Ssim(b, b, bad), ParameterError);
}

}  // namespace
}  // namespace evalkit::distortion

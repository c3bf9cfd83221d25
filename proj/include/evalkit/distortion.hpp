#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "evalkit/image.hpp"

namespace evalkit::distortion {

struct SsimParams {
  std::size_t window_size = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void Validate() const;
};

/// PSNR value returned for identical images.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

/// Mean squared sample difference over all channels. Shapes must match.
double Mse(const ImagePlane& a, const ImagePlane& b);

/// 10 log10(1 / mse); kPsnrInfinite when mse == 0.
double Psnr(const ImagePlane& a, const ImagePlane& b);

/// Normalized 1-D Gaussian window of exactly `size` taps.
std::vector<double> SsimWindow(std::size_t size, double sigma);

/// Mean SSIM over all valid (unpadded) window positions, computed on Rec. 601
/// luminance with Gaussian-weighted local statistics.
/// Throws DimensionError on shape mismatch or images smaller than the window.
double Ssim(const ImagePlane& a, const ImagePlane& b,
            const SsimParams& params = {});

}  // namespace evalkit::distortion

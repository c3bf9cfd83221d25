#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "evalkit/image.hpp"

namespace evalkit::degradation {

/// Parameters of the parametric degradation
///   I_y = blur(I_x; sigma) downsampled by alpha + beta * N(0,1)
/// plus the seed of the noise generator.
struct DegradationSpec {
  double blur_sigma = 0.0;        // Gaussian std in pixels, >= 0
  double downsample_alpha = 1.0;  // scale factor, >= 1
  double noise_beta = 0.0;        // noise amplitude in [0,1)
  std::uint64_t seed = 0;

  /// Throws ParameterError when an invariant is violated.
  void Validate() const;

  /// Compact label, e.g. "s1_a2_b0_seed7"; stable across runs.
  std::string Label() const;

  friend bool operator==(const DegradationSpec&, const DegradationSpec&) = default;
  friend auto operator<=>(const DegradationSpec&, const DegradationSpec&) = default;
};

/// Information retention rate (1 - beta) / alpha.
double RetentionRate(const DegradationSpec& spec);

/// Normalized 1-D Gaussian taps on [-ceil(3 sigma), ceil(3 sigma)].
/// Throws ParameterError for sigma <= 0.
std::vector<double> GaussianKernel(double sigma);

/// Reflect-101 index mapping (..., 2, 1, 0, 1, 2, ..., n-1, n-2, ...).
std::ptrdiff_t Reflect101(std::ptrdiff_t i, std::ptrdiff_t n);

/// Separable Gaussian blur per channel with reflect-101 borders.
/// sigma == 0 returns the input unchanged.
ImagePlane Blur(const ImagePlane& img, double sigma);

/// Cubic-convolution (Catmull-Rom, a = -0.5) downsampling by alpha >= 1 to
/// floor(dim / alpha). The kernel is stretched by alpha and renormalized per
/// output pixel; borders clamp to edge. Output pixel j samples the source at
/// (j + 0.5) * alpha - 0.5.
ImagePlane BicubicResample(const ImagePlane& img, double alpha);

/// General cubic-convolution resize to explicit dimensions (up or down),
/// scale per axis = in / out, antialiased when shrinking.
ImagePlane Resize(const ImagePlane& img, std::size_t out_width,
                  std::size_t out_height);

/// Catmull-Rom cubic convolution kernel.
double CubicKernel(double x);

/// clamp(img + beta * n, 0, 1) with n drawn i.i.d. standard normal from a
/// generator seeded with `seed`, one draw per sample in storage order.
ImagePlane AddNoise(const ImagePlane& img, double beta, std::uint64_t seed);

/// AddNoise(BicubicResample(Blur(img, sigma), alpha), beta, seed).
ImagePlane Degrade(const ImagePlane& img, const DegradationSpec& spec);

}  // namespace evalkit::degradation

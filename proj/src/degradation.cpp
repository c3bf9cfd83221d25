#include "evalkit/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "evalkit/error.hpp"

namespace evalkit::degradation {

void DegradationSpec::Validate() const {
  if (!std::isfinite(blur_sigma) || blur_sigma < 0.0) {
    throw ParameterError("blur_sigma must be finite and >= 0");
  }
  if (!std::isfinite(downsample_alpha) || downsample_alpha < 1.0) {
    throw ParameterError("downsample_alpha must be finite and >= 1");
  }
  if (!std::isfinite(noise_beta) || noise_beta < 0.0 || noise_beta >= 1.0) {
    throw ParameterError("noise_beta must lie in [0, 1)");
  }
}

std::string DegradationSpec::Label() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "s%.17g_a%.17g_b%.17g_seed%llu", blur_sigma,
                downsample_alpha, noise_beta,
                static_cast<unsigned long long>(seed));
  return buf;
}

double RetentionRate(const DegradationSpec& spec) {
  spec.Validate();
  return (1.0 - spec.noise_beta) / spec.downsample_alpha;
}

std::vector<double> GaussianKernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian kernel requires sigma > 0");
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(2 * radius + 1);
  const double denom = 2.0 * sigma * sigma;
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-static_cast<double>(i) * i / denom);
    sum += w[i + radius];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::ptrdiff_t Reflect101(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

// Convolves along one axis. `along_x` selects rows vs columns.
std::vector<double> ConvolveAxis(std::span<const double> src, std::size_t w,
                                 std::size_t h, std::size_t ch,
                                 const std::vector<double>& taps, bool along_x) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(along_x ? w : h);
  std::vector<double> out(src.size());
  // Reflected indices depend only on position along the axis.
  std::vector<std::size_t> idx(static_cast<std::size_t>(n) * taps.size());
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      idx[p * taps.size() + (k + radius)] =
          static_cast<std::size_t>(Reflect101(p + k, n));
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = along_x ? x : y;
      const std::size_t* row_idx = &idx[p * taps.size()];
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < taps.size(); ++k) {
          const std::size_t q = row_idx[k];
          const std::size_t sx = along_x ? q : x;
          const std::size_t sy = along_x ? y : q;
          acc += taps[k] * src[(sy * w + sx) * ch + c];
        }
        out[(y * w + x) * ch + c] = acc;
      }
    }
  }
  return out;
}

struct Contributions {
  std::vector<std::size_t> first;      // per output: offset into `taps`
  std::vector<std::size_t> count;      // per output: number of taps
  std::vector<std::size_t> src_index;  // flattened, edge-clamped
  std::vector<double> weight;          // flattened, renormalized
};

Contributions BuildContributions(std::size_t in_size, std::size_t out_size,
                                 double scale) {
  Contributions c;
  c.first.resize(out_size);
  c.count.resize(out_size);
  const double stretch = std::max(scale, 1.0);
  const double support = 2.0 * stretch;
  const auto last = static_cast<std::ptrdiff_t>(in_size) - 1;
  for (std::size_t j = 0; j < out_size; ++j) {
    const double center = (static_cast<double>(j) + 0.5) * scale - 0.5;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(center - support));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(center + support));
    c.first[j] = c.weight.size();
    double sum = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double wgt = CubicKernel((static_cast<double>(i) - center) / stretch);
      if (wgt == 0.0) continue;
      c.src_index.push_back(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, last)));
      c.weight.push_back(wgt);
      sum += wgt;
    }
    c.count[j] = c.weight.size() - c.first[j];
    for (std::size_t k = c.first[j]; k < c.weight.size(); ++k) c.weight[k] /= sum;
  }
  return c;
}

ImagePlane ResampleScaled(const ImagePlane& img, std::size_t out_w,
                          std::size_t out_h, double scale_x, double scale_y) {
  const std::size_t w = img.width(), h = img.height(), ch = img.channels();
  const Contributions cx = BuildContributions(w, out_w, scale_x);
  const Contributions cy = BuildContributions(h, out_h, scale_y);
  const auto src = img.data();

  // Horizontal pass: h rows of out_w.
  std::vector<double> tmp(out_w * h * ch);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t j = 0; j < out_w; ++j) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = cx.first[j]; k < cx.first[j] + cx.count[j]; ++k) {
          acc += cx.weight[k] * src[(y * w + cx.src_index[k]) * ch + c];
        }
        tmp[(y * out_w + j) * ch + c] = acc;
      }
    }
  }
  std::vector<double> out(out_w * out_h * ch);
  for (std::size_t i = 0; i < out_h; ++i) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = cy.first[i]; k < cy.first[i] + cy.count[i]; ++k) {
          acc += cy.weight[k] * tmp[(cy.src_index[k] * out_w + x) * ch + c];
        }
        out[(i * out_w + x) * ch + c] = acc;
      }
    }
  }
  return ImagePlane::FromClamped(out_w, out_h, ch, std::move(out));
}

}  // namespace

ImagePlane Blur(const ImagePlane& img, double sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw ParameterError("blur sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return img;
  const auto taps = GaussianKernel(sigma);
  const std::size_t w = img.width(), h = img.height(), ch = img.channels();
  std::vector<double> horiz = ConvolveAxis(img.data(), w, h, ch, taps, true);
  std::vector<double> both = ConvolveAxis(horiz, w, h, ch, taps, false);
  return ImagePlane::FromClamped(w, h, ch, std::move(both));
}

double CubicKernel(double x) {
  constexpr double a = -0.5;
  const double t = std::abs(x);
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

ImagePlane BicubicResample(const ImagePlane& img, double alpha) {
  if (!std::isfinite(alpha) || alpha < 1.0) {
    throw ParameterError("resample factor must be >= 1");
  }
  const auto out_w = static_cast<std::size_t>(std::floor(img.width() / alpha));
  const auto out_h = static_cast<std::size_t>(std::floor(img.height() / alpha));
  if (out_w < 1 || out_h < 1) {
    throw DimensionError("downsampled image would be empty");
  }
  if (alpha == 1.0) return img;
  return ResampleScaled(img, out_w, out_h, alpha, alpha);
}

ImagePlane Resize(const ImagePlane& img, std::size_t out_width,
                  std::size_t out_height) {
  if (out_width < 1 || out_height < 1) {
    throw DimensionError("resize target must be at least 1x1");
  }
  if (out_width == img.width() && out_height == img.height()) return img;
  return ResampleScaled(img, out_width, out_height,
                        static_cast<double>(img.width()) / out_width,
                        static_cast<double>(img.height()) / out_height);
}

ImagePlane AddNoise(const ImagePlane& img, double beta, std::uint64_t seed) {
  if (!std::isfinite(beta) || beta < 0.0 || beta >= 1.0) {
    throw ParameterError("noise beta must lie in [0, 1)");
  }
  if (beta == 0.0) return img;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto src = img.data();
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] + beta * normal(gen);
  return ImagePlane::FromClamped(img.width(), img.height(), img.channels(),
                                 std::move(out));
}

ImagePlane Degrade(const ImagePlane& img, const DegradationSpec& spec) {
  spec.Validate();
  ImagePlane out = Blur(img, spec.blur_sigma);
  out = BicubicResample(out, spec.downsample_alpha);
  return AddNoise(out, spec.noise_beta, spec.seed);
}

}  // namespace evalkit::degradation

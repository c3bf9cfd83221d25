#include "evalkit/distortion.hpp"

#include <cmath>

#include "evalkit/error.hpp"

namespace evalkit::distortion {

void SsimParams::Validate() const {
  if (window_size < 3 || window_size % 2 == 0) {
    throw ParameterError("SSIM window size must be odd and >= 3");
  }
  if (!(window_sigma > 0.0) || !(k1 > 0.0) || !(k2 > 0.0) ||
      !(dynamic_range > 0.0)) {
    throw ParameterError("SSIM sigma, k1, k2 and dynamic range must be > 0");
  }
}

namespace {

void RequireSameShape(const ImagePlane& a, const ImagePlane& b) {
  if (!a.SameShape(b)) {
    throw DimensionError("image shapes differ: " + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + "x" +
                         std::to_string(a.channels()) + " vs " +
                         std::to_string(b.width()) + "x" +
                         std::to_string(b.height()) + "x" +
                         std::to_string(b.channels()));
  }
}

// Valid-mode separable filtering of a w x h field; output is
// (w - n + 1) x (h - n + 1).
std::vector<double> FilterValid(const std::vector<double>& src, std::size_t w,
                                std::size_t h, const std::vector<double>& taps) {
  const std::size_t n = taps.size();
  const std::size_t ow = w - n + 1, oh = h - n + 1;
  std::vector<double> rows(ow * h);
  for (std::size_t y = 0; y < h; ++y) {
    const double* in = &src[y * w];
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += taps[k] * in[x + k];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(ow * oh);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += taps[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double Mse(const ImagePlane& a, const ImagePlane& b) {
  RequireSameShape(a, b);
  const auto da = a.data();
  const auto db = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sum += d * d;
  }
  return sum / static_cast<double>(da.size());
}

double Psnr(const ImagePlane& a, const ImagePlane& b) {
  const double mse = Mse(a, b);
  if (mse == 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<double> SsimWindow(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const auto half = static_cast<double>(size / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - half;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

double Ssim(const ImagePlane& a, const ImagePlane& b, const SsimParams& params) {
  params.Validate();
  RequireSameShape(a, b);
  const ImagePlane la = ToLuminance(a);
  const ImagePlane lb = ToLuminance(b);
  const std::size_t w = la.width(), h = la.height();
  if (w < params.window_size || h < params.window_size) {
    throw DimensionError("image smaller than the SSIM window");
  }

  const auto pa = la.data();
  const auto pb = lb.data();
  const std::size_t n = w * h;
  std::vector<double> x(pa.begin(), pa.end()), y(pb.begin(), pb.end());
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto taps = SsimWindow(params.window_size, params.window_sigma);
  const auto mu_x = FilterValid(x, w, h, taps);
  const auto mu_y = FilterValid(y, w, h, taps);
  const auto e_xx = FilterValid(xx, w, h, taps);
  const auto e_yy = FilterValid(yy, w, h, taps);
  const auto e_xy = FilterValid(xy, w, h, taps);

  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i], my = mu_y[i];
    const double vx = e_xx[i] - mx * mx;
    const double vy = e_yy[i] - my * my;
    const double cxy = e_xy[i] - mx * my;
    const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
    const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_x.size());
}

}  // namespace evalkit::distortion

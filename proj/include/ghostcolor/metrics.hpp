#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ghostcolor/image.hpp"

namespace ghostcolor {

struct MetricReport {
  std::uint64_t n_frames = 0;
  std::string label;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double cci = 0.0;
};

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

namespace detail {

inline double psnr_from_mse(double mse) {
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

inline std::vector<double> ssim_window_1d() {
  constexpr int radius = 5;
  constexpr double sigma = 1.5;
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    w[k + radius] = std::exp(-double(k * k) / (2.0 * sigma * sigma));
    sum += w[k + radius];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable 'valid' filtering with the SSIM window.
inline Map filter_valid(const Map& in, const std::vector<double>& w) {
  const std::size_t k = w.size();
  const std::size_t ow = in.width() - k + 1, oh = in.height() - k + 1;
  Map tmp(ow, in.height());
  for (std::size_t y = 0; y < in.height(); ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += w[i] * in(x + i, y);
      tmp(x, y) = acc;
    }
  }
  Map out(ow, oh);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += w[i] * tmp(x, y + i);
      out(x, y) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Peak signal-to-noise ratio for unit-range data. Identical inputs give
/// +infinity.
inline double psnr(const Map& reference, const Map& test) {
  require_same_shape(reference, test, "psnr");
  if (reference.empty()) throw std::invalid_argument("psnr: empty image");
  double se = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - test[i];
    se += d * d;
  }
  return detail::psnr_from_mse(se / double(reference.size()));
}

/// Colour PSNR: MSE averaged over all three components.
inline double psnr(const ColorImage& reference, const ColorImage& test) {
  require_same_shape(reference, test, "psnr");
  if (reference.empty()) throw std::invalid_argument("psnr: empty image");
  double se = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = reference[i][c] - test[i][c];
      se += d * d;
    }
  }
  return detail::psnr_from_mse(se / double(3 * reference.size()));
}

/// Mean structural similarity. 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, evaluated where the window fits
/// entirely inside the image.
inline double ssim(const Map& a, const Map& b) {
  require_same_shape(a, b, "ssim");
  if (a.width() < 11 || a.height() < 11) {
    throw std::invalid_argument("ssim: images must be at least 11x11");
  }
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto w = detail::ssim_window_1d();
  Map aa(a.width(), a.height()), bb(a.width(), a.height()), ab(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const Map mu_a = detail::filter_valid(a, w);
  const Map mu_b = detail::filter_valid(b, w);
  const Map e_aa = detail::filter_valid(aa, w);
  const Map e_bb = detail::filter_valid(bb, w);
  const Map e_ab = detail::filter_valid(ab, w);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / double(mu_a.size());
}

inline Map color_plane(const ColorImage& img, std::size_t c) {
  Map out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i][c];
  return out;
}

/// Colour SSIM: mean of the per-component scores.
inline double ssim(const ColorImage& a, const ColorImage& b) {
  require_same_shape(a, b, "ssim");
  double total = 0.0;
  for (std::size_t c = 0; c < 3; ++c) total += ssim(color_plane(a, c), color_plane(b, c));
  return total / 3.0;
}

/// Hasler-Suesstrunk colourfulness on 8-bit scaled components:
///   rg = R - G,  yb = (R + G)/2 - B
///   cci = sqrt(var_rg + var_yb) + 0.3 * sqrt(mean_rg^2 + mean_yb^2)
inline double cci(const ColorImage& img) {
  if (img.empty()) throw std::invalid_argument("cci: empty image");
  const double n = double(img.size());
  double sum_rg = 0.0, sum_yb = 0.0;
  for (const auto& px : img) {
    sum_rg += 255.0 * (px[0] - px[1]);
    sum_yb += 255.0 * (0.5 * (px[0] + px[1]) - px[2]);
  }
  const double mean_rg = sum_rg / n, mean_yb = sum_yb / n;
  double var_rg = 0.0, var_yb = 0.0;
  for (const auto& px : img) {
    const double rg = 255.0 * (px[0] - px[1]) - mean_rg;
    const double yb = 255.0 * (0.5 * (px[0] + px[1]) - px[2]) - mean_yb;
    var_rg += rg * rg;
    var_yb += yb * yb;
  }
  var_rg /= n;
  var_yb /= n;
  return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mean_rg * mean_rg + mean_yb * mean_yb);
}

}  // namespace ghostcolor

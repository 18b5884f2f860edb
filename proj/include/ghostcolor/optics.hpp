#pragma once

#include <cmath>
#include <cstdint>
#include <ranges>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ghostcolor/frame.hpp"
#include "ghostcolor/image.hpp"
#include "ghostcolor/rng.hpp"

namespace ghostcolor {

/// An infrared probe wavelength that illuminates the object, bound to the
/// visible display wavelength that carries the reconstruction.
struct SpectralChannel {
  double probe_wavelength_nm = 0.0;
  double display_wavelength_nm = 0.0;

  void validate() const {
    if (!(probe_wavelength_nm > 0.0) || !(display_wavelength_nm > 0.0)) {
      throw std::invalid_argument("SpectralChannel: wavelengths must be positive");
    }
    if (probe_wavelength_nm == display_wavelength_nm) {
      throw std::invalid_argument("SpectralChannel: probe and display wavelengths must differ");
    }
  }
};

/// Object reflectance, one map per spectral channel.
struct Scene {
  std::vector<SpectralChannel> channels;
  std::vector<Map> reflectance;

  std::size_t width() const { return reflectance.empty() ? 0 : reflectance.front().width(); }
  std::size_t height() const { return reflectance.empty() ? 0 : reflectance.front().height(); }

  void validate() const {
    if (channels.empty()) throw std::invalid_argument("Scene: at least one channel required");
    if (channels.size() != reflectance.size()) {
      throw std::invalid_argument("Scene: channel table and reflectance maps differ in count");
    }
    for (const auto& ch : channels) ch.validate();
    for (const auto& m : reflectance) {
      require_same_shape(reflectance.front(), m, "Scene");
      if (m.empty()) throw std::invalid_argument("Scene: empty reflectance map");
      for (double v : m) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw std::invalid_argument("Scene: reflectance values must lie in [0,1]");
        }
      }
    }
  }
};

struct MaskParams {
  std::size_t width = 0;
  std::size_t height = 0;
  double correlation_length_px = 0.0;  // 0 = spatially white
  std::uint64_t seed = 0;
  double amplitude_low = 0.0;
  double amplitude_high = 1.0;

  void validate() const {
    if (width == 0 || height == 0) throw std::invalid_argument("MaskParams: zero dimension");
    if (!(correlation_length_px >= 0.0) || !std::isfinite(correlation_length_px)) {
      throw std::invalid_argument("MaskParams: correlation length must be >= 0");
    }
    if (!(amplitude_low >= 0.0 && amplitude_low < amplitude_high && amplitude_high <= 1.0)) {
      throw std::invalid_argument("MaskParams: amplitude range must satisfy 0 <= low < high <= 1");
    }
  }
};

struct SpeckleMask {
  std::uint64_t index = 0;
  Map amplitude;
};

struct DetectorNoise {
  double bucket_sigma = 0.0;
  double reference_sigma = 0.0;

  void validate() const {
    if (!(bucket_sigma >= 0.0) || !(reference_sigma >= 0.0)) {
      throw std::invalid_argument("DetectorNoise: sigmas must be >= 0");
    }
  }
};

/// Point-spread function standing in for the propagation from the modulator
/// to either detector. Identity means image-plane configuration.
class Psf {
 public:
  Psf() = default;

  static Psf identity() { return Psf{}; }

  /// Kernel must be odd-sized, non-negative and sum to 1 within 1e-12.
  static Psf from_kernel(Map kernel) {
    if (kernel.width() % 2 == 0 || kernel.height() % 2 == 0) {
      throw std::invalid_argument("Psf: kernel dimensions must be odd");
    }
    double sum = 0.0;
    for (double v : kernel) {
      if (!(v >= 0.0)) throw std::invalid_argument("Psf: kernel entries must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("Psf: kernel must sum to 1");
    Psf p;
    p.kernel_ = std::move(kernel);
    return p;
  }

  static Psf normalized(Map kernel) {
    double sum = 0.0;
    for (double v : kernel) sum += v;
    if (!(sum > 0.0)) throw std::invalid_argument("Psf: kernel sum must be positive");
    for (double& v : kernel) v /= sum;
    return from_kernel(std::move(kernel));
  }

  static Psf box(std::size_t size) { return normalized(Map(size, size, 1.0)); }

  static Psf gaussian(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("Psf: gaussian sigma must be positive");
    const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    const std::size_t n = 2 * radius + 1;
    Map k(n, n);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = double(x) - double(radius), dy = double(y) - double(radius);
        k(x, y) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
    }
    return normalized(std::move(k));
  }

  bool is_identity() const { return kernel_.empty(); }
  const Map& kernel() const { return kernel_; }

 private:
  Map kernel_;
};

namespace detail {

// Half-sample symmetric reflection: -1 -> 0, n -> n-1, periodic in 2n.
inline std::size_t reflect_index(long long i, std::size_t n) {
  const long long period = 2 * static_cast<long long>(n);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

inline std::vector<double> gaussian_taps(double sigma) {
  const auto radius = std::max<long long>(1, static_cast<long long>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long long k = -radius; k <= radius; ++k) {
    const double v = std::exp(-double(k * k) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

// Separable circular smoothing; keeps the field statistically stationary.
inline Map smooth_circular(const Map& in, const std::vector<double>& taps) {
  const long long r = static_cast<long long>(taps.size() / 2);
  const long long w = static_cast<long long>(in.width());
  const long long h = static_cast<long long>(in.height());
  auto wrap = [](long long i, long long n) { return static_cast<std::size_t>(((i % n) + n) % n); };
  Map tmp(in.width(), in.height());
  for (long long y = 0; y < h; ++y) {
    for (long long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long long k = -r; k <= r; ++k) {
        acc += taps[static_cast<std::size_t>(k + r)] * in(wrap(x - k, w), std::size_t(y));
      }
      tmp(std::size_t(x), std::size_t(y)) = acc;
    }
  }
  Map out(in.width(), in.height());
  for (long long y = 0; y < h; ++y) {
    for (long long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long long k = -r; k <= r; ++k) {
        acc += taps[static_cast<std::size_t>(k + r)] * tmp(std::size_t(x), wrap(y - k, h));
      }
      out(std::size_t(x), std::size_t(y)) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Convolves `in` with the PSF. Energy that would leave the frame is
/// reflected back at the border, so the total is conserved for any kernel.
inline Map convolve_reflect(const Map& in, const Psf& psf) {
  if (psf.is_identity()) return in;
  const Map& k = psf.kernel();
  const long long cx = static_cast<long long>(k.width() / 2);
  const long long cy = static_cast<long long>(k.height() / 2);
  Map out(in.width(), in.height(), 0.0);
  for (std::size_t y = 0; y < in.height(); ++y) {
    for (std::size_t x = 0; x < in.width(); ++x) {
      const double v = in(x, y);
      if (v == 0.0) continue;
      for (std::size_t ky = 0; ky < k.height(); ++ky) {
        const std::size_t ty =
            detail::reflect_index(static_cast<long long>(y + ky) - cy, in.height());
        for (std::size_t kx = 0; kx < k.width(); ++kx) {
          const std::size_t tx =
              detail::reflect_index(static_cast<long long>(x + kx) - cx, in.width());
          out(tx, ty) += k(kx, ky) * v;
        }
      }
    }
  }
  return out;
}

/// Standardized Gaussian random field behind mask `frame_index`, before the
/// amplitude mapping. Smoothing width is chosen so that the field's
/// autocorrelation is a Gaussian of standard deviation `correlation_length_px`.
inline Map gaussian_field(const MaskParams& params, std::uint64_t frame_index) {
  params.validate();
  Engine rng = make_engine(params.seed, Stream::mask, 0, frame_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  Map field(params.width, params.height);
  for (double& v : field) v = normal(rng);

  if (params.correlation_length_px > 0.0) {
    const double kernel_sigma = params.correlation_length_px / std::sqrt(2.0);
    field = detail::smooth_circular(field, detail::gaussian_taps(kernel_sigma));
  }

  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= double(field.size());
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  var /= double(field.size());
  const double sd = std::sqrt(var);
  for (double& v : field) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return field;
}

/// Maps a standardized field value onto the amplitude range; [-3, 3] spans
/// [low, high] and anything beyond is clamped.
inline double field_to_amplitude(double z, double low, double high) {
  const double a = low + (z + 3.0) / 6.0 * (high - low);
  return std::clamp(a, low, high);
}

inline SpeckleMask generate_mask(const MaskParams& params, std::uint64_t frame_index) {
  Map field = gaussian_field(params, frame_index);
  for (double& v : field) v = field_to_amplitude(v, params.amplitude_low, params.amplitude_high);
  return {frame_index, std::move(field)};
}

inline Map squared(const Map& amplitude) {
  Map out = amplitude;
  for (double& v : out) v *= v;
  return out;
}

inline Map reference_intensity(const SpeckleMask& mask, const Psf& psf,
                               const DetectorNoise& noise, Engine& rng) {
  Map out = convolve_reflect(squared(mask.amplitude), psf);
  if (noise.reference_sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, noise.reference_sigma);
    for (double& v : out) v += normal(rng);
  }
  return out;
}

inline double bucket_value(const SpeckleMask& mask, const Scene& scene, std::size_t channel_index,
                           const Psf& psf, const DetectorNoise& noise, Engine& rng) {
  if (channel_index >= scene.reflectance.size()) {
    throw std::out_of_range("bucket_value: channel index " + std::to_string(channel_index) +
                            " out of range");
  }
  const Map& refl = scene.reflectance[channel_index];
  require_same_shape(mask.amplitude, refl, "bucket_value");
  const Map illum = convolve_reflect(squared(mask.amplitude), psf);
  double sum = 0.0;
  for (std::size_t i = 0; i < illum.size(); ++i) sum += illum[i] * refl[i];
  if (noise.bucket_sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, noise.bucket_sigma);
    sum += normal(rng);
  }
  return sum;
}

/// Produces frame records for one channel of a scene. Every frame is a pure
/// function of (seed, channel, frame index), so frames may be generated in
/// any order and on any thread.
class FrameSimulator {
 public:
  FrameSimulator(Scene scene, std::size_t channel_index, MaskParams params, Psf psf,
                 DetectorNoise noise)
      : scene_(std::move(scene)),
        channel_(channel_index),
        params_(params),
        psf_(std::move(psf)),
        noise_(noise) {
    scene_.validate();
    params_.validate();
    noise_.validate();
    if (channel_ >= scene_.channels.size()) {
      throw std::out_of_range("FrameSimulator: channel index " + std::to_string(channel_) +
                              " out of range");
    }
    if (params_.width != scene_.width() || params_.height != scene_.height()) {
      throw std::invalid_argument("FrameSimulator: mask and scene dimensions differ");
    }
  }

  FrameRecord frame(std::uint64_t index) const {
    const SpeckleMask mask = generate_mask(params_, index);
    Engine ref_rng = make_engine(params_.seed, Stream::reference_noise, channel_, index);
    Engine bucket_rng = make_engine(params_.seed, Stream::bucket_noise, channel_, index);
    FrameRecord rec;
    rec.frame_index = mask.index;
    rec.reference = reference_intensity(mask, psf_, noise_, ref_rng);
    rec.bucket = bucket_value(mask, scene_, channel_, psf_, noise_, bucket_rng);
    return rec;
  }

  const Scene& scene() const { return scene_; }
  std::size_t channel_index() const { return channel_; }
  const SpectralChannel& channel() const { return scene_.channels[channel_]; }
  const MaskParams& mask_params() const { return params_; }
  std::size_t width() const { return params_.width; }
  std::size_t height() const { return params_.height; }

 private:
  Scene scene_;
  std::size_t channel_;
  MaskParams params_;
  Psf psf_;
  DetectorNoise noise_;
};

/// Lazy stream of `n_frames` records starting at `first_frame`.
inline auto simulate_frames(const FrameSimulator& sim, std::uint64_t n_frames,
                            std::uint64_t first_frame = 0) {
  if (n_frames < 1) throw std::invalid_argument("simulate_frames: n_frames must be >= 1");
  return std::views::iota(first_frame, first_frame + n_frames) |
         std::views::transform([&sim](std::uint64_t i) { return sim.frame(i); });
}

// The view refers to the simulator, so a temporary would dangle.
auto simulate_frames(FrameSimulator&&, std::uint64_t, std::uint64_t = 0) = delete;

}  // namespace ghostcolor

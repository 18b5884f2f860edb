#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ghostcolor/frame.hpp"
#include "ghostcolor/image.hpp"

namespace ghostcolor {

/// Raised when a reconstruction carries no contrast to normalize.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw-moment sums for the covariance between every reference pixel and the
/// bucket signal. Accumulators built on disjoint frame sets merge by adding
/// their fields.
class CorrelationAccumulator {
 public:
  CorrelationAccumulator() = default;
  CorrelationAccumulator(std::size_t width, std::size_t height)
      : sum_ref_(width, height, 0.0), sum_ref_bucket_(width, height, 0.0) {}
  CorrelationAccumulator(std::uint64_t n, Map sum_ref, double sum_bucket, Map sum_ref_bucket)
      : n_(n),
        sum_ref_(std::move(sum_ref)),
        sum_bucket_(sum_bucket),
        sum_ref_bucket_(std::move(sum_ref_bucket)) {
    require_same_shape(sum_ref_, sum_ref_bucket_, "CorrelationAccumulator");
  }

  std::uint64_t n() const { return n_; }
  std::size_t width() const { return sum_ref_.width(); }
  std::size_t height() const { return sum_ref_.height(); }
  const Map& sum_ref() const { return sum_ref_; }
  double sum_bucket() const { return sum_bucket_; }
  const Map& sum_ref_bucket() const { return sum_ref_bucket_; }

  void add(const FrameRecord& frame) {
    require_same_shape(sum_ref_, frame.reference, "accumulate");
    const double b = frame.bucket;
    for (std::size_t i = 0; i < sum_ref_.size(); ++i) {
      const double r = frame.reference[i];
      sum_ref_[i] += r;
      sum_ref_bucket_[i] += r * b;
    }
    sum_bucket_ += b;
    ++n_;
  }

  void merge_from(const CorrelationAccumulator& other) {
    require_same_shape(sum_ref_, other.sum_ref_, "merge");
    for (std::size_t i = 0; i < sum_ref_.size(); ++i) {
      sum_ref_[i] += other.sum_ref_[i];
      sum_ref_bucket_[i] += other.sum_ref_bucket_[i];
    }
    sum_bucket_ += other.sum_bucket_;
    n_ += other.n_;
  }

  friend bool operator==(const CorrelationAccumulator&, const CorrelationAccumulator&) = default;

 private:
  std::uint64_t n_ = 0;
  Map sum_ref_;
  double sum_bucket_ = 0.0;
  Map sum_ref_bucket_;
};

inline CorrelationAccumulator accumulate(CorrelationAccumulator acc, const FrameRecord& frame) {
  acc.add(frame);
  return acc;
}

inline CorrelationAccumulator merge(CorrelationAccumulator a, const CorrelationAccumulator& b) {
  a.merge_from(b);
  return a;
}

struct ChannelReconstruction {
  Map g;
  std::uint64_t n_frames = 0;
  double display_wavelength_nm = 0.0;
};

/// Background-subtracted cross-correlation <R(x) B> - <R(x)><B> with the
/// biased 1/n normalization. No rescaling.
inline ChannelReconstruction finalize(const CorrelationAccumulator& acc,
                                      double display_wavelength_nm = 0.0) {
  if (acc.n() < 2) {
    throw std::invalid_argument("finalize: at least 2 frames required, have " +
                                std::to_string(acc.n()));
  }
  const double n = double(acc.n());
  const double mean_bucket = acc.sum_bucket() / n;
  Map g(acc.width(), acc.height());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = acc.sum_ref_bucket()[i] / n - (acc.sum_ref()[i] / n) * mean_bucket;
  }
  return {std::move(g), acc.n(), display_wavelength_nm};
}

enum class NormalizeMode { minmax, zscore_clip };

inline NormalizeMode parse_normalize_mode(std::string_view s) {
  if (s == "minmax") return NormalizeMode::minmax;
  if (s == "zscore-clip") return NormalizeMode::zscore_clip;
  throw std::invalid_argument("unknown normalize mode '" + std::string(s) +
                              "' (expected minmax or zscore-clip)");
}

inline const char* to_string(NormalizeMode m) {
  return m == NormalizeMode::minmax ? "minmax" : "zscore-clip";
}

/// Maps a reconstruction into [0,1] for display and scoring.
///  minmax:      [min, max]       -> [0, 1]
///  zscore-clip: [mu-3sd, mu+3sd] -> [0, 1], clamped
inline Map normalize(const ChannelReconstruction& rec, NormalizeMode mode) {
  const Map& g = rec.g;
  if (g.empty()) throw std::invalid_argument("normalize: empty reconstruction");
  Map out(g.width(), g.height());
  if (mode == NormalizeMode::minmax) {
    const auto [lo, hi] = min_max(g);
    if (!(hi > lo)) throw DegenerateInput("normalize: reconstruction is constant");
    const double span = hi - lo;
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = (g[i] - lo) / span;
    return out;
  }
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= double(g.size());
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(g.size()));
  if (!(sd > 0.0)) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i] = std::clamp((g[i] - (mean - 3.0 * sd)) / (6.0 * sd), 0.0, 1.0);
  }
  return out;
}

}  // namespace ghostcolor

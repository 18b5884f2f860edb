#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ghostcolor/correlator.hpp"
#include "ghostcolor/optics.hpp"

namespace ghostcolor {
namespace {

std::vector<FrameRecord> random_frames(std::size_t n, std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FrameRecord> out(n);
  for (std::size_t f = 0; f < n; ++f) {
    out[f].frame_index = f;
    out[f].reference = Map(w, h);
    double b = 0.0;
    for (std::size_t i = 0; i < w * h; ++i) {
      out[f].reference[i] = u(rng);
      b += out[f].reference[i] * (i % 3 == 0 ? 1.0 : 0.2);  // correlated bucket
    }
    out[f].bucket = b + u(rng);
  }
  return out;
}

CorrelationAccumulator accumulate_all(const std::vector<FrameRecord>& frames, std::size_t begin,
                                      std::size_t end) {
  CorrelationAccumulator acc(frames.front().reference.width(), frames.front().reference.height());
  for (std::size_t i = begin; i < end; ++i) acc.add(frames[i]);
  return acc;
}

// Two-pass covariance: means first, then the mean of products of deviations.
Map two_pass_covariance(const std::vector<FrameRecord>& frames) {
  const std::size_t px = frames.front().reference.size();
  const double n = double(frames.size());
  std::vector<long double> mean_r(px, 0.0L);
  long double mean_b = 0.0L;
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < px; ++i) mean_r[i] += f.reference[i];
    mean_b += f.bucket;
  }
  for (auto& m : mean_r) m /= n;
  mean_b /= n;
  Map g(frames.front().reference.width(), frames.front().reference.height(), 0.0);
  std::vector<long double> acc(px, 0.0L);
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < px; ++i) acc[i] += (f.reference[i] - mean_r[i]) * (f.bucket - mean_b);
  }
  for (std::size_t i = 0; i < px; ++i) g[i] = double(acc[i] / n);
  return g;
}

double max_abs(const Map& m) {
  double out = 0.0;
  for (double v : m) out = std::max(out, std::abs(v));
  return out;
}

double relative_difference(const Map& a, const Map& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d / max_abs(b);
}

TEST(Accumulate, SingleFrameSums) {
  const auto frames = random_frames(1, 4, 3, 1);
  const auto acc = accumulate(CorrelationAccumulator(4, 3), frames[0]);
  EXPECT_EQ(acc.n(), 1u);
  EXPECT_EQ(acc.sum_ref(), frames[0].reference);
  EXPECT_EQ(acc.sum_bucket(), frames[0].bucket);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(acc.sum_ref_bucket()[i], frames[0].reference[i] * frames[0].bucket);
  }
}

TEST(Accumulate, ZeroBucketLeavesCrossSumUnchanged) {
  auto frames = random_frames(3, 4, 4, 2);
  auto acc = accumulate_all(frames, 0, 2);
  const Map before = acc.sum_ref_bucket();
  frames[2].bucket = 0.0;
  acc.add(frames[2]);
  EXPECT_EQ(acc.sum_ref_bucket(), before);
  EXPECT_EQ(acc.n(), 3u);
}

TEST(Accumulate, RejectsDimensionMismatch) {
  CorrelationAccumulator acc(4, 4);
  FrameRecord f{0, Map(4, 5, 1.0), 1.0};
  EXPECT_THROW(acc.add(f), std::invalid_argument);
}

TEST(Merge, HalvesEqualSequential) {
  const auto frames = random_frames(100, 6, 5, 3);
  const auto seq = accumulate_all(frames, 0, 100);
  const auto merged = merge(accumulate_all(frames, 0, 50), accumulate_all(frames, 50, 100));
  EXPECT_EQ(merged.n(), seq.n());
  EXPECT_LT(relative_difference(merged.sum_ref_bucket(), seq.sum_ref_bucket()), 1e-12);
  EXPECT_LT(relative_difference(merged.sum_ref(), seq.sum_ref()), 1e-12);
  EXPECT_NEAR(merged.sum_bucket(), seq.sum_bucket(), 1e-12 * seq.sum_bucket());
}

TEST(Merge, EmptyIsIdentity) {
  const auto frames = random_frames(10, 5, 5, 4);
  const auto a = accumulate_all(frames, 0, 10);
  EXPECT_EQ(merge(a, CorrelationAccumulator(5, 5)), a);
  EXPECT_EQ(merge(CorrelationAccumulator(5, 5), a), a);
}

TEST(Merge, CommutativeAndAssociative) {
  const auto frames = random_frames(30, 5, 4, 5);
  const auto a = accumulate_all(frames, 0, 10);
  const auto b = accumulate_all(frames, 10, 20);
  const auto c = accumulate_all(frames, 20, 30);
  EXPECT_EQ(merge(a, b), merge(b, a));
  // Exact for the frame counts; the float fields are compared bitwise below
  // on integer-valued data where association cannot round.
  auto integral = [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    CorrelationAccumulator acc(3, 3);
    for (int f = 0; f < 7; ++f) {
      FrameRecord r{std::uint64_t(f), Map(3, 3), double(rng() % 100)};
      for (double& v : r.reference) v = double(rng() % 50);
      acc.add(r);
    }
    return acc;
  };
  const auto x = integral(1), y = integral(2), z = integral(3);
  EXPECT_EQ(merge(merge(x, y), z), merge(x, merge(y, z)));
  const auto l = merge(merge(a, b), c), r = merge(a, merge(b, c));
  EXPECT_EQ(l.n(), r.n());
  EXPECT_LT(relative_difference(l.sum_ref_bucket(), r.sum_ref_bucket()), 1e-15);
}

TEST(Merge, FourShardsMatchSinglePass) {
  const auto frames = random_frames(40000, 4, 4, 6);
  const auto single = finalize(accumulate_all(frames, 0, frames.size()));
  CorrelationAccumulator merged(4, 4);
  for (std::size_t s = 0; s < 4; ++s) merged.merge_from(accumulate_all(frames, s * 10000, (s + 1) * 10000));
  EXPECT_LT(relative_difference(finalize(merged).g, single.g), 1e-10);
}

TEST(Merge, RejectsDimensionMismatch) {
  EXPECT_THROW(merge(CorrelationAccumulator(3, 3), CorrelationAccumulator(3, 4)), std::invalid_argument);
}

TEST(Finalize, MatchesTwoPassOracle) {
  const auto frames = random_frames(2000, 8, 8, 7);
  const auto rec = finalize(accumulate_all(frames, 0, frames.size()), 532.0);
  EXPECT_EQ(rec.n_frames, 2000u);
  EXPECT_EQ(rec.display_wavelength_nm, 532.0);
  EXPECT_LT(relative_difference(rec.g, two_pass_covariance(frames)), 1e-10);
}

TEST(Finalize, ConstantBucketGivesZero) {
  auto frames = random_frames(50, 5, 5, 8);
  for (auto& f : frames) f.bucket = 3.0;
  const auto rec = finalize(accumulate_all(frames, 0, frames.size()));
  for (double v : rec.g) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(Finalize, ConstantReferenceGivesFlatImage) {
  auto frames = random_frames(50, 5, 5, 9);
  for (auto& f : frames) {
    const double c = f.reference[0];
    for (double& v : f.reference) v = c;
  }
  const auto rec = finalize(accumulate_all(frames, 0, frames.size()));
  for (double v : rec.g) EXPECT_EQ(v, rec.g[0]);
}

TEST(Finalize, RequiresTwoFrames) {
  const auto frames = random_frames(1, 3, 3, 10);
  EXPECT_THROW(finalize(CorrelationAccumulator(3, 3)), std::invalid_argument);
  EXPECT_THROW(finalize(accumulate_all(frames, 0, 1)), std::invalid_argument);
}

TEST(Finalize, BucketOffsetInvariance) {
  auto frames = random_frames(1000, 8, 8, 11);
  const auto base = finalize(accumulate_all(frames, 0, frames.size()));
  for (auto& f : frames) f.bucket += 1000.0;
  const auto shifted = finalize(accumulate_all(frames, 0, frames.size()));
  EXPECT_LT(relative_difference(shifted.g, base.g), 1e-9);
}

TEST(Finalize, ReferenceOffsetInvariance) {
  auto frames = random_frames(1000, 8, 8, 12);
  const auto base = finalize(accumulate_all(frames, 0, frames.size()));
  Map offset(8, 8);
  for (std::size_t i = 0; i < offset.size(); ++i) offset[i] = 0.5 + 0.1 * double(i % 7);
  for (auto& f : frames) {
    for (std::size_t i = 0; i < offset.size(); ++i) f.reference[i] += offset[i];
  }
  const auto shifted = finalize(accumulate_all(frames, 0, frames.size()));
  EXPECT_LT(relative_difference(shifted.g, base.g), 1e-9);
}

TEST(Finalize, BucketScaling) {
  auto frames = random_frames(500, 6, 6, 13);
  const auto base = finalize(accumulate_all(frames, 0, frames.size()));
  // Power-of-two scale: every product and sum scales exactly.
  for (auto& f : frames) f.bucket *= 4.0;
  const auto scaled = finalize(accumulate_all(frames, 0, frames.size()));
  for (std::size_t i = 0; i < base.g.size(); ++i) EXPECT_EQ(scaled.g[i], 4.0 * base.g[i]);
  for (auto& f : frames) f.bucket *= 0.75;
  const auto scaled3 = finalize(accumulate_all(frames, 0, frames.size()));
  EXPECT_LT(relative_difference(scaled3.g, [&] {
              Map m = base.g;
              for (double& v : m) v *= 3.0;
              return m;
            }()),
            1e-12);
}

TEST(Finalize, LinearInObject) {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Map a(12, 12), b(12, 12), mix(12, 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = u(gen);
    b[i] = u(gen);
    mix[i] = 0.3 * a[i] + 0.6 * b[i];
  }
  MaskParams p;
  p.width = p.height = 12;
  p.correlation_length_px = 1.0;
  p.seed = 3;
  auto reconstruct = [&](const Map& refl) {
    Scene s{{{785.0, 532.0}}, {refl}};
    FrameSimulator sim(s, 0, p, Psf::identity(), {});
    CorrelationAccumulator acc(12, 12);
    for (const auto& f : simulate_frames(sim, 300)) acc.add(f);
    return finalize(acc).g;
  };
  const Map ga = reconstruct(a), gb = reconstruct(b), gm = reconstruct(mix);
  Map expected(12, 12);
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = 0.3 * ga[i] + 0.6 * gb[i];
  EXPECT_LT(relative_difference(gm, expected), 1e-9);
}

TEST(Normalize, MinMaxIsAffine) {
  ChannelReconstruction rec{Map(3, 1), 10, 532.0};
  rec.g[0] = -2.0;
  rec.g[1] = 2.0;
  rec.g[2] = 6.0;
  const Map out = normalize(rec, NormalizeMode::minmax);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.5);
  EXPECT_EQ(out[2], 1.0);
}

TEST(Normalize, MinMaxRejectsConstant) {
  ChannelReconstruction rec{Map(4, 4, 1.5), 10, 532.0};
  EXPECT_THROW(normalize(rec, NormalizeMode::minmax), DegenerateInput);
}

TEST(Normalize, ZScoreClipMapsThreeSigmaRange) {
  ChannelReconstruction rec{Map(4, 1), 10, 532.0};
  // mean 0, population sd 1
  rec.g[0] = -1.0;
  rec.g[1] = 1.0;
  rec.g[2] = -1.0;
  rec.g[3] = 1.0;
  const Map out = normalize(rec, NormalizeMode::zscore_clip);
  EXPECT_DOUBLE_EQ(out[0], 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(out[1], 4.0 / 6.0);

  ChannelReconstruction outlier{Map(100, 1, 0.0), 10, 532.0};
  outlier.g[0] = 1000.0;
  const Map clipped = normalize(outlier, NormalizeMode::zscore_clip);
  EXPECT_EQ(clipped[0], 1.0);
  for (double v : clipped) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Normalize, ParsesModeNames) {
  EXPECT_EQ(parse_normalize_mode("minmax"), NormalizeMode::minmax);
  EXPECT_EQ(parse_normalize_mode("zscore-clip"), NormalizeMode::zscore_clip);
  EXPECT_THROW(parse_normalize_mode("gamma"), std::invalid_argument);
}

}  // namespace
}  // namespace ghostcolor

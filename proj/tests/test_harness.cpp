#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ghostcolor/harness.hpp"

namespace fs = std::filesystem;

namespace ghostcolor {
namespace {

const fs::path kData = fs::path(GHOSTCOLOR_SOURCE_DIR) / "data";

ExperimentConfig config_from(const std::string& text) { return build_config(parse_settings(text), kData); }

Map blob(std::size_t n, double cx, double cy, double r) {
  Map m(n, n, 0.05);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      if (std::hypot(double(x) - cx, double(y) - cy) < r) m(x, y) = 0.9;
    }
  }
  return m;
}

Experiment two_band(std::size_t n, const std::string& extra = "") {
  const auto cfg = config_from(
      "seed = 11\n"
      "mask.correlation_length_px = 1.0\n"
      "channel.0.probe_nm = 785\nchannel.0.display_nm = 532\nchannel.0.scene = scenes/metamer_785.pgm\n"
      "channel.1.probe_nm = 830\nchannel.1.display_nm = 635\nchannel.1.scene = scenes/metamer_830.pgm\n" +
      extra);
  Scene scene;
  scene.channels = {cfg.channels[0].channel, cfg.channels[1].channel};
  scene.reflectance = {blob(n, n * 0.3, n * 0.4, n * 0.2), blob(n, n * 0.65, n * 0.6, n * 0.25)};
  return Experiment(cfg, scene);
}

TEST(AccumulateFrames, ThreadCountDoesNotChangeBits) {
  const Experiment exp = two_band(12);
  const FrameSimulator sim = exp.simulator(0);
  const auto one = accumulate_frames(sim, 3, 1000, 1);
  for (unsigned t : {2u, 3u, 8u}) EXPECT_EQ(accumulate_frames(sim, 3, 1000, t).total, one.total) << t;
}

TEST(AccumulateFrames, SnapshotsMatchIndependentRuns) {
  const Experiment exp = two_band(10);
  const FrameSimulator sim = exp.simulator(1);
  const std::vector<std::uint64_t> counts = {1, 2, 255, 256, 257, 600, 700};
  const auto res = accumulate_frames(sim, 0, 700, 3, counts);
  ASSERT_EQ(res.snapshots.size(), counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    EXPECT_EQ(res.snapshots[i], accumulate_frames(sim, 0, counts[i], 1).total) << counts[i];
    EXPECT_EQ(res.snapshots[i].n(), counts[i]);
  }
  EXPECT_EQ(res.snapshots.back(), res.total);
}

TEST(AccumulateFrames, RejectsBadSnapshotCounts) {
  const Experiment exp = two_band(8);
  const FrameSimulator sim = exp.simulator(0);
  const std::vector<std::uint64_t> unsorted = {5, 3};
  const std::vector<std::uint64_t> too_big = {11};
  const std::vector<std::uint64_t> zero = {0};
  EXPECT_THROW(accumulate_frames(sim, 0, 10, 1, unsorted), std::invalid_argument);
  EXPECT_THROW(accumulate_frames(sim, 0, 10, 1, too_big), std::invalid_argument);
  EXPECT_THROW(accumulate_frames(sim, 0, 10, 1, zero), std::invalid_argument);
}

TEST(AccumulateFrames, ShardsMergeToFullRun) {
  const Experiment exp = two_band(12);
  const FrameSimulator sim = exp.simulator(0);
  const auto full = accumulate_frames(sim, 0, 1200, 2).total;
  CorrelationAccumulator merged(12, 12);
  for (std::uint64_t s = 0; s < 4; ++s) merged.merge_from(accumulate_frames(sim, s * 300, 300, 1).total);
  EXPECT_EQ(merged.n(), full.n());
  const Map a = finalize(full).g, b = finalize(merged).g;
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(a[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  EXPECT_LE(diff, 1e-10 * scale);
}

TEST(Experiment, RejectsMaskSceneMismatch) {
  auto cfg = config_from(
      "mask.width = 20\n"
      "channel.0.probe_nm = 785\nchannel.0.display_nm = 532\nchannel.0.scene = scenes/house_32.pgm\n");
  EXPECT_THROW(Experiment{cfg}, ConfigError);
}

TEST(Experiment, MissingSceneNamesPath) {
  auto cfg = config_from("channel.0.probe_nm = 785\nchannel.0.display_nm = 532\nchannel.0.scene = scenes/nope.pgm\n");
  try {
    Experiment exp(cfg);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("nope.pgm"), std::string::npos);
  }
}

TEST(Convergence, OneRowPerBudget) {
  const Experiment exp = two_band(16, "budgets = 100, 200\n");
  const auto res = run_convergence(exp);
  ASSERT_EQ(res.rows.size(), 2u);
  EXPECT_EQ(res.rows[0].n_frames, 100u);
  EXPECT_EQ(res.rows[1].n_frames, 200u);
  for (const auto& r : res.rows) {
    ASSERT_EQ(r.channels.size(), 2u);
    EXPECT_TRUE(std::isfinite(r.color_psnr_db));
    EXPECT_GE(r.cci, 0.0);
  }
  EXPECT_EQ(res.snapshots[1].channels[0].n_frames, 200u);
}

TEST(Convergence, TenfoldLadderHasFourRows) {
  // The full 10k..100k ladder on a tiny scene stays cheap.
  const Experiment exp = two_band(11, "budgets = 10000, 40000, 70000, 100000\nthreads = 0\n");
  const auto res = run_convergence(exp);
  ASSERT_EQ(res.rows.size(), 4u);
  EXPECT_EQ(res.rows.back().n_frames, 100000u);
  for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(res.snapshots[b].channels[1].n_frames, exp.config.budgets[b]);
}

TEST(Convergence, SnapshotsMatchDirectRuns) {
  const Experiment exp = two_band(16, "budgets = 300, 1000\n");
  const auto res = run_convergence(exp);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t ch = 0; ch < 2; ++ch) {
      EXPECT_EQ(res.snapshots[b].channels[ch].g, run_channel(exp, ch, exp.config.budgets[b]).g);
    }
  }
}

TEST(Convergence, RequiresBudgets) {
  const Experiment exp = two_band(12);
  EXPECT_THROW(run_convergence(exp), ConfigError);
}

TEST(Convergence, CsvAndFiles) {
  const Experiment exp = two_band(16, "budgets = 50, 120\n");
  const auto res = run_convergence(exp);
  const std::string csv = convergence_csv(res, exp.scene);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "n_frames,psnr_db_532nm,ssim_532nm,psnr_db_635nm,ssim_635nm,psnr_db_color,ssim_color,cci");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
    ++rows;
  }
  EXPECT_EQ(rows, 2);

  const fs::path dir = fs::temp_directory_path() / "ghostcolor_test_harness_conv";
  fs::remove_all(dir);
  const auto files = write_convergence(res, exp.scene, dir, false);
  for (const auto& f : files) EXPECT_TRUE(fs::exists(f)) << f;
  EXPECT_TRUE(fs::exists(dir / "frames_120_color.png"));
  EXPECT_TRUE(fs::exists(dir / "frames_50_channel1_g.raw"));
  const Raster g = read_raster(dir / "frames_120_channel0_g.raw");
  EXPECT_EQ(g.samples, std::vector<double>(res.snapshots[1].channels[0].g.begin(),
                                           res.snapshots[1].channels[0].g.end()));
}

TEST(CsvFormat, ComparisonAndMetrics) {
  EXPECT_EQ(comparison_csv({{"metamer", "visible", 0, 1.5}, {"metamer", "reconstructed", 4000, 20.25}}),
            "scene,image,n_frames,cci\nmetamer,visible,0,1.5\nmetamer,reconstructed,4000,20.25\n");
  MetricReport r;
  r.n_frames = 10;
  r.psnr_db = kPsnrIdentical;
  r.ssim = 1.0;
  r.cci = 0.0;
  EXPECT_EQ(metrics_csv({r}), "n_frames,psnr_db,ssim,cci\n10,inf,1,0\n");
}

ExperimentConfig scene_config(const std::string& stem, std::uint64_t frames) {
  return config_from("seed = 5\nframes = " + std::to_string(frames) +
                     "\nmask.correlation_length_px = 1.0\n"
                     "channel.0.probe_nm = 785\nchannel.0.display_nm = 532\nchannel.0.scene = scenes/" +
                     stem + "_785.pgm\n"
                     "channel.1.probe_nm = 830\nchannel.1.display_nm = 635\nchannel.1.scene = scenes/" +
                     stem + "_830.pgm\n");
}

TEST(Comparison, GrayscaleVisibleReferenceScoresZero) {
  const Experiment exp(scene_config("metamer", 300));
  const auto rows = run_comparison(exp, load_color(kData / "scenes/house_visible_gray.ppm"), "gray");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].image, "visible");
  EXPECT_EQ(rows[0].cci, 0.0);
  EXPECT_EQ(rows[1].image, "reconstructed");
  EXPECT_EQ(rows[1].n_frames, 300u);
}

// Values pinned from a reference run; they guard against unintended changes
// to the simulation or the metric.
TEST(Comparison, BundledScenesOrderingAndRegression) {
  struct Case {
    const char* stem;
    double visible;
    double reconstructed;
  };
  const Case cases[] = {
      {"metamer", 8.164486631379, 127.891093686995},
      {"rings", 13.713610090250, 117.514110054048},
  };
  for (const auto& c : cases) {
    const Experiment exp(scene_config(c.stem, 4000));
    ColorImage color;
    const auto rows = run_comparison(exp, load_color(kData / "scenes" / (std::string(c.stem) + "_visible.ppm")),
                                     c.stem, &color);
    EXPECT_GT(rows[1].cci, rows[0].cci) << c.stem;
    EXPECT_EQ(rows[1].cci, cci(color));
    EXPECT_NEAR(rows[0].cci, c.visible, 1e-9) << c.stem;
    EXPECT_NEAR(rows[1].cci, c.reconstructed, 1e-6) << c.stem;
  }
}

}  // namespace
}  // namespace ghostcolor

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ghostcolor/checkpoint.hpp"
#include "ghostcolor/config.hpp"
#include "ghostcolor/correlator.hpp"
#include "ghostcolor/image_io.hpp"
#include "ghostcolor/metrics.hpp"
#include "ghostcolor/optics.hpp"
#include "ghostcolor/spectral.hpp"

namespace ghostcolor {

/// Frames are accumulated in fixed blocks of this many frames (counted from
/// the first frame of a run) and the block sums are folded in block order.
/// The summation tree therefore depends only on the frame range, never on
/// the number of worker threads.
inline constexpr std::uint64_t kBlockFrames = 256;

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

struct AccumulationResult {
  CorrelationAccumulator total;
  std::vector<CorrelationAccumulator> snapshots;  // one per requested count
};

/// Accumulates frames [first, first + count). `snapshot_counts` (strictly
/// increasing, each in [1, count]) yields the accumulator state after that
/// many frames, bit-identical to a separate run of exactly that length.
inline AccumulationResult accumulate_frames(const FrameSimulator& sim, std::uint64_t first,
                                            std::uint64_t count, unsigned threads,
                                            std::span<const std::uint64_t> snapshot_counts = {}) {
  for (std::size_t i = 0; i < snapshot_counts.size(); ++i) {
    if (snapshot_counts[i] < 1 || snapshot_counts[i] > count ||
        (i > 0 && snapshot_counts[i] <= snapshot_counts[i - 1])) {
      throw std::invalid_argument("accumulate_frames: invalid snapshot counts");
    }
  }
  const std::uint64_t n_blocks = (count + kBlockFrames - 1) / kBlockFrames;
  const unsigned workers = resolve_threads(threads);

  struct Block {
    CorrelationAccumulator acc;
    std::vector<std::pair<std::size_t, CorrelationAccumulator>> partials;
  };

  auto run_block = [&](std::uint64_t k, Block& blk) {
    blk.acc = CorrelationAccumulator(sim.width(), sim.height());
    blk.partials.clear();
    const std::uint64_t begin = k * kBlockFrames;
    const std::uint64_t end = std::min(count, begin + kBlockFrames);
    auto snap = std::lower_bound(snapshot_counts.begin(), snapshot_counts.end(), begin + 1);
    for (std::uint64_t f = begin; f < end; ++f) {
      blk.acc.add(sim.frame(first + f));
      while (snap != snapshot_counts.end() && *snap == f + 1) {
        blk.partials.emplace_back(std::size_t(snap - snapshot_counts.begin()), blk.acc);
        ++snap;
      }
    }
  };

  AccumulationResult result{CorrelationAccumulator(sim.width(), sim.height()),
                            std::vector<CorrelationAccumulator>(snapshot_counts.size())};
  std::vector<Block> wave(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(n_blocks, 1)));
  for (std::uint64_t base = 0; base < n_blocks; base += wave.size()) {
    const std::size_t in_wave = std::size_t(std::min<std::uint64_t>(wave.size(), n_blocks - base));
    if (in_wave == 1 || workers == 1) {
      for (std::size_t j = 0; j < in_wave; ++j) run_block(base + j, wave[j]);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(in_wave);
      for (std::size_t j = 0; j < in_wave; ++j) {
        pool.emplace_back([&, j] { run_block(base + j, wave[j]); });
      }
    }
    for (std::size_t j = 0; j < in_wave; ++j) {
      for (const auto& [slot, partial] : wave[j].partials) {
        result.snapshots[slot] = merge(result.total, partial);
      }
      result.total.merge_from(wave[j].acc);
    }
  }
  return result;
}

/// A loaded experiment: configuration plus the scene it refers to.
struct Experiment {
  ExperimentConfig config;
  Scene scene;
  MaskParams mask;

  explicit Experiment(ExperimentConfig cfg) : config(std::move(cfg)) {
    scene = load_scene(config);
    mask = resolve_mask(config, scene);
  }
  Experiment(ExperimentConfig cfg, Scene s) : config(std::move(cfg)), scene(std::move(s)) {
    scene.validate();
    mask = resolve_mask(config, scene);
  }

  FrameSimulator simulator(std::size_t channel_index) const {
    return FrameSimulator(scene, channel_index, mask, config.psf, config.noise);
  }
};

inline Checkpoint simulate_channel(const Experiment& exp, std::size_t channel_index,
                                   std::uint64_t first_frame, std::uint64_t n_frames) {
  const FrameSimulator sim = exp.simulator(channel_index);
  auto acc = accumulate_frames(sim, first_frame, n_frames, exp.config.threads);
  return {std::move(acc.total), sim.channel()};
}

inline ChannelReconstruction run_channel(const Experiment& exp, std::size_t channel_index,
                                         std::uint64_t n_frames) {
  const Checkpoint ck = simulate_channel(exp, channel_index, 0, n_frames);
  return finalize(ck.acc, ck.channel.display_wavelength_nm);
}

/// Normalizes each reconstruction and composes them into one colour image.
inline ColorImage compose_reconstructions(const std::vector<ChannelReconstruction>& recs,
                                          NormalizeMode mode) {
  std::vector<std::pair<Map, double>> layers;
  for (const auto& r : recs) layers.emplace_back(normalize(r, mode), r.display_wavelength_nm);
  return compose(layers);
}

/// The object as the reconstruction should show it: every channel's
/// reflectance map tinted by its display wavelength.
inline ColorImage ground_truth_color(const Scene& scene) {
  std::vector<std::pair<Map, double>> layers;
  for (std::size_t i = 0; i < scene.channels.size(); ++i) {
    layers.emplace_back(scene.reflectance[i], scene.channels[i].display_wavelength_nm);
  }
  return compose(layers);
}

struct ChannelScore {
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct ConvergenceRow {
  std::uint64_t n_frames = 0;
  std::vector<ChannelScore> channels;
  double color_psnr_db = 0.0;
  double color_ssim = 0.0;
  double cci = 0.0;
};

struct ConvergenceSnapshot {
  std::uint64_t n_frames = 0;
  std::vector<ChannelReconstruction> channels;
  std::vector<Map> normalized;
  ColorImage color;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceSnapshot> snapshots;
};

/// One simulation pass per channel up to the largest budget, snapshotting the
/// accumulator at every budget.
inline ConvergenceResult run_convergence(const Experiment& exp) {
  const auto& budgets = exp.config.budgets;
  if (budgets.empty()) throw ConfigError("convergence: no frame budgets configured");
  ConvergenceResult out;
  out.snapshots.resize(budgets.size());
  for (std::size_t b = 0; b < budgets.size(); ++b) out.snapshots[b].n_frames = budgets[b];

  for (std::size_t ch = 0; ch < exp.scene.channels.size(); ++ch) {
    const FrameSimulator sim = exp.simulator(ch);
    const auto acc = accumulate_frames(sim, 0, budgets.back(), exp.config.threads, budgets);
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      auto rec = finalize(acc.snapshots[b], sim.channel().display_wavelength_nm);
      out.snapshots[b].normalized.push_back(normalize(rec, exp.config.normalize));
      out.snapshots[b].channels.push_back(std::move(rec));
    }
  }

  const ColorImage truth = ground_truth_color(exp.scene);
  for (auto& snap : out.snapshots) {
    std::vector<std::pair<Map, double>> layers;
    ConvergenceRow row;
    row.n_frames = snap.n_frames;
    for (std::size_t ch = 0; ch < snap.channels.size(); ++ch) {
      const Map& truth_map = exp.scene.reflectance[ch];
      row.channels.push_back({psnr(truth_map, snap.normalized[ch]), ssim(truth_map, snap.normalized[ch])});
      layers.emplace_back(snap.normalized[ch], snap.channels[ch].display_wavelength_nm);
    }
    snap.color = compose(layers);
    row.color_psnr_db = psnr(truth, snap.color);
    row.color_ssim = ssim(truth, snap.color);
    row.cci = cci(snap.color);
    out.rows.push_back(std::move(row));
  }
  return out;
}

struct ComparisonRow {
  std::string scene;
  std::string image;  // "visible" or "reconstructed"
  std::uint64_t n_frames = 0;
  double cci = 0.0;
};

/// CCI of the visible-light reference and of the reconstructed colour image
/// for one scene.
inline std::vector<ComparisonRow> run_comparison(const Experiment& exp, const ColorImage& visible_reference,
                                                 const std::string& scene_name = "scene",
                                                 ColorImage* reconstructed = nullptr) {
  std::vector<ChannelReconstruction> recs;
  for (std::size_t ch = 0; ch < exp.scene.channels.size(); ++ch) {
    recs.push_back(run_channel(exp, ch, exp.config.frames));
  }
  ColorImage color = compose_reconstructions(recs, exp.config.normalize);
  std::vector<ComparisonRow> rows{
      {scene_name, "visible", 0, cci(visible_reference)},
      {scene_name, "reconstructed", exp.config.frames, cci(color)},
  };
  if (reconstructed) *reconstructed = std::move(color);
  return rows;
}

namespace detail {

inline std::string fmt_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace detail

inline std::string convergence_csv(const ConvergenceResult& res, const Scene& scene) {
  std::ostringstream os;
  os << "n_frames";
  for (const auto& ch : scene.channels) {
    const std::string tag = detail::fmt_number(ch.display_wavelength_nm) + "nm";
    os << ",psnr_db_" << tag << ",ssim_" << tag;
  }
  os << ",psnr_db_color,ssim_color,cci\n";
  for (const auto& r : res.rows) {
    os << r.n_frames;
    for (const auto& c : r.channels) os << ',' << detail::fmt_number(c.psnr_db) << ',' << detail::fmt_number(c.ssim);
    os << ',' << detail::fmt_number(r.color_psnr_db) << ',' << detail::fmt_number(r.color_ssim) << ','
       << detail::fmt_number(r.cci) << '\n';
  }
  return os.str();
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "scene,image,n_frames,cci\n";
  for (const auto& r : rows) {
    os << r.scene << ',' << r.image << ',' << r.n_frames << ',' << detail::fmt_number(r.cci) << '\n';
  }
  return os.str();
}

inline std::string metrics_csv(const std::vector<MetricReport>& rows) {
  std::ostringstream os;
  os << "n_frames,psnr_db,ssim,cci\n";
  for (const auto& r : rows) {
    os << r.n_frames << ',' << detail::fmt_number(r.psnr_db) << ',' << detail::fmt_number(r.ssim) << ','
       << detail::fmt_number(r.cci) << '\n';
  }
  return os.str();
}

/// Writes convergence.csv plus, per budget, colour and per-channel PNGs and
/// raw float dumps. Returns the written paths.
inline std::vector<std::filesystem::path> write_convergence(const ConvergenceResult& res, const Scene& scene,
                                                            const std::filesystem::path& dir, bool srgb) {
  std::vector<std::filesystem::path> written;
  const auto csv = dir / "convergence.csv";
  detail::write_text(csv, convergence_csv(res, scene));
  written.push_back(csv);
  for (const auto& snap : res.snapshots) {
    const std::string stem = "frames_" + std::to_string(snap.n_frames);
    save_png(dir / (stem + "_color.png"), snap.color, srgb);
    save_raw(dir / (stem + "_color.raw"), to_raster(snap.color));
    written.push_back(dir / (stem + "_color.png"));
    written.push_back(dir / (stem + "_color.raw"));
    for (std::size_t ch = 0; ch < snap.channels.size(); ++ch) {
      const auto raw = dir / (stem + "_channel" + std::to_string(ch) + "_g.raw");
      save_raw(raw, to_raster(snap.channels[ch].g));
      written.push_back(raw);
    }
  }
  return written;
}

}  // namespace ghostcolor

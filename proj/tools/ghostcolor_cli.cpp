// ghostcolor command-line front end.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage/config error.

#include <CLI11.hpp>
#include <json.hpp>
#include <png.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ghostcolor/ghostcolor.hpp"

namespace fs = std::filesystem;
using ghostcolor::ConfigError;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr const char* kOutputDirEnv = "GHOSTCOLOR_OUTPUT_DIR";

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  int verbosity = 0;
};

struct ConfigOptions {
  std::string path;
  std::vector<std::string> overrides;
};

std::string effective_output(const GlobalOptions& g, const ghostcolor::ExperimentConfig* cfg) {
  if (g.out) return *g.out;
  if (cfg && cfg->settings.count("output_dir")) return cfg->output_dir.string();
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "out";
}

ghostcolor::ExperimentConfig load(const ConfigOptions& c, const GlobalOptions& g) {
  std::vector<std::string> overrides = c.overrides;
  if (g.seed) overrides.push_back("seed=" + std::to_string(*g.seed));
  if (g.threads) overrides.push_back("threads=" + std::to_string(*g.threads));
  return ghostcolor::load_config(c.path, overrides);
}

class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv)
      : start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "ghostcolor";
    doc_["version"] = ghostcolor::kVersion;
    doc_["command"] = std::move(command);
    doc_["argv"] = std::vector<std::string>(argv, argv + argc);
    doc_["libpng"] = PNG_LIBPNG_VER_STRING;
    doc_["compiler"] = __VERSION__;
    doc_["outputs"] = json::array();
  }

  void config(const ghostcolor::ExperimentConfig& cfg) {
    json settings = json::object();
    for (const auto& [k, v] : cfg.settings) settings[k] = v;
    doc_["config"] = settings;
    doc_["seed"] = cfg.mask.seed;
    doc_["threads"] = ghostcolor::resolve_threads(cfg.threads);
    doc_["block_frames"] = ghostcolor::kBlockFrames;
  }

  void output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }
  json& operator[](const char* key) { return doc_[key]; }

  void write(const fs::path& dir, const std::string& name = "manifest.json") {
    doc_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fs::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write manifest in '" + dir.string() + "'");
    out << doc_.dump(2) << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_;
  json doc_;
};

std::string nm_tag(double nm) { return ghostcolor::detail::fmt_number(nm) + "nm"; }

int cmd_simulate(const ConfigOptions& c, const GlobalOptions& g, std::optional<std::uint64_t> frames,
                 std::optional<std::uint64_t> first_frame, std::optional<std::size_t> channel, int argc,
                 char** argv) {
  auto cfg = load(c, g);
  if (frames) cfg.frames = *frames;
  if (first_frame) cfg.first_frame = *first_frame;
  if (cfg.frames < 1) throw ConfigError("frames must be >= 1");
  const fs::path out = effective_output(g, &cfg);
  Manifest manifest("simulate", argc, argv);
  manifest.config(cfg);
  manifest["frames"] = cfg.frames;
  manifest["first_frame"] = cfg.first_frame;
  const ghostcolor::Experiment exp(cfg);
  if (channel && *channel >= exp.scene.channels.size()) {
    throw ConfigError("--channel " + std::to_string(*channel) + " out of range");
  }
  for (std::size_t ch = 0; ch < exp.scene.channels.size(); ++ch) {
    if (channel && ch != *channel) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const auto ck = ghostcolor::simulate_channel(exp, ch, cfg.first_frame, cfg.frames);
    const fs::path path = out / ("channel" + std::to_string(ch) + ".ckpt");
    ghostcolor::save_checkpoint(path, ck);
    manifest.output(path);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "simulate: channel " << ch << " (" << ck.channel.probe_wavelength_nm << " -> "
              << ck.channel.display_wavelength_nm << " nm) frames " << cfg.first_frame << ".."
              << cfg.first_frame + cfg.frames << " -> " << path.string() << " (" << secs << " s)\n";
  }
  manifest.write(out);
  return 0;
}

int cmd_reconstruct(const std::vector<std::string>& inputs, const std::string& mode_name, bool srgb,
                    const GlobalOptions& g, int argc, char** argv) {
  ghostcolor::NormalizeMode mode;
  try {
    mode = ghostcolor::parse_normalize_mode(mode_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const fs::path out = effective_output(g, nullptr);
  Manifest manifest("reconstruct", argc, argv);
  manifest["normalize"] = ghostcolor::to_string(mode);
  std::vector<ghostcolor::Checkpoint> cks;
  for (const auto& in : inputs) cks.push_back(ghostcolor::load_checkpoint(in));
  for (std::size_t i = 1; i < cks.size(); ++i) {
    if (cks[i].acc.width() != cks[0].acc.width() || cks[i].acc.height() != cks[0].acc.height()) {
      throw std::runtime_error("checkpoint '" + inputs[i] + "' has dimensions " +
                               std::to_string(cks[i].acc.width()) + "x" + std::to_string(cks[i].acc.height()) +
                               ", expected " + std::to_string(cks[0].acc.width()) + "x" +
                               std::to_string(cks[0].acc.height()));
    }
  }
  std::vector<std::pair<ghostcolor::Map, double>> layers;
  for (std::size_t i = 0; i < cks.size(); ++i) {
    const auto rec = ghostcolor::finalize(cks[i].acc, cks[i].channel.display_wavelength_nm);
    ghostcolor::Map norm = ghostcolor::normalize(rec, mode);
    const std::string stem = "channel" + std::to_string(i);
    ghostcolor::save_raw(out / (stem + ".raw"), ghostcolor::to_raster(rec.g));
    ghostcolor::save_raw(out / (stem + "_normalized.raw"), ghostcolor::to_raster(norm));
    const auto tinted = ghostcolor::compose({{norm, rec.display_wavelength_nm}});
    ghostcolor::save_png(out / (stem + ".png"), tinted, srgb);
    for (const char* suffix : {".raw", "_normalized.raw", ".png"}) manifest.output(out / (stem + suffix));
    std::cout << "reconstruct: " << inputs[i] << " (" << rec.n_frames << " frames, "
              << nm_tag(rec.display_wavelength_nm) << ") -> " << (out / (stem + ".png")).string() << '\n';
    layers.emplace_back(std::move(norm), rec.display_wavelength_nm);
  }
  if (layers.size() >= 2) {
    const auto color = ghostcolor::compose(layers);
    ghostcolor::save_png(out / "color.png", color, srgb);
    ghostcolor::save_raw(out / "color.raw", ghostcolor::to_raster(color));
    manifest.output(out / "color.png");
    manifest.output(out / "color.raw");
    std::cout << "reconstruct: color -> " << (out / "color.png").string() << " (cci "
              << ghostcolor::cci(color) << ")\n";
  }
  manifest.write(out, "reconstruct_manifest.json");
  return 0;
}

int cmd_compose(const std::vector<std::string>& inputs, const std::vector<double>& display_nm,
                const std::string& name, bool srgb, const GlobalOptions& g, int argc, char** argv) {
  if (inputs.size() != display_nm.size()) {
    throw ConfigError("compose: need one --display-nm per input map (" + std::to_string(inputs.size()) +
                      " maps, " + std::to_string(display_nm.size()) + " wavelengths)");
  }
  const fs::path out = effective_output(g, nullptr);
  std::vector<std::pair<ghostcolor::Map, double>> layers;
  for (std::size_t i = 0; i < inputs.size(); ++i) layers.emplace_back(ghostcolor::load_map(inputs[i]), display_nm[i]);
  const auto color = ghostcolor::compose(layers);
  ghostcolor::save_png(out / (name + ".png"), color, srgb);
  ghostcolor::save_raw(out / (name + ".raw"), ghostcolor::to_raster(color));
  Manifest manifest("compose", argc, argv);
  manifest.output(out / (name + ".png"));
  manifest.output(out / (name + ".raw"));
  manifest.write(out, "compose_manifest.json");
  std::cout << "compose: " << inputs.size() << " channels -> " << (out / (name + ".png")).string() << " (cci "
            << ghostcolor::cci(color) << ")\n";
  return 0;
}

int cmd_metrics(const std::string& reference, const std::string& test, std::uint64_t n_frames,
                const GlobalOptions& g, int argc, char** argv) {
  const auto ref_raster = ghostcolor::read_raster(reference);
  const auto test_raster = ghostcolor::read_raster(test);
  ghostcolor::MetricReport report;
  report.n_frames = n_frames;
  if (ref_raster.components == 1 && test_raster.components == 1) {
    const auto a = ghostcolor::load_map(reference), b = ghostcolor::load_map(test);
    report.label = "gray";
    report.psnr_db = ghostcolor::psnr(a, b);
    report.ssim = ghostcolor::ssim(a, b);
  } else {
    const auto a = ghostcolor::load_color(reference), b = ghostcolor::load_color(test);
    report.label = "color";
    report.psnr_db = ghostcolor::psnr(a, b);
    report.ssim = ghostcolor::ssim(a, b);
  }
  report.cci = ghostcolor::cci(ghostcolor::load_color(test));
  const fs::path out = effective_output(g, nullptr);
  ghostcolor::detail::write_text(out / "metrics.csv", ghostcolor::metrics_csv({report}));
  Manifest manifest("metrics", argc, argv);
  manifest.output(out / "metrics.csv");
  manifest.write(out, "metrics_manifest.json");
  std::cout << "metrics: psnr_db=" << ghostcolor::detail::fmt_number(report.psnr_db)
            << " ssim=" << ghostcolor::detail::fmt_number(report.ssim)
            << " cci=" << ghostcolor::detail::fmt_number(report.cci) << '\n';
  return 0;
}

int cmd_convergence(const ConfigOptions& c, const GlobalOptions& g, int argc, char** argv) {
  const auto cfg = load(c, g);
  const fs::path out = effective_output(g, &cfg);
  Manifest manifest("convergence", argc, argv);
  manifest.config(cfg);
  const ghostcolor::Experiment exp(cfg);
  const auto res = ghostcolor::run_convergence(exp);
  for (const auto& p : ghostcolor::write_convergence(res, exp.scene, out, cfg.srgb)) manifest.output(p);
  manifest.write(out);
  for (const auto& r : res.rows) {
    std::cout << "convergence: n=" << r.n_frames;
    for (std::size_t ch = 0; ch < r.channels.size(); ++ch) {
      std::cout << " ch" << ch << "[psnr_db=" << ghostcolor::detail::fmt_number(r.channels[ch].psnr_db)
                << " ssim=" << ghostcolor::detail::fmt_number(r.channels[ch].ssim) << ']';
    }
    std::cout << " cci=" << ghostcolor::detail::fmt_number(r.cci) << '\n';
  }
  return 0;
}

int cmd_compare(const ConfigOptions& c, const GlobalOptions& g, int argc, char** argv) {
  const auto cfg = load(c, g);
  const fs::path out = effective_output(g, &cfg);
  Manifest manifest("compare", argc, argv);
  manifest.config(cfg);
  std::vector<ghostcolor::ComparisonScene> scenes = cfg.comparisons;
  if (scenes.empty()) {
    if (cfg.visible_reference.empty()) {
      throw ConfigError("compare: set visible_reference or compare.<name>.visible");
    }
    scenes.push_back({"scene", cfg.visible_reference, {}});
  }
  std::vector<ghostcolor::ComparisonRow> rows;
  for (const auto& sc : scenes) {
    std::vector<fs::path> paths = sc.channel_scenes;
    if (paths.empty()) {
      for (const auto& ch : cfg.channels) paths.push_back(ch.scene);
    }
    const ghostcolor::Experiment exp(cfg, ghostcolor::load_scene(cfg.channels, paths));
    const auto visible = ghostcolor::load_color(sc.visible);
    ghostcolor::ColorImage color;
    const auto scene_rows = ghostcolor::run_comparison(exp, visible, sc.name, &color);
    const fs::path png = out / ("compare_" + sc.name + "_color.png");
    ghostcolor::save_png(png, color, cfg.srgb);
    ghostcolor::save_raw(out / ("compare_" + sc.name + "_color.raw"), ghostcolor::to_raster(color));
    manifest.output(png);
    manifest.output(out / ("compare_" + sc.name + "_color.raw"));
    for (const auto& r : scene_rows) {
      std::cout << "compare: " << r.scene << ' ' << r.image << " cci=" << ghostcolor::detail::fmt_number(r.cci)
                << '\n';
    }
    rows.insert(rows.end(), scene_rows.begin(), scene_rows.end());
  }
  ghostcolor::detail::write_text(out / "comparison.csv", ghostcolor::comparison_csv(rows));
  manifest.output(out / "comparison.csv");
  manifest.write(out);
  return 0;
}

int cmd_merge(const std::vector<std::string>& inputs, const std::string& output, const GlobalOptions& g) {
  std::vector<ghostcolor::Checkpoint> shards;
  for (const auto& in : inputs) shards.push_back(ghostcolor::load_checkpoint(in));
  const fs::path dest = output.empty() ? fs::path(effective_output(g, nullptr)) / "merged.ckpt" : fs::path(output);
  const auto merged = ghostcolor::merge_checkpoints(shards);
  ghostcolor::save_checkpoint(dest, merged);
  std::cout << "merge-checkpoints: " << inputs.size() << " shards, " << merged.acc.n() << " frames -> "
            << dest.string() << '\n';
  return 0;
}

void add_config_options(CLI::App* sub, ConfigOptions& c) {
  sub->add_option("-c,--config", c.path, "Experiment config file (key = value)")->required()->check(CLI::ExistingFile);
  sub->add_option("--set", c.overrides, "Override a config entry, key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ghostcolor: colour correlated-imaging simulation and reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Override the random seed");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("-o,--out", g.out, std::string("Output directory (default: config output_dir, $") + kOutputDirEnv +
                                        ", or ./out)");
  app.add_flag("-v,--verbose", g.verbosity, "Verbose diagnostics");

  ConfigOptions sim_cfg, conv_cfg, cmp_cfg;
  std::optional<std::uint64_t> sim_frames, sim_first;
  std::optional<std::size_t> sim_channel;
  auto* simulate = app.add_subcommand("simulate", "Simulate frames and write accumulator checkpoints");
  add_config_options(simulate, sim_cfg);
  simulate->add_option("--frames", sim_frames, "Number of frames (overrides config)");
  simulate->add_option("--first-frame", sim_first, "Index of the first frame (for sharded runs)");
  simulate->add_option("--channel", sim_channel, "Only simulate this channel index");

  std::vector<std::string> rec_inputs;
  std::string rec_mode = "minmax";
  bool rec_srgb = false;
  auto* reconstruct = app.add_subcommand("reconstruct", "Finalize checkpoints into channel and colour images");
  reconstruct->add_option("checkpoints", rec_inputs, "Checkpoint files, one per channel")->required();
  reconstruct->add_option("--normalize", rec_mode, "minmax or zscore-clip");
  reconstruct->add_flag("--srgb", rec_srgb, "Apply the sRGB transfer function to PNG output");

  std::vector<std::string> comp_inputs;
  std::vector<double> comp_nm;
  std::string comp_name = "color";
  bool comp_srgb = false;
  auto* compose = app.add_subcommand("compose", "Compose normalized channel maps into a colour image");
  compose->add_option("maps", comp_inputs, "Normalized single-channel maps (.raw/.png/.pgm)")->required();
  compose->add_option("--display-nm", comp_nm, "Display wavelength per map")->required();
  compose->add_option("--name", comp_name, "Output file stem");
  compose->add_flag("--srgb", comp_srgb, "Apply the sRGB transfer function to PNG output");

  std::string met_ref, met_test;
  std::uint64_t met_frames = 0;
  auto* metrics = app.add_subcommand("metrics", "PSNR, SSIM and CCI of a test image against a reference");
  metrics->add_option("reference", met_ref)->required();
  metrics->add_option("test", met_test)->required();
  metrics->add_option("--n-frames", met_frames, "Frame count recorded in the CSV row");

  auto* convergence = app.add_subcommand("convergence", "PSNR/SSIM/CCI over a ladder of frame budgets");
  add_config_options(convergence, conv_cfg);

  auto* compare = app.add_subcommand("compare", "CCI of visible references vs reconstructed colour images");
  add_config_options(compare, cmp_cfg);

  std::vector<std::string> merge_inputs;
  std::string merge_output;
  auto* merge = app.add_subcommand("merge-checkpoints", "Merge shard checkpoints of one channel");
  merge->add_option("checkpoints", merge_inputs)->required();
  merge->add_option("--output", merge_output, "Merged checkpoint path (default <out>/merged.ckpt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim_cfg, g, sim_frames, sim_first, sim_channel, argc, argv);
    if (*reconstruct) return cmd_reconstruct(rec_inputs, rec_mode, rec_srgb, g, argc, argv);
    if (*compose) return cmd_compose(comp_inputs, comp_nm, comp_name, comp_srgb, g, argc, argv);
    if (*metrics) return cmd_metrics(met_ref, met_test, met_frames, g, argc, argv);
    if (*convergence) return cmd_convergence(conv_cfg, g, argc, argv);
    if (*compare) return cmd_compare(cmp_cfg, g, argc, argv);
    if (*merge) return cmd_merge(merge_inputs, merge_output, g);
  } catch (const ConfigError& e) {
    std::cerr << "ghostcolor: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "ghostcolor: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

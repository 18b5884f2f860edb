#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ghostcolor/correlator.hpp"
#include "ghostcolor/image_io.hpp"
#include "ghostcolor/optics.hpp"

namespace ghostcolor {

/// Invalid configuration: unknown keys, malformed values, broken invariants.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChannelConfig {
  SpectralChannel channel;
  std::filesystem::path scene;
};

struct ComparisonScene {
  std::string name;
  std::filesystem::path visible;
  std::vector<std::filesystem::path> channel_scenes;
};

/// Flat `key = value` settings, kept for echoing into run manifests.
using Settings = std::map<std::string, std::string>;

struct ExperimentConfig {
  std::vector<ChannelConfig> channels;
  MaskParams mask;  // width/height of 0 are taken from the scene
  DetectorNoise noise;
  std::string psf_spec = "identity";
  Psf psf;
  std::vector<std::uint64_t> budgets;
  std::uint64_t frames = 10000;
  std::uint64_t first_frame = 0;
  std::filesystem::path output_dir = "out";
  NormalizeMode normalize = NormalizeMode::minmax;
  bool srgb = false;
  unsigned threads = 0;  // 0 = all cores
  std::filesystem::path visible_reference;
  std::vector<ComparisonScene> comparisons;
  Settings settings;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace detail

/// PSF from its textual form: `identity`, `box:<odd size>`, `gaussian:<sigma>`.
inline Psf parse_psf(const std::string& spec) {
  if (spec == "identity") return Psf::identity();
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (kind == "box") return Psf::box(detail::parse_uint("psf", arg));
    if (kind == "gaussian") return Psf::gaussian(detail::parse_double("psf", arg));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: psf: ") + e.what());
  }
  throw ConfigError("config: unknown psf '" + spec + "' (identity, box:<n>, gaussian:<sigma>)");
}

/// Parses `key = value` lines; `#` starts a comment.
inline Settings parse_settings(std::string_view text) {
  Settings out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = detail::trim(t.substr(eq + 1));
  }
  return out;
}

inline void apply_override(Settings& s, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  s[detail::trim(assignment.substr(0, eq))] = detail::trim(assignment.substr(eq + 1));
}

inline ExperimentConfig build_config(const Settings& settings, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.settings = settings;
  cfg.mask.correlation_length_px = 1.0;
  std::map<std::size_t, ChannelConfig> channels;
  std::map<std::size_t, bool> channel_has_scene;
  std::map<std::string, ComparisonScene> comparisons;
  std::map<std::string, std::map<std::size_t, std::filesystem::path>> comparison_channels;

  for (const auto& [key, value] : settings) {
    using namespace detail;
    if (key == "seed") cfg.mask.seed = parse_uint(key, value);
    else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_uint(key, value));
    else if (key == "frames") cfg.frames = parse_uint(key, value);
    else if (key == "first_frame") cfg.first_frame = parse_uint(key, value);
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "srgb") cfg.srgb = parse_bool(key, value);
    else if (key == "visible_reference") cfg.visible_reference = resolve(base_dir, value);
    else if (key == "psf") cfg.psf_spec = value;
    else if (key == "normalize") {
      try {
        cfg.normalize = parse_normalize_mode(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    } else if (key == "budgets") {
      for (const auto& tok : split(value, ',')) cfg.budgets.push_back(parse_uint(key, tok));
    } else if (key == "mask.width") cfg.mask.width = parse_uint(key, value);
    else if (key == "mask.height") cfg.mask.height = parse_uint(key, value);
    else if (key == "mask.correlation_length_px") cfg.mask.correlation_length_px = parse_double(key, value);
    else if (key == "mask.amplitude_low") cfg.mask.amplitude_low = parse_double(key, value);
    else if (key == "mask.amplitude_high") cfg.mask.amplitude_high = parse_double(key, value);
    else if (key == "noise.bucket_sigma") cfg.noise.bucket_sigma = parse_double(key, value);
    else if (key == "noise.reference_sigma") cfg.noise.reference_sigma = parse_double(key, value);
    else if (key.starts_with("channel.")) {
      const auto parts = split(key, '.');
      if (parts.size() != 3) throw ConfigError("config: unknown key '" + key + "'");
      const std::size_t idx = parse_uint(key, parts[1]);
      auto& ch = channels[idx];
      if (parts[2] == "probe_nm") ch.channel.probe_wavelength_nm = parse_double(key, value);
      else if (parts[2] == "display_nm") ch.channel.display_wavelength_nm = parse_double(key, value);
      else if (parts[2] == "scene") ch.scene = resolve(base_dir, value), channel_has_scene[idx] = true;
      else throw ConfigError("config: unknown key '" + key + "'");
    } else if (key.starts_with("compare.")) {
      const auto parts = split(key, '.');
      if (parts.size() == 3 && parts[2] == "visible") {
        comparisons[parts[1]].visible = resolve(base_dir, value);
      } else if (parts.size() == 4 && parts[2] == "channel") {
        comparison_channels[parts[1]][parse_uint(key, parts[3])] = resolve(base_dir, value);
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  std::size_t expect = 0;
  for (auto& [idx, ch] : channels) {
    if (idx != expect++) throw ConfigError("config: channel indices must be contiguous from 0");
    try {
      ch.channel.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config: channel." + std::to_string(idx) + ": " + e.what());
    }
    if (!channel_has_scene[idx]) {
      throw ConfigError("config: channel." + std::to_string(idx) + ".scene is required");
    }
    cfg.channels.push_back(ch);
  }
  if (cfg.channels.empty()) throw ConfigError("config: at least one channel.<i> is required");

  for (auto& [name, cmp] : comparisons) {
    cmp.name = name;
    if (auto it = comparison_channels.find(name); it != comparison_channels.end()) {
      std::size_t e = 0;
      for (const auto& [i, path] : it->second) {
        if (i != e++) throw ConfigError("config: compare." + name + " channel indices must be contiguous");
        cmp.channel_scenes.push_back(path);
      }
    }
    if (!cmp.channel_scenes.empty() && cmp.channel_scenes.size() != cfg.channels.size()) {
      throw ConfigError("config: compare." + name + " must give one scene per channel");
    }
    cfg.comparisons.push_back(cmp);
  }
  for (const auto& [name, _] : comparison_channels) {
    if (!comparisons.count(name)) throw ConfigError("config: compare." + name + ".visible is required");
  }

  for (std::size_t i = 0; i < cfg.budgets.size(); ++i) {
    if (cfg.budgets[i] < 2) throw ConfigError("config: frame budgets must be >= 2");
    if (i > 0 && cfg.budgets[i] <= cfg.budgets[i - 1]) {
      throw ConfigError("config: frame budgets must be strictly increasing");
    }
  }
  if (cfg.frames < 1) throw ConfigError("config: frames must be >= 1");
  if (cfg.mask.correlation_length_px < 0.0) throw ConfigError("config: mask.correlation_length_px must be >= 0");
  if (!(cfg.mask.amplitude_low >= 0.0 && cfg.mask.amplitude_low < cfg.mask.amplitude_high &&
        cfg.mask.amplitude_high <= 1.0)) {
    throw ConfigError("config: amplitude range must satisfy 0 <= low < high <= 1");
  }
  try {
    cfg.noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.psf = parse_psf(cfg.psf_spec);
  return cfg;
}

inline Settings read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str());
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {}) {
  Settings s = read_settings_file(path);
  for (const auto& o : overrides) apply_override(s, o);
  return build_config(s, path.parent_path());
}

/// Loads the reflectance maps named by `scene_paths` (one per channel).
inline Scene load_scene(const std::vector<ChannelConfig>& channels,
                        const std::vector<std::filesystem::path>& scene_paths) {
  Scene scene;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    scene.channels.push_back(channels[i].channel);
    scene.reflectance.push_back(load_map(scene_paths[i]));
  }
  scene.validate();
  return scene;
}

inline Scene load_scene(const ExperimentConfig& cfg) {
  std::vector<std::filesystem::path> paths;
  for (const auto& ch : cfg.channels) paths.push_back(ch.scene);
  return load_scene(cfg.channels, paths);
}

/// Mask parameters with dimensions filled in from the scene.
inline MaskParams resolve_mask(const ExperimentConfig& cfg, const Scene& scene) {
  MaskParams m = cfg.mask;
  if (m.width == 0) m.width = scene.width();
  if (m.height == 0) m.height = scene.height();
  if (m.width != scene.width() || m.height != scene.height()) {
    throw ConfigError("config: mask dimensions " + std::to_string(m.width) + "x" +
                      std::to_string(m.height) + " differ from scene " +
                      std::to_string(scene.width()) + "x" + std::to_string(scene.height()));
  }
  return m;
}

}  // namespace ghostcolor

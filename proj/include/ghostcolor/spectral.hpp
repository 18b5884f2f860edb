#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ghostcolor/image.hpp"

namespace ghostcolor {

struct WavelengthPrimary {
  double wavelength_nm;
  Rgb rgb;
};

/// Breakpoints of the visible-spectrum approximation. RGB is linearly
/// interpolated between neighbouring rows. The 380-420 nm and 700-780 nm
/// segments fade towards 30% intensity at the ends of the visible range.
inline constexpr std::array<WavelengthPrimary, 9> kSpectrumBreakpoints = {{
    {380.0, {0.30, 0.0, 0.30}},
    {420.0, {1.0 / 3.0, 0.0, 1.0}},
    {440.0, {0.0, 0.0, 1.0}},
    {490.0, {0.0, 1.0, 1.0}},
    {510.0, {0.0, 1.0, 0.0}},
    {580.0, {1.0, 1.0, 0.0}},
    {645.0, {1.0, 0.0, 0.0}},
    {700.0, {1.0, 0.0, 0.0}},
    {780.0, {0.30, 0.0, 0.0}},
}};

inline Rgb wavelength_to_rgb(double wavelength_nm) {
  const auto& bp = kSpectrumBreakpoints;
  if (!(wavelength_nm >= bp.front().wavelength_nm && wavelength_nm <= bp.back().wavelength_nm)) {
    throw std::invalid_argument("wavelength_to_rgb: " + std::to_string(wavelength_nm) +
                                " nm outside [380, 780]");
  }
  std::size_t i = 1;
  while (i + 1 < bp.size() && wavelength_nm > bp[i].wavelength_nm) ++i;
  const auto& a = bp[i - 1];
  const auto& b = bp[i];
  const double t = (wavelength_nm - a.wavelength_nm) / (b.wavelength_nm - a.wavelength_nm);
  Rgb out{};
  for (std::size_t c = 0; c < 3; ++c) out[c] = std::lerp(a.rgb[c], b.rgb[c], t);
  return out;
}

struct ChannelLayer {
  const Map* map;
  double display_wavelength_nm;
};

/// Additive composition of normalized channel maps, each tinted by its display
/// wavelength, clamped to [0,1] per component. Operates in linear intensity.
inline ColorImage compose(const std::vector<ChannelLayer>& channels) {
  if (channels.empty()) throw std::invalid_argument("compose: no channels");
  const Map& first = *channels.front().map;
  for (const auto& ch : channels) require_same_shape(first, *ch.map, "compose");
  ColorImage out(first.width(), first.height(), Rgb{0.0, 0.0, 0.0});
  for (const auto& ch : channels) {
    const Rgb primary = wavelength_to_rgb(ch.display_wavelength_nm);
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t c = 0; c < 3; ++c) out[i][c] += (*ch.map)[i] * primary[c];
    }
  }
  for (auto& px : out) {
    for (double& v : px) v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

inline ColorImage compose(const std::vector<std::pair<Map, double>>& channels) {
  std::vector<ChannelLayer> layers;
  layers.reserve(channels.size());
  for (const auto& [m, nm] : channels) layers.push_back({&m, nm});
  return compose(layers);
}

}  // namespace ghostcolor

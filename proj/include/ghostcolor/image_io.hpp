#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ghostcolor/checkpoint.hpp"
#include "ghostcolor/image.hpp"

namespace ghostcolor {

/// Decoded raster with values scaled to [0,1]; components is 1 or 3.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t components = 0;
  std::vector<double> samples;  // row-major, interleaved
};

namespace detail {

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

struct PngReadState {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadState() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

// Returns empty string on success, error text otherwise. No C++ objects are
// constructed between setjmp and the libpng calls that may longjmp.
inline const char* png_decode(PngReadState& st, std::vector<unsigned char>& buf, std::size_t& w,
                              std::size_t& h, std::size_t& comps, int& depth) {
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(st.png))) return "libpng decode error";
  png_init_io(st.png, st.fp);
  png_read_info(st.png, st.info);
  const int color_type = png_get_color_type(st.png, st.info);
  depth = png_get_bit_depth(st.png, st.info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(st.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(st.png);
  png_set_strip_alpha(st.png);
  if (depth < 8) depth = 8;
  png_read_update_info(st.png, st.info);
  w = png_get_image_width(st.png, st.info);
  h = png_get_image_height(st.png, st.info);
  comps = png_get_channels(st.png, st.info);
  const std::size_t rowbytes = png_get_rowbytes(st.png, st.info);
  buf.resize(rowbytes * h);
  rows.resize(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(st.png, rows.data());
  png_read_end(st.png, nullptr);
  return "";
}

inline Raster read_png(const std::filesystem::path& path) {
  PngReadState st;
  st.fp = std::fopen(path.string().c_str(), "rb");
  if (!st.fp) throw std::runtime_error("cannot open '" + path.string() + "'");
  st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!st.png) throw std::runtime_error("libpng: cannot create read struct");
  st.info = png_create_info_struct(st.png);
  if (!st.info) throw std::runtime_error("libpng: cannot create info struct");
  std::vector<unsigned char> buf;
  std::size_t w = 0, h = 0, comps = 0;
  int depth = 8;
  const char* err = png_decode(st, buf, w, h, comps, depth);
  if (err[0] != '\0') throw std::runtime_error(path.string() + ": " + err);
  if (comps != 1 && comps != 3) throw std::runtime_error(path.string() + ": unsupported channel layout");
  Raster r{w, h, comps, std::vector<double>(w * h * comps)};
  if (depth == 16) {
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      const unsigned v = (unsigned(buf[2 * i]) << 8) | buf[2 * i + 1];  // network byte order
      r.samples[i] = double(v) / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i] = double(buf[i]) / 255.0;
  }
  return r;
}

// Netpbm header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (std::isspace(c)) {
      if (!tok.empty()) break;
    } else {
      tok.push_back(static_cast<char>(c));
    }
  }
  return tok;
}

inline Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  const std::string magic = pnm_token(in);
  std::size_t comps;
  bool binary;
  if (magic == "P2") comps = 1, binary = false;
  else if (magic == "P5") comps = 1, binary = true;
  else if (magic == "P3") comps = 3, binary = false;
  else if (magic == "P6") comps = 3, binary = true;
  else throw std::runtime_error(path.string() + ": not a PGM/PPM file");
  Raster r;
  try {
    r.width = std::stoul(pnm_token(in));
    r.height = std::stoul(pnm_token(in));
    const unsigned long maxval = std::stoul(pnm_token(in));
    if (maxval == 0 || maxval > 65535) throw std::runtime_error("bad maxval");
    r.components = comps;
    r.samples.resize(r.width * r.height * comps);
    for (double& s : r.samples) {
      unsigned long v;
      if (binary) {
        if (maxval < 256) {
          v = static_cast<unsigned char>(in.get());
        } else {
          const unsigned hi = static_cast<unsigned char>(in.get());
          const unsigned lo = static_cast<unsigned char>(in.get());
          v = (hi << 8) | lo;
        }
      } else {
        v = std::stoul(pnm_token(in));
      }
      s = double(std::min(v, maxval)) / double(maxval);
    }
    if (binary && in.fail()) throw std::runtime_error("truncated pixel data");
  } catch (const std::logic_error&) {
    throw std::runtime_error(path.string() + ": malformed PGM/PPM");
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace detail

// Raw float image, little-endian:
//
//   offset  size      field
//   0       8         magic "GCRAWF64"
//   8       4   u32   version (1)
//   12      4   u32   width
//   16      4   u32   height
//   20      4   u32   components (1 or 3)
//   24      8*w*h*c   f64 samples, row-major, components interleaved
inline constexpr std::array<char, 8> kRawMagic = {'G', 'C', 'R', 'A', 'W', 'F', '6', '4'};

inline std::vector<unsigned char> encode_raw(const Raster& r) {
  std::vector<unsigned char> out(kRawMagic.begin(), kRawMagic.end());
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.width));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.height));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.components));
  for (double v : r.samples) detail::put_le<double>(out, v);
  return out;
}

inline Raster decode_raw(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kRawMagic.data(), 8) != 0) {
    throw std::runtime_error("raw image: bad magic");
  }
  if (detail::get_le<std::uint32_t>(&bytes[8]) != 1) throw std::runtime_error("raw image: bad version");
  Raster r;
  r.width = detail::get_le<std::uint32_t>(&bytes[12]);
  r.height = detail::get_le<std::uint32_t>(&bytes[16]);
  r.components = detail::get_le<std::uint32_t>(&bytes[20]);
  if (r.components != 1 && r.components != 3) throw std::runtime_error("raw image: bad component count");
  const std::size_t n = r.width * r.height * r.components;
  if (bytes.size() != 24 + 8 * n) throw std::runtime_error("raw image: size mismatch");
  r.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.samples[i] = detail::get_le<double>(&bytes[24 + 8 * i]);
  return r;
}

inline Raster to_raster(const Map& m) {
  return {m.width(), m.height(), 1, std::vector<double>(m.begin(), m.end())};
}

inline Raster to_raster(const ColorImage& img) {
  Raster r{img.width(), img.height(), 3, {}};
  r.samples.reserve(img.size() * 3);
  for (const auto& px : img) r.samples.insert(r.samples.end(), px.begin(), px.end());
  return r;
}

inline void save_raw(const std::filesystem::path& path, const Raster& r) {
  detail::write_file(path, encode_raw(r));
}

inline Raster read_raster(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("file not found: '" + path.string() + "'");
  }
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png") return detail::read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return detail::read_pnm(path);
  if (ext == ".raw" || ext == ".f64") {
    try {
      return decode_raw(detail::read_file(path));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path.string() + ": " + e.what());
    }
  }
  throw std::runtime_error(path.string() + ": unsupported image format '" + ext + "'");
}

/// Loads a single-component image. Colour input is rejected.
inline Map load_map(const std::filesystem::path& path) {
  Raster r = read_raster(path);
  if (r.components != 1) throw std::runtime_error(path.string() + ": expected a grayscale image");
  return Map(r.width, r.height, std::move(r.samples));
}

/// Loads an RGB image; grayscale input is replicated into all components.
inline ColorImage load_color(const std::filesystem::path& path) {
  const Raster r = read_raster(path);
  ColorImage img(r.width, r.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (r.components == 1) {
      img[i] = {r.samples[i], r.samples[i], r.samples[i]};
    } else {
      img[i] = {r.samples[3 * i], r.samples[3 * i + 1], r.samples[3 * i + 2]};
    }
  }
  return img;
}

/// sRGB opto-electronic transfer function for linear values in [0,1].
inline double srgb_encode(double linear) {
  linear = std::clamp(linear, 0.0, 1.0);
  return linear <= 0.0031308 ? 12.92 * linear : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

inline unsigned char to_byte(double v, bool srgb) {
  if (srgb) v = srgb_encode(v);
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

/// Writes an 8-bit grayscale or RGB PNG.
inline void save_png(const std::filesystem::path& path, const Raster& r, bool srgb = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::vector<unsigned char> bytes(r.samples.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(r.samples[i], srgb);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(r.width);
  image.height = static_cast<png_uint_32>(r.height);
  image.format = r.components == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot write PNG '" + path.string() + "': " + msg);
  }
}

inline void save_png(const std::filesystem::path& path, const Map& m, bool srgb = false) {
  save_png(path, to_raster(m), srgb);
}

inline void save_png(const std::filesystem::path& path, const ColorImage& img, bool srgb = false) {
  save_png(path, to_raster(img), srgb);
}

/// Writes binary PGM (maxval 255 or 65535) or PPM.
inline void save_pnm(const std::filesystem::path& path, const Raster& r, unsigned maxval = 255) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << (r.components == 3 ? "P6" : "P5") << '\n' << r.width << ' ' << r.height << '\n' << maxval << '\n';
  for (double s : r.samples) {
    const auto v = static_cast<unsigned>(std::lround(std::clamp(s, 0.0, 1.0) * maxval));
    if (maxval < 256) {
      out.put(static_cast<char>(v));
    } else {
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  }
}

}  // namespace ghostcolor

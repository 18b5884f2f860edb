#pragma once

#include <array>
#include <bit>
#include <iterator>
#include <type_traits>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ghostcolor/correlator.hpp"
#include "ghostcolor/optics.hpp"

namespace ghostcolor {

// Accumulator checkpoint, all integers and floats little-endian:
//
//   offset  size      field
//   0       8         magic "GCACCUM\0"
//   8       4   u32   version (1)
//   12      4   u32   width
//   16      4   u32   height
//   20      4   u32   reserved (0)
//   24      8   u64   n (frame count)
//   32      8   f64   probe wavelength [nm]
//   40      8   f64   display wavelength [nm]
//   48      8*w*h     f64 sum_ref, row-major
//   ..      8   f64   sum_bucket
//   ..      8*w*h     f64 sum_ref_bucket, row-major

inline constexpr std::array<char, 8> kCheckpointMagic = {'G', 'C', 'A', 'C', 'C', 'U', 'M', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  CorrelationAccumulator acc;
  SpectralChannel channel;
};

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= U(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const Checkpoint& ck) {
  const auto& acc = ck.acc;
  std::vector<unsigned char> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  out.reserve(48 + 8 * (2 * acc.sum_ref().size() + 1));
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(acc.width()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(acc.height()));
  detail::put_le<std::uint32_t>(out, 0);
  detail::put_le<std::uint64_t>(out, acc.n());
  detail::put_le<double>(out, ck.channel.probe_wavelength_nm);
  detail::put_le<double>(out, ck.channel.display_wavelength_nm);
  for (double v : acc.sum_ref()) detail::put_le<double>(out, v);
  detail::put_le<double>(out, acc.sum_bucket());
  for (double v : acc.sum_ref_bucket()) detail::put_le<double>(out, v);
  return out;
}

inline Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 48 || std::memcmp(bytes.data(), kCheckpointMagic.data(), 8) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = detail::get_le<std::uint32_t>(&bytes[8]);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::size_t w = detail::get_le<std::uint32_t>(&bytes[12]);
  const std::size_t h = detail::get_le<std::uint32_t>(&bytes[16]);
  const std::size_t px = w * h;
  if (bytes.size() != 48 + 8 * (2 * px + 1)) throw std::runtime_error("checkpoint: truncated or oversized");
  Checkpoint ck;
  const auto n = detail::get_le<std::uint64_t>(&bytes[24]);
  ck.channel.probe_wavelength_nm = detail::get_le<double>(&bytes[32]);
  ck.channel.display_wavelength_nm = detail::get_le<double>(&bytes[40]);
  const unsigned char* p = &bytes[48];
  Map sum_ref(w, h), sum_rb(w, h);
  for (std::size_t i = 0; i < px; ++i, p += 8) sum_ref[i] = detail::get_le<double>(p);
  const double sum_bucket = detail::get_le<double>(p);
  p += 8;
  for (std::size_t i = 0; i < px; ++i, p += 8) sum_rb[i] = detail::get_le<double>(p);
  ck.acc = CorrelationAccumulator(n, std::move(sum_ref), sum_bucket, std::move(sum_rb));
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  detail::write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(detail::read_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

/// Merges shard checkpoints of the same channel.
inline Checkpoint merge_checkpoints(const std::vector<Checkpoint>& shards) {
  if (shards.empty()) throw std::invalid_argument("merge_checkpoints: no inputs");
  Checkpoint out = shards.front();
  for (std::size_t i = 1; i < shards.size(); ++i) {
    const auto& s = shards[i];
    if (s.channel.probe_wavelength_nm != out.channel.probe_wavelength_nm ||
        s.channel.display_wavelength_nm != out.channel.display_wavelength_nm) {
      throw std::invalid_argument("merge_checkpoints: shards belong to different channels");
    }
    out.acc.merge_from(s.acc);
  }
  return out;
}

}  // namespace ghostcolor

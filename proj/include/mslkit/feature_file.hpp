#pragma once

// Feature file layout (all integers little-endian):
//
//   offset  size      field
//   0       4         magic "MSLF"
//   4       1         version (1)
//   5       1         dtype (0 = float32, 1 = float64)
//   6       2         zero padding
//   8       4         order N (u32)
//   12      8 * N     dims (u64 each)
//   ...               payload, prod(dims) values, last mode fastest

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mslkit/errors.hpp"
#include "mslkit/tensor.hpp"

namespace mslkit {

enum class DType : std::uint8_t { Float32 = 0, Float64 = 1 };

inline constexpr std::uint8_t kFeatureFileVersion = 1;
inline constexpr std::size_t kMaxFeatureOrder = 8;

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_feature(const Tensor& t, DType dtype = DType::Float64) {
  if (t.order() > kMaxFeatureOrder)
    throw InvalidArgument("encode_feature: order " + std::to_string(t.order()) + " exceeds " +
                          std::to_string(kMaxFeatureOrder));
  std::vector<std::uint8_t> out{'M', 'S', 'L', 'F', kFeatureFileVersion, static_cast<std::uint8_t>(dtype), 0, 0};
  const std::size_t elem = dtype == DType::Float32 ? 4 : 8;
  out.reserve(12 + 8 * t.order() + elem * t.size());
  detail::put_le(out, t.order(), 4);
  for (std::size_t d : t.shape()) detail::put_le(out, d, 8);
  for (double v : t.data()) {
    if (dtype == DType::Float32) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) throw InvalidArgument("encode_feature: value " + std::to_string(v) + " overflows float32");
      detail::put_le(out, std::bit_cast<std::uint32_t>(f), 4);
    } else {
      detail::put_le(out, std::bit_cast<std::uint64_t>(v), 8);
    }
  }
  return out;
}

/// Parses a feature file image; float32 payloads widen exactly to double.
inline Tensor decode_feature(const std::vector<std::uint8_t>& bytes) {
  const std::uint8_t* p = bytes.data();
  const std::size_t n = bytes.size();
  if (n < 4 || std::memcmp(p, "MSLF", 4) != 0) throw FormatError("feature file: bad magic", 0);
  if (n < 5) throw FormatError("feature file: truncated header", n);
  if (p[4] != kFeatureFileVersion)
    throw FormatError("feature file: unsupported version " + std::to_string(p[4]), 4);
  if (n < 6) throw FormatError("feature file: truncated header", n);
  if (p[5] > 1) throw FormatError("feature file: unknown dtype " + std::to_string(p[5]), 5);
  const auto dtype = static_cast<DType>(p[5]);
  if (n < 8) throw FormatError("feature file: truncated header", n);
  if (p[6] != 0 || p[7] != 0) throw FormatError("feature file: nonzero padding", p[6] != 0 ? 6 : 7);
  if (n < 12) throw FormatError("feature file: truncated header", n);
  const std::uint64_t order = detail::get_le(p + 8, 4);
  if (order < 1 || order > kMaxFeatureOrder)
    throw FormatError("feature file: order " + std::to_string(order) + " outside [1, 8]", 8);
  Shape shape(order);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < order; ++i) {
    const std::size_t off = 12 + 8 * i;
    if (n < off + 8) throw FormatError("feature file: truncated dims", n);
    shape[i] = detail::get_le(p + off, 8);
    if (shape[i] == 0) throw FormatError("feature file: zero dimension", off);
    if (count > (std::uint64_t{1} << 40) / shape[i]) throw FormatError("feature file: implausible size", off);
    count *= shape[i];
  }
  const std::size_t payload = 12 + 8 * order;
  const std::size_t elem = dtype == DType::Float32 ? 4 : 8;
  if (n < payload + count * elem) throw FormatError("feature file: truncated payload", n);
  if (n > payload + count * elem) throw FormatError("feature file: trailing bytes", payload + count * elem);
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = payload + i * elem;
    const double v = dtype == DType::Float32
                         ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(p + off, 4))))
                         : std::bit_cast<double>(detail::get_le(p + off, 8));
    if (!std::isfinite(v)) throw FormatError("feature file: non-finite value", off);
    data[i] = v;
  }
  return Tensor(std::move(shape), std::move(data));
}

inline void write_feature(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::Float64) {
  detail::write_file_bytes(path, encode_feature(t, dtype));
}

inline Tensor read_feature(const std::filesystem::path& path) {
  try {
    return decode_feature(detail::read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.message(), e.offset());
  }
}

}  // namespace mslkit

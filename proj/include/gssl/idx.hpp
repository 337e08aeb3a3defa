#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "gssl/core.hpp"

namespace gssl {

/// IDX tensor with a u8 payload: shape [n] for label vectors (magic
/// 0x00000801) or [n, rows, cols] for image stacks (magic 0x00000803).
struct IdxData {
  std::vector<u32> shape;
  std::vector<u8> data;

  u64 count() const { return shape.empty() ? 0 : shape[0]; }
};

namespace detail {

inline u32 read_be32(const u8* p) {
  return (u32(p[0]) << 24) | (u32(p[1]) << 16) | (u32(p[2]) << 8) | u32(p[3]);
}

inline void write_be32(std::vector<u8>& out, u32 v) {
  out.push_back(u8(v >> 24));
  out.push_back(u8(v >> 16));
  out.push_back(u8(v >> 8));
  out.push_back(u8(v));
}

}  // namespace detail

inline IdxData parse_idx(std::span<const u8> bytes) {
  require(bytes.size() >= 4, errc::data, "IDX data truncated before the magic");
  const u32 magic = detail::read_be32(bytes.data());
  u32 dims = 0;
  if (magic == 0x00000803u) {
    dims = 3;
  } else if (magic == 0x00000801u) {
    dims = 1;
  } else {
    fail_data("unsupported IDX type (magic " + format_u64(magic) + ")");
  }
  require(bytes.size() >= 4 + 4 * std::size_t(dims), errc::data,
          "IDX data truncated inside the header");
  IdxData t;
  u64 total = 1;
  for (u32 a = 0; a < dims; ++a) {
    u32 extent = detail::read_be32(bytes.data() + 4 + 4 * a);
    require(extent > 0, errc::data, "IDX dimension must be positive");
    total *= extent;
    require(total <= (u64(1) << 32), errc::data, "IDX dimensions overflow");
    t.shape.push_back(extent);
  }
  const std::size_t header = 4 + 4 * std::size_t(dims);
  require(bytes.size() == header + total, errc::data,
          "IDX payload size does not match the header dimensions");
  t.data.assign(bytes.begin() + std::ptrdiff_t(header), bytes.end());
  return t;
}

inline IdxData load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::data, "missing IDX file: " + path.string());
  std::vector<u8> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), errc::data, "read failed: " + path.string());
  return parse_idx(bytes);
}

inline std::vector<u8> encode_idx(const IdxData& t) {
  require(t.shape.size() == 1 || t.shape.size() == 3, errc::usage,
          "IDX writer handles rank-1 and rank-3 u8 tensors");
  std::vector<u8> out;
  detail::write_be32(out, t.shape.size() == 1 ? 0x00000801u : 0x00000803u);
  u64 total = 1;
  for (u32 extent : t.shape) {
    detail::write_be32(out, extent);
    total *= extent;
  }
  require(t.data.size() == total, errc::usage, "IDX payload does not match the shape");
  out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

inline void save_idx(const std::filesystem::path& path, const IdxData& t) {
  auto bytes = encode_idx(t);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::data, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  out.close();
  require(out.good(), errc::data, "write failed: " + path.string());
}

}  // namespace gssl

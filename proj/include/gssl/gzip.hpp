#pragma once

#include <span>
#include <vector>

#include <zlib.h>

#include "gssl/core.hpp"

namespace gssl {

/// Inflates a gzip (or raw zlib) stream; window bits 15+32 auto-detects the
/// wrapper.
inline std::vector<u8> gunzip(std::span<const u8> compressed) {
  require(!compressed.empty(), errc::data, "empty compressed stream");
  z_stream zs{};
  require(inflateInit2(&zs, 15 + 32) == Z_OK, errc::numeric, "zlib init failed");

  std::vector<u8> out;
  std::vector<u8> chunk(1 << 16);
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = uInt(compressed.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk.data();
    zs.avail_out = uInt(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      fail_data("corrupt gzip stream");
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  require(rc == Z_STREAM_END, errc::data, "truncated gzip stream");
  return out;
}

/// Deflates to gzip format (used by test fixtures).
inline std::vector<u8> gzip_compress(std::span<const u8> raw) {
  z_stream zs{};
  require(deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                       Z_DEFAULT_STRATEGY) == Z_OK,
          errc::numeric, "zlib init failed");
  std::vector<u8> out;
  std::vector<u8> chunk(1 << 16);
  zs.next_in = const_cast<Bytef*>(raw.data());
  zs.avail_in = uInt(raw.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk.data();
    zs.avail_out = uInt(chunk.size());
    rc = deflate(&zs, Z_FINISH);
    if (rc == Z_STREAM_ERROR) {
      deflateEnd(&zs);
      fail_numeric("zlib deflate failed");
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
  } while (rc != Z_STREAM_END);
  deflateEnd(&zs);
  return out;
}

}  // namespace gssl

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "httplib.h"

#include "gssl/core.hpp"
#include "gssl/gzip.hpp"
#include "gssl/idx.hpp"
#include "gssl/mnist.hpp"
#include "gssl/sha256.hpp"

namespace gssl {

namespace detail {

inline std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  require(scheme != std::string::npos, errc::usage, "fetch url needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace detail

/// Downloads the four standard gzip archives from base_url, verifies each
/// against its configured SHA-256 digest, inflates and writes the IDX files
/// into data_dir. Existing IDX files are left alone.
inline void fetch_mnist(const std::filesystem::path& data_dir, const std::string& base_url,
                        const std::vector<std::pair<std::string, std::string>>& sha256) {
  require(!base_url.empty(), errc::usage, "fetch needs an explicit url");
  auto digest_for = [&](const std::string& archive) -> std::string {
    for (const auto& [name, hex] : sha256)
      if (name == archive) return hex;
    fail_usage("sha256 checksum missing for " + archive);
  };

  std::error_code ec;
  std::filesystem::create_directories(data_dir, ec);
  require(!ec, errc::data, "cannot create data directory: " + data_dir.string());

  auto [origin, prefix] = detail::split_url(base_url);
  httplib::Client client(origin);
  client.set_follow_location(true);

  std::vector<std::string> files;
  files.insert(files.end(), kMnistImageFiles.begin(), kMnistImageFiles.end());
  files.insert(files.end(), kMnistLabelFiles.begin(), kMnistLabelFiles.end());
  for (const auto& file : files) {
    auto target = data_dir / file;
    if (std::filesystem::exists(target)) continue;
    const std::string archive = file + std::string(".gz");
    const std::string expected = digest_for(archive);

    auto res = client.Get(prefix + "/" + archive);
    require(res && res->status == 200, errc::data,
            "fetch failed for " + archive +
                (res ? " (status " + std::to_string(res->status) + ")" : " (no response)"));
    std::span<const u8> body(reinterpret_cast<const u8*>(res->body.data()), res->body.size());
    std::string got = sha256_hex(body);
    require(got == expected, errc::data,
            "sha256 mismatch for " + archive + ": got " + got + ", expected " + expected);

    auto raw = gunzip(body);
    parse_idx(raw);  // reject corrupt payloads before writing
    std::ofstream out(target, std::ios::binary);
    require(out.good(), errc::data, "cannot open for writing: " + target.string());
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    out.close();
    require(out.good(), errc::data, "write failed: " + target.string());
  }
}

}  // namespace gssl

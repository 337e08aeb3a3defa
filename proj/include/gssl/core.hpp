#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>

namespace gssl {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;

/// Error categories; the CLI maps them to process exit codes 1/2/3.
enum class errc { usage = 1, data = 2, numeric = 3 };

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail_usage(const std::string& msg) { throw error(errc::usage, msg); }
[[noreturn]] inline void fail_data(const std::string& msg) { throw error(errc::data, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw error(errc::numeric, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) throw error(code, msg);
}

using Point = std::span<const double>;

/// Shortest decimal string that round-trips to the same double.
/// Used by every text exporter so output is byte-identical across runs.
inline std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, p);
}

inline std::string format_u64(u64 x) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace gssl

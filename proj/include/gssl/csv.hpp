#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gssl/core.hpp"

namespace gssl {

/// Plain comma-separated writer. Files are opened in binary mode and rows end
/// in a bare newline, so identical row data gives byte-identical files on any
/// platform or thread count.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    require(out_.good(), errc::data, "cannot open for writing: " + path.string());
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_.put(',');
      out_ << cells[i];
    }
    out_.put('\n');
  }

  void close() {
    out_.close();
    require(out_.good(), errc::data, "write failed while closing csv");
  }

 private:
  std::ofstream out_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::data, "cannot open for writing: " + path.string());
  out << text;
  out.close();
  require(out.good(), errc::data, "write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::data, "cannot open: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), errc::data, "read failed: " + path.string());
  return text;
}

}  // namespace gssl

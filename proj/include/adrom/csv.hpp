#pragma once

#include "adrom/types.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace adrom {

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Minimal CSV writer; doubles are written in round-trip form.
class CsvWriter {
public:
  explicit CsvWriter(const std::filesystem::path &path, bool append = false)
      : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_)
      throw IoError("cannot open " + path.string());
  }

  void header(const std::vector<std::string> &cols) {
    for (const auto &c : cols)
      field(std::string_view(c));
    end_row();
  }

  void field(std::string_view s) {
    sep();
    out_ << s;
  }
  void field(const char *s) { field(std::string_view(s)); }
  void field(const std::string &s) { field(std::string_view(s)); }
  void field(double v) {
    sep();
    out_ << format_double(v);
  }
  void field(long long v) {
    sep();
    out_ << v;
  }
  void field(int v) { field(static_cast<long long>(v)); }
  void field(long v) { field(static_cast<long long>(v)); }
  void field(std::size_t v) { field(static_cast<long long>(v)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

private:
  void sep() {
    if (!first_)
      out_ << ',';
    first_ = false;
  }

  std::ofstream out_;
  bool first_ = true;
};

} // namespace adrom

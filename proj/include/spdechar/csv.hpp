#pragma once
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>
#include <stdexcept>

namespace spdechar {

/// Fixed CSV dialect: comma separator, '.' decimal point, header row,
/// LF line endings, doubles printed with 17 significant digits.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void header(const std::vector<std::string>& cols) { row_strings(cols); }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << format(cells[i]);
    }
    out_ << '\n';
  }

  void row(const std::string& label, const std::vector<double>& cells) {
    out_ << label;
    for (double c : cells) out_ << ',' << format(c);
    out_ << '\n';
  }

  static std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

 private:
  std::ofstream out_;
};

}  // namespace spdechar

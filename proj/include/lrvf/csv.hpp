#pragma once

#include "lrvf/common.hpp"
#include "lrvf/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

namespace lrvf {

// CSV with a versioned schema comment, one header row, and round-tripping
// number formatting. Output is byte-deterministic for identical inputs.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) fail("csv: cannot open " + path + " for writing");
    out_ << "# schema=1\n";
  }

  void header(const std::vector<std::string>& names) {
    write_row(names);
  }

  void row(const std::vector<std::string>& cells) { write_row(cells); }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }

 private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
};

// Sort-based order statistics. The quantile at p interpolates linearly at
// position p * (n - 1); the median of an even-length sample is therefore
// the mean of the two central order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), "quantile: empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Quartiles {
  double q25 = 0.0, q50 = 0.0, q75 = 0.0;
};

inline Quartiles quartiles(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return Quartiles{quantile_sorted(values, 0.25), quantile_sorted(values, 0.50),
                   quantile_sorted(values, 0.75)};
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

}  // namespace lrvf

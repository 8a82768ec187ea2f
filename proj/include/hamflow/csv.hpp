#pragma once

#include <string>
#include <vector>

#include "hamflow/autodiff.hpp"

namespace hamflow::csv {

/// Decimal text with 17 significant digits; parses back to the identical double.
std::string format_double(double v);

struct Table {
  std::vector<std::string> header;
  ad::Matrix values;
};

/// Writes a header line (comma separated) followed by one line per matrix row.
void write(const std::string& path, const std::vector<std::string>& header, const ad::Matrix& values);
/// Reads a table written by write(). Lines starting with '#' are skipped. With `has_header`
/// false every non-comment line is data.
Table read(const std::string& path, bool has_header = true);

}  // namespace hamflow::csv

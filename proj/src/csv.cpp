#include "hamflow/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hamflow/errors.hpp"

namespace hamflow::csv {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

void write(const std::string& path, const std::vector<std::string>& header, const ad::Matrix& values) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  if (!header.empty()) os << '\n';
  for (ad::Index r = 0; r < values.rows(); ++r) {
    for (ad::Index c = 0; c < values.cols(); ++c) os << (c ? "," : "") << format_double(values(r, c));
    os << '\n';
  }
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

Table read(const std::string& path, bool has_header) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  Table t;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_pending = has_header;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split(line);
    if (header_pending) {
      t.header = fields;
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& f : fields) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(f, &used));
        if (used != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": not a number '" + f + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  const std::size_t cols = rows.empty() ? t.header.size() : rows.front().size();
  t.values.resize(static_cast<ad::Index>(rows.size()), static_cast<ad::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) t.values(static_cast<ad::Index>(r), static_cast<ad::Index>(c)) = rows[r][c];
  }
  return t;
}

}  // namespace hamflow::csv

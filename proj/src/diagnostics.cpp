#include "hamflow/diagnostics.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hamflow/csv.hpp"
#include "hamflow/errors.hpp"

namespace hamflow::diag {

using ad::Graph;
using ad::Matrix;

void GridBounds::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) throw ConfigError("grid bounds must satisfy min < max");
}

double GridDump::x(int i) const {
  return bounds.x_min + (bounds.x_max - bounds.x_min) * static_cast<double>(i) / (resolution - 1);
}

double GridDump::y(int j) const {
  return bounds.y_min + (bounds.y_max - bounds.y_min) * static_cast<double>(j) / (resolution - 1);
}

double GridDump::cell_area() const {
  return (bounds.x_max - bounds.x_min) / (resolution - 1) * (bounds.y_max - bounds.y_min) / (resolution - 1);
}

void GridDump::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "# bounds=" << csv::format_double(bounds.x_min) << ',' << csv::format_double(bounds.x_max) << ','
     << csv::format_double(bounds.y_min) << ',' << csv::format_double(bounds.y_max) << " resolution=" << resolution
     << '\n';
  for (ad::Index j = 0; j < values.rows(); ++j) {
    for (ad::Index i = 0; i < values.cols(); ++i) os << (i ? "," : "") << csv::format_double(values(j, i));
    os << '\n';
  }
}

GridDump GridDump::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::string first;
  std::getline(is, first);
  GridDump out;
  if (std::sscanf(first.c_str(), "# bounds=%lf,%lf,%lf,%lf resolution=%d", &out.bounds.x_min, &out.bounds.x_max,
                  &out.bounds.y_min, &out.bounds.y_max, &out.resolution) != 5) {
    throw ConfigError(path + ": missing grid header");
  }
  out.values = csv::read(path, false).values;
  if (out.values.rows() != out.resolution || out.values.cols() != out.resolution) {
    throw ConfigError(path + ": grid size does not match the header resolution");
  }
  return out;
}

Matrix grid_points(const GridBounds& bounds, int resolution) {
  bounds.validate();
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");
  GridDump shape{bounds, resolution, {}};
  Matrix pts(static_cast<ad::Index>(resolution) * resolution, 2);
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      pts(static_cast<ad::Index>(j) * resolution + i, 0) = shape.x(i);
      pts(static_cast<ad::Index>(j) * resolution + i, 1) = shape.y(j);
    }
  }
  return pts;
}

GridDump potential_grid(const EnergyFunction& potential, const GridBounds& bounds, int resolution, bool shifted) {
  if (potential.dimension() != 2) throw ConfigError("potential_grid needs a 2D energy");
  const Matrix pts = grid_points(bounds, resolution);
  Graph g;
  const Matrix e = potential.energy(g, g.constant(pts)).value();
  GridDump out{bounds, resolution, Matrix(resolution, resolution)};
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) out.values(j, i) = e(static_cast<ad::Index>(j) * resolution + i, 0);
  }
  if (shifted) out.values.array() -= out.values.minCoeff();
  return out;
}

ad::RowVector silverman_bandwidth(const Matrix& samples) {
  const auto n = static_cast<double>(samples.rows());
  const auto d = static_cast<double>(samples.cols());
  if (samples.rows() < 2) throw UsageError("bandwidth needs at least two samples");
  const ad::RowVector mean = samples.colwise().mean();
  const ad::RowVector sd = ((samples.rowwise() - mean).array().square().colwise().sum() / (n - 1.0)).sqrt();
  const double factor = std::pow(n, -1.0 / (d + 4.0)) * std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0));
  return sd * factor;
}

GridDump kde_density_grid(const Matrix& samples, const GridBounds& bounds, int resolution, double bandwidth) {
  if (samples.rows() < 2) throw UsageError("kde_density_grid needs at least two samples");
  if (samples.cols() != 2) throw ConfigError("kde_density_grid expects 2D samples");
  bounds.validate();
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");
  ad::RowVector bw = bandwidth > 0.0 ? ad::RowVector::Constant(2, bandwidth) : silverman_bandwidth(samples);
  if (!(bw.array() > 0.0).all()) throw UsageError("kde bandwidth is zero (degenerate samples)");

  GridDump out{bounds, resolution, Matrix::Zero(resolution, resolution)};
  const double norm = 1.0 / (2.0 * std::numbers::pi * bw(0) * bw(1) * static_cast<double>(samples.rows()));
  // Separable kernel: density(j, i) = norm * sum_s ky(j, s) kx(i, s).
  Matrix kx(resolution, samples.rows());
  Matrix ky(resolution, samples.rows());
  for (int i = 0; i < resolution; ++i) {
    const double xi = out.x(i);
    const double yi = out.y(i);
    for (ad::Index s = 0; s < samples.rows(); ++s) {
      const double ux = (xi - samples(s, 0)) / bw(0);
      const double uy = (yi - samples(s, 1)) / bw(1);
      kx(i, s) = std::exp(-0.5 * ux * ux);
      ky(i, s) = std::exp(-0.5 * uy * uy);
    }
  }
  out.values = norm * (ky * kx.transpose());
  return out;
}

// --- cumulative statistics --------------------------------------------------

void CumulativeStats::write_csv(const std::string& path) const {
  const ad::Index k = mean.cols();
  std::vector<std::string> header{"n"};
  for (ad::Index c = 0; c < k; ++c) header.push_back("mean_" + std::to_string(c + 1));
  for (ad::Index c = 0; c < k; ++c) header.push_back("std_" + std::to_string(c + 1));
  Matrix table(mean.rows(), 1 + 2 * k);
  for (ad::Index r = 0; r < mean.rows(); ++r) table(r, 0) = static_cast<double>(r + 1);
  table.middleCols(1, k) = mean;
  table.rightCols(k) = stddev;
  csv::write(path, header, table);
}

CumulativeStats cumulative_stats(const Matrix& samples) {
  if (samples.rows() < 1) throw UsageError("cumulative_stats needs at least one sample");
  const ad::Index n = samples.rows();
  const ad::Index k = samples.cols();
  CumulativeStats out{Matrix(n, k), Matrix(n, k)};
  ad::RowVector m = ad::RowVector::Zero(k);
  ad::RowVector m2 = ad::RowVector::Zero(k);
  for (ad::Index r = 0; r < n; ++r) {
    const double count = static_cast<double>(r + 1);
    const ad::RowVector delta = samples.row(r) - m;
    m += delta / count;
    m2.array() += delta.array() * (samples.row(r) - m).array();
    out.mean.row(r) = m;
    out.stddev.row(r) = (m2 / count).cwiseMax(0.0).cwiseSqrt();
  }
  return out;
}

// --- sweeps -----------------------------------------------------------------

std::vector<SweepRow> sweep_scatter(const std::vector<SweepRecord>& records, std::size_t window,
                                    std::vector<std::string>* warnings) {
  if (window == 0) throw ConfigError("sweep window must be >= 1");
  std::vector<SweepRow> rows;
  for (const auto& r : records) {
    if (r.losses.size() < window) {
      if (warnings != nullptr) {
        std::ostringstream os;
        os << "skipping " << r.kinetic << " H=" << r.hidden << " L=" << r.steps << " T=" << r.time << ": "
           << r.losses.size() << " epochs < window " << window;
        warnings->push_back(os.str());
      }
      continue;
    }
    double acc = 0.0;
    for (std::size_t i = r.losses.size() - window; i < r.losses.size(); ++i) acc += r.losses[i];
    rows.push_back(SweepRow{r.kinetic, r.hidden, r.steps, r.time, acc / static_cast<double>(window)});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "kinetic,H,L,T,final_loss\n";
  for (const auto& r : rows) {
    os << r.kinetic << ',' << r.hidden << ',' << r.steps << ',' << csv::format_double(r.time) << ','
       << csv::format_double(r.final_loss) << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  std::getline(is, line);
  if (line != "kinetic,H,L,T,final_loss") throw ConfigError(path + ": unexpected sweep header");
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SweepRow r;
    std::string field;
    std::getline(ls, r.kinetic, ',');
    std::getline(ls, field, ',');
    r.hidden = std::stoi(field);
    std::getline(ls, field, ',');
    r.steps = std::stoi(field);
    std::getline(ls, field, ',');
    r.time = std::stod(field);
    std::getline(ls, field, ',');
    r.final_loss = std::stod(field);
    rows.push_back(r);
  }
  return rows;
}

// --- PNG --------------------------------------------------------------------

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, const char* type, const std::vector<unsigned char>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::vector<unsigned char> body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size()))));
}

}  // namespace

void write_png_heatmap(const GridDump& grid, const std::string& path) {
  const auto w = static_cast<std::uint32_t>(grid.values.cols());
  const auto h = static_cast<std::uint32_t>(grid.values.rows());
  if (w == 0 || h == 0) throw UsageError("empty grid");
  const double lo = grid.values.minCoeff();
  const double hi = grid.values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;

  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(h) * (w + 1));
  for (std::uint32_t row = 0; row < h; ++row) {
    raw.push_back(0);  // filter: none
    const auto j = static_cast<ad::Index>(h - 1 - row);
    for (std::uint32_t i = 0; i < w; ++i) {
      const double t = (grid.values(j, static_cast<ad::Index>(i)) - lo) / span;
      raw.push_back(static_cast<unsigned char>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0)));
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> packed(packed_size);
  if (compress(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size())) != Z_OK) {
    throw std::runtime_error("png: compression failed");
  }
  packed.resize(packed_size);

  std::vector<unsigned char> file{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> header;
  put_u32(header, w);
  put_u32(header, h);
  header.insert(header.end(), {8, 0, 0, 0, 0});  // 8-bit grayscale
  put_chunk(file, "IHDR", header);
  put_chunk(file, "IDAT", packed);
  put_chunk(file, "IEND", {});

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
}

}  // namespace hamflow::diag

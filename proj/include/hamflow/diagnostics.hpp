#pragma once

#include <string>
#include <vector>

#include "hamflow/autodiff.hpp"
#include "hamflow/hamiltonian.hpp"

namespace hamflow::diag {

struct GridBounds {
  double x_min = -5.0;
  double x_max = 5.0;
  double y_min = -5.0;
  double y_max = 5.0;

  void validate() const;
};

/// Function values on an inclusive regular 2D grid. values(j, i) is the value at (x_i, y_j).
struct GridDump {
  GridBounds bounds;
  int resolution = 0;
  ad::Matrix values;

  double x(int i) const;
  double y(int j) const;
  double cell_area() const;

  /// "# bounds=x_min,x_max,y_min,y_max resolution=R" followed by R rows of R values.
  void write_csv(const std::string& path) const;
  static GridDump read_csv(const std::string& path);
};

/// All grid points as an R^2 x 2 matrix, x varying fastest.
ad::Matrix grid_points(const GridBounds& bounds, int resolution);

/// Evaluates the energy on the grid; `shifted` subtracts the grid minimum.
GridDump potential_grid(const EnergyFunction& potential, const GridBounds& bounds, int resolution, bool shifted);

/// Per-axis Silverman bandwidth sigma_d * n^(-1/(d+4)) * (4/(d+2))^(1/(d+4)).
ad::RowVector silverman_bandwidth(const ad::Matrix& samples);

/// Gaussian product-kernel density estimate of 2D samples. A non-positive `bandwidth` selects
/// Silverman's rule per axis. Throws UsageError on fewer than two samples.
GridDump kde_density_grid(const ad::Matrix& samples, const GridBounds& bounds, int resolution,
                          double bandwidth = 0.0);

/// Running mean and population standard deviation; row n-1 summarizes the first n samples.
struct CumulativeStats {
  ad::Matrix mean;
  ad::Matrix stddev;

  /// Columns n, mean_1..mean_k, std_1..std_k.
  void write_csv(const std::string& path) const;
};

CumulativeStats cumulative_stats(const ad::Matrix& samples);

/// Loss history of one (kinetic, H, L, T) cell of a sweep.
struct SweepRecord {
  std::string kinetic;
  int hidden = 0;
  int steps = 0;
  double time = 0.0;
  std::vector<double> losses;
};

struct SweepRow {
  std::string kinetic;
  int hidden = 0;
  int steps = 0;
  double time = 0.0;
  double final_loss = 0.0;
};

/// Mean of the last `window` losses of every record. Records with fewer epochs are skipped
/// and reported in `warnings`.
std::vector<SweepRow> sweep_scatter(const std::vector<SweepRecord>& records, std::size_t window = 500,
                                    std::vector<std::string>* warnings = nullptr);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

/// 8-bit grayscale PNG of the grid, min -> black, max -> white, y axis pointing up.
void write_png_heatmap(const GridDump& grid, const std::string& path);

}  // namespace hamflow::diag

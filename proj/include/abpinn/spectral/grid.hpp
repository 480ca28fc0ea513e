#pragma once

#include <filesystem>

#include <Eigen/Dense>

namespace abpinn::spectral {

/// Solution samples on a rectilinear (t, x) grid. xs is uniform on [-1, 1)
/// and periodic with period 2; values is times x xs.
struct ReferenceGrid {
  Eigen::VectorXd times;
  Eigen::VectorXd xs;
  Eigen::MatrixXd values;

  /// Bilinear interpolation, periodic in x. t is clamped to the time range.
  double interpolate(double t, double x) const;
};

/// Writes the `t,x,u` CSV, time-major.
void write_grid_csv(const ReferenceGrid& grid, const std::filesystem::path& path);
/// Strict reader for the `t,x,u` format: exact header, rectilinear layout,
/// uniform periodic x spacing, finite values.
ReferenceGrid read_grid_csv(const std::filesystem::path& path);

}  // namespace abpinn::spectral

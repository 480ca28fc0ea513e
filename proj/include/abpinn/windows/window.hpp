#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "abpinn/diff/tape.hpp"

namespace abpinn::windows {

/// Reference window shapes. All reach ~1 at the origin and ~1/2 at radius
/// sqrt(2 ln 2).
///   Gauss1           exp(-t^2/2)
///   Quartic2         exp(-t^4/(4 ln 2))
///   SigmoidProduct3  s(10(a+t)) s(10(a-t)),  a = sqrt(2 ln 2)
///   SigmoidRadial4   s(10(2 ln 2 - t^2))
enum class WindowKind { Gauss1, Quartic2, SigmoidProduct3, SigmoidRadial4 };

/// Accepts "gauss1", "quartic2", "sigmoid_product3", "sigmoid_radial4" and
/// the short forms "psi1".."psi4". Throws ConfigError otherwise.
WindowKind parse_window_kind(std::string_view name);
std::string_view window_kind_name(WindowKind kind);

/// psi(|t|). For a one-component t, SigmoidProduct3 is evaluated on t itself.
double reference_value(WindowKind kind, std::span<const double> t);
double reference_value(WindowKind kind, double radius);

/// Number of stored entries of a d x d lower-triangular factor.
constexpr int triangle_size(int dim) { return dim * (dim + 1) / 2; }
/// Storage index of L(i, j), j <= i (row-major lower triangle).
constexpr int triangle_index(int i, int j) { return i * (i + 1) / 2 + j; }

/// Center and lower-triangular factor of one adaptive subdomain.
struct WindowParams {
  diff::ParamGroup mu;
  diff::ParamGroup L;

  WindowParams() = default;
  /// mu = center; L = diag(scale) with zero off-diagonal.
  WindowParams(const Eigen::VectorXd& center, const Eigen::VectorXd& diag_scale, const std::string& name);
  WindowParams(const Eigen::VectorXd& center, double scale, const std::string& name);

  int dim() const { return static_cast<int>(mu.size()); }
  /// Dense factor with |.| applied to the diagonal.
  Eigen::MatrixXd factor() const;
  /// Overwrites the stored factor from the lower triangle of `m`.
  void set_factor(const Eigen::MatrixXd& m);
};

/// L^T (x - mu), with |diag| applied. Throws ContractError on a size mismatch.
Eigen::VectorXd transform(const WindowParams& params, std::span<const double> x);
double window_value(const WindowParams& params, WindowKind kind, std::span<const double> x);

/// Batched tape versions; every Var is a 1 x N row.
std::vector<diff::Var> transform(diff::Tape& tape, const WindowParams& params, std::span<const diff::Var> x);
diff::Var reference_value(diff::Tape& tape, WindowKind kind, std::span<const diff::Var> r);
diff::Var window_value(diff::Tape& tape, const WindowParams& params, WindowKind kind,
                       std::span<const diff::Var> x);

/// max_i phi_i(x); 0 for an empty set.
double envelope(std::span<const WindowParams> set, WindowKind kind, std::span<const double> x);

/// Where window centers may live. Components listed in `clamp` are boxed to
/// [lo, hi]; each pair in `circles` is renormalized onto the unit circle.
struct CenterConstraints {
  std::vector<std::pair<int, std::pair<double, double>>> clamp;
  std::vector<std::pair<int, int>> circles;
};

/// Box constraints for every component of a d-dimensional center.
CenterConstraints box_constraints(std::span<const std::pair<double, double>> bounds);

/// Projects mu back onto its admissible set. L is left untouched.
void project_constraints(WindowParams& params, const CenterConstraints& constraints);
bool satisfies_constraints(const WindowParams& params, const CenterConstraints& constraints);

/// Column names of a window snapshot record: kind, mu_0.., L_0..
std::vector<std::string> snapshot_columns(int dim);
/// Numeric part of a snapshot record: mu followed by the stored L triangle.
std::vector<double> snapshot_values(const WindowParams& params);

}  // namespace abpinn::windows

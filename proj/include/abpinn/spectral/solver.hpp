#pragma once

#include <functional>
#include <string_view>

#include "abpinn/spectral/grid.hpp"

namespace abpinn::spectral {

enum class SpectralProblem { AllenCahn, Kdv };

SpectralProblem parse_spectral_problem(std::string_view name);
std::string_view spectral_problem_name(SpectralProblem p);

/// Periodic initial-value problem on [-1, 1):
///   AllenCahn  u_t = diffusion u_xx - reaction u^3 + reaction u,  u0 = x^2 cos(pi x)
///   Kdv        u_t = -eta u u_x - mu_disp^2 u_xxx,                u0 = cos(pi x)
struct SpectralConfig {
  SpectralProblem problem = SpectralProblem::AllenCahn;
  int n_modes = 512;
  double dt = 1e-4;
  double t_final = 1.0;
  int save_times = 101;
  double diffusion = 1e-4;
  double reaction = 5.0;
  double eta = 1.0;
  double mu_disp = 0.022;
  int contour_points = 64;
  /// Replaces the default initial condition when set.
  std::function<double(double)> initial;

  /// Defaults for each problem: 512 modes, dt 1e-4 (AllenCahn) or 1e-5 (Kdv).
  static SpectralConfig defaults(SpectralProblem p);
  /// Throws ConfigError on a power-of-two, size, step-count or positivity
  /// violation.
  void validate() const;
  /// Time steps between saved snapshots.
  long steps_per_save() const;
};

/// Fourier collocation in space, ETDRK4 in time. Non-finite values raise a
/// DiagnosticError naming the step.
ReferenceGrid solve(const SpectralConfig& config);

/// Periodic mean of u over x at one saved time.
double kdv_mass(const ReferenceGrid& grid, Eigen::Index time_index);

/// Trigonometric interpolant of equispaced periodic samples on [-1, 1),
/// evaluated at x.
double trig_interpolate(const Eigen::VectorXd& samples, double x);

}  // namespace abpinn::spectral

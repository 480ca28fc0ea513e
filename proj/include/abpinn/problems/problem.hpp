#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abpinn/ansatz/model.hpp"
#include "abpinn/diff/field.hpp"
#include "abpinn/spectral/grid.hpp"

namespace abpinn::problems {

enum class ProblemKind { Chirp, SineWave, Advection, Helmholtz, ForcedPoisson, AllenCahn, Kdv };

ProblemKind parse_problem_kind(std::string_view name);
std::string_view problem_kind_name(ProblemKind kind);

struct ProblemParams {
  double omega = 10.0;
  double p = 10.0;
  double c = 10.0;
  double k = 2.0;
  double a = 1.0;
  double b = 7.0;
  double sigma = 0.025;
  std::vector<std::pair<double, double>> centers;
  double diffusion = 1e-4;
  double reaction = 5.0;
  double eta = 1.0;
  double mu_disp = 0.022;

  bool operator==(const ProblemParams&) const = default;
};

/// One input-derivative pass: Jets seeded along `direction` to `order`.
struct DerivativePass {
  int direction;
  int order;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Chirp;
  ProblemParams params;
  /// Per raw coordinate [lo, hi].
  std::vector<std::pair<double, double>> bounds;
  std::vector<std::string> coordinates;
  std::vector<int> periodic_dims;
  ansatz::ConstraintKind constraint = ansatz::ConstraintKind::Identity;
  /// Spectral reference for AllenCahn and Kdv.
  std::shared_ptr<const spectral::ReferenceGrid> grid;

  int dim() const { return static_cast<int>(bounds.size()); }
  bool analytic() const { return kind != ProblemKind::AllenCahn && kind != ProblemKind::Kdv; }
  ansatz::EmbeddingSpec embedding() const { return {dim(), periodic_dims}; }
};

/// Problem with default parameters and domain:
///   Chirp (0,1), omega 10, p 10       SineWave (0,1), omega 20, p 1
///   Advection (t,x) in (0,1)x(-1,1)    Helmholtz, ForcedPoisson (-1,1)^2
///   AllenCahn, Kdv (t,x) in (0,1)x(-1,1)
/// ForcedPoisson centers default to the 3x3 grid {-0.5, 0, 0.5}^2.
ProblemSpec make_problem(ProblemKind kind);
ProblemSpec make_problem(ProblemKind kind, const ProblemParams& params);

std::vector<DerivativePass> derivative_passes(const ProblemSpec& problem);

/// Signed residual D[u](x) - f(x) at every column of `points` (dim x N),
/// as a 1 x N node.
diff::Var residual(diff::Tape& tape, const ProblemSpec& problem, const diff::Field& field,
                   const Eigen::MatrixXd& points);
/// Single-point version. Throws ContractError for a point outside the domain.
double residual(const ProblemSpec& problem, const diff::Field& field, std::span<const double> point);

/// Forcing term f at one point (zero for homogeneous problems).
double rhs(const ProblemSpec& problem, std::span<const double> point);

/// Closed form for analytic problems, interpolated spectral grid otherwise.
/// Throws StateError when a spectral problem has no grid.
double reference_solution(const ProblemSpec& problem, std::span<const double> point);
Eigen::VectorXd reference_solution(const ProblemSpec& problem, const Eigen::MatrixXd& points);

bool in_domain(const ProblemSpec& problem, std::span<const double> point);

}  // namespace abpinn::problems

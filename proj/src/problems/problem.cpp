#include "abpinn/problems/problem.hpp"

#include <cmath>
#include <numbers>

#include "abpinn/error.hpp"

namespace abpinn::problems {

using diff::Var;

namespace {

constexpr double kPi = std::numbers::pi;

int chirp_power(const ProblemParams& p) {
  const double r = std::round(p.p);
  if (r != p.p || r < 1.0) throw ConfigError("chirp exponent p must be a positive integer");
  return static_cast<int>(r);
}

double poisson_bumps(const ProblemParams& p, double x, double y) {
  double s = 0.0;
  const double s2 = p.sigma * p.sigma;
  for (const auto& [cx, cy] : p.centers) {
    const double q = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    s += std::exp(-q / (2 * s2));
  }
  return s;
}

double poisson_laplacian(const ProblemParams& p, double x, double y) {
  double s = 0.0;
  const double s2 = p.sigma * p.sigma;
  for (const auto& [cx, cy] : p.centers) {
    const double q = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    s += (q - 2 * s2) / (s2 * s2) * std::exp(-q / (2 * s2));
  }
  return s;
}

void check_points(const ProblemSpec& problem, const Eigen::MatrixXd& points) {
  if (points.rows() != problem.dim()) {
    throw ContractError(std::string(problem_kind_name(problem.kind)) + " expects " + std::to_string(problem.dim()) +
                        "-dimensional points");
  }
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    for (int d = 0; d < problem.dim(); ++d) {
      const auto [lo, hi] = problem.bounds[static_cast<std::size_t>(d)];
      const double v = points(d, c);
      if (!(v >= lo && v <= hi)) {
        throw ContractError("point component " + problem.coordinates[static_cast<std::size_t>(d)] + " = " +
                            std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      }
    }
  }
}

}  // namespace

ProblemKind parse_problem_kind(std::string_view name) {
  for (auto k : {ProblemKind::Chirp, ProblemKind::SineWave, ProblemKind::Advection, ProblemKind::Helmholtz,
                 ProblemKind::ForcedPoisson, ProblemKind::AllenCahn, ProblemKind::Kdv}) {
    if (problem_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown problem '" + std::string(name) + "'");
}

std::string_view problem_kind_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Chirp:
      return "chirp";
    case ProblemKind::SineWave:
      return "sine";
    case ProblemKind::Advection:
      return "advection";
    case ProblemKind::Helmholtz:
      return "helmholtz";
    case ProblemKind::ForcedPoisson:
      return "poisson";
    case ProblemKind::AllenCahn:
      return "allen_cahn";
    case ProblemKind::Kdv:
      return "kdv";
  }
  return "?";
}

ProblemSpec make_problem(ProblemKind kind) {
  ProblemParams p;
  if (kind == ProblemKind::SineWave) {
    p.omega = 20.0;
    p.p = 1.0;
  }
  if (kind == ProblemKind::ForcedPoisson) {
    for (double cx : {-0.5, 0.0, 0.5}) {
      for (double cy : {-0.5, 0.0, 0.5}) p.centers.push_back({cx, cy});
    }
  }
  return make_problem(kind, p);
}

ProblemSpec make_problem(ProblemKind kind, const ProblemParams& params) {
  ProblemSpec s;
  s.kind = kind;
  s.params = params;
  switch (kind) {
    case ProblemKind::Chirp:
    case ProblemKind::SineWave:
      chirp_power(params);
      s.bounds = {{0.0, 1.0}};
      s.coordinates = {"x"};
      s.constraint = ansatz::ConstraintKind::ChirpRight;
      break;
    case ProblemKind::Advection:
      s.bounds = {{0.0, 1.0}, {-1.0, 1.0}};
      s.coordinates = {"t", "x"};
      s.periodic_dims = {1};
      s.constraint = ansatz::ConstraintKind::AdvectionIC;
      break;
    case ProblemKind::Helmholtz:
    case ProblemKind::ForcedPoisson:
      s.bounds = {{-1.0, 1.0}, {-1.0, 1.0}};
      s.coordinates = {"x", "y"};
      s.constraint =
          kind == ProblemKind::Helmholtz ? ansatz::ConstraintKind::HelmholtzBox : ansatz::ConstraintKind::PoissonBox;
      if (kind == ProblemKind::ForcedPoisson && !(params.sigma > 0.0)) throw ConfigError("sigma must be positive");
      break;
    case ProblemKind::AllenCahn:
    case ProblemKind::Kdv:
      s.bounds = {{0.0, 1.0}, {-1.0, 1.0}};
      s.coordinates = {"t", "x"};
      s.periodic_dims = {1};
      s.constraint = kind == ProblemKind::AllenCahn ? ansatz::ConstraintKind::AllenCahnIC : ansatz::ConstraintKind::KdvIC;
      break;
  }
  return s;
}

std::vector<DerivativePass> derivative_passes(const ProblemSpec& problem) {
  switch (problem.kind) {
    case ProblemKind::Chirp:
    case ProblemKind::SineWave:
      return {{0, 1}};
    case ProblemKind::Advection:
      return {{0, 1}, {1, 1}};
    case ProblemKind::Helmholtz:
    case ProblemKind::ForcedPoisson:
      return {{0, 2}, {1, 2}};
    case ProblemKind::AllenCahn:
      return {{0, 1}, {1, 2}};
    case ProblemKind::Kdv:
      return {{0, 1}, {1, 3}};
  }
  return {};
}

Var residual(diff::Tape& tape, const ProblemSpec& problem, const diff::Field& field, const Eigen::MatrixXd& points) {
  check_points(problem, points);
  const auto passes = derivative_passes(problem);
  std::vector<Var> u;
  for (const auto& pass : passes) {
    const auto inputs = diff::seed_inputs(tape, points, pass.direction, pass.order);
    const Var out = field(tape, inputs);
    if (out.tape() != &tape) throw GraphError("field returned a node from another tape");
    if (out.rows() != 1 || out.cols() != points.cols()) throw ContractError("field must return a 1 x N row");
    u.push_back(out);
  }
  // Slot k of pass i; a pass on a field constant in x has no slots above 0.
  auto d = [&](std::size_t i, int k) -> Var {
    if (u[i].order() < k) return tape.constant(Eigen::ArrayXXd::Zero(1, points.cols()));
    return slot(u[i], k);
  };
  const auto forcing = [&] {
    Eigen::ArrayXXd f(1, points.cols());
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      const Eigen::VectorXd p = points.col(c);
      f(0, c) = rhs(problem, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    }
    return tape.constant(f, true);
  };
  const auto& P = problem.params;
  switch (problem.kind) {
    case ProblemKind::Chirp:
    case ProblemKind::SineWave:
      return d(0, 1) - forcing();
    case ProblemKind::Advection:
      return d(0, 1) + P.c * d(1, 1);
    case ProblemKind::Helmholtz:
      return d(0, 2) + d(1, 2) + (P.k * P.k) * d(0, 0) - forcing();
    case ProblemKind::ForcedPoisson:
      return d(0, 2) + d(1, 2) - forcing();
    case ProblemKind::AllenCahn: {
      const Var v = d(1, 0);
      return d(0, 1) - P.diffusion * d(1, 2) + P.reaction * pow(v, 3) - P.reaction * v;
    }
    case ProblemKind::Kdv: {
      const Var v = d(1, 0);
      return d(0, 1) + P.eta * v * d(1, 1) + (P.mu_disp * P.mu_disp) * d(1, 3);
    }
  }
  throw ContractError("unhandled problem");
}

double residual(const ProblemSpec& problem, const diff::Field& field, std::span<const double> point) {
  diff::Tape tape;
  const Eigen::MatrixXd p = Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
  return residual(tape, problem, field, p).scalar();
}

double rhs(const ProblemSpec& problem, std::span<const double> point) {
  const auto& P = problem.params;
  switch (problem.kind) {
    case ProblemKind::Chirp:
    case ProblemKind::SineWave: {
      const int p = chirp_power(P);
      const double x = point[0];
      return 2 * kPi * P.omega * p * std::cos(2 * kPi * P.omega * std::pow(x, p)) * std::pow(x, p - 1);
    }
    case ProblemKind::Helmholtz: {
      const double ap = P.a * kPi, bp = P.b * kPi;
      return (P.k * P.k - ap * ap - bp * bp) * std::sin(ap * point[0]) * std::sin(bp * point[1]);
    }
    case ProblemKind::ForcedPoisson:
      return poisson_laplacian(P, point[0], point[1]);
    default:
      return 0.0;
  }
}

double reference_solution(const ProblemSpec& problem, std::span<const double> point) {
  if (static_cast<int>(point.size()) != problem.dim()) throw ContractError("point has the wrong dimension");
  const auto& P = problem.params;
  switch (problem.kind) {
    case ProblemKind::Chirp:
    case ProblemKind::SineWave:
      return std::sin(2 * kPi * P.omega * std::pow(point[0], chirp_power(P)));
    case ProblemKind::Advection:
      return std::sin(kPi * (point[1] - P.c * point[0]));
    case ProblemKind::Helmholtz:
      return std::sin(P.a * kPi * point[0]) * std::sin(P.b * kPi * point[1]);
    case ProblemKind::ForcedPoisson:
      return poisson_bumps(P, point[0], point[1]);
    case ProblemKind::AllenCahn:
    case ProblemKind::Kdv:
      if (!problem.grid) {
        throw StateError("no spectral reference loaded for " + std::string(problem_kind_name(problem.kind)));
      }
      return problem.grid->interpolate(point[0], point[1]);
  }
  return 0.0;
}

Eigen::VectorXd reference_solution(const ProblemSpec& problem, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const Eigen::VectorXd p = points.col(c);
    out[c] = reference_solution(problem, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  }
  return out;
}

bool in_domain(const ProblemSpec& problem, std::span<const double> point) {
  if (static_cast<int>(point.size()) != problem.dim()) return false;
  for (int d = 0; d < problem.dim(); ++d) {
    const auto [lo, hi] = problem.bounds[static_cast<std::size_t>(d)];
    if (!(point[static_cast<std::size_t>(d)] >= lo && point[static_cast<std::size_t>(d)] <= hi)) return false;
  }
  return true;
}

}  // namespace abpinn::problems

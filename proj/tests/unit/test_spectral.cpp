#include <cmath>
#include <numbers>

#include "doctest.h"

#include "abpinn/error.hpp"
#include "abpinn/spectral/solver.hpp"

using namespace abpinn;
using namespace abpinn::spectral;

namespace {

SpectralConfig quick(SpectralProblem p) {
  auto c = SpectralConfig::defaults(p);
  c.n_modes = 128;
  c.t_final = 0.1;
  c.save_times = 11;
  c.dt = p == SpectralProblem::Kdv ? 1e-4 : 1e-3;
  return c;
}

}  // namespace

TEST_CASE("fixed points stay fixed") {
  for (auto p : {SpectralProblem::AllenCahn, SpectralProblem::Kdv}) {
    auto c = quick(p);
    c.initial = [](double) { return 0.0; };
    CHECK(solve(c).values.cwiseAbs().maxCoeff() == 0.0);
  }
  auto c = quick(SpectralProblem::AllenCahn);
  c.initial = [](double) { return 1.0; };
  CHECK((solve(c).values.array() - 1.0).abs().maxCoeff() < 1e-13);
}

TEST_CASE("initial condition fidelity and periodic reconstruction") {
  for (auto p : {SpectralProblem::AllenCahn, SpectralProblem::Kdv}) {
    const auto g = solve(quick(p));
    for (Eigen::Index i = 0; i < g.xs.size(); ++i) {
      const double x = g.xs[i];
      const double u0 = p == SpectralProblem::AllenCahn ? x * x * std::cos(std::numbers::pi * x)
                                                         : std::cos(std::numbers::pi * x);
      CHECK(std::abs(g.values(0, i) - u0) < 1e-12);
    }
    CHECK(g.values.allFinite());
    const Eigen::VectorXd last = g.values.row(g.values.rows() - 1).transpose();
    CHECK(std::abs(trig_interpolate(last, -1.0) - trig_interpolate(last, 1.0)) < 1e-12);
    CHECK(trig_interpolate(last, g.xs[5]) == doctest::Approx(last[5]).epsilon(1e-12));
  }
}

TEST_CASE("KdV mean conservation") {
  const auto g = solve(quick(SpectralProblem::Kdv));
  CHECK(std::abs(kdv_mass(g, 0)) < 1e-15);
  const double scale = g.values.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < g.times.size(); ++j) CHECK(std::abs(kdv_mass(g, j) - kdv_mass(g, 0)) < 1e-8 * scale);

  auto c = quick(SpectralProblem::Kdv);
  c.initial = [](double) { return 0.3; };
  const auto flat = solve(c);
  for (Eigen::Index j = 0; j < flat.times.size(); ++j) CHECK(kdv_mass(flat, j) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("unstable step is diagnosed") {
  auto c = SpectralConfig::defaults(SpectralProblem::Kdv);
  c.dt = 0.1;
  c.save_times = 11;
  CHECK_THROWS_AS(solve(c), DiagnosticError);
}

TEST_CASE("config validation") {
  auto c = SpectralConfig::defaults(SpectralProblem::AllenCahn);
  c.n_modes = 100;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.n_modes = 64;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SpectralConfig::defaults(SpectralProblem::AllenCahn);
  c.dt = 3e-4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(SpectralConfig::defaults(SpectralProblem::AllenCahn).steps_per_save() == 100);
  CHECK(parse_spectral_problem("kdv") == SpectralProblem::Kdv);
}

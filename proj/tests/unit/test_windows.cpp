#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "abpinn/windows/window.hpp"

using namespace abpinn;
using namespace abpinn::windows;

namespace {

const WindowKind kAll[] = {WindowKind::Gauss1, WindowKind::Quartic2, WindowKind::SigmoidProduct3,
                           WindowKind::SigmoidRadial4};

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

TEST_CASE("reference window landmarks") {
  const double half = std::sqrt(2 * std::numbers::ln2);
  CHECK(reference_value(WindowKind::Gauss1, 0.0) == 1.0);
  CHECK(reference_value(WindowKind::Gauss1, half) == doctest::Approx(0.5).epsilon(1e-15));
  const double t2 = std::pow(4 * std::numbers::ln2 * std::numbers::ln2, 0.25);
  CHECK(reference_value(WindowKind::Quartic2, t2) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t2 == doctest::Approx(half));
  for (auto k : kAll) {
    CAPTURE(window_kind_name(k));
    CHECK(reference_value(k, 0.0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(reference_value(k, half) == doctest::Approx(0.5).epsilon(1e-2));
    double prev = reference_value(k, 0.0);
    for (int i = 1; i <= 500; ++i) {
      const double v = reference_value(k, 0.01 * i);
      CHECK(v <= prev);
      CHECK(v >= 0.0);
      prev = v;
    }
  }
  CHECK(parse_window_kind("psi3") == WindowKind::SigmoidProduct3);
  CHECK_THROWS_AS(parse_window_kind("box"), ConfigError);
}

TEST_CASE("transform") {
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.3, -0.8).finished();
  WindowParams id(Eigen::VectorXd::Zero(2), 1.0, "w");
  CHECK(transform(id, view(x)).isApprox(x));

  WindowParams w(Eigen::VectorXd::Zero(2), 1.0, "w");
  w.mu.values << 1.0, 0.0;
  w.set_factor((Eigen::MatrixXd(2, 2) << 2, 0, 1, 3).finished());
  const Eigen::VectorXd p = (Eigen::VectorXd(2) << 2.0, 2.0).finished();
  const Eigen::VectorXd r = transform(w, view(p));
  CHECK(r[0] == doctest::Approx(4));
  CHECK(r[1] == doctest::Approx(6));

  const Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(transform(w, view(bad)), ContractError);
}

TEST_CASE("transform is affine and sign of diagonal is irrelevant") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  WindowParams w(Eigen::VectorXd::Zero(3), 1.0, "w");
  for (int i = 0; i < w.L.size(); ++i) w.L.values[i] = n(rng);
  for (int i = 0; i < 3; ++i) w.mu.values[i] = n(rng);
  WindowParams flipped = w;
  for (int i = 0; i < 3; ++i) flipped.L.values[triangle_index(i, i)] *= -1;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd a(3), b(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = n(rng);
      b[i] = n(rng);
    }
    const double alpha = n(rng);
    const Eigen::VectorXd mix = alpha * a + (1 - alpha) * b;
    CHECK((transform(w, view(mix)) - (alpha * transform(w, view(a)) + (1 - alpha) * transform(w, view(b))))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    for (auto k : kAll) CHECK(window_value(w, k, view(a)) == window_value(flipped, k, view(a)));
  }
}

TEST_CASE("Gaussian window equals its quadratic form") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  WindowParams w(Eigen::VectorXd::Zero(2), 1.0, "w");
  w.set_factor((Eigen::MatrixXd(2, 2) << 1.5, 0, -0.4, 0.8).finished());
  w.mu.values << 0.2, -0.1;
  const Eigen::MatrixXd L = w.factor();
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = (Eigen::VectorXd(2) << n(rng), n(rng)).finished();
    const Eigen::VectorXd d = x - w.mu.values;
    const double q = d.dot(L * L.transpose() * d);
    CHECK(std::abs(window_value(w, WindowKind::Gauss1, view(x)) - std::exp(-0.5 * q)) < 1e-12);
  }
  const Eigen::VectorXd at_mu = w.mu.values;
  CHECK(window_value(w, WindowKind::Gauss1, view(at_mu)) == 1.0);
  const Eigen::VectorXd off = (Eigen::VectorXd(2) << 0.5, 0.5).finished();
  WindowParams wide = w;
  wide.L.values *= 2.0;
  CHECK(window_value(wide, WindowKind::Gauss1, view(off)) < window_value(w, WindowKind::Gauss1, view(off)));
}

TEST_CASE("Gaussian whitening") {
  WindowParams w(Eigen::VectorXd::Zero(2), 1.0, "w");
  w.set_factor((Eigen::MatrixXd(2, 2) << 2.0, 0, 0.7, 1.2).finished());
  w.mu.values << 0.3, -0.6;
  const Eigen::MatrixXd L = w.factor();
  // x = mu + L^{-T} z has covariance (L L^T)^{-1}.
  const Eigen::MatrixXd back = L.transpose().inverse();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  const int N = 100000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int i = 0; i < N; ++i) {
    const Eigen::Vector2d z(n(rng), n(rng));
    const Eigen::VectorXd x = w.mu.values + back * z;
    const Eigen::VectorXd r = transform(w, view(x));
    mean += r;
    cov += r * r.transpose();
  }
  mean /= N;
  cov = cov / N - mean * mean.transpose();
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
  CHECK((cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("tape window matches the scalar window") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  WindowParams w(Eigen::VectorXd::Zero(3), 1.0, "w");
  for (int i = 0; i < w.L.size(); ++i) w.L.values[i] = 0.5 * n(rng);
  Eigen::MatrixXd pts(3, 7);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = 0.5 * n(rng);
  for (auto k : kAll) {
    diff::Tape tape;
    std::vector<diff::Var> x;
    for (int d = 0; d < 3; ++d) x.push_back(tape.constant(pts.row(d).array(), true));
    const diff::Var v = window_value(tape, w, k, x);
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      const Eigen::VectorXd p = pts.col(c);
      CHECK(v.slot(0)(0, c) == doctest::Approx(window_value(w, k, view(p))).epsilon(1e-13));
    }
  }
}

TEST_CASE("one-dimensional product window is even") {
  WindowParams w(Eigen::VectorXd::Zero(1), 6.0, "w");
  for (double x : {0.05, 0.1, 0.3}) {
    const double a[1] = {x}, b[1] = {-x};
    CHECK(window_value(w, WindowKind::SigmoidProduct3, a) == doctest::Approx(window_value(w, WindowKind::SigmoidProduct3, b)));
  }
}

TEST_CASE("envelope") {
  std::vector<WindowParams> set;
  const double x[1] = {0.3};
  CHECK(envelope(set, WindowKind::Gauss1, x) == 0.0);
  set.emplace_back(Eigen::VectorXd::Constant(1, 0.0), 6.0, "a");
  CHECK(envelope(set, WindowKind::Gauss1, x) == window_value(set[0], WindowKind::Gauss1, x));
  set.emplace_back(Eigen::VectorXd::Constant(1, 0.5), 6.0, "b");
  set.emplace_back(Eigen::VectorXd::Constant(1, -0.5), 3.0, "c");
  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const double p[1] = {u(rng)};
    const double e = envelope(set, WindowKind::Quartic2, p);
    for (const auto& w : set) CHECK(e >= window_value(w, WindowKind::Quartic2, p));
  }
}

TEST_CASE("center projection") {
  const std::pair<double, double> unit[1] = {{-1.0, 1.0}};
  const auto box = box_constraints(unit);
  WindowParams w(Eigen::VectorXd::Constant(1, 1.7), 1.0, "w");
  project_constraints(w, box);
  CHECK(w.mu.values[0] == 1.0);
  CHECK(satisfies_constraints(w, box));
  WindowParams inside(Eigen::VectorXd::Constant(1, 0.25), 1.0, "w");
  project_constraints(inside, box);
  CHECK(inside.mu.values[0] == 0.25);

  CenterConstraints circle;
  circle.circles.push_back({0, 1});
  WindowParams c(Eigen::Vector2d(0.6, 0.0), 1.0, "c");
  project_constraints(c, circle);
  CHECK(c.mu.values[0] == 1.0);
  CHECK(c.mu.values[1] == 0.0);
  WindowParams z(Eigen::Vector2d(0.0, 0.0), 1.0, "z");
  project_constraints(z, circle);
  CHECK(z.mu.values[0] == 1.0);
  WindowParams g(Eigen::Vector2d(-3.0, 4.0), 1.0, "g");
  const Eigen::VectorXd L_before = g.L.values;
  project_constraints(g, circle);
  CHECK(satisfies_constraints(g, circle));
  CHECK(g.mu.values[0] == doctest::Approx(-0.6));
  CHECK((g.L.values.array() == L_before.array()).all());
}

TEST_CASE("snapshot record layout") {
  WindowParams w(Eigen::Vector2d(0.1, 0.2), 3.0, "w");
  CHECK(snapshot_columns(2) == std::vector<std::string>{"kind", "mu_0", "mu_1", "L_0", "L_1", "L_2"});
  const auto v = snapshot_values(w);
  CHECK(v == std::vector<double>{0.1, 0.2, 3.0, 0.0, 3.0});
}

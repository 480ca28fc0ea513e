#include "abpinn/windows/window.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "abpinn/error.hpp"

namespace abpinn::windows {

namespace {

const double kLn2 = std::numbers::ln2;
const double kHalfRadius = std::sqrt(2.0 * std::numbers::ln2);

void check_dim(const WindowParams& p, std::size_t n) {
  if (static_cast<std::size_t>(p.dim()) != n) {
    throw ContractError("window of dimension " + std::to_string(p.dim()) + " applied to a " + std::to_string(n) +
                        "-dimensional point");
  }
}

double from_squared(WindowKind kind, double s) {
  switch (kind) {
    case WindowKind::Gauss1:
      return std::exp(-0.5 * s);
    case WindowKind::Quartic2:
      return std::exp(-s * s / (4.0 * kLn2));
    case WindowKind::SigmoidRadial4:
      return diff::kernel::stable_sigmoid(10.0 * (2.0 * kLn2 - s));
    case WindowKind::SigmoidProduct3: {
      const double t = std::sqrt(s);
      return diff::kernel::stable_sigmoid(10.0 * (kHalfRadius + t)) *
             diff::kernel::stable_sigmoid(10.0 * (kHalfRadius - t));
    }
  }
  return 0.0;
}

}  // namespace

WindowKind parse_window_kind(std::string_view name) {
  if (name == "gauss1" || name == "psi1") return WindowKind::Gauss1;
  if (name == "quartic2" || name == "psi2") return WindowKind::Quartic2;
  if (name == "sigmoid_product3" || name == "psi3") return WindowKind::SigmoidProduct3;
  if (name == "sigmoid_radial4" || name == "psi4") return WindowKind::SigmoidRadial4;
  throw ConfigError("unknown window kind '" + std::string(name) + "'");
}

std::string_view window_kind_name(WindowKind kind) {
  switch (kind) {
    case WindowKind::Gauss1:
      return "gauss1";
    case WindowKind::Quartic2:
      return "quartic2";
    case WindowKind::SigmoidProduct3:
      return "sigmoid_product3";
    case WindowKind::SigmoidRadial4:
      return "sigmoid_radial4";
  }
  return "?";
}

double reference_value(WindowKind kind, double radius) { return from_squared(kind, radius * radius); }

double reference_value(WindowKind kind, std::span<const double> t) {
  if (t.size() == 1 && kind == WindowKind::SigmoidProduct3) {
    return diff::kernel::stable_sigmoid(10.0 * (kHalfRadius + t[0])) *
           diff::kernel::stable_sigmoid(10.0 * (kHalfRadius - t[0]));
  }
  double s = 0.0;
  for (double v : t) s += v * v;
  return from_squared(kind, s);
}

WindowParams::WindowParams(const Eigen::VectorXd& center, const Eigen::VectorXd& diag_scale, const std::string& name)
    : mu(name + ".mu", center.size()), L(name + ".L", triangle_size(static_cast<int>(center.size()))) {
  if (diag_scale.size() != center.size()) throw ContractError("window scale and center sizes differ");
  mu.values = center;
  for (int i = 0; i < dim(); ++i) L.values[triangle_index(i, i)] = diag_scale[i];
}

WindowParams::WindowParams(const Eigen::VectorXd& center, double scale, const std::string& name)
    : WindowParams(center, Eigen::VectorXd::Constant(center.size(), scale), name) {}

Eigen::MatrixXd WindowParams::factor() const {
  const int d = dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) m(i, j) = L.values[triangle_index(i, j)];
    m(i, i) = std::abs(L.values[triangle_index(i, i)]);
  }
  return m;
}

void WindowParams::set_factor(const Eigen::MatrixXd& m) {
  if (m.rows() != dim() || m.cols() != dim()) throw ContractError("factor has the wrong shape");
  for (int i = 0; i < dim(); ++i) {
    for (int j = 0; j <= i; ++j) L.values[triangle_index(i, j)] = m(i, j);
  }
}

Eigen::VectorXd transform(const WindowParams& params, std::span<const double> x) {
  check_dim(params, x.size());
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return params.factor().transpose() * (xv - params.mu.values);
}

double window_value(const WindowParams& params, WindowKind kind, std::span<const double> x) {
  const Eigen::VectorXd r = transform(params, x);
  return reference_value(kind, std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
}

std::vector<diff::Var> transform(diff::Tape& tape, const WindowParams& params, std::span<const diff::Var> x) {
  check_dim(params, x.size());
  const int d = params.dim();
  std::vector<diff::Var> shifted;
  shifted.reserve(x.size());
  for (int i = 0; i < d; ++i) shifted.push_back(x[static_cast<std::size_t>(i)] - tape.param(params.mu, i));
  std::vector<diff::Var> r;
  r.reserve(x.size());
  for (int j = 0; j < d; ++j) {
    diff::Var acc = abs(tape.param(params.L, triangle_index(j, j))) * shifted[static_cast<std::size_t>(j)];
    for (int i = j + 1; i < d; ++i) {
      acc = acc + tape.param(params.L, triangle_index(i, j)) * shifted[static_cast<std::size_t>(i)];
    }
    r.push_back(acc);
  }
  return r;
}

diff::Var reference_value(diff::Tape& tape, WindowKind kind, std::span<const diff::Var> r) {
  (void)tape;
  if (r.empty()) throw ContractError("window needs at least one coordinate");
  if (kind == WindowKind::SigmoidProduct3) {
    const diff::Var t = r.size() == 1 ? r[0] : [&] {
      diff::Var s = square(r[0]);
      for (std::size_t k = 1; k < r.size(); ++k) s = s + square(r[k]);
      return sqrt(s);
    }();
    return sigmoid(10.0 * (t + kHalfRadius)) * sigmoid(10.0 * (kHalfRadius - t));
  }
  diff::Var s = square(r[0]);
  for (std::size_t k = 1; k < r.size(); ++k) s = s + square(r[k]);
  switch (kind) {
    case WindowKind::Gauss1:
      return exp(-0.5 * s);
    case WindowKind::Quartic2:
      return exp(square(s) * (-1.0 / (4.0 * kLn2)));
    case WindowKind::SigmoidRadial4:
      return sigmoid(10.0 * (2.0 * kLn2 - s));
    default:
      break;
  }
  throw ContractError("unhandled window kind");
}

diff::Var window_value(diff::Tape& tape, const WindowParams& params, WindowKind kind,
                       std::span<const diff::Var> x) {
  const auto r = transform(tape, params, x);
  return reference_value(tape, kind, r);
}

double envelope(std::span<const WindowParams> set, WindowKind kind, std::span<const double> x) {
  double e = 0.0;
  for (const auto& w : set) e = std::max(e, window_value(w, kind, x));
  return e;
}

CenterConstraints box_constraints(std::span<const std::pair<double, double>> bounds) {
  CenterConstraints c;
  for (std::size_t i = 0; i < bounds.size(); ++i) c.clamp.push_back({static_cast<int>(i), bounds[i]});
  return c;
}

void project_constraints(WindowParams& params, const CenterConstraints& constraints) {
  auto& mu = params.mu.values;
  for (const auto& [i, b] : constraints.clamp) mu[i] = std::clamp(mu[i], b.first, b.second);
  for (const auto& [a, b] : constraints.circles) {
    const double n = std::hypot(mu[a], mu[b]);
    if (n == 0.0) {
      mu[a] = 1.0;
      mu[b] = 0.0;
    } else {
      mu[a] /= n;
      mu[b] /= n;
    }
  }
}

bool satisfies_constraints(const WindowParams& params, const CenterConstraints& constraints) {
  const auto& mu = params.mu.values;
  for (const auto& [i, b] : constraints.clamp) {
    if (mu[i] < b.first || mu[i] > b.second) return false;
  }
  for (const auto& [a, b] : constraints.circles) {
    if (std::abs(std::hypot(mu[a], mu[b]) - 1.0) > 1e-14) return false;
  }
  return true;
}

std::vector<std::string> snapshot_columns(int dim) {
  std::vector<std::string> cols{"kind"};
  for (int i = 0; i < dim; ++i) cols.push_back("mu_" + std::to_string(i));
  for (int i = 0; i < triangle_size(dim); ++i) cols.push_back("L_" + std::to_string(i));
  return cols;
}

std::vector<double> snapshot_values(const WindowParams& params) {
  std::vector<double> v(params.mu.values.data(), params.mu.values.data() + params.mu.size());
  v.insert(v.end(), params.L.values.data(), params.L.values.data() + params.L.size());
  return v;
}

}  // namespace abpinn::windows

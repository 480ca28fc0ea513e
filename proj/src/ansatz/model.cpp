#include "abpinn/ansatz/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "abpinn/error.hpp"

namespace abpinn::ansatz {

using diff::Var;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Eigen::Index kChunk = 4096;

}  // namespace

bool EmbeddingSpec::is_periodic(int dim) const {
  return std::find(periodic_dims.begin(), periodic_dims.end(), dim) != periodic_dims.end();
}

int EmbeddingSpec::embedded_index(int dim) const {
  int at = 0;
  for (int d = 0; d < dim; ++d) at += is_periodic(d) ? 2 : 1;
  return at;
}

Eigen::VectorXd EmbeddingSpec::embed(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != raw_dim) throw ContractError("point has the wrong dimension");
  Eigen::VectorXd e(embedded_dim());
  int at = 0;
  for (int d = 0; d < raw_dim; ++d) {
    const double v = x[static_cast<std::size_t>(d)];
    if (is_periodic(d)) {
      e[at++] = std::cos(kPi * v);
      e[at++] = std::sin(kPi * v);
    } else {
      e[at++] = v;
    }
  }
  return e;
}

std::vector<Var> EmbeddingSpec::embed(diff::Tape&, std::span<const Var> x) const {
  if (static_cast<int>(x.size()) != raw_dim) throw ContractError("point has the wrong dimension");
  std::vector<Var> e;
  e.reserve(static_cast<std::size_t>(embedded_dim()));
  for (int d = 0; d < raw_dim; ++d) {
    const Var v = x[static_cast<std::size_t>(d)];
    if (is_periodic(d)) {
      e.push_back(cos(kPi * v));
      e.push_back(sin(kPi * v));
    } else {
      e.push_back(v);
    }
  }
  return e;
}

windows::CenterConstraints EmbeddingSpec::center_constraints(
    std::span<const std::pair<double, double>> raw_bounds) const {
  if (static_cast<int>(raw_bounds.size()) != raw_dim) throw ContractError("bounds have the wrong dimension");
  windows::CenterConstraints c;
  for (int d = 0; d < raw_dim; ++d) {
    const int at = embedded_index(d);
    if (is_periodic(d)) {
      c.circles.push_back({at, at + 1});
    } else {
      c.clamp.push_back({at, raw_bounds[static_cast<std::size_t>(d)]});
    }
  }
  return c;
}

ConstraintKind parse_constraint_kind(std::string_view name) {
  for (auto k : {ConstraintKind::Identity, ConstraintKind::ChirpRight, ConstraintKind::AdvectionIC,
                 ConstraintKind::HelmholtzBox, ConstraintKind::PoissonBox, ConstraintKind::AllenCahnIC,
                 ConstraintKind::KdvIC}) {
    if (constraint_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown constraining operator '" + std::string(name) + "'");
}

std::string_view constraint_kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Identity:
      return "identity";
    case ConstraintKind::ChirpRight:
      return "chirp_right";
    case ConstraintKind::AdvectionIC:
      return "advection_ic";
    case ConstraintKind::HelmholtzBox:
      return "helmholtz_box";
    case ConstraintKind::PoissonBox:
      return "poisson_box";
    case ConstraintKind::AllenCahnIC:
      return "allen_cahn_ic";
    case ConstraintKind::KdvIC:
      return "kdv_ic";
  }
  return "?";
}

int constraint_raw_dim(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Identity:
      return -1;
    case ConstraintKind::ChirpRight:
      return 1;
    default:
      return 2;
  }
}

Var apply_constraint(ConstraintKind kind, Var u, std::span<const Var> raw) {
  const int need = constraint_raw_dim(kind);
  if (need > 0 && static_cast<int>(raw.size()) != need) {
    throw ContractError(std::string(constraint_kind_name(kind)) + " expects " + std::to_string(need) +
                        " coordinates");
  }
  switch (kind) {
    case ConstraintKind::Identity:
      return u;
    case ConstraintKind::ChirpRight:
      return u * tanh((raw[0] - 1.0) / 10.0);
    case ConstraintKind::AdvectionIC:
      return u * tanh(raw[0]) + sin(kPi * raw[1]);
    case ConstraintKind::HelmholtzBox:
    case ConstraintKind::PoissonBox: {
      const Var x = raw[0], y = raw[1];
      return u * tanh(x - 1.0) * tanh(x + 1.0) * tanh(y - 1.0) * tanh(y + 1.0);
    }
    case ConstraintKind::AllenCahnIC:
      return tanh(raw[0]) * u + square(raw[1]) * cos(kPi * raw[1]);
    case ConstraintKind::KdvIC:
      return tanh(raw[0]) * u + cos(kPi * raw[1]);
  }
  return u;
}

AbPinnModel::AbPinnModel(EmbeddingSpec embedding, ConstraintKind constraint, windows::WindowKind window)
    : embedding_(std::move(embedding)), constraint_(constraint), window_(window) {
  const int need = constraint_raw_dim(constraint_);
  if (need > 0 && need != embedding_.raw_dim) {
    throw ContractError(std::string(constraint_kind_name(constraint_)) + " needs " + std::to_string(need) +
                        " raw coordinates, embedding has " + std::to_string(embedding_.raw_dim));
  }
}

void AbPinnModel::set_global(nets::Mlp net) {
  if (net.config().input_dim != embedding_.embedded_dim()) {
    throw ContractError("global network input dim must equal the embedded dimension");
  }
  global_ = std::move(net);
}

void AbPinnModel::add_subdomain(windows::WindowParams window, nets::Mlp net) {
  const int e = embedding_.embedded_dim();
  if (window.dim() != e || net.config().input_dim != e) {
    throw ContractError("subdomain dims must equal the embedded dimension " + std::to_string(e));
  }
  subdomains_.push_back({std::move(window), std::move(net)});
}

std::vector<windows::WindowParams> AbPinnModel::window_set() const {
  std::vector<windows::WindowParams> out;
  out.reserve(subdomains_.size());
  for (const auto& s : subdomains_) out.push_back(s.window);
  return out;
}

Var AbPinnModel::raw_field(diff::Tape& tape, std::span<const Var> raw) const {
  const auto e = embedding_.embed(tape, raw);
  Var u;
  if (global_) {
    u = global_->forward(tape, concat_rows(std::span<const Var>(e)));
  }
  for (const auto& s : subdomains_) {
    const auto r = windows::transform(tape, s.window, e);
    const Var phi = windows::reference_value(tape, window_, r);
    const Var term = phi * s.net.forward(tape, concat_rows(std::span<const Var>(r)));
    u = u.valid() ? u + term : term;
  }
  if (!u.valid()) u = 0.0 * raw[0];
  return u;
}

Var AbPinnModel::constrained_field(diff::Tape& tape, std::span<const Var> raw) const {
  return apply_constraint(constraint_, raw_field(tape, raw), raw);
}

diff::Field AbPinnModel::as_field() const {
  return [this](diff::Tape& tape, std::span<const Var> raw) { return constrained_field(tape, raw); };
}

double AbPinnModel::value(std::span<const double> x) const { return jet(x, 0, 0).value; }

diff::Jet AbPinnModel::jet(std::span<const double> x, int direction, int order) const {
  return diff::eval_with_input_derivatives(as_field(), x, direction, order);
}

Eigen::VectorXd AbPinnModel::values(const Eigen::MatrixXd& points) const {
  if (points.rows() != embedding_.raw_dim) throw ContractError("points have the wrong dimension");
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index start = 0; start < points.cols(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, points.cols() - start);
    diff::Tape tape;
    const auto raw = diff::seed_inputs(tape, points.middleCols(start, n), 0, 0);
    const Var u = constrained_field(tape, raw);
    out.segment(start, n) = u.slot(0).row(0).transpose();
  }
  return out;
}

Eigen::MatrixXd AbPinnModel::window_values(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(subdomains_.size()), points.cols());
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const Eigen::VectorXd p = points.col(c);
    const Eigen::VectorXd e = embedding_.embed(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    const std::span<const double> es(e.data(), static_cast<std::size_t>(e.size()));
    for (std::size_t i = 0; i < subdomains_.size(); ++i) {
      out(static_cast<Eigen::Index>(i), c) = windows::window_value(subdomains_[i].window, window_, es);
    }
  }
  return out;
}

std::size_t AbPinnModel::parameter_count() const {
  std::size_t n = global_ ? global_->parameter_count() : 0;
  for (const auto& s : subdomains_) {
    n += s.net.parameter_count() + static_cast<std::size_t>(s.window.mu.size() + s.window.L.size());
  }
  return n;
}

double field_periodicity_check(const AbPinnModel& model, double t, int derivative_order) {
  const auto& emb = model.embedding();
  if (emb.periodic_dims.empty()) throw CapabilityError("model has no periodic coordinate");
  const int dir = emb.periodic_dims.front();
  std::vector<double> left(static_cast<std::size_t>(emb.raw_dim), t), right = left;
  left[static_cast<std::size_t>(dir)] = -1.0;
  right[static_cast<std::size_t>(dir)] = 1.0;
  const diff::Field raw = [&model](diff::Tape& tape, std::span<const Var> x) { return model.raw_field(tape, x); };
  const diff::Jet a = diff::eval_with_input_derivatives(raw, left, dir, derivative_order);
  const diff::Jet b = diff::eval_with_input_derivatives(raw, right, dir, derivative_order);
  return std::abs(a[derivative_order] - b[derivative_order]);
}

}  // namespace abpinn::ansatz

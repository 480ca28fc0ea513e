#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "abpinn/diff/field.hpp"
#include "abpinn/nets/mlp.hpp"
#include "abpinn/windows/window.hpp"

namespace abpinn::ansatz {

/// Which raw coordinates are periodic on [-1, 1]. Each periodic coordinate x
/// is replaced in place by the pair (cos(pi x), sin(pi x)); the others pass
/// through unchanged.
struct EmbeddingSpec {
  int raw_dim = 1;
  std::vector<int> periodic_dims;

  bool is_periodic(int dim) const;
  int embedded_dim() const { return raw_dim + static_cast<int>(periodic_dims.size()); }
  /// Index in the embedded vector of the first component produced by raw dim.
  int embedded_index(int dim) const;

  Eigen::VectorXd embed(std::span<const double> x) const;
  std::vector<diff::Var> embed(diff::Tape& tape, std::span<const diff::Var> x) const;

  /// Admissible set for window centers in the embedded space: passthrough
  /// components clamped to their raw bounds, circle pairs on the unit circle.
  windows::CenterConstraints center_constraints(std::span<const std::pair<double, double>> raw_bounds) const;
};

/// Closed-form wrappers that make the ansatz satisfy a boundary or initial
/// condition identically. Raw coordinates are (x), (x, y) or (t, x).
///   ChirpRight   u tanh((x-1)/10)
///   AdvectionIC  u tanh(t) + sin(pi x)
///   HelmholtzBox u tanh(x-1) tanh(x+1) tanh(y-1) tanh(y+1)
///   PoissonBox   same as HelmholtzBox
///   AllenCahnIC  u tanh(t) + x^2 cos(pi x)
///   KdvIC        u tanh(t) + cos(pi x)
enum class ConstraintKind { Identity, ChirpRight, AdvectionIC, HelmholtzBox, PoissonBox, AllenCahnIC, KdvIC };

ConstraintKind parse_constraint_kind(std::string_view name);
std::string_view constraint_kind_name(ConstraintKind kind);
int constraint_raw_dim(ConstraintKind kind);

diff::Var apply_constraint(ConstraintKind kind, diff::Var u, std::span<const diff::Var> raw);

struct Subdomain {
  windows::WindowParams window;
  nets::Mlp net;
};

/// u(x) = NN_0(e(x)) + sum_i phi_i(e(x)) NN_i(r_i(e(x))), wrapped by the
/// constraining operator; e is the embedding.
class AbPinnModel {
 public:
  AbPinnModel() = default;
  AbPinnModel(EmbeddingSpec embedding, ConstraintKind constraint, windows::WindowKind window);

  const EmbeddingSpec& embedding() const { return embedding_; }
  ConstraintKind constraint() const { return constraint_; }
  windows::WindowKind window_kind() const { return window_; }

  void set_global(nets::Mlp net);
  bool has_global() const { return global_.has_value(); }
  const nets::Mlp& global() const { return *global_; }
  nets::Mlp& global() { return *global_; }

  /// Appends a subdomain. Window and network input dims must equal the
  /// embedded dimension.
  void add_subdomain(windows::WindowParams window, nets::Mlp net);
  std::size_t subdomain_count() const { return subdomains_.size(); }
  const std::vector<Subdomain>& subdomains() const { return subdomains_; }
  std::vector<Subdomain>& subdomains() { return subdomains_; }
  std::vector<windows::WindowParams> window_set() const;

  /// Batched tape versions over raw coordinate rows.
  diff::Var raw_field(diff::Tape& tape, std::span<const diff::Var> raw) const;
  diff::Var constrained_field(diff::Tape& tape, std::span<const diff::Var> raw) const;
  diff::Field as_field() const;

  double value(std::span<const double> x) const;
  diff::Jet jet(std::span<const double> x, int direction, int order) const;
  /// Constrained values at every column of `points` (raw_dim x N).
  Eigen::VectorXd values(const Eigen::MatrixXd& points) const;
  /// phi_i at each column of `points`, one row per subdomain.
  Eigen::MatrixXd window_values(const Eigen::MatrixXd& points) const;

  std::size_t parameter_count() const;

 private:
  EmbeddingSpec embedding_;
  ConstraintKind constraint_ = ConstraintKind::Identity;
  windows::WindowKind window_ = windows::WindowKind::Gauss1;
  std::optional<nets::Mlp> global_;
  std::vector<Subdomain> subdomains_;
};

/// |d^k u(t,-1)/dx^k - d^k u(t,1)/dx^k| of the unconstrained field along the
/// first periodic coordinate.
/// Throws CapabilityError when the model has no periodic coordinate.
double field_periodicity_check(const AbPinnModel& model, double t, int derivative_order = 0);

}  // namespace abpinn::ansatz

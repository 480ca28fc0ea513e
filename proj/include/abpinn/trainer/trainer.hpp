#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "abpinn/ansatz/model.hpp"
#include "abpinn/problems/problem.hpp"

namespace abpinn::trainer {

using Rng = std::mt19937_64;

struct AdditionSchedule {
  long start_iter = 0;
  long period = 1000;
  int max_subdomains = 1;
  /// Diagonal of the initial factor, one entry per embedded dimension.
  Eigen::VectorXd init_L;
  nets::MlpConfig subnet;

  bool operator==(const AdditionSchedule&) const = default;
};

struct TrainSchedule {
  long total_iters = 0;
  long freeze_iter = 0;
  int collocation_batch = 1000;
  double lr_net = 1e-3;
  double lr_mu = 1e-3;
  double lr_L = 1e-3;
  double decay_floor = 0.01;
  std::optional<AdditionSchedule> addition;
  int pool_size = 10000;
  int record_every = 100;
  /// Points per raw dimension of the evaluation grid.
  std::vector<int> eval_grid;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Iterations at which a subdomain is added, given the initial count.
  std::vector<long> addition_iters(std::size_t initial_subdomains) const;

  bool operator==(const TrainSchedule&) const = default;
};

enum class GroupRole { Network, Center, Factor };

/// Adam moments plus the group's own decay horizon.
struct AdamState {
  GroupRole role = GroupRole::Network;
  double lr0 = 0.0;
  long start_iter = 0;
  long end_iter = 1;
  long steps = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// lr0 * floor^((iter - start) / (end - start)), clamped to the horizon.
double decayed_lr(double lr0, double floor, long iter, long start, long end);

/// One Adam update of `group` in place using group.grads.
void adam_update(diff::ParamGroup& group, AdamState& state, double lr);

struct GroupRef {
  diff::ParamGroup* group;
  GroupRole role;
  /// Subdomain index for window groups, -1 otherwise.
  int subdomain;
};

/// Every trainable group of the model in a fixed order: global layers, then
/// per subdomain its network layers, mu and L.
std::vector<GroupRef> collect_groups(ansatz::AbPinnModel& model);

/// Per-group Adam with exponential decay and the window freeze.
class Optimizer {
 public:
  Optimizer(const TrainSchedule& schedule, windows::CenterConstraints constraints);

  /// Registers every group of `model` that has no state yet, starting its
  /// horizon at `iter`.
  void register_model(ansatz::AbPinnModel& model, long iter);
  /// Updates every registered group from its gradients. Window groups are
  /// skipped at or after the freeze iteration or when their rate is zero;
  /// updated windows are projected back onto their constraints.
  void step(ansatz::AbPinnModel& model, long iter);

  bool windows_frozen(long iter) const { return iter >= schedule_.freeze_iter; }
  const AdamState& state(const std::string& group_id) const;
  double lr(const std::string& group_id, long iter) const;

 private:
  TrainSchedule schedule_;
  windows::CenterConstraints constraints_;
  std::map<std::string, AdamState> states_;
};

/// n i.i.d. uniform points strictly inside the domain box (dim x n).
Eigen::MatrixXd sample_collocation(const problems::ProblemSpec& problem, int n, Rng& rng);

/// Mean squared residual of `field` over `points` as a scalar node. Throws
/// DiagnosticError naming a point where the residual is not finite.
diff::Var loss(diff::Tape& tape, const problems::ProblemSpec& problem, const diff::Field& field,
               const Eigen::MatrixXd& points);

/// Index drawn with probability weights[k] / sum(weights); uniform when every
/// weight is zero.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

/// Squared residual of the model at each column of `points`.
Eigen::VectorXd squared_residuals(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                  const Eigen::MatrixXd& points);

/// Index of a column of `pool` drawn with probability proportional to its
/// squared residual.
std::size_t residual_proportional_sample(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                         const Eigen::MatrixXd& pool, Rng& rng);

/// Draws pool_size uniform points and returns one chosen proportionally to
/// its squared residual.
Eigen::VectorXd residual_proportional_sample(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                             int pool_size, Rng& rng);

/// Appends a subdomain centred at embed(point) with the scheduled factor and
/// a Glorot subnetwork. Returns false, leaving the model untouched, when the
/// maximum count is reached.
bool add_subdomain(ansatz::AbPinnModel& model, const problems::ProblemSpec& problem, const AdditionSchedule& addition,
                   const Eigen::VectorXd& point, Rng& rng);

struct L2Result {
  double value = 0.0;
  /// True when the reference norm was zero and `value` is the absolute norm.
  bool absolute = false;
};

/// ||u - u_ref||_2 / ||u_ref||_2 over the given values.
L2Result relative_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& u_ref);
L2Result relative_l2(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                     const Eigen::MatrixXd& eval_points);

/// Inclusive uniform grid over the domain box, first coordinate slowest.
Eigen::MatrixXd eval_grid(const problems::ProblemSpec& problem, const std::vector<int>& per_dim);
/// 2000 points in 1-D, 256 per dimension otherwise.
std::vector<int> default_eval_grid(const problems::ProblemSpec& problem);

struct TrainRecord {
  long iter = 0;
  double residual_loss = 0.0;
  double l2_error = 0.0;
  std::size_t subdomain_count = 0;
  std::string event;

  bool operator==(const TrainRecord&) const = default;
};

struct WindowSnapshot {
  long iter = 0;
  std::vector<windows::WindowParams> windows;
};

struct RunResult {
  std::vector<TrainRecord> records;
  std::vector<WindowSnapshot> snapshots;
  /// Mean squared residual over the evaluation grid after training.
  double final_eval_residual = 0.0;
  L2Result final_l2;
};

/// Optional progress callback, called after every record.
using Progress = std::function<void(const TrainRecord&)>;

/// Runs the schedule: per iteration, scheduled subdomain addition, uniform
/// resampling, loss, backward, Adam. Records every record_every iterations,
/// around every addition, and at the last iteration.
RunResult run(ansatz::AbPinnModel& model, const problems::ProblemSpec& problem, const TrainSchedule& schedule,
              const Progress& progress = {});

/// Residual of the model at every column of `points`, evaluated in chunks.
Eigen::VectorXd pointwise_residual(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                   const Eigen::MatrixXd& points);

}  // namespace abpinn::trainer

#include "abpinn/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "abpinn/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace abpinn::trainer {

using diff::Tape;
using diff::Var;

namespace {

constexpr Eigen::Index kChunk = 4096;

std::string point_text(const Eigen::VectorXd& p) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

// Tape slots are large short-lived blocks; keeping them on the heap instead
// of fresh mmap pages removes most page-fault traffic from the inner loop.
void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
  });
#endif
}

std::string group_norms(ansatz::AbPinnModel& model) {
  std::ostringstream os;
  bool first = true;
  for (const auto& g : collect_groups(model)) {
    os << (first ? "" : ", ") << g.group->id << "=" << g.group->values.norm();
    first = false;
  }
  return os.str();
}

}  // namespace

void TrainSchedule::validate() const {
  if (total_iters < 0) throw ConfigError("total_iters must be non-negative");
  if (freeze_iter < 0) throw ConfigError("freeze_iter must be non-negative");
  if (collocation_batch < 1) throw ConfigError("collocation_batch must be positive");
  if (!(lr_net >= 0) || !(lr_mu >= 0) || !(lr_L >= 0)) throw ConfigError("learning rates must be non-negative");
  if (!(decay_floor > 0 && decay_floor <= 1)) throw ConfigError("decay_floor must lie in (0, 1]");
  if (pool_size < 1) throw ConfigError("pool_size must be positive");
  if (record_every < 1) throw ConfigError("record_every must be positive");
  for (int n : eval_grid) {
    if (n < 2) throw ConfigError("eval_grid entries must be at least 2");
  }
  if (addition) {
    if (addition->start_iter < 0) throw ConfigError("addition start_iter must be non-negative");
    if (addition->period < 1) throw ConfigError("addition period must be positive");
    if (addition->max_subdomains < 0) throw ConfigError("addition max_subdomains must be non-negative");
    if (addition->init_L.size() == 0) throw ConfigError("addition init_L must not be empty");
    addition->subnet.validate();
  }
}

std::vector<long> TrainSchedule::addition_iters(std::size_t initial_subdomains) const {
  std::vector<long> out;
  if (!addition) return out;
  const long slots = static_cast<long>(addition->max_subdomains) - static_cast<long>(initial_subdomains);
  for (long j = 0; j < slots; ++j) {
    const long it = addition->start_iter + j * addition->period;
    if (it >= total_iters) break;
    out.push_back(it);
  }
  return out;
}

double decayed_lr(double lr0, double floor, long iter, long start, long end) {
  if (end <= start) return lr0;
  const double frac = std::clamp(static_cast<double>(iter - start) / static_cast<double>(end - start), 0.0, 1.0);
  return lr0 * std::pow(floor, frac);
}

void adam_update(diff::ParamGroup& group, AdamState& state, double lr) {
  if (state.m.size() != group.size()) {
    state.m = Eigen::VectorXd::Zero(group.size());
    state.v = Eigen::VectorXd::Zero(group.size());
  }
  ++state.steps;
  const auto& g = group.grads.array();
  state.m.array() = kAdamBeta1 * state.m.array() + (1 - kAdamBeta1) * g;
  state.v.array() = kAdamBeta2 * state.v.array() + (1 - kAdamBeta2) * g.square();
  const double c1 = 1 - std::pow(kAdamBeta1, static_cast<double>(state.steps));
  const double c2 = 1 - std::pow(kAdamBeta2, static_cast<double>(state.steps));
  group.values.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + kAdamEps);
}

std::vector<GroupRef> collect_groups(ansatz::AbPinnModel& model) {
  std::vector<GroupRef> out;
  if (model.has_global()) {
    for (auto& g : model.global().layers()) out.push_back({&g, GroupRole::Network, -1});
  }
  auto& subs = model.subdomains();
  for (std::size_t i = 0; i < subs.size(); ++i) {
    for (auto& g : subs[i].net.layers()) out.push_back({&g, GroupRole::Network, -1});
    out.push_back({&subs[i].window.mu, GroupRole::Center, static_cast<int>(i)});
    out.push_back({&subs[i].window.L, GroupRole::Factor, static_cast<int>(i)});
  }
  return out;
}

Optimizer::Optimizer(const TrainSchedule& schedule, windows::CenterConstraints constraints)
    : schedule_(schedule), constraints_(std::move(constraints)) {}

void Optimizer::register_model(ansatz::AbPinnModel& model, long iter) {
  for (const auto& ref : collect_groups(model)) {
    if (states_.contains(ref.group->id)) continue;
    AdamState s;
    s.role = ref.role;
    s.lr0 = ref.role == GroupRole::Network  ? schedule_.lr_net
            : ref.role == GroupRole::Center ? schedule_.lr_mu
                                            : schedule_.lr_L;
    s.start_iter = iter;
    s.end_iter = schedule_.total_iters;
    s.m = Eigen::VectorXd::Zero(ref.group->size());
    s.v = Eigen::VectorXd::Zero(ref.group->size());
    states_.emplace(ref.group->id, std::move(s));
  }
}

void Optimizer::step(ansatz::AbPinnModel& model, long iter) {
  std::set<int> moved;
  for (const auto& ref : collect_groups(model)) {
    auto it = states_.find(ref.group->id);
    if (it == states_.end()) throw StateError("parameter group '" + ref.group->id + "' was never registered");
    AdamState& s = it->second;
    if (s.role != GroupRole::Network && (windows_frozen(iter) || s.lr0 == 0.0)) continue;
    adam_update(*ref.group, s, decayed_lr(s.lr0, schedule_.decay_floor, iter, s.start_iter, s.end_iter));
    if (ref.subdomain >= 0) moved.insert(ref.subdomain);
  }
  for (int i : moved) windows::project_constraints(model.subdomains()[static_cast<std::size_t>(i)].window, constraints_);
}

const AdamState& Optimizer::state(const std::string& group_id) const {
  const auto it = states_.find(group_id);
  if (it == states_.end()) throw StateError("no optimizer state for '" + group_id + "'");
  return it->second;
}

double Optimizer::lr(const std::string& group_id, long iter) const {
  const auto& s = state(group_id);
  if (s.role != GroupRole::Network && (windows_frozen(iter) || s.lr0 == 0.0)) return 0.0;
  return decayed_lr(s.lr0, schedule_.decay_floor, iter, s.start_iter, s.end_iter);
}

Eigen::MatrixXd sample_collocation(const problems::ProblemSpec& problem, int n, Rng& rng) {
  Eigen::MatrixXd pts(problem.dim(), n);
  std::vector<std::uniform_real_distribution<double>> dists;
  for (const auto& [lo, hi] : problem.bounds) dists.emplace_back(lo, hi);
  for (int c = 0; c < n; ++c) {
    for (int d = 0; d < problem.dim(); ++d) {
      const double lo = problem.bounds[static_cast<std::size_t>(d)].first;
      double v = dists[static_cast<std::size_t>(d)](rng);
      while (v == lo) v = dists[static_cast<std::size_t>(d)](rng);
      pts(d, c) = v;
    }
  }
  return pts;
}

Var loss(Tape& tape, const problems::ProblemSpec& problem, const diff::Field& field, const Eigen::MatrixXd& points) {
  const Var r = problems::residual(tape, problem, field, points);
  const auto& vals = r.slot(0);
  if (!vals.allFinite()) {
    Eigen::Index bad = 0;
    while (std::isfinite(vals(0, bad))) ++bad;
    throw DiagnosticError("non-finite residual at point " + point_text(points.col(bad)));
  }
  return mean(square(r));
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  if (weights.empty()) throw ContractError("cannot sample from an empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw DiagnosticError("sampling weights must be finite and non-negative");
    total += w;
  }
  if (total == 0.0) {
    std::uniform_int_distribution<std::size_t> u(0, weights.size() - 1);
    return u(rng);
  }
  std::discrete_distribution<std::size_t> d(weights.begin(), weights.end());
  return d(rng);
}

Eigen::VectorXd pointwise_residual(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                   const Eigen::MatrixXd& points) {
  const diff::Field field = model.as_field();
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index start = 0; start < points.cols(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, points.cols() - start);
    Tape tape;
    const Var r = problems::residual(tape, problem, field, points.middleCols(start, n));
    out.segment(start, n) = r.slot(0).row(0).transpose();
  }
  return out;
}

Eigen::VectorXd squared_residuals(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                  const Eigen::MatrixXd& points) {
  return pointwise_residual(model, problem, points).array().square();
}

Eigen::VectorXd residual_proportional_sample(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                             int pool_size, Rng& rng) {
  const Eigen::MatrixXd pool = sample_collocation(problem, pool_size, rng);
  return pool.col(static_cast<Eigen::Index>(residual_proportional_sample(model, problem, pool, rng)));
}

std::size_t residual_proportional_sample(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                                         const Eigen::MatrixXd& pool, Rng& rng) {
  if (pool.cols() == 0) throw ContractError("empty sampling pool");
  const Eigen::VectorXd w = squared_residuals(model, problem, pool);
  if (!w.allFinite()) throw DiagnosticError("non-finite residual in the addition pool");
  return sample_index(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), rng);
}

bool add_subdomain(ansatz::AbPinnModel& model, const problems::ProblemSpec& problem, const AdditionSchedule& addition,
                   const Eigen::VectorXd& point, Rng& rng) {
  if (model.subdomain_count() >= static_cast<std::size_t>(addition.max_subdomains)) {
    std::cerr << "warning: subdomain limit " << addition.max_subdomains << " reached, no subdomain added\n";
    return false;
  }
  const auto& emb = model.embedding();
  const int e = emb.embedded_dim();
  if (addition.init_L.size() != e) {
    throw ContractError("init_L has " + std::to_string(addition.init_L.size()) + " entries, expected " +
                        std::to_string(e));
  }
  const Eigen::VectorXd mu = emb.embed(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
  const std::string tag = std::to_string(model.subdomain_count());
  windows::WindowParams w(mu, addition.init_L, "w" + tag);
  windows::project_constraints(w, emb.center_constraints(problem.bounds));
  nets::MlpConfig cfg = addition.subnet;
  cfg.input_dim = e;
  model.add_subdomain(std::move(w), nets::Mlp::glorot(cfg, rng, "sub" + tag));
  return true;
}

L2Result relative_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& u_ref) {
  if (u.size() != u_ref.size()) throw ContractError("relative_l2 needs vectors of equal length");
  const double num = (u - u_ref).norm();
  const double den = u_ref.norm();
  if (den == 0.0) return {num, true};
  return {num / den, false};
}

L2Result relative_l2(const ansatz::AbPinnModel& model, const problems::ProblemSpec& problem,
                     const Eigen::MatrixXd& eval_points) {
  return relative_l2(model.values(eval_points), problems::reference_solution(problem, eval_points));
}

Eigen::MatrixXd eval_grid(const problems::ProblemSpec& problem, const std::vector<int>& per_dim) {
  const int d = problem.dim();
  if (static_cast<int>(per_dim.size()) != d) {
    throw ConfigError("eval_grid needs " + std::to_string(d) + " entries, got " + std::to_string(per_dim.size()));
  }
  Eigen::Index total = 1;
  std::vector<Eigen::VectorXd> axes;
  for (int k = 0; k < d; ++k) {
    const auto [lo, hi] = problem.bounds[static_cast<std::size_t>(k)];
    axes.push_back(Eigen::VectorXd::LinSpaced(per_dim[static_cast<std::size_t>(k)], lo, hi));
    total *= per_dim[static_cast<std::size_t>(k)];
  }
  Eigen::MatrixXd pts(d, total);
  for (Eigen::Index c = 0; c < total; ++c) {
    Eigen::Index rem = c;
    for (int k = d - 1; k >= 0; --k) {
      const Eigen::Index n = axes[static_cast<std::size_t>(k)].size();
      pts(k, c) = axes[static_cast<std::size_t>(k)][rem % n];
      rem /= n;
    }
  }
  return pts;
}

std::vector<int> default_eval_grid(const problems::ProblemSpec& problem) {
  if (problem.dim() == 1) return {2000};
  return std::vector<int>(static_cast<std::size_t>(problem.dim()), 256);
}

RunResult run(ansatz::AbPinnModel& model, const problems::ProblemSpec& problem, const TrainSchedule& schedule,
              const Progress& progress) {
  schedule.validate();
  keep_large_blocks_on_heap();
  RunResult result;
  const auto constraints = model.embedding().center_constraints(problem.bounds);
  Optimizer opt(schedule, constraints);
  opt.register_model(model, 0);
  Rng rng(schedule.seed ^ 0x9e3779b97f4a7c15ULL);

  const auto grid_dims = schedule.eval_grid.empty() ? default_eval_grid(problem) : schedule.eval_grid;
  const Eigen::MatrixXd eval_pts = eval_grid(problem, grid_dims);
  const bool has_reference = problem.analytic() || problem.grid != nullptr;
  auto l2_now = [&] {
    return has_reference ? relative_l2(model, problem, eval_pts) : L2Result{std::nan(""), false};
  };

  const long total = schedule.total_iters;
  const auto additions = schedule.addition_iters(model.subdomain_count());
  const std::set<long> addition_set(additions.begin(), additions.end());
  const bool has_windows = model.subdomain_count() > 0 || !additions.empty();
  const bool freezes = has_windows && schedule.freeze_iter < total && (schedule.lr_mu > 0 || schedule.lr_L > 0);

  std::set<long> record_at;
  for (long it = 0; it < total; it += schedule.record_every) record_at.insert(it);
  if (total > 0) record_at.insert(total - 1);
  for (long e : additions) {
    for (long it : {e - 1, e, e + 1}) {
      if (it >= 0 && it < total) record_at.insert(it);
    }
  }
  if (freezes) record_at.insert(schedule.freeze_iter);

  auto snapshot = [&](long it) { result.snapshots.push_back({it, model.window_set()}); };
  snapshot(0);

  const diff::Field field = model.as_field();
  for (long it = 0; it < total; ++it) {
    std::string event;
    if (addition_set.contains(it)) {
      const Eigen::VectorXd p = residual_proportional_sample(model, problem, schedule.pool_size, rng);
      if (add_subdomain(model, problem, *schedule.addition, p, rng)) {
        opt.register_model(model, it);
        event = "added_subdomain";
        snapshot(it);
      }
    }
    if (freezes && it == schedule.freeze_iter) {
      event += event.empty() ? "froze_windows" : ";froze_windows";
      snapshot(it);
    }

    const Eigen::MatrixXd pts = sample_collocation(problem, schedule.collocation_batch, rng);
    Tape tape;
    Var l;
    try {
      l = loss(tape, problem, field, pts);
    } catch (const DiagnosticError& e) {
      throw DiagnosticError("iteration " + std::to_string(it) + ": " + e.what() + "; parameter norms: " +
                            group_norms(model));
    }
    const double lv = l.scalar();
    if (!std::isfinite(lv)) {
      throw DiagnosticError("non-finite loss at iteration " + std::to_string(it) + "; parameter norms: " +
                            group_norms(model));
    }
    if (record_at.contains(it)) {
      TrainRecord rec{it, lv, l2_now().value, model.subdomain_count(), event};
      result.records.push_back(rec);
      if (progress) progress(rec);
    }
    for (const auto& ref : collect_groups(model)) ref.group->zero_grad();
    tape.backward(l);
    opt.step(model, it);
  }
  if (total > 0) snapshot(total);

  result.final_eval_residual = squared_residuals(model, problem, eval_pts).mean();
  result.final_l2 = l2_now();
  return result;
}

}  // namespace abpinn::trainer

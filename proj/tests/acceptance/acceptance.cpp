// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--only N]... [--allow-fail N]...
// Criterion 7 runs only with ABPINN_LONG=1 and reports SKIPPED otherwise.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abpinn/error.hpp"
#include "abpinn/experiment/experiment.hpp"
#include "abpinn/spectral/solver.hpp"
#include "abpinn/trainer/trainer.hpp"

using namespace abpinn;
using diff::Tape;
using diff::Var;
using problems::ProblemKind;

namespace {

constexpr double kPi = std::numbers::pi;

enum class Verdict { Pass, Fail, Skipped };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const ProblemKind kAllKinds[] = {ProblemKind::Chirp,         ProblemKind::SineWave,  ProblemKind::Advection,
                                 ProblemKind::Helmholtz,     ProblemKind::ForcedPoisson,
                                 ProblemKind::AllenCahn,     ProblemKind::Kdv};

/// Random model for `problem`: global net of random depth and width, K
/// subdomains with random windows of a random kind.
ansatz::AbPinnModel random_model(const problems::ProblemSpec& problem, int K, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> width(2, 16), depth(1, 3), kind(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto emb = problem.embedding();
  const int e = emb.embedded_dim();
  ansatz::AbPinnModel m(emb, problem.constraint, static_cast<windows::WindowKind>(kind(rng)));
  m.set_global(nets::Mlp::glorot({e, depth(rng), width(rng), 1}, rng, "global"));
  const auto constraints = emb.center_constraints(problem.bounds);
  for (int k = 0; k < K; ++k) {
    std::vector<double> raw;
    for (auto [lo, hi] : problem.bounds) raw.push_back(lo + (hi - lo) * u(rng));
    Eigen::VectorXd diag(e);
    for (int d = 0; d < e; ++d) diag[d] = 1.0 + 3.0 * u(rng);
    windows::WindowParams w(emb.embed(raw), diag, "w" + std::to_string(k));
    for (int i = 0; i < e; ++i) {
      for (int j = 0; j < i; ++j) w.L.values[windows::triangle_index(i, j)] = 0.5 * (u(rng) - 0.5);
    }
    windows::project_constraints(w, constraints);
    m.add_subdomain(std::move(w), nets::Mlp::glorot({e, depth(rng), width(rng), 1}, rng, "sub" + std::to_string(k)));
  }
  return m;
}

Outcome differentiation() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  const int K_choices[3] = {0, 1, 3};
  const double h = 1e-4;
  double worst_param = 0.0, worst_input = 0.0;
  std::size_t n_params = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto problem = problems::make_problem(kAllKinds[trial % 7]);
    auto model = random_model(problem, K_choices[trial % 3], rng);
    const Eigen::MatrixXd pts = trainer::sample_collocation(problem, 8, rng);
    const diff::Field field = model.as_field();
    auto loss_value = [&] {
      Tape tape;
      return trainer::loss(tape, problem, field, pts).scalar();
    };
    {
      Tape tape;
      tape.backward(trainer::loss(tape, problem, field, pts));
    }
    auto groups = trainer::collect_groups(model);
    double gmax = 0.0;
    for (const auto& g : groups) gmax = std::max(gmax, g.group->grads.cwiseAbs().maxCoeff());
    for (const auto& g : groups) {
      const Eigen::VectorXd grads = g.group->grads;
      for (Eigen::Index i = 0; i < g.group->size(); ++i) {
        const double keep = g.group->values[i];
        g.group->values[i] = keep + h;
        const double up = loss_value();
        g.group->values[i] = keep - h;
        const double dn = loss_value();
        g.group->values[i] = keep;
        const double fd = (up - dn) / (2 * h);
        const double denom = std::max({std::abs(grads[i]), std::abs(fd), 1e-3 * gmax});
        worst_param = std::max(worst_param, std::abs(grads[i] - fd) / denom);
        ++n_params;
      }
    }
    // input derivatives of the constrained field along each raw coordinate
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      for (int dir = 0; dir < problem.dim(); ++dir) {
        std::vector<double> x(pts.col(c).data(), pts.col(c).data() + pts.rows());
        const diff::Jet j = model.jet(x, dir, 3);
        auto xp = x, xm = x;
        xp[static_cast<std::size_t>(dir)] += h;
        xm[static_cast<std::size_t>(dir)] -= h;
        const diff::Jet jp = model.jet(xp, dir, 3), jm = model.jet(xm, dir, 3);
        for (int k = 1; k <= 3; ++k) {
          const double fd = (jp[k - 1] - jm[k - 1]) / (2 * h);
          worst_input = std::max(worst_input, std::abs(j[k] - fd) / (h * std::max(1.0, std::abs(fd))));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  // input derivatives: error bounded by a modest multiple of h
  const bool ok = worst_param < 1e-4 && worst_input < 10.0 && secs < 60.0;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("50 models, %zu parameters: max gradient rel err %.2e (< 1e-4); max input-derivative err %.2e h "
              "(< 10 h); %.1f s (< 60 s)",
              n_params, worst_param, worst_input, secs)};
}

double residual_at(const problems::ProblemSpec& p, const diff::Field& f, const std::vector<double>& x) {
  return problems::residual(p, f, x);
}

std::vector<double> interior_point(const problems::ProblemSpec& p, std::mt19937_64& rng) {
  std::vector<double> x;
  for (auto [lo, hi] : p.bounds) {
    std::uniform_real_distribution<double> u(lo, hi);
    double v = u(rng);
    while (v == lo) v = u(rng);
    x.push_back(v);
  }
  return x;
}

Outcome analytic_residuals() {
  std::mt19937_64 rng(42);
  struct Case {
    ProblemKind kind;
    std::function<diff::Field(const problems::ProblemParams&)> solution;
  };
  const Case cases[] = {
      {ProblemKind::Chirp,
       [](const problems::ProblemParams& P) -> diff::Field {
         const double w = P.omega;
         const int p = static_cast<int>(P.p);
         return [w, p](Tape&, std::span<const Var> x) { return sin(2 * kPi * w * pow(x[0], p)); };
       }},
      {ProblemKind::Advection,
       [](const problems::ProblemParams& P) -> diff::Field {
         const double c = P.c;
         return [c](Tape&, std::span<const Var> x) { return sin(kPi * (x[1] - c * x[0])); };
       }},
      {ProblemKind::Helmholtz,
       [](const problems::ProblemParams& P) -> diff::Field {
         const double a = P.a, b = P.b;
         return [a, b](Tape&, std::span<const Var> x) { return sin(a * kPi * x[0]) * sin(b * kPi * x[1]); };
       }},
      {ProblemKind::ForcedPoisson,
       [](const problems::ProblemParams& P) -> diff::Field {
         const auto centers = P.centers;
         const double s2 = P.sigma * P.sigma;
         return [centers, s2](Tape& t, std::span<const Var> x) {
           Var s = t.constant(0.0) * x[0];
           for (auto [cx, cy] : centers) s = s + exp(-(square(x[0] - cx) + square(x[1] - cy)) / (2 * s2));
           return s;
         };
       }},
  };
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    const auto p = problems::make_problem(c.kind);
    const auto f = c.solution(p.params);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) worst = std::max(worst, std::abs(residual_at(p, f, interior_point(p, rng))));
    ok = ok && worst < 1e-8;
    detail += fmt("%s%s %.1e", detail.empty() ? "" : ", ", std::string(problems::problem_kind_name(c.kind)).c_str(),
                  worst);
  }
  return {ok ? Verdict::Pass : Verdict::Fail, "max |residual| (< 1e-8): " + detail};
}

Outcome hard_constraints() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0, worst_periodic = 0.0;
  auto model_for = [&](ProblemKind k) { return random_model(problems::make_problem(k), 3, rng); };

  {
    const auto m = model_for(ProblemKind::Chirp);
    const double one[1] = {1.0};
    for (int i = 0; i < 1000; ++i) worst = std::max(worst, std::abs(m.value(one)));
  }
  struct Initial {
    ProblemKind kind;
    std::function<double(double)> u0;
  };
  const Initial initial[] = {
      {ProblemKind::Advection, [](double x) { return std::sin(kPi * x); }},
      {ProblemKind::AllenCahn, [](double x) { return x * x * std::cos(kPi * x); }},
      {ProblemKind::Kdv, [](double x) { return std::cos(kPi * x); }},
  };
  for (const auto& ic : initial) {
    const auto m = model_for(ic.kind);
    for (int i = 0; i < 1000; ++i) {
      const double x = -1.0 + 2.0 * u(rng);
      const double p[2] = {0.0, x};
      worst = std::max(worst, std::abs(m.value(p) - ic.u0(x)));
    }
  }
  for (ProblemKind k : {ProblemKind::Helmholtz, ProblemKind::ForcedPoisson}) {
    const auto m = model_for(k);
    for (int i = 0; i < 1000; ++i) {
      const double s = -1.0 + 2.0 * u(rng);
      const double side = (i % 2) ? 1.0 : -1.0;
      const double p[2] = {i % 4 < 2 ? side : s, i % 4 < 2 ? s : side};
      worst = std::max(worst, std::abs(m.value(p)));
    }
  }
  for (ProblemKind k : {ProblemKind::Advection, ProblemKind::AllenCahn, ProblemKind::Kdv}) {
    const auto m = model_for(k);
    for (int i = 0; i < 100; ++i) {
      const double t = u(rng);
      worst_periodic = std::max(worst_periodic, ansatz::field_periodicity_check(m, t, 0));
      worst_periodic = std::max(worst_periodic, ansatz::field_periodicity_check(m, t, 1));
    }
  }
  const bool ok = worst < 1e-12 && worst_periodic < 1e-12;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("max boundary/initial violation %.1e over 6 operators x 1000 points; max periodicity gap (value and "
              "d/dx) %.1e (< 1e-12)",
              worst, worst_periodic)};
}

Outcome sampler() {
  // Zero network on u' = f with f = 2 pi cos(2 pi x): squared residuals at
  // x = 1/6, 1/12, 1/4, 1/2 are proportional to 1, 3, 0, 4.
  problems::ProblemParams params;
  params.omega = 1.0;
  params.p = 1.0;
  const auto problem = problems::make_problem(ProblemKind::Chirp, params);
  ansatz::AbPinnModel model(problem.embedding(), problem.constraint, windows::WindowKind::Gauss1);
  model.set_global(nets::Mlp(nets::MlpConfig{1, 1, 4, 1}, "global"));
  Eigen::MatrixXd pool(1, 4);
  pool << 1.0 / 6, 1.0 / 12, 0.25, 0.5;
  trainer::Rng rng(99);
  int counts[4] = {0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[trainer::residual_proportional_sample(model, problem, pool, rng)];
  const double want[4] = {0.125, 0.375, 0.0, 0.5};
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(counts[k] / double(n) - want[k]));
  return {worst <= 0.02 ? Verdict::Pass : Verdict::Fail,
          fmt("frequencies (%.4f, %.4f, %.4f, %.4f), max deviation %.4f (<= 0.02)", counts[0] / double(n),
              counts[1] / double(n), counts[2] / double(n), counts[3] / double(n), worst)};
}

Outcome spectral_convergence() {
  auto compare = [](spectral::SpectralProblem p, double* drift) {
    auto coarse = spectral::SpectralConfig::defaults(p);
    auto fine = coarse;
    fine.n_modes = 2 * coarse.n_modes;
    fine.dt = coarse.dt / 2;
    const auto a = spectral::solve(coarse);
    const auto b = spectral::solve(fine);
    double num = 0.0, den = 0.0;
    for (Eigen::Index t = 0; t < a.values.rows(); ++t) {
      for (Eigen::Index j = 0; j < a.values.cols(); ++j) {
        const double d = a.values(t, j) - b.values(t, 2 * j);
        num += d * d;
        den += b.values(t, 2 * j) * b.values(t, 2 * j);
      }
    }
    if (drift) {
      *drift = 0.0;
      for (const auto* g : {&a, &b}) {
        const double m0 = spectral::kdv_mass(*g, 0);
        for (Eigen::Index t = 0; t < g->values.rows(); ++t) {
          *drift = std::max(*drift, std::abs(spectral::kdv_mass(*g, t) - m0));
        }
      }
    }
    return std::sqrt(num / den);
  };
  double drift = 0.0;
  const double ac = compare(spectral::SpectralProblem::AllenCahn, nullptr);
  const double kdv = compare(spectral::SpectralProblem::Kdv, &drift);
  const bool ok = ac < 1e-6 && kdv < 1e-6 && drift < 1e-8;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("512 vs 1024 modes, relative L2 (< 1e-6): allen_cahn %.2e, kdv %.2e; kdv mean drift %.1e (< 1e-8)", ac,
              kdv, drift)};
}

struct SeedRun {
  std::uint64_t seed;
  double residual;
  double l2;
};

/// Best seed by final evaluation-grid residual.
SeedRun best_of(const experiment::ExperimentConfig& config) {
  const auto problem = experiment::prepare_problem(config);
  SeedRun best{0, INFINITY, INFINITY};
  for (auto seed : config.seeds) {
    auto model = experiment::build_model(config, seed);
    try {
      const auto r = trainer::run(model, problem, experiment::make_schedule(config, seed));
      std::printf("    %s seed %llu: residual %.3e, relative L2 %.3e\n",
                  std::string(experiment::mode_name(config.model.mode)).c_str(),
                  static_cast<unsigned long long>(seed), r.final_eval_residual, r.final_l2.value);
      std::fflush(stdout);
      if (r.final_eval_residual < best.residual) best = {seed, r.final_eval_residual, r.final_l2.value};
    } catch (const DiagnosticError& e) {
      std::printf("    seed %llu failed: %s\n", static_cast<unsigned long long>(seed), e.what());
    }
  }
  return best;
}

Outcome desk_chirp() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string common =
      "[problem]\nname = chirp\nomega = 5\np = 9\nbounds = -1, 1\n"
      "[train]\niterations = 20000\nbatch = 2000\nlr_net = 1e-3\nseeds = 0, 1, 2\n";
  const auto ab = experiment::parse_config(common +
                                           "freeze_iter = 10000\nlr_mu = 1e-3\nlr_L = 1e-3\n"
                                           "[model]\nmode = abpinn\nglobal_layers = 2\nglobal_width = 12\n"
                                           "subnet_layers = 2\nsubnet_width = 10\nsubdomains = 6\ninit_L = 6\n");
  const auto fb = experiment::parse_config(common +
                                           "[model]\nmode = fbpinn\nsubnet_layers = 2\nsubnet_width = 10\n"
                                           "subdomains = 6\ninit_L = 6\n");
  const auto a = best_of(ab);
  const auto f = best_of(fb);
  const double secs = seconds_since(t0);
  const bool ok = a.l2 < 5e-2 && a.residual < f.residual && secs <= 900.0;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("best of 3 seeds: AB-PINN L2 %.3e (< 5e-2), residual %.3e < FBPINN residual %.3e; %.0f s (<= 900 s)",
              a.l2, a.residual, f.residual, secs)};
}

Outcome table_ordering() {
  const char* flag = std::getenv("ABPINN_LONG");
  if (!flag || std::string(flag) != "1") return {Verdict::Skipped, "long suite; set ABPINN_LONG=1 to run"};
  const std::string dir = ABPINN_SOURCE_DIR "/configs/";
  const auto a = best_of(experiment::load_config(dir + "chirp.ini"));
  const auto f = best_of(experiment::load_config(dir + "chirp-fbpinn.ini"));
  const auto p = best_of(experiment::load_config(dir + "chirp-pinn.ini"));
  const bool ok = a.l2 < f.l2 && a.l2 < p.l2 && a.l2 < 5.5e-2;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("best of 5 seeds, relative L2: AB-PINN %.3e, FBPINN %.3e, PINN %.3e (AB-PINN lowest and < 5.5e-2)", a.l2,
              f.l2, p.l2)};
}

Outcome addition_dynamics() {
  const auto t0 = std::chrono::steady_clock::now();
  auto config = experiment::parse_config(
      "[problem]\nname = allen_cahn\n"
      "[model]\nmode = abpinn_plus\nglobal_layers = 4\nglobal_width = 10\nsubdomains = 0\n"
      "[addition]\nstart = 100000\nperiod = 4000\nmax_subdomains = 5\ninit_L = 1.5, 0.75, 0.75\n"
      "subnet_layers = 4\nsubnet_width = 10\n"
      "[train]\niterations = 140000\nfreeze_iter = 130000\nbatch = 1000\nlr_net = 1e-3\nlr_mu = 1e-3\nlr_L = 1e-2\n"
      "record_every = 500\neval_grid = 64, 64\n");
  config.output_dir = std::filesystem::temp_directory_path() / "abpinn_acceptance";
  const auto problem = experiment::prepare_problem(config);
  auto model = experiment::build_model(config, 0);
  const auto schedule = experiment::make_schedule(config, 0);
  const auto run = trainer::run(model, problem, schedule);

  auto loss_at = [&](long it) {
    for (const auto& r : run.records) {
      if (r.iter == it) return r.residual_loss;
    }
    throw StateError("no record at iteration " + std::to_string(it));
  };
  const auto events = schedule.addition_iters(0);
  int spikes = 0;
  std::string detail;
  for (long e : events) {
    const double before = loss_at(e - 1), after = loss_at(e + 1);
    spikes += after > before;
    detail += fmt("%s%ld: %.2e -> %.2e", detail.empty() ? "" : ", ", e, before, after);
  }
  const double pre = loss_at(events.front() - 1);
  const double final_loss = run.records.back().residual_loss;
  const double secs = seconds_since(t0);
  const bool ok = events.size() == 5 && spikes >= 4 && final_loss < pre && secs <= 3600.0;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("%d of %zu additions spike (>= 4) [", spikes, events.size()) + detail +
              fmt("]; final loss %.3e < pre-addition %.3e; L2 %.3e; %.0f s (<= 3600 s)", final_loss, pre,
                  run.final_l2.value, secs)};
}

Outcome degeneracy() {
  const std::string base =
      "[problem]\nname = chirp\nomega = 2\np = 3\n"
      "[train]\niterations = 400\nbatch = 128\nrecord_every = 25\neval_grid = 201\n";
  const auto problem = problems::make_problem(ProblemKind::Chirp, experiment::parse_config(base).problem.params);
  auto train = [&](const experiment::ExperimentConfig& c, std::uint64_t seed) {
    auto model = experiment::build_model(c, seed);
    return trainer::run(model, experiment::make_problem_spec(c), experiment::make_schedule(c, seed));
  };
  bool records_equal = true;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto pinn = train(experiment::parse_config(base + "[model]\nmode = pinn\n"), seed);
    const auto k0 = train(experiment::parse_config(base + "[model]\nmode = abpinn\nsubdomains = 0\n"), seed);
    records_equal = records_equal && pinn.records == k0.records && !pinn.records.empty();
  }
  const auto fb = train(experiment::parse_config(base + "[model]\nmode = fbpinn\nsubdomains = 6\n"), 3);
  bool windows_fixed = fb.snapshots.size() >= 2;
  for (const auto& snap : fb.snapshots) {
    for (std::size_t i = 0; i < snap.windows.size(); ++i) {
      const auto& w0 = fb.snapshots.front().windows[i];
      windows_fixed = windows_fixed && snap.windows[i].mu.values == w0.mu.values &&
                      snap.windows[i].L.values == w0.L.values;
    }
  }
  (void)problem;
  return {records_equal && windows_fixed ? Verdict::Pass : Verdict::Fail,
          fmt("K=0 abpinn records bit-identical to pinn over 3 seeds: %s; fbpinn windows unchanged across %zu "
              "snapshots: %s",
              records_equal ? "yes" : "no", fb.snapshots.size(), windows_fixed ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only, allow_fail;
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));
  app.add_option("--allow-fail", allow_fail, "Criteria whose FAIL does not affect the exit status")
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"differentiation correctness", differentiation},
      {"analytic residual oracles", analytic_residuals},
      {"hard constraints", hard_constraints},
      {"residual-proportional sampler", sampler},
      {"spectral self-convergence", spectral_convergence},
      {"desk-scale chirp", desk_chirp},
      {"chirp error ordering (long)", table_ordering},
      {"subdomain addition dynamics", addition_dynamics},
      {"degeneracy equivalences", degeneracy},
  };
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> tolerated(allow_fail.begin(), allow_fail.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = out.verdict == Verdict::Pass ? "PASS" : out.verdict == Verdict::Fail ? "FAIL" : "SKIPPED";
    const bool tolerated_fail = out.verdict == Verdict::Fail && tolerated.contains(id);
    std::printf("[%s] %d %s: %s%s\n", tag, id, criteria[i].first, out.detail.c_str(),
                tolerated_fail ? " (known limitation, see README)" : "");
    std::fflush(stdout);
    if (out.verdict == Verdict::Fail && !tolerated_fail) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"

#include "abpinn/error.hpp"
#include "abpinn/experiment/experiment.hpp"
#include "abpinn/io/csv.hpp"

using namespace abpinn;
using namespace abpinn::experiment;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("abpinn_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig tiny_chirp(Mode mode, const fs::path& out) {
  auto c = parse_config(
      "[problem]\nname = chirp\nomega = 0.5\np = 1\n"
      "[model]\nmode = " +
      std::string(mode_name(mode)) +
      "\nglobal_width = 6\nsubnet_width = 4\n"
      "[train]\niterations = 60\nbatch = 32\nrecord_every = 20\neval_grid = 51\nseeds = 1, 2\n");
  c.output_dir = out;
  return c;
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const auto c = parse_config("[problem]\nname = chirp\n");
  CHECK(c.problem.params.omega == 10.0);
  CHECK(c.problem.params.p == 10.0);
  CHECK(c.train.lr_net == 1e-3);
  CHECK(c.seeds == std::vector<std::uint64_t>{0});
  CHECK(c.model.mode == Mode::Abpinn);
  CHECK(c.model.subdomains == 6);
  CHECK(c.problem.constraint == ansatz::ConstraintKind::ChirpRight);
  CHECK(c.output_dir == fs::path("runs/chirp"));

  const auto s = parse_config("[problem]\nname = sine\n");
  CHECK(s.problem.params.omega == 20.0);
  CHECK(s.problem.params.p == 1.0);
}

TEST_CASE("strict parsing names the offending key") {
  CHECK(error_of("[problem]\nname = chirp\nomgea = 3\n").find("omgea") != std::string::npos);
  CHECK(error_of("[problem]\nname = chirp\n[model]\nwidth = 3\n").find("width") != std::string::npos);
  CHECK(error_of("[problem]\nname = chirp\n[solver]\n").find("solver") != std::string::npos);
  CHECK(error_of("[problem]\nname = chirp\n[train]\nbatch = ten\n").find("train.batch") != std::string::npos);
  CHECK(error_of("[problem]\nname = chirp\n[train]\niterations = 1.5\n").find("train.iterations") !=
        std::string::npos);
  CHECK(error_of("[problem]\nname = helmholtz\nomega = 3\n").find("omega") != std::string::npos);
  CHECK(error_of("[model]\nmode = pinn\n").find("problem.name") != std::string::npos);
  CHECK(error_of("[problem]\nname = chirp\nname = sine\n").find("name") != std::string::npos);
  CHECK(error_of("[problem]\nname = advection\nbounds = 0, 1, 0, 1\n").find("problem.bounds") != std::string::npos);
}

TEST_CASE("mode rules") {
  const std::string base = "[problem]\nname = chirp\n";
  CHECK(error_of(base + "[model]\nmode = fbpinn\n[addition]\nperiod = 10\n").find("addition") != std::string::npos);
  CHECK(error_of(base + "[model]\nmode = abpinn\n[addition]\nperiod = 10\n").find("addition") != std::string::npos);
  CHECK(error_of(base + "[model]\nmode = abpinn_plus\n").find("addition") != std::string::npos);
  CHECK(error_of(base + "[model]\nmode = fbpinn\n[train]\nlr_mu = 0.001\n").find("train.lr_mu") !=
        std::string::npos);
  CHECK(error_of(base + "[model]\nmode = pinn\nsubdomains = 3\n").find("model.subdomains") != std::string::npos);
  CHECK(error_of("[problem]\nname = helmholtz\n[model]\nsubdomains = 4\n").find("model.layout") !=
        std::string::npos);
  CHECK(error_of("[problem]\nname = helmholtz\n[model]\nsubdomains = 6\nlayout = grid\n").find("model.subdomains") !=
        std::string::npos);
  CHECK(error_of("[problem]\nname = helmholtz\n[model]\nsubdomains = 2\nlayout = explicit\ncenters = 0, 0\n")
            .find("model.centers") != std::string::npos);

  const auto fb = parse_config(base + "[model]\nmode = fbpinn\n");
  CHECK(fb.train.lr_mu == 0.0);
  CHECK(fb.train.lr_L == 0.0);
  const auto pinn = parse_config(base + "[model]\nmode = pinn\n");
  CHECK(pinn.model.subdomains == 0);
}

TEST_CASE("serialize round-trips") {
  const char* texts[] = {
      "[problem]\nname = chirp\n",
      "[problem]\nname = poisson\nsigma = 0.05\ncenters = 0.1, 0.2, -0.3, 0.4\n"
      "[model]\nmode = abpinn_plus\nsubdomains = 0\n[addition]\nstart = 5000\nperiod = 5000\nmax_subdomains = 9\n"
      "init_L = 5\n[train]\niterations = 1e5\nfreeze_iter = 7e4\nlr_L = 5e-3\nseeds = 3, 1, 4\neval_grid = 64, 32\n",
      "[experiment]\nname = kdv-test\noutput_dir = /tmp/x y\n[problem]\nname = kdv\n"
      "[reference]\npath = refs/kdv.csv\nn_modes = 256\ndt = 2e-5\n",
      "[problem]\nname = helmholtz\n[model]\nsubdomains = 6\nlayout = grid\ngrid = 3, 2\ninit_L = 3, 2.5\n"
      "layout_bounds = -0.5, 0.5, -1, 1\nwindow = psi3\n",
      "[problem]\nname = advection\n[model]\nsubdomains = 2\nlayout = explicit\ncenters = 0.1, 0.9, 0.3, -0.2\n",
  };
  for (const char* t : texts) {
    const auto c = parse_config(t);
    const auto again = parse_config(serialize(c));
    CHECK(again == c);
    CHECK(serialize(again) == serialize(c));
  }
}

TEST_CASE("shipped configs load and round-trip") {
  const fs::path dir = fs::path(ABPINN_SOURCE_DIR) / "configs";
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path());
    CHECK(parse_config(serialize(c)) == c);
    names.insert(entry.path().stem().string());
  }
  for (const char* want : {"chirp", "sine", "chirp-window-study", "advection", "helmholtz-local",
                           "helmholtz-addition", "poisson", "allen-cahn", "kdv", "chirp-pinn", "chirp-fbpinn"}) {
    CHECK(names.count(want) == 1);
  }
}

TEST_CASE("initial center layouts") {
  auto lin = parse_config("[problem]\nname = chirp\n[model]\nsubdomains = 6\n");
  const auto c1 = initial_centers(lin);
  REQUIRE(c1.cols() == 6);
  for (int k = 0; k < 6; ++k) CHECK(c1(0, k) == doctest::Approx(0.2 * k));

  auto grid = parse_config("[problem]\nname = helmholtz\n[model]\nsubdomains = 16\nlayout = grid\n");
  const auto c2 = initial_centers(grid);
  REQUIRE(c2.cols() == 16);
  std::set<std::pair<double, double>> pts;
  for (int k = 0; k < 16; ++k) pts.insert({c2(0, k), c2(1, k)});
  for (double x : {-0.75, -0.25, 0.25, 0.75}) {
    for (double y : {-0.75, -0.25, 0.25, 0.75}) CHECK(pts.count({x, y}) == 1);
  }

  // periodic coordinate is embedded onto the circle
  auto adv = parse_config("[problem]\nname = advection\n[model]\nsubdomains = 1\nlayout = explicit\ncenters = 0.5, 0.5\n");
  const auto m = build_model(adv, 0);
  const auto& mu = m.subdomains()[0].window.mu.values;
  CHECK(mu[0] == doctest::Approx(0.5));
  CHECK(mu[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mu[2] == doctest::Approx(1.0));
}

TEST_CASE("models share initialisation across modes") {
  const std::string base = "[problem]\nname = chirp\n[model]\nglobal_width = 7\nsubnet_width = 5\nmode = ";
  const auto pinn = build_model(parse_config(base + "pinn\n"), 9);
  const auto ab0 = build_model(parse_config(base + "abpinn\nsubdomains = 0\n"), 9);
  const auto ab = build_model(parse_config(base + "abpinn\n"), 9);
  const auto fb = build_model(parse_config(base + "fbpinn\n"), 9);
  CHECK(pinn.global().flat() == ab0.global().flat());
  CHECK_FALSE(fb.has_global());
  REQUIRE(fb.subdomain_count() == ab.subdomain_count());
  for (std::size_t i = 0; i < fb.subdomain_count(); ++i) {
    CHECK(fb.subdomains()[i].net.flat() == ab.subdomains()[i].net.flat());
    CHECK(fb.subdomains()[i].window.mu.values == ab.subdomains()[i].window.mu.values);
    CHECK(fb.subdomains()[i].window.L.values == ab.subdomains()[i].window.L.values);
  }
}

TEST_CASE("run_experiment writes every artefact and is reproducible") {
  const auto dir_a = fresh_dir("run_a");
  const auto dir_b = fresh_dir("run_b");
  const auto ca = tiny_chirp(Mode::Abpinn, dir_a);
  const auto cb = tiny_chirp(Mode::Abpinn, dir_b);
  const auto ra = run_experiment(ca);
  run_experiment(cb);

  REQUIRE(ra.seeds.size() == 2);
  CHECK(ra.seeds[0].ok);
  CHECK(ra.seeds[1].ok);
  REQUIRE(ra.best.has_value());
  const auto other = 1 - *ra.best;
  CHECK(ra.seeds[*ra.best].final_residual <= ra.seeds[other].final_residual);

  for (const char* f : {"loss_history.csv", "solution.csv", "error.csv", "residual.csv", "windows.csv",
                        "envelope.csv"}) {
    for (const char* s : {"seed_1", "seed_2"}) {
      CAPTURE(f);
      REQUIRE(fs::exists(dir_a / s / f));
      CHECK(slurp(dir_a / s / f) == slurp(dir_b / s / f));
    }
  }
  CHECK(slurp(dir_a / "summary.csv") == slurp(dir_b / "summary.csv"));

  const auto hist = slurp(dir_a / "seed_1" / "loss_history.csv");
  CHECK(hist.rfind("iter,residual_loss,l2_error,subdomain_count,event\n", 0) == 0);
  CHECK(hist.find('\r') == std::string::npos);

  const auto sol = io::read_csv(dir_a / "seed_1" / "solution.csv", std::vector<std::string>{"x", "u"});
  CHECK(sol.rows.size() == 51);
  const auto win = io::read_csv(dir_a / "seed_1" / "windows.csv");
  CHECK(win.header == std::vector<std::string>{"kind", "iter", "index", "mu_0", "L_0"});
  CHECK(win.rows.size() == 12);  // 6 windows at iteration 0 and at the end
  const auto summary = io::read_csv(dir_a / "summary.csv");
  CHECK(summary.header.front() == "seed");
  CHECK(summary.rows[*ra.best][summary.column("selected")] == "1");
  CHECK(summary.rows[other][summary.column("selected")] == "0");
  CHECK(parse_config(slurp(dir_a / "config.ini")) == ca);
}

TEST_CASE("pinn envelope is zero and K = 0 abpinn matches pinn") {
  const auto dir_p = fresh_dir("pinn");
  const auto dir_k = fresh_dir("k0");
  auto cp = tiny_chirp(Mode::Pinn, dir_p);
  auto ck = tiny_chirp(Mode::Abpinn, dir_k);
  ck.model.subdomains = 0;
  run_experiment(cp);
  run_experiment(ck);
  const auto env = io::read_csv(dir_p / "seed_1" / "envelope.csv");
  for (double v : env.numeric_column("envelope")) CHECK(v == 0.0);
  CHECK(slurp(dir_p / "seed_1" / "loss_history.csv") == slurp(dir_k / "seed_1" / "loss_history.csv"));
}

TEST_CASE("a diverging seed is reported and the others still run") {
  const auto dir = fresh_dir("diverge");
  auto c = tiny_chirp(Mode::Abpinn, dir);
  c.train.lr_net = 1e200;
  const auto r = run_experiment(c);
  REQUIRE(r.seeds.size() == 2);
  CHECK_FALSE(r.seeds[0].ok);
  CHECK_FALSE(r.seeds[1].ok);
  CHECK(r.seeds[1].error.find("non-finite") != std::string::npos);
  CHECK_FALSE(r.best.has_value());
  const auto summary = io::read_csv(dir / "summary.csv");
  REQUIRE(summary.rows.size() == 2);
  CHECK(summary.rows[0][summary.column("status")] == "failed");
  CHECK(fs::exists(dir / "seed_2" / "loss_history.csv"));
}

TEST_CASE("window snapshots grow with additions") {
  const auto dir = fresh_dir("helmholtz_add");
  auto c = parse_config(
      "[problem]\nname = helmholtz\n[model]\nmode = abpinn_plus\nglobal_width = 4\n"
      "[addition]\nstart = 2\nperiod = 2\nmax_subdomains = 16\ninit_L = 3\nsubnet_width = 3\n"
      "[train]\niterations = 40\nbatch = 16\npool_size = 64\nrecord_every = 10\neval_grid = 6, 6\n");
  c.output_dir = dir;
  const auto r = run_experiment(c);
  REQUIRE(r.seeds.size() == 1);
  REQUIRE(r.seeds[0].ok);
  CHECK(r.seeds[0].subdomain_count == 16);
  const auto win = io::read_csv(dir / "seed_0" / "windows.csv");
  std::map<double, int> per_iter;
  for (const auto& row : win.rows) ++per_iter[io::parse_double(row[1], "iter")];
  CHECK(per_iter.count(0.0) == 0);
  int prev = 0;
  for (const auto& [it, n] : per_iter) {
    CHECK(n >= prev);
    prev = n;
  }
  CHECK(prev == 16);
  CHECK(per_iter.begin()->second == 1);
}

TEST_CASE("reference generation") {
  const auto dir = fresh_dir("reference");
  auto c = parse_config("[problem]\nname = allen_cahn\n");
  c.output_dir = dir;
  CHECK(generate_reference(c));
  const auto table = io::read_csv(dir / "reference.csv", std::vector<std::string>{"t", "x", "u"});
  CHECK(table.rows.size() == 101 * 512);
  const auto before = fs::last_write_time(dir / "reference.csv");
  CHECK_FALSE(generate_reference(c));
  CHECK(fs::last_write_time(dir / "reference.csv") == before);
  CHECK(generate_reference(c, true));

  c.reference.dt = 5e-5;
  CHECK_THROWS_AS(generate_reference(c), IoError);

  auto k = parse_config("[problem]\nname = kdv\n[reference]\ndt = 0.1\nsave_times = 11\n");
  k.output_dir = fresh_dir("reference_kdv");
  CHECK_THROWS_AS(generate_reference(k), DiagnosticError);
  CHECK_THROWS_AS(generate_reference(parse_config("[problem]\nname = chirp\n")), ConfigError);
}

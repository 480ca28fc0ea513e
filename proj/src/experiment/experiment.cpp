#include "abpinn/experiment/experiment.hpp"

#include <fstream>
#include <sstream>

#include "abpinn/error.hpp"
#include "abpinn/io/csv.hpp"
#include "abpinn/spectral/grid.hpp"

namespace abpinn::experiment {

namespace fs = std::filesystem;

namespace {

std::string meta_text(const spectral::SpectralConfig& s) {
  std::ostringstream o;
  o << "problem = " << spectral::spectral_problem_name(s.problem) << "\n";
  o << "n_modes = " << s.n_modes << "\n";
  o << "dt = " << io::format_double(s.dt) << "\n";
  o << "t_final = " << io::format_double(s.t_final) << "\n";
  o << "save_times = " << s.save_times << "\n";
  o << "contour_points = " << s.contour_points << "\n";
  if (s.problem == spectral::SpectralProblem::AllenCahn) {
    o << "diffusion = " << io::format_double(s.diffusion) << "\n";
    o << "reaction = " << io::format_double(s.reaction) << "\n";
  } else {
    o << "eta = " << io::format_double(s.eta) << "\n";
    o << "mu_disp = " << io::format_double(s.mu_disp) << "\n";
  }
  return o.str();
}

fs::path meta_path(const fs::path& grid) { return fs::path(grid.string() + ".meta"); }

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + p.string());
}

std::vector<std::string> with(std::vector<std::string> cols, std::initializer_list<std::string> extra) {
  cols.insert(cols.end(), extra);
  return cols;
}

void write_pointwise(const fs::path& path, const problems::ProblemSpec& problem, const Eigen::MatrixXd& pts,
                     const std::string& column, const Eigen::VectorXd& values) {
  const auto header = with(problem.coordinates, {column});
  io::CsvWriter w(path, header);
  std::vector<double> row(static_cast<std::size_t>(pts.rows()) + 1);
  for (Eigen::Index c = 0; c < pts.cols(); ++c) {
    for (Eigen::Index d = 0; d < pts.rows(); ++d) row[static_cast<std::size_t>(d)] = pts(d, c);
    row.back() = values[c];
    w.row(row);
  }
  w.close();
}

void write_history(const fs::path& path, const std::vector<trainer::TrainRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "iter,residual_loss,l2_error,subdomain_count,event\n";
  for (const auto& r : records) {
    out << r.iter << ',' << io::format_double(r.residual_loss) << ',' << io::format_double(r.l2_error) << ','
        << r.subdomain_count << ',' << r.event << '\n';
  }
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void write_windows(const fs::path& path, int dim, windows::WindowKind kind,
                   const std::vector<trainer::WindowSnapshot>& snapshots) {
  const auto cols = windows::snapshot_columns(dim);
  std::vector<std::string> header{cols[0], "iter", "index"};
  header.insert(header.end(), cols.begin() + 1, cols.end());
  io::CsvWriter w(path, header);
  const std::vector<std::string> text{std::string(windows::window_kind_name(kind))};
  for (const auto& snap : snapshots) {
    for (std::size_t i = 0; i < snap.windows.size(); ++i) {
      std::vector<double> row{static_cast<double>(snap.iter), static_cast<double>(i)};
      const auto vals = windows::snapshot_values(snap.windows[i]);
      row.insert(row.end(), vals.begin(), vals.end());
      w.row(text, row);
    }
  }
  w.close();
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ch == ',' ? ';' : ' ';
  }
  return s;
}

void write_summary(const fs::path& path, const ExperimentResult& result) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "seed,status,final_residual_loss,l2_error,subdomain_count,selected,message\n";
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    const auto& s = result.seeds[i];
    out << s.seed << ',' << (s.ok ? "ok" : "failed") << ',';
    if (s.ok) {
      out << io::format_double(s.final_residual) << ',' << io::format_double(s.l2.value);
    } else {
      out << "nan,nan";
    }
    out << ',' << s.subdomain_count << ',' << (result.best == i ? 1 : 0) << ',' << one_line(s.error) << '\n';
  }
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

SeedOutcome run_seed(const ExperimentConfig& config, const problems::ProblemSpec& problem, std::uint64_t seed,
                     const SeedProgress& progress) {
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.dir = config.output_dir / ("seed_" + std::to_string(seed));
  fs::create_directories(outcome.dir);

  auto model = build_model(config, seed);
  const auto schedule = make_schedule(config, seed);
  std::vector<trainer::TrainRecord> records;
  auto on_record = [&](const trainer::TrainRecord& r) {
    records.push_back(r);
    if (progress) progress(seed, r);
  };

  trainer::RunResult run;
  try {
    run = trainer::run(model, problem, schedule, on_record);
  } catch (const DiagnosticError& e) {
    outcome.error = e.what();
    outcome.subdomain_count = model.subdomain_count();
    write_history(outcome.dir / "loss_history.csv", records);
    return outcome;
  }

  write_history(outcome.dir / "loss_history.csv", run.records);

  const auto dims = schedule.eval_grid.empty() ? trainer::default_eval_grid(problem) : schedule.eval_grid;
  const Eigen::MatrixXd pts = trainer::eval_grid(problem, dims);
  const Eigen::VectorXd u = model.values(pts);
  const Eigen::VectorXd ref = problems::reference_solution(problem, pts);
  const Eigen::VectorXd res = trainer::pointwise_residual(model, problem, pts);
  const auto set = model.window_set();
  Eigen::VectorXd env(pts.cols());
  for (Eigen::Index c = 0; c < pts.cols(); ++c) {
    const Eigen::VectorXd e = model.embedding().embed(
        std::span<const double>(pts.col(c).data(), static_cast<std::size_t>(pts.rows())));
    env[c] = windows::envelope(set, model.window_kind(), std::span<const double>(e.data(), static_cast<std::size_t>(e.size())));
  }

  write_pointwise(outcome.dir / "solution.csv", problem, pts, "u", u);
  write_pointwise(outcome.dir / "error.csv", problem, pts, "abs_error", (u - ref).cwiseAbs());
  write_pointwise(outcome.dir / "residual.csv", problem, pts, "residual", res);
  write_pointwise(outcome.dir / "envelope.csv", problem, pts, "envelope", env);
  write_windows(outcome.dir / "windows.csv", model.embedding().embedded_dim(), model.window_kind(), run.snapshots);

  outcome.ok = true;
  outcome.final_residual = run.final_eval_residual;
  outcome.l2 = run.final_l2;
  outcome.subdomain_count = model.subdomain_count();
  return outcome;
}

}  // namespace

fs::path reference_path(const ExperimentConfig& config) {
  return config.reference.path.empty() ? config.output_dir / "reference.csv" : config.reference.path;
}

bool generate_reference(const ExperimentConfig& config, bool force) {
  const auto settings = make_spectral_config(config);
  const fs::path path = reference_path(config);
  const std::string meta = meta_text(settings);
  if (!force && fs::exists(path)) {
    const auto existing = read_file(meta_path(path));
    if (existing == meta) return false;
    throw IoError(path.string() + " exists with different or unknown solver settings; use --force to overwrite");
  }
  const auto grid = spectral::solve(settings);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  spectral::write_grid_csv(grid, path);
  write_file(meta_path(path), meta);
  return true;
}

problems::ProblemSpec prepare_problem(const ExperimentConfig& config) {
  auto problem = make_problem_spec(config);
  if (!problem.analytic()) {
    generate_reference(config, false);
    problem.grid = std::make_shared<const spectral::ReferenceGrid>(spectral::read_grid_csv(reference_path(config)));
  }
  return problem;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const SeedProgress& progress) {
  validate(config);
  fs::create_directories(config.output_dir);
  write_file(config.output_dir / "config.ini", serialize(config));
  const auto problem = prepare_problem(config);

  ExperimentResult result;
  for (std::uint64_t seed : config.seeds) {
    result.seeds.push_back(run_seed(config, problem, seed, progress));
    const auto& s = result.seeds.back();
    if (s.ok && (!result.best || s.final_residual < result.seeds[*result.best].final_residual)) {
      result.best = result.seeds.size() - 1;
    }
  }
  write_summary(config.output_dir / "summary.csv", result);
  return result;
}

}  // namespace abpinn::experiment

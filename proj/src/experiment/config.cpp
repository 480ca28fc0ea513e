#include "abpinn/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "abpinn/error.hpp"
#include "abpinn/io/csv.hpp"

namespace abpinn::experiment {

namespace {

using problems::ProblemKind;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool spectral_kind(ProblemKind k) { return k == ProblemKind::AllenCahn || k == ProblemKind::Kdv; }

/// Key/value store of one parsed file. Values are consumed by the builder;
/// whatever is left over is an unknown key.
class Sections {
 public:
  explicit Sections(std::string_view text) {
    std::string current;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
        current = trim(std::string_view(t).substr(1, t.size() - 2));
        if (!known_section(current)) throw ConfigError("unknown section [" + current + "]");
        if (!data_.emplace(current, std::map<std::string, std::string>{}).second) {
          throw ConfigError("duplicate section [" + current + "]");
        }
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
      }
      if (current.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
      std::string key = trim(std::string_view(t).substr(0, eq));
      std::string value = trim(std::string_view(t).substr(eq + 1));
      if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      if (!data_[current].emplace(key, value).second) {
        throw ConfigError("duplicate key '" + key + "' in [" + current + "]");
      }
    }
  }

  bool has_section(const std::string& s) const { return data_.count(s) != 0; }

  std::optional<std::string> take(const std::string& section, const std::string& key) {
    auto s = data_.find(section);
    if (s == data_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    std::string v = k->second;
    s->second.erase(k);
    return v;
  }

  void reject_leftovers() const {
    for (const auto& [section, keys] : data_) {
      if (!keys.empty()) {
        throw ConfigError("unknown key '" + keys.begin()->first + "' in [" + section + "]");
      }
    }
  }

 private:
  static bool known_section(const std::string& s) {
    static const std::set<std::string> known{"experiment", "problem", "model", "train", "addition", "reference"};
    return known.count(s) != 0;
  }

  std::map<std::string, std::map<std::string, std::string>> data_;
};

std::string key_name(const std::string& section, const std::string& key) { return section + "." + key; }

double to_double(const std::string& v, const std::string& key) {
  try {
    return io::parse_double(v, key);
  } catch (const IoError&) {
    throw ConfigError(key + ": '" + v + "' is not a finite number");
  }
}

long to_long(const std::string& v, const std::string& key) {
  const double d = to_double(v, key);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(key + ": '" + v + "' is not an integer");
  return static_cast<long>(d);
}

int to_int(const std::string& v, const std::string& key) {
  const long l = to_long(v, key);
  if (l > 2147483647L || l < -2147483647L) throw ConfigError(key + ": '" + v + "' is out of range");
  return static_cast<int>(l);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  if (!v.empty() && v.back() == ',') out.push_back({});
  return out;
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(item, key));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::vector<std::pair<double, double>> to_ranges(const std::string& v, const std::string& key) {
  const auto flat = to_doubles(v, key);
  if (flat.size() % 2 != 0) throw ConfigError(key + ": expected lo,hi pairs");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    if (!(flat[i] < flat[i + 1])) throw ConfigError(key + ": each range needs lo < hi");
    out.emplace_back(flat[i], flat[i + 1]);
  }
  return out;
}

template <typename T, typename Parse>
T wrap_enum(const std::string& v, const std::string& key, Parse parse) {
  try {
    return parse(v);
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + io::format_double(v[i]);
  return out;
}

template <typename I>
std::string join_int(const std::vector<I>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

std::string join_ranges(const std::vector<std::pair<double, double>>& v) {
  std::vector<double> flat;
  for (auto [lo, hi] : v) {
    flat.push_back(lo);
    flat.push_back(hi);
  }
  return join(flat);
}

/// Problem parameter keys used by each problem.
std::vector<std::string> param_keys(ProblemKind k) {
  switch (k) {
    case ProblemKind::Chirp:
    case ProblemKind::SineWave:
      return {"omega", "p"};
    case ProblemKind::Advection:
      return {"c"};
    case ProblemKind::Helmholtz:
      return {"k", "a", "b"};
    case ProblemKind::ForcedPoisson:
      return {"sigma", "centers"};
    case ProblemKind::AllenCahn:
      return {"diffusion", "reaction"};
    case ProblemKind::Kdv:
      return {"eta", "mu_disp"};
  }
  return {};
}

double* scalar_param(problems::ProblemParams& p, const std::string& key) {
  if (key == "omega") return &p.omega;
  if (key == "p") return &p.p;
  if (key == "c") return &p.c;
  if (key == "k") return &p.k;
  if (key == "a") return &p.a;
  if (key == "b") return &p.b;
  if (key == "sigma") return &p.sigma;
  if (key == "diffusion") return &p.diffusion;
  if (key == "reaction") return &p.reaction;
  if (key == "eta") return &p.eta;
  if (key == "mu_disp") return &p.mu_disp;
  return nullptr;
}

int raw_dim(const ExperimentConfig& c) { return static_cast<int>(c.problem.bounds.size()); }

int embedded_dim(const ExperimentConfig& c) {
  return make_problem_spec(c).embedding().embedded_dim();
}

void check_diag(const std::vector<double>& L, int e, const std::string& key) {
  if (L.size() != 1 && static_cast<int>(L.size()) != e) {
    throw ConfigError(key + ": expected 1 or " + std::to_string(e) + " entries");
  }
  for (double v : L) {
    if (!(v > 0)) throw ConfigError(key + ": entries must be positive");
  }
}

Eigen::VectorXd broadcast(const std::vector<double>& L, int e) {
  Eigen::VectorXd out(e);
  for (int i = 0; i < e; ++i) out[i] = L.size() == 1 ? L[0] : L[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

Mode parse_mode(std::string_view name) {
  for (auto m : {Mode::Pinn, Mode::Fbpinn, Mode::Abpinn, Mode::AbpinnPlus}) {
    if (mode_name(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::Pinn:
      return "pinn";
    case Mode::Fbpinn:
      return "fbpinn";
    case Mode::Abpinn:
      return "abpinn";
    case Mode::AbpinnPlus:
      return "abpinn_plus";
  }
  return "?";
}

Layout parse_layout(std::string_view name) {
  for (auto l : {Layout::Linear, Layout::Grid, Layout::Explicit}) {
    if (layout_name(l) == name) return l;
  }
  throw ConfigError("unknown layout '" + std::string(name) + "'");
}

std::string_view layout_name(Layout layout) {
  switch (layout) {
    case Layout::Linear:
      return "linear";
    case Layout::Grid:
      return "grid";
    case Layout::Explicit:
      return "explicit";
  }
  return "?";
}

ExperimentConfig parse_config(std::string_view text) {
  Sections s(text);
  ExperimentConfig c;

  auto take = [&](const std::string& section, const std::string& key) { return s.take(section, key); };
  auto require = [&](const std::string& section, const std::string& key) {
    auto v = s.take(section, key);
    if (!v) throw ConfigError("missing required key '" + key_name(section, key) + "'");
    return *v;
  };

  // [problem]
  const std::string pname = require("problem", "name");
  c.problem.kind = wrap_enum<ProblemKind>(pname, "problem.name", problems::parse_problem_kind);
  {
    const auto defaults = problems::make_problem(c.problem.kind);
    c.problem.params = defaults.params;
    c.problem.bounds = defaults.bounds;
    c.problem.constraint = defaults.constraint;
  }
  for (const auto& key : param_keys(c.problem.kind)) {
    auto v = take("problem", key);
    if (!v) continue;
    const std::string kn = key_name("problem", key);
    if (key == "centers") {
      const auto flat = to_doubles(*v, kn);
      if (flat.size() % 2 != 0) throw ConfigError(kn + ": expected x,y pairs");
      c.problem.params.centers.clear();
      for (std::size_t i = 0; i < flat.size(); i += 2) c.problem.params.centers.emplace_back(flat[i], flat[i + 1]);
    } else {
      *scalar_param(c.problem.params, key) = to_double(*v, kn);
    }
  }
  if (auto v = take("problem", "bounds")) {
    auto b = to_ranges(*v, "problem.bounds");
    if (b.size() != c.problem.bounds.size()) {
      throw ConfigError("problem.bounds: expected " + std::to_string(c.problem.bounds.size()) + " ranges");
    }
    c.problem.bounds = std::move(b);
  }
  if (auto v = take("problem", "constraint")) {
    c.problem.constraint = wrap_enum<ansatz::ConstraintKind>(*v, "problem.constraint", ansatz::parse_constraint_kind);
  }

  // [experiment]
  c.name = take("experiment", "name").value_or(pname);
  if (c.name.empty()) throw ConfigError("experiment.name: must not be empty");
  c.output_dir = take("experiment", "output_dir").value_or("runs/" + c.name);

  // [model]
  if (auto v = take("model", "mode")) c.model.mode = wrap_enum<Mode>(*v, "model.mode", parse_mode);
  if (c.problem.bounds.size() == 1 && c.model.mode != Mode::Pinn) c.model.subdomains = 6;
  if (auto v = take("model", "window")) {
    c.model.window = wrap_enum<windows::WindowKind>(*v, "model.window", windows::parse_window_kind);
  }
  auto int_key = [&](const std::string& section, const std::string& key, int& dst) {
    if (auto v = take(section, key)) dst = to_int(*v, key_name(section, key));
  };
  auto long_key = [&](const std::string& section, const std::string& key, long& dst) {
    if (auto v = take(section, key)) dst = to_long(*v, key_name(section, key));
  };
  auto double_key = [&](const std::string& section, const std::string& key, double& dst) {
    if (auto v = take(section, key)) dst = to_double(*v, key_name(section, key));
  };
  int_key("model", "global_layers", c.model.global_layers);
  int_key("model", "global_width", c.model.global_width);
  int_key("model", "subnet_layers", c.model.subnet_layers);
  int_key("model", "subnet_width", c.model.subnet_width);
  int_key("model", "subdomains", c.model.subdomains);
  if (auto v = take("model", "layout")) c.model.layout = wrap_enum<Layout>(*v, "model.layout", parse_layout);
  if (auto v = take("model", "layout_bounds")) c.model.layout_bounds = to_ranges(*v, "model.layout_bounds");
  if (auto v = take("model", "grid")) {
    for (double d : to_doubles(*v, "model.grid")) c.model.grid.push_back(to_int(io::format_double(d), "model.grid"));
  }
  if (auto v = take("model", "centers")) c.model.centers = to_doubles(*v, "model.centers");
  if (auto v = take("model", "init_L")) c.model.init_L = to_doubles(*v, "model.init_L");

  // [train]
  c.train.collocation_batch = 2000;
  if (auto v = take("train", "iterations")) {
    c.train.total_iters = to_long(*v, "train.iterations");
    c.train.freeze_iter = c.train.total_iters;
  } else {
    c.train.total_iters = 150000;
    c.train.freeze_iter = 50000;
  }
  long_key("train", "freeze_iter", c.train.freeze_iter);
  int_key("train", "batch", c.train.collocation_batch);
  double_key("train", "lr_net", c.train.lr_net);
  c.train.lr_mu = c.model.mode == Mode::Fbpinn ? 0.0 : 1e-3;
  c.train.lr_L = c.model.mode == Mode::Fbpinn ? 0.0 : 1e-2;
  double_key("train", "lr_mu", c.train.lr_mu);
  double_key("train", "lr_L", c.train.lr_L);
  double_key("train", "decay_floor", c.train.decay_floor);
  int_key("train", "pool_size", c.train.pool_size);
  int_key("train", "record_every", c.train.record_every);
  if (auto v = take("train", "eval_grid")) {
    for (double d : to_doubles(*v, "train.eval_grid")) {
      c.train.eval_grid.push_back(to_int(io::format_double(d), "train.eval_grid"));
    }
  }
  if (auto v = take("train", "seeds")) {
    c.seeds.clear();
    for (double d : to_doubles(*v, "train.seeds")) {
      const long l = to_long(io::format_double(d), "train.seeds");
      if (l < 0) throw ConfigError("train.seeds: seeds must be non-negative");
      c.seeds.push_back(static_cast<std::uint64_t>(l));
    }
  }

  // [addition]
  if (s.has_section("addition")) {
    AdditionSection a;
    long_key("addition", "start", a.start);
    long_key("addition", "period", a.period);
    int_key("addition", "max_subdomains", a.max_subdomains);
    if (auto v = take("addition", "init_L")) a.init_L = to_doubles(*v, "addition.init_L");
    int_key("addition", "subnet_layers", a.subnet_layers);
    int_key("addition", "subnet_width", a.subnet_width);
    c.addition = a;
  }

  // [reference]
  if (s.has_section("reference")) {
    if (!spectral_kind(c.problem.kind)) {
      throw ConfigError("reference: problem " + pname + " has a closed-form solution");
    }
  }
  if (spectral_kind(c.problem.kind)) {
    const auto sp = spectral::SpectralConfig::defaults(c.problem.kind == ProblemKind::AllenCahn
                                                           ? spectral::SpectralProblem::AllenCahn
                                                           : spectral::SpectralProblem::Kdv);
    c.reference.n_modes = sp.n_modes;
    c.reference.dt = sp.dt;
    c.reference.save_times = sp.save_times;
    c.reference.contour_points = sp.contour_points;
    if (auto v = take("reference", "path")) c.reference.path = *v;
    int_key("reference", "n_modes", c.reference.n_modes);
    double_key("reference", "dt", c.reference.dt);
    int_key("reference", "save_times", c.reference.save_times);
    int_key("reference", "contour_points", c.reference.contour_points);
  }

  s.reject_leftovers();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(const ExperimentConfig& c) {
  const auto& m = c.model;
  const int e = embedded_dim(c);
  const int d = raw_dim(c);

  if (ansatz::constraint_raw_dim(c.problem.constraint) > d) {
    throw ConfigError("problem.constraint: " + std::string(ansatz::constraint_kind_name(c.problem.constraint)) +
                      " needs " + std::to_string(ansatz::constraint_raw_dim(c.problem.constraint)) + " coordinates");
  }
  if (m.mode != Mode::Fbpinn) {
    if (m.global_layers < 1) throw ConfigError("model.global_layers: must be at least 1");
    if (m.global_width < 1) throw ConfigError("model.global_width: must be at least 1");
  }
  if (m.subdomains < 0) throw ConfigError("model.subdomains: must be non-negative");
  if (m.mode == Mode::Pinn && m.subdomains != 0) throw ConfigError("model.subdomains: pinn mode has no subdomains");
  if (m.mode == Mode::Fbpinn && m.subdomains < 1) throw ConfigError("model.subdomains: fbpinn needs at least one");
  if (m.subdomains > 0) {
    if (m.subnet_layers < 1) throw ConfigError("model.subnet_layers: must be at least 1");
    if (m.subnet_width < 1) throw ConfigError("model.subnet_width: must be at least 1");
    check_diag(m.init_L, e, "model.init_L");
    if (!m.layout_bounds.empty() && static_cast<int>(m.layout_bounds.size()) != d) {
      throw ConfigError("model.layout_bounds: expected " + std::to_string(d) + " ranges");
    }
    switch (m.layout) {
      case Layout::Linear:
        if (d != 1) throw ConfigError("model.layout: linear layout needs a 1-D problem");
        break;
      case Layout::Grid: {
        if (!m.grid.empty()) {
          if (static_cast<int>(m.grid.size()) != d) {
            throw ConfigError("model.grid: expected " + std::to_string(d) + " counts");
          }
          long prod = 1;
          for (int n : m.grid) {
            if (n < 1) throw ConfigError("model.grid: counts must be positive");
            prod *= n;
          }
          if (prod != m.subdomains) throw ConfigError("model.grid: product must equal model.subdomains");
        } else {
          const long n = std::lround(std::pow(static_cast<double>(m.subdomains), 1.0 / d));
          long prod = 1;
          for (int i = 0; i < d; ++i) prod *= n;
          if (prod != m.subdomains) {
            throw ConfigError("model.subdomains: " + std::to_string(m.subdomains) +
                              " is not a perfect power; give model.grid");
          }
        }
        break;
      }
      case Layout::Explicit:
        if (static_cast<int>(m.centers.size()) != m.subdomains * d) {
          throw ConfigError("model.centers: expected " + std::to_string(m.subdomains * d) + " values");
        }
        break;
    }
  }
  if (m.layout != Layout::Explicit && !m.centers.empty()) {
    throw ConfigError("model.centers: only used by the explicit layout");
  }

  if (c.train.total_iters < 0) throw ConfigError("train.iterations: must be non-negative");
  if (c.train.freeze_iter < 0) throw ConfigError("train.freeze_iter: must be non-negative");
  if (c.train.collocation_batch < 1) throw ConfigError("train.batch: must be positive");
  if (!(c.train.lr_net >= 0)) throw ConfigError("train.lr_net: must be non-negative");
  if (!(c.train.lr_mu >= 0)) throw ConfigError("train.lr_mu: must be non-negative");
  if (!(c.train.lr_L >= 0)) throw ConfigError("train.lr_L: must be non-negative");
  if (m.mode == Mode::Fbpinn) {
    if (c.train.lr_mu != 0.0) throw ConfigError("train.lr_mu: fbpinn windows are fixed, rate must be 0");
    if (c.train.lr_L != 0.0) throw ConfigError("train.lr_L: fbpinn windows are fixed, rate must be 0");
  }
  if (!(c.train.decay_floor > 0 && c.train.decay_floor <= 1)) throw ConfigError("train.decay_floor: must lie in (0, 1]");
  if (c.train.pool_size < 1) throw ConfigError("train.pool_size: must be positive");
  if (c.train.record_every < 1) throw ConfigError("train.record_every: must be positive");
  if (!c.train.eval_grid.empty()) {
    if (static_cast<int>(c.train.eval_grid.size()) != d) {
      throw ConfigError("train.eval_grid: expected " + std::to_string(d) + " counts");
    }
    for (int n : c.train.eval_grid) {
      if (n < 2) throw ConfigError("train.eval_grid: counts must be at least 2");
    }
  }
  if (c.seeds.empty()) throw ConfigError("train.seeds: must not be empty");
  {
    std::set<std::uint64_t> unique(c.seeds.begin(), c.seeds.end());
    if (unique.size() != c.seeds.size()) throw ConfigError("train.seeds: duplicate seed");
  }
  if (c.train.addition) throw ConfigError("addition: set through the [addition] section");

  if (m.mode == Mode::AbpinnPlus && !c.addition) throw ConfigError("addition: abpinn_plus needs an [addition] section");
  if (m.mode != Mode::AbpinnPlus && c.addition) {
    throw ConfigError("addition: not allowed in " + std::string(mode_name(m.mode)) + " mode");
  }
  if (c.addition) {
    const auto& a = *c.addition;
    if (a.start < 0) throw ConfigError("addition.start: must be non-negative");
    if (a.period < 1) throw ConfigError("addition.period: must be positive");
    if (a.max_subdomains < m.subdomains) throw ConfigError("addition.max_subdomains: below model.subdomains");
    check_diag(a.init_L, e, "addition.init_L");
    if (a.subnet_layers < 1) throw ConfigError("addition.subnet_layers: must be at least 1");
    if (a.subnet_width < 1) throw ConfigError("addition.subnet_width: must be at least 1");
  }

  if (spectral_kind(c.problem.kind)) {
    try {
      make_spectral_config(c).validate();
    } catch (const ConfigError& err) {
      throw ConfigError(std::string("reference: ") + err.what());
    }
  }
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n";
  o << "name = " << c.name << "\n";
  o << "output_dir = " << c.output_dir.generic_string() << "\n";

  o << "\n[problem]\n";
  o << "name = " << problems::problem_kind_name(c.problem.kind) << "\n";
  auto params = c.problem.params;
  for (const auto& key : param_keys(c.problem.kind)) {
    if (key == "centers") {
      std::vector<double> flat;
      for (auto [x, y] : params.centers) {
        flat.push_back(x);
        flat.push_back(y);
      }
      o << "centers = " << join(flat) << "\n";
    } else {
      o << key << " = " << io::format_double(*scalar_param(params, key)) << "\n";
    }
  }
  o << "bounds = " << join_ranges(c.problem.bounds) << "\n";
  o << "constraint = " << ansatz::constraint_kind_name(c.problem.constraint) << "\n";

  const auto& m = c.model;
  o << "\n[model]\n";
  o << "mode = " << mode_name(m.mode) << "\n";
  o << "window = " << windows::window_kind_name(m.window) << "\n";
  o << "global_layers = " << m.global_layers << "\n";
  o << "global_width = " << m.global_width << "\n";
  o << "subnet_layers = " << m.subnet_layers << "\n";
  o << "subnet_width = " << m.subnet_width << "\n";
  o << "subdomains = " << m.subdomains << "\n";
  o << "layout = " << layout_name(m.layout) << "\n";
  if (!m.layout_bounds.empty()) o << "layout_bounds = " << join_ranges(m.layout_bounds) << "\n";
  if (!m.grid.empty()) o << "grid = " << join_int(m.grid) << "\n";
  if (!m.centers.empty()) o << "centers = " << join(m.centers) << "\n";
  o << "init_L = " << join(m.init_L) << "\n";

  const auto& t = c.train;
  o << "\n[train]\n";
  o << "iterations = " << t.total_iters << "\n";
  o << "freeze_iter = " << t.freeze_iter << "\n";
  o << "batch = " << t.collocation_batch << "\n";
  o << "lr_net = " << io::format_double(t.lr_net) << "\n";
  o << "lr_mu = " << io::format_double(t.lr_mu) << "\n";
  o << "lr_L = " << io::format_double(t.lr_L) << "\n";
  o << "decay_floor = " << io::format_double(t.decay_floor) << "\n";
  o << "pool_size = " << t.pool_size << "\n";
  o << "record_every = " << t.record_every << "\n";
  if (!t.eval_grid.empty()) o << "eval_grid = " << join_int(t.eval_grid) << "\n";
  o << "seeds = " << join_int(c.seeds) << "\n";

  if (c.addition) {
    const auto& a = *c.addition;
    o << "\n[addition]\n";
    o << "start = " << a.start << "\n";
    o << "period = " << a.period << "\n";
    o << "max_subdomains = " << a.max_subdomains << "\n";
    o << "init_L = " << join(a.init_L) << "\n";
    o << "subnet_layers = " << a.subnet_layers << "\n";
    o << "subnet_width = " << a.subnet_width << "\n";
  }

  if (spectral_kind(c.problem.kind)) {
    const auto& r = c.reference;
    o << "\n[reference]\n";
    if (!r.path.empty()) o << "path = " << r.path.generic_string() << "\n";
    o << "n_modes = " << r.n_modes << "\n";
    o << "dt = " << io::format_double(r.dt) << "\n";
    o << "save_times = " << r.save_times << "\n";
    o << "contour_points = " << r.contour_points << "\n";
  }
  return o.str();
}

problems::ProblemSpec make_problem_spec(const ExperimentConfig& config) {
  auto spec = problems::make_problem(config.problem.kind, config.problem.params);
  if (config.problem.bounds.size() != spec.bounds.size()) {
    throw ConfigError("problem.bounds: expected " + std::to_string(spec.bounds.size()) + " ranges");
  }
  for (int d : spec.periodic_dims) {
    if (config.problem.bounds[static_cast<std::size_t>(d)] != spec.bounds[static_cast<std::size_t>(d)]) {
      throw ConfigError("problem.bounds: periodic coordinate " + spec.coordinates[static_cast<std::size_t>(d)] +
                        " must stay on [-1, 1]");
    }
  }
  spec.bounds = config.problem.bounds;
  spec.constraint = config.problem.constraint;
  return spec;
}

Eigen::MatrixXd initial_centers(const ExperimentConfig& config) {
  const auto& m = config.model;
  const int d = raw_dim(config);
  const int K = m.subdomains;
  const auto& box = m.layout_bounds.empty() ? config.problem.bounds : m.layout_bounds;
  Eigen::MatrixXd out(d, K);
  if (K == 0) return out;
  switch (m.layout) {
    case Layout::Linear: {
      const auto [lo, hi] = box[0];
      for (int k = 0; k < K; ++k) out(0, k) = K == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (K - 1.0);
      break;
    }
    case Layout::Grid: {
      std::vector<int> n = m.grid;
      if (n.empty()) n.assign(static_cast<std::size_t>(d), static_cast<int>(std::lround(std::pow(K, 1.0 / d))));
      for (int k = 0; k < K; ++k) {
        int rem = k;
        for (int j = d - 1; j >= 0; --j) {
          const int nj = n[static_cast<std::size_t>(j)];
          const int idx = rem % nj;
          rem /= nj;
          const auto [lo, hi] = box[static_cast<std::size_t>(j)];
          out(j, k) = lo + (hi - lo) * (idx + 0.5) / nj;
        }
      }
      break;
    }
    case Layout::Explicit:
      for (int k = 0; k < K; ++k) {
        for (int j = 0; j < d; ++j) out(j, k) = m.centers[static_cast<std::size_t>(k * d + j)];
      }
      break;
  }
  return out;
}

ansatz::AbPinnModel build_model(const ExperimentConfig& config, std::uint64_t seed) {
  const auto problem = make_problem_spec(config);
  const auto emb = problem.embedding();
  const int e = emb.embedded_dim();
  const auto& m = config.model;
  ansatz::AbPinnModel model(emb, problem.constraint, m.window);
  std::mt19937_64 rng(seed);

  const Eigen::MatrixXd centers = initial_centers(config);
  const auto constraints = emb.center_constraints(problem.bounds);
  const Eigen::VectorXd L = broadcast(m.init_L, e);
  for (int k = 0; k < m.subdomains; ++k) {
    const Eigen::VectorXd raw = centers.col(k);
    const std::string tag = std::to_string(k);
    windows::WindowParams w(emb.embed(std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size()))), L,
                            "w" + tag);
    windows::project_constraints(w, constraints);
    const nets::MlpConfig cfg{e, m.subnet_layers, m.subnet_width, 1};
    model.add_subdomain(std::move(w), nets::Mlp::glorot(cfg, rng, "sub" + tag));
  }
  if (m.mode != Mode::Fbpinn) {
    const nets::MlpConfig cfg{e, m.global_layers, m.global_width, 1};
    model.set_global(nets::Mlp::glorot(cfg, rng, "global"));
  }
  return model;
}

trainer::TrainSchedule make_schedule(const ExperimentConfig& config, std::uint64_t seed) {
  trainer::TrainSchedule s = config.train;
  s.seed = seed;
  if (config.model.mode == Mode::Fbpinn) {
    s.lr_mu = 0.0;
    s.lr_L = 0.0;
  }
  if (config.addition) {
    const int e = embedded_dim(config);
    trainer::AdditionSchedule a;
    a.start_iter = config.addition->start;
    a.period = config.addition->period;
    a.max_subdomains = config.addition->max_subdomains;
    a.init_L = broadcast(config.addition->init_L, e);
    a.subnet = nets::MlpConfig{e, config.addition->subnet_layers, config.addition->subnet_width, 1};
    s.addition = a;
  }
  return s;
}

spectral::SpectralConfig make_spectral_config(const ExperimentConfig& config) {
  if (!spectral_kind(config.problem.kind)) {
    throw ConfigError("reference: problem " + std::string(problems::problem_kind_name(config.problem.kind)) +
                      " has a closed-form solution");
  }
  const auto which = config.problem.kind == ProblemKind::AllenCahn ? spectral::SpectralProblem::AllenCahn
                                                                   : spectral::SpectralProblem::Kdv;
  auto s = spectral::SpectralConfig::defaults(which);
  const auto& p = config.problem.params;
  s.diffusion = p.diffusion;
  s.reaction = p.reaction;
  s.eta = p.eta;
  s.mu_disp = p.mu_disp;
  s.n_modes = config.reference.n_modes;
  s.dt = config.reference.dt;
  s.save_times = config.reference.save_times;
  s.contour_points = config.reference.contour_points;
  const auto [t0, t1] = config.problem.bounds[0];
  if (t0 != 0.0) throw ConfigError("problem.bounds: spectral problems start at t = 0");
  s.t_final = t1;
  if (config.problem.bounds[1] != std::pair<double, double>{-1.0, 1.0}) {
    throw ConfigError("problem.bounds: spectral problems are periodic on x in [-1, 1]");
  }
  return s;
}

}  // namespace abpinn::experiment

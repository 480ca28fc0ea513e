// Command-line front end over the C API.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abpinn/abpinn.h"

namespace {

enum Exit { kOk = 0, kConfig = 2, kFailed = 3, kIo = 4, kOther = 5 };

int exit_code(abpinn_status s) {
  switch (s) {
    case ABPINN_OK:
      return kOk;
    case ABPINN_ERR_CONFIG:
      return kConfig;
    case ABPINN_ERR_DIAGNOSTIC:
      return kFailed;
    case ABPINN_ERR_IO:
      return kIo;
    default:
      return kOther;
  }
}

int report(abpinn_status s, const char* what) {
  std::fprintf(stderr, "abpinn: %s failed (%s): %s\n", what, abpinn_status_string(s), abpinn_last_error());
  return exit_code(s);
}

struct ConfigDeleter {
  void operator()(abpinn_config* c) const { abpinn_config_free(c); }
};
struct ResultDeleter {
  void operator()(abpinn_result* r) const { abpinn_result_free(r); }
};
using ConfigPtr = std::unique_ptr<abpinn_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<abpinn_result, ResultDeleter>;

std::string text_of(abpinn_status (*get)(const abpinn_config*, char*, size_t, size_t*), const abpinn_config* c) {
  size_t needed = 0;
  get(c, nullptr, 0, &needed);
  std::string out(needed, '\0');
  if (get(c, out.data(), out.size(), &needed) != ABPINN_OK) return {};
  out.resize(needed - 1);
  return out;
}

void print_progress(void*, uint64_t seed, long iter, double loss, double l2, size_t subdomains, const char* event) {
  if (iter % 1000 != 0 && event[0] == '\0') return;
  std::fprintf(stderr, "seed %llu  iter %7ld  loss %.6e  l2 %.6e  subdomains %zu%s%s\n",
               static_cast<unsigned long long>(seed), iter, loss, l2, subdomains, event[0] ? "  " : "", event);
}

int load(const std::string& path, const std::string& out_dir, ConfigPtr& config) {
  abpinn_config* raw = nullptr;
  const auto s = abpinn_config_load(path.c_str(), &raw);
  if (s != ABPINN_OK) return report(s, "loading config");
  config.reset(raw);
  if (!out_dir.empty()) {
    const auto o = abpinn_config_set_output_dir(config.get(), out_dir.c_str());
    if (o != ABPINN_OK) return report(o, "setting output directory");
  }
  return kOk;
}

int run(const std::string& path, const std::string& out_dir, const std::vector<uint64_t>& seeds) {
  ConfigPtr config;
  if (int rc = load(path, out_dir, config)) return rc;
  if (!seeds.empty()) {
    const auto s = abpinn_config_set_seeds(config.get(), seeds.data(), seeds.size());
    if (s != ABPINN_OK) return report(s, "setting seeds");
  }
  abpinn_result* raw = nullptr;
  const auto s = abpinn_run(config.get(), print_progress, nullptr, &raw);
  if (s != ABPINN_OK) return report(s, "run");
  ResultPtr result(raw);

  size_t n = 0;
  abpinn_result_seed_count(result.get(), &n);
  std::printf("%-8s %-7s %-24s %-24s %s\n", "seed", "status", "final_residual_loss", "l2_error", "subdomains");
  for (size_t i = 0; i < n; ++i) {
    abpinn_seed_summary sum{};
    abpinn_result_seed(result.get(), i, &sum);
    if (sum.ok) {
      std::printf("%-8llu %-7s %-24.17g %-24.17g %zu%s\n", static_cast<unsigned long long>(sum.seed), "ok",
                  sum.final_residual, sum.l2_error, sum.subdomain_count, sum.selected ? "  *" : "");
    } else {
      std::printf("%-8llu %-7s %s\n", static_cast<unsigned long long>(sum.seed), "failed",
                  abpinn_result_seed_error(result.get(), i));
    }
  }
  std::printf("outputs in %s\n", text_of(abpinn_config_output_dir, config.get()).c_str());
  size_t best = 0;
  if (abpinn_result_best(result.get(), &best) != ABPINN_OK) {
    std::fprintf(stderr, "abpinn: every seed failed\n");
    return kFailed;
  }
  return kOk;
}

int reference(const std::string& path, const std::string& out_dir, bool force) {
  ConfigPtr config;
  if (int rc = load(path, {}, config)) return rc;
  int needs = 0;
  if (auto s = abpinn_config_needs_reference(config.get(), &needs); s != ABPINN_OK) return report(s, "reference");
  if (!needs) {
    std::fprintf(stderr, "abpinn: this problem has a closed-form solution; no reference grid is needed\n");
    return kConfig;
  }
  if (!out_dir.empty()) {
    const std::string target = out_dir + "/reference.csv";
    abpinn_config_set_reference_path(config.get(), target.c_str());
  }
  int written = 0;
  const auto s = abpinn_reference_generate(config.get(), force ? 1 : 0, &written);
  if (s != ABPINN_OK) return report(s, "reference");
  const auto where = text_of(abpinn_config_reference_path, config.get());
  std::printf("%s %s\n", written ? "wrote" : "up to date:", where.c_str());
  return kOk;
}

int validate(const std::string& path) {
  ConfigPtr config;
  if (int rc = load(path, {}, config)) return rc;
  std::fputs(text_of(abpinn_config_serialize, config.get()).c_str(), stdout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-basis physics-informed networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed = 0;
  bool force = false;

  auto* run_cmd = app.add_subcommand("run", "Train one seed (the first configured seed unless --seed)");
  run_cmd->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Output directory (overrides the config)");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Seed to train");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train every configured seed and select the best");
  sweep_cmd->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", out_dir, "Output directory (overrides the config)");

  auto* ref_cmd = app.add_subcommand("reference", "Generate the spectral reference grid");
  ref_cmd->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  ref_cmd->add_option("--out", out_dir, "Directory for reference.csv (overrides the config)");
  ref_cmd->add_flag("--force", force, "Recompute even when an up-to-date grid exists");

  auto* val_cmd = app.add_subcommand("validate-config", "Check a config and print it with every default filled in");
  val_cmd->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    std::vector<uint64_t> seeds;
    if (seed_opt->count() > 0) {
      seeds.push_back(seed);
    } else {
      ConfigPtr config;
      if (int rc = load(config_path, {}, config)) return rc;
      size_t n = 0;
      abpinn_config_seed_count(config.get(), &n);
      std::vector<uint64_t> all(n);
      abpinn_config_seeds(config.get(), all.data(), n);
      seeds.push_back(all.front());
    }
    return run(config_path, out_dir, seeds);
  }
  if (sweep_cmd->parsed()) return run(config_path, out_dir, {});
  if (ref_cmd->parsed()) return reference(config_path, out_dir, force);
  if (val_cmd->parsed()) return validate(config_path);
  return kOther;
}

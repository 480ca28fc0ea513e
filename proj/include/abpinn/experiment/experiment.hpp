#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "abpinn/experiment/config.hpp"

namespace abpinn::experiment {

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  /// Failure message; empty on success.
  std::string error;
  /// Mean squared residual over the evaluation grid after training.
  double final_residual = 0.0;
  trainer::L2Result l2;
  std::size_t subdomain_count = 0;
  std::filesystem::path dir;
};

struct ExperimentResult {
  std::vector<SeedOutcome> seeds;
  /// Index into `seeds` of the successful run with the lowest final residual.
  std::optional<std::size_t> best;
};

using SeedProgress = std::function<void(std::uint64_t seed, const trainer::TrainRecord&)>;

/// Trains one model per seed and writes, under config.output_dir:
///   seed_<n>/loss_history.csv solution.csv error.csv residual.csv
///            windows.csv envelope.csv
///   summary.csv  config.ini
/// A seed that fails with a numerical error is reported in summary.csv and
/// the remaining seeds still run. Spectral problems load (or first generate)
/// their reference grid.
ExperimentResult run_experiment(const ExperimentConfig& config, const SeedProgress& progress = {});

/// Where the reference grid of a spectral problem lives: reference.path, or
/// output_dir/reference.csv.
std::filesystem::path reference_path(const ExperimentConfig& config);

/// Solves the spectral problem and writes the grid CSV with a `.meta` sidecar
/// describing the solver settings. An existing grid with matching settings is
/// kept unless `force`; one with different settings is an error unless
/// `force`. Returns true when a grid was written.
bool generate_reference(const ExperimentConfig& config, bool force = false);

/// Problem spec with the reference grid attached when the problem needs one,
/// generating it first when it is missing.
problems::ProblemSpec prepare_problem(const ExperimentConfig& config);

}  // namespace abpinn::experiment

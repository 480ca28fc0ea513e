#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abpinn/ansatz/model.hpp"
#include "abpinn/problems/problem.hpp"
#include "abpinn/spectral/solver.hpp"
#include "abpinn/trainer/trainer.hpp"

namespace abpinn::experiment {

enum class Mode { Pinn, Fbpinn, Abpinn, AbpinnPlus };

Mode parse_mode(std::string_view name);
std::string_view mode_name(Mode mode);

/// How the initial window centers are placed.
///   linear   K centers evenly spaced over [lo, hi], endpoints included (1-D)
///   grid     n per dimension, cell-centred, K = product of n
///   explicit centers listed in raw coordinates
enum class Layout { Linear, Grid, Explicit };

Layout parse_layout(std::string_view name);
std::string_view layout_name(Layout layout);

struct ProblemSection {
  problems::ProblemKind kind = problems::ProblemKind::Chirp;
  problems::ProblemParams params;
  std::vector<std::pair<double, double>> bounds;
  ansatz::ConstraintKind constraint = ansatz::ConstraintKind::Identity;

  bool operator==(const ProblemSection&) const = default;
};

struct ModelSection {
  Mode mode = Mode::Abpinn;
  windows::WindowKind window = windows::WindowKind::Gauss1;
  int global_layers = 2;
  int global_width = 12;
  int subnet_layers = 2;
  int subnet_width = 10;
  int subdomains = 0;
  Layout layout = Layout::Linear;
  /// Per raw dimension range used by the linear and grid layouts.
  std::vector<std::pair<double, double>> layout_bounds;
  std::vector<int> grid;
  /// Flattened raw coordinates, one point per subdomain.
  std::vector<double> centers;
  /// Diagonal of the initial factor; one value is broadcast.
  std::vector<double> init_L{6.0};

  bool operator==(const ModelSection&) const = default;
};

struct AdditionSection {
  long start = 0;
  long period = 1000;
  int max_subdomains = 1;
  std::vector<double> init_L{1.0};
  int subnet_layers = 2;
  int subnet_width = 10;

  bool operator==(const AdditionSection&) const = default;
};

struct ReferenceSection {
  std::filesystem::path path;
  int n_modes = 512;
  double dt = 0.0;
  int save_times = 101;
  int contour_points = 64;

  bool operator==(const ReferenceSection&) const = default;
};

struct ExperimentConfig {
  std::string name;
  ProblemSection problem;
  ModelSection model;
  trainer::TrainSchedule train;
  std::optional<AdditionSection> addition;
  ReferenceSection reference;
  std::filesystem::path output_dir;
  std::vector<std::uint64_t> seeds{0};

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the sectioned key = value format. Every error names the key or
/// line at fault. Relative paths are kept as written.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Writes every field explicitly; parse_config(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);

/// Cross-field checks, also run by parse_config.
void validate(const ExperimentConfig& config);

/// Problem description with the configured parameters and bounds.
problems::ProblemSpec make_problem_spec(const ExperimentConfig& config);
/// Initial window centers in raw coordinates, one column per subdomain.
Eigen::MatrixXd initial_centers(const ExperimentConfig& config);
/// Initial model for one seed: subnetworks are drawn first, in window order,
/// then the global network, all from one stream seeded by `seed`.
ansatz::AbPinnModel build_model(const ExperimentConfig& config, std::uint64_t seed);
/// Training schedule for one seed with the mode rules applied (window rates
/// are zero for fbpinn).
trainer::TrainSchedule make_schedule(const ExperimentConfig& config, std::uint64_t seed);
spectral::SpectralConfig make_spectral_config(const ExperimentConfig& config);

}  // namespace abpinn::experiment

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "abpinn/diff/tape.hpp"

namespace abpinn::nets {

struct MlpConfig {
  int input_dim = 1;
  int hidden_layers = 2;
  int hidden_width = 10;
  int output_dim = 1;

  /// Throws ContractError unless every dimension is >= 1 and output_dim == 1.
  void validate() const;
  /// Sum over layers of (fan_in + 1) * fan_out.
  std::size_t parameter_count() const;

  bool operator==(const MlpConfig&) const = default;
};

/// Fully connected tanh network with a linear output layer. Each layer keeps
/// its weights (row-major, out x in) followed by its biases in one
/// ParamGroup.
class Mlp {
 public:
  Mlp() = default;
  /// All weights and biases zero.
  Mlp(const MlpConfig& config, const std::string& name);

  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(const MlpConfig& config, std::mt19937_64& rng, const std::string& name = "mlp");
  static Mlp glorot(const MlpConfig& config, std::uint64_t seed, const std::string& name = "mlp");

  const MlpConfig& config() const { return config_; }
  std::vector<diff::ParamGroup>& layers() { return layers_; }
  const std::vector<diff::ParamGroup>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  /// Layer geometry: (fan_in, fan_out) of layer i.
  std::pair<int, int> layer_shape(std::size_t i) const;

  /// input is (input_dim x N); returns a 1 x N node.
  diff::Var forward(diff::Tape& tape, diff::Var input) const;
  /// Single-point evaluation on Jets.
  diff::Jet forward(std::span<const diff::Jet> input) const;

  /// Flattened copy of every parameter, layer by layer.
  Eigen::VectorXd flat() const;

 private:
  MlpConfig config_;
  std::vector<diff::ParamGroup> layers_;
};

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_limit(int fan_in, int fan_out);

}  // namespace abpinn::nets

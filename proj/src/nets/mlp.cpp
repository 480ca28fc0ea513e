#include "abpinn/nets/mlp.hpp"

#include <cmath>

#include "abpinn/error.hpp"

namespace abpinn::nets {

void MlpConfig::validate() const {
  if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1 || output_dim < 1) {
    throw ContractError("MLP dimensions must all be >= 1");
  }
  if (output_dim != 1) throw ContractError("only scalar-output MLPs are supported");
}

std::size_t MlpConfig::parameter_count() const {
  std::size_t total = 0;
  int fan_in = input_dim;
  for (int l = 0; l < hidden_layers; ++l) {
    total += static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(hidden_width);
    fan_in = hidden_width;
  }
  total += static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(output_dim);
  return total;
}

double glorot_limit(int fan_in, int fan_out) { return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)); }

Mlp::Mlp(const MlpConfig& config, const std::string& name) : config_(config) {
  config_.validate();
  const int layers = config_.hidden_layers + 1;
  layers_.reserve(static_cast<std::size_t>(layers));
  for (int l = 0; l < layers; ++l) {
    const auto [in, out] = layer_shape(static_cast<std::size_t>(l));
    layers_.emplace_back(name + ".layer" + std::to_string(l), static_cast<Eigen::Index>((in + 1) * out));
  }
}

std::pair<int, int> Mlp::layer_shape(std::size_t i) const {
  const int in = i == 0 ? config_.input_dim : config_.hidden_width;
  const int out = static_cast<int>(i) == config_.hidden_layers ? config_.output_dim : config_.hidden_width;
  return {in, out};
}

Mlp Mlp::glorot(const MlpConfig& config, std::mt19937_64& rng, const std::string& name) {
  Mlp net(config, name);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    const auto [in, out] = net.layer_shape(l);
    const double limit = glorot_limit(in, out);
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto& values = net.layers_[l].values;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(in) * out; ++i) values[i] = dist(rng);
  }
  return net;
}

Mlp Mlp::glorot(const MlpConfig& config, std::uint64_t seed, const std::string& name) {
  std::mt19937_64 rng(seed);
  return glorot(config, rng, name);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : layers_) n += static_cast<std::size_t>(g.size());
  return n;
}

diff::Var Mlp::forward(diff::Tape& tape, diff::Var input) const {
  if (input.rows() != config_.input_dim) {
    throw ContractError("MLP expects " + std::to_string(config_.input_dim) + " inputs, got " +
                        std::to_string(input.rows()));
  }
  diff::Var h = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto [in, out] = layer_shape(l);
    h = tape.affine(h, layers_[l], 0, out);
    if (l + 1 < layers_.size()) h = diff::tanh(h);
  }
  return h;
}

diff::Jet Mlp::forward(std::span<const diff::Jet> input) const {
  if (static_cast<int>(input.size()) != config_.input_dim) {
    throw ContractError("MLP expects " + std::to_string(config_.input_dim) + " inputs, got " +
                        std::to_string(input.size()));
  }
  diff::Tape tape;
  std::vector<diff::Var> rows;
  rows.reserve(input.size());
  for (const auto& j : input) rows.push_back(tape.input_jets(std::span<const diff::Jet>(&j, 1)));
  return forward(tape, diff::concat_rows(rows)).jet();
}

Eigen::VectorXd Mlp::flat() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (const auto& g : layers_) {
    out.segment(at, g.size()) = g.values;
    at += g.size();
  }
  return out;
}

}  // namespace abpinn::nets

#pragma once

#include <functional>
#include <span>

#include "abpinn/diff/tape.hpp"

namespace abpinn::diff {

/// A differentiable scalar field: given one 1 x N input row per coordinate,
/// records its value on the tape and returns a 1 x N node.
using Field = std::function<Var(Tape&, std::span<const Var>)>;

/// Records one seeded input row per coordinate of `points` (dims x N).
std::vector<Var> seed_inputs(Tape& tape, const Eigen::MatrixXd& points, int direction, int order);

/// Value and derivatives d^k f / dx_direction^k, k <= order, at one point.
/// Derivatives are exact for the recorded graph.
Jet eval_with_input_derivatives(const Field& field, std::span<const double> point, int direction, int order);

/// Pure second derivative along one coordinate. Mixed partials are not
/// supported: dir_a must equal dir_b.
double eval_mixed_second(const Field& field, std::span<const double> point, int dir_a, int dir_b);

}  // namespace abpinn::diff

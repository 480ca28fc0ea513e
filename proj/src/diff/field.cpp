#include "abpinn/diff/field.hpp"

#include <string>

namespace abpinn::diff {

std::vector<Var> seed_inputs(Tape& tape, const Eigen::MatrixXd& points, int direction, int order) {
  if (direction < 0 || direction >= points.rows()) {
    throw ContractError("direction " + std::to_string(direction) + " outside the " +
                        std::to_string(points.rows()) + "-dimensional input");
  }
  std::vector<Var> inputs;
  inputs.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index d = 0; d < points.rows(); ++d) {
    inputs.push_back(tape.input(points.row(d).array(), static_cast<int>(d), direction, order));
  }
  return inputs;
}

Jet eval_with_input_derivatives(const Field& field, std::span<const double> point, int direction, int order) {
  if (order < 0 || order > kMaxOrder) {
    throw CapabilityError("derivative order " + std::to_string(order) + " not supported (max 3)");
  }
  Tape tape;
  const Eigen::MatrixXd p = Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
  const auto inputs = seed_inputs(tape, p, direction, order);
  const Var out = field(tape, inputs);
  if (out.tape() != &tape) throw GraphError("field returned a node from another tape");
  if (out.rows() != 1 || out.cols() != 1) throw ContractError("field must be scalar valued");
  Jet j = out.jet();
  if (j.order < order) {
    // Field is constant in x: promote to the requested order.
    const double v = j.value;
    j = Jet::constant(v, order, direction);
  }
  j.direction = direction;
  return j;
}

double eval_mixed_second(const Field& field, std::span<const double> point, int dir_a, int dir_b) {
  if (dir_a != dir_b) {
    throw CapabilityError("mixed partial derivatives are not supported");
  }
  return eval_with_input_derivatives(field, point, dir_a, 2).d2;
}

}  // namespace abpinn::diff

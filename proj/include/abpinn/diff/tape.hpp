#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abpinn/diff/jet.hpp"

namespace abpinn::diff {

/// A named flat block of trainable parameters and their gradients.
struct ParamGroup {
  std::string id;
  Eigen::VectorXd values;
  // Scratch written by Tape::backward, hence mutable: evaluating a const
  // model on a tape still lets the reverse sweep record gradients.
  mutable Eigen::VectorXd grads;

  ParamGroup() = default;
  ParamGroup(std::string name, Eigen::Index n)
      : id(std::move(name)), values(Eigen::VectorXd::Zero(n)), grads(Eigen::VectorXd::Zero(n)) {}

  Eigen::Index size() const { return values.size(); }
  void zero_grad() const { grads.setZero(); }
};

/// How a node's value depends on the input coordinates.
///   Independent - constant in x (parameters, literals)
///   Seeded      - carries Jet slots along one seeded direction
///   ValueOnly   - depends on x but carries no derivative information
enum class Dependence { Independent, Seeded, ValueOnly };

class Tape;

/// Handle to a node on a Tape. Every node is a (rows x cols) block of Jets;
/// columns index collocation points.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  int order() const;
  int direction() const;
  Dependence dependence() const;

  /// Slot k of the node (k <= order).
  const Eigen::ArrayXXd& slot(int k) const;
  /// Value of a 1x1 node.
  double scalar() const;
  /// The Jet at (row, col).
  Jet jet(Eigen::Index row = 0, Eigen::Index col = 0) const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Append-only recording of a computation over batched Jets. Forward values
/// are computed as nodes are recorded; backward() runs a single reverse
/// sweep that accumulates d(loss)/d(parameter) into every referenced
/// ParamGroup, including paths through the Jet derivative slots.
///
/// A Tape holds raw pointers to ParamGroups; those must outlive it and must
/// not be resized while it is in use. Tapes are single-threaded.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input coordinate `coordinate` (a 1 x N row of values) seeded for
  /// derivatives along `direction` up to `order`.
  Var input(const Eigen::ArrayXXd& values, int coordinate, int direction, int order);
  /// Literal block. `input_dependent` marks data such as forcing terms that
  /// vary with x but carry no derivatives.
  Var constant(const Eigen::ArrayXXd& values, bool input_dependent = false);
  Var constant(double c);
  /// A 1 x N row whose entries are the given Jets. All Jets must share order
  /// and direction.
  Var input_jets(std::span<const Jet> jets);
  /// Scalar view of one parameter.
  Var param(const ParamGroup& group, Eigen::Index index);
  /// Dense layer y = W x + b with W (out x in, row-major) followed by b (out)
  /// stored contiguously in `group` starting at `offset`.
  Var affine(Var x, const ParamGroup& group, Eigen::Index offset, Eigen::Index out);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var shift(Var a, double c);
  Var unary(Primitive p, Var a, int exponent = 0);
  Var concat_rows(std::span<const Var> parts);
  Var row(Var a, Eigen::Index r);
  /// Extracts Jet slot k as a plain value node.
  Var slot(Var a, int k);
  /// Sum over every entry.
  Var sum(Var a);

  /// Reverse sweep from a scalar (1x1, order 0) node. Zeroes the gradients
  /// of every ParamGroup referenced on the tape first.
  void backward(Var loss);

  /// Re-evaluates every recorded node from the current parameter values.
  void replay();

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;

  enum class Op { Input, Constant, Param, Affine, Add, Sub, Mul, Scale, Shift, Unary, Concat, Row, Slot, Sum };

  struct Node {
    Op op = Op::Constant;
    Dependence dep = Dependence::Independent;
    int order = 0;
    int direction = -1;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<int> args;
    const ParamGroup* group = nullptr;
    Eigen::Index offset = 0;
    Eigen::Index index = 0;
    double constant = 0.0;
    Primitive prim = Primitive::Tanh;
    int exponent = 0;
    std::array<Eigen::ArrayXXd, 4> val;
    std::array<Eigen::ArrayXXd, 4> adj;
    std::array<Eigen::ArrayXXd, 5> coef;
    bool has_adj = false;
  };

  Var record(Node node);
  void evaluate(Node& n);
  void propagate(Node& n);
  void check_owned(const Var& v) const;
  Node& node(const Var& v) { return nodes_[static_cast<std::size_t>(v.id())]; }
  const Node& node(const Var& v) const { return nodes_[static_cast<std::size_t>(v.id())]; }
  void ensure_adj(Node& n);
  Node binary_node(Op op, const Var& a, const Var& b) const;

  std::vector<Node> nodes_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);
Var operator/(double c, Var a);

Var tanh(Var a);
Var exp(Var a);
Var sin(Var a);
Var cos(Var a);
Var abs(Var a);
Var pow(Var a, int n);
Var sigmoid(Var a);
Var sqrt(Var a);
Var reciprocal(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
Var slot(Var a, int k);
Var row(Var a, Eigen::Index r);
Var concat_rows(std::span<const Var> parts);

}  // namespace abpinn::diff

#include "abpinn/diff/tape.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

namespace abpinn::diff {

using Eigen::ArrayXXd;
using Eigen::Index;

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::string shape(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

// ---------------------------------------------------------------- Var

Index Var::rows() const { return tape_->node(*this).rows; }
Index Var::cols() const { return tape_->node(*this).cols; }
int Var::order() const { return tape_->node(*this).order; }
int Var::direction() const { return tape_->node(*this).direction; }
Dependence Var::dependence() const { return tape_->node(*this).dep; }

const ArrayXXd& Var::slot(int k) const {
  const auto& n = tape_->node(*this);
  if (k < 0 || k > n.order) throw ContractError("slot " + std::to_string(k) + " above node order");
  return n.val[static_cast<std::size_t>(k)];
}

double Var::scalar() const {
  const auto& n = tape_->node(*this);
  if (n.rows != 1 || n.cols != 1) throw ContractError("scalar() on a " + shape(n.rows, n.cols) + " node");
  return n.val[0](0, 0);
}

Jet Var::jet(Index row, Index col) const {
  const auto& n = tape_->node(*this);
  Jet j;
  j.order = n.order;
  j.direction = n.dep == Dependence::Seeded ? n.direction : -1;
  for (int k = 0; k <= n.order; ++k) j[k] = n.val[static_cast<std::size_t>(k)](row, col);
  return j;
}

// ---------------------------------------------------------------- recording

void Tape::check_owned(const Var& v) const {
  if (v.tape_ != this) throw GraphError("operand belongs to a different tape");
  if (v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) throw GraphError("dangling tape variable");
}

Var Tape::record(Node n) {
  nodes_.push_back(std::move(n));
  evaluate(nodes_.back());
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::input(const ArrayXXd& values, int coordinate, int direction, int order) {
  if (order < 0 || order > kMaxOrder) {
    throw CapabilityError("derivative order " + std::to_string(order) + " not supported (max 3)");
  }
  if (values.rows() != 1) throw ContractError("input coordinate must be a single row");
  Node n;
  n.op = Op::Input;
  n.dep = Dependence::Seeded;
  n.order = order;
  n.direction = direction;
  n.rows = 1;
  n.cols = values.cols();
  n.index = coordinate;
  n.val[0] = values;
  for (int k = 1; k <= order; ++k) {
    n.val[static_cast<std::size_t>(k)] =
        ArrayXXd::Constant(1, values.cols(), (k == 1 && coordinate == direction) ? 1.0 : 0.0);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(const ArrayXXd& values, bool input_dependent) {
  Node n;
  n.op = Op::Constant;
  n.dep = input_dependent ? Dependence::ValueOnly : Dependence::Independent;
  n.rows = values.rows();
  n.cols = values.cols();
  n.val[0] = values;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(double c) { return constant(ArrayXXd::Constant(1, 1, c)); }

Var Tape::input_jets(std::span<const Jet> jets) {
  if (jets.empty()) throw ContractError("input_jets needs at least one jet");
  const int order = jets[0].order;
  const int direction = jets[0].direction;
  Node n;
  n.op = Op::Input;
  n.dep = Dependence::Seeded;
  n.order = order;
  n.direction = direction;
  n.rows = 1;
  n.cols = static_cast<Index>(jets.size());
  n.index = -1;
  for (int k = 0; k <= order; ++k) n.val[static_cast<std::size_t>(k)].resize(1, n.cols);
  for (Index c = 0; c < n.cols; ++c) {
    const Jet& j = jets[static_cast<std::size_t>(c)];
    if (j.order != order || j.direction != direction) {
      throw ContractError("input jets must share order and direction");
    }
    for (int k = 0; k <= order; ++k) n.val[static_cast<std::size_t>(k)](0, c) = j[k];
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(const ParamGroup& group, Index index) {
  if (index < 0 || index >= group.size()) {
    throw ContractError("parameter index " + std::to_string(index) + " outside group '" + group.id + "'");
  }
  Node n;
  n.op = Op::Param;
  n.rows = 1;
  n.cols = 1;
  n.group = &group;
  n.index = index;
  return record(std::move(n));
}

Var Tape::affine(Var x, const ParamGroup& group, Index offset, Index out) {
  check_owned(x);
  const Node& xn = node(x);
  const Index in = xn.rows;
  if (offset < 0 || offset + out * in + out > group.size()) {
    throw ContractError("affine layer " + shape(out, in) + " does not fit group '" + group.id + "'");
  }
  Node n;
  n.op = Op::Affine;
  n.dep = xn.dep;
  n.order = xn.order;
  n.direction = xn.direction;
  n.rows = out;
  n.cols = xn.cols;
  n.args = {x.id_};
  n.group = &group;
  n.offset = offset;
  return record(std::move(n));
}

namespace {

struct DepInfo {
  Dependence dep;
  int order;
  int direction;
};

DepInfo combine(DepInfo a, DepInfo b) {
  if (a.dep == Dependence::Independent) return b;
  if (b.dep == Dependence::Independent) return a;
  if (a.dep == Dependence::Seeded && b.dep == Dependence::Seeded) {
    if (a.order != b.order || a.direction != b.direction) {
      throw ContractError("cannot combine jets of order " + std::to_string(a.order) + " along " +
                          std::to_string(a.direction) + " with order " + std::to_string(b.order) +
                          " along " + std::to_string(b.direction));
    }
    return a;
  }
  // At least one side is ValueOnly: the other must carry no derivatives.
  const DepInfo& other = a.dep == Dependence::ValueOnly ? b : a;
  if (other.dep == Dependence::Seeded && other.order > 0) {
    throw ContractError("cannot mix a value-only node with an order-" + std::to_string(other.order) + " jet");
  }
  return {Dependence::ValueOnly, 0, -1};
}

}  // namespace

Tape::Node Tape::binary_node(Op op, const Var& a, const Var& b) const {
  check_owned(a);
  check_owned(b);
  const Node& an = node(a);
  const Node& bn = node(b);
  const bool a_scalar = an.rows == 1 && an.cols == 1;
  const bool b_scalar = bn.rows == 1 && bn.cols == 1;
  if (!(an.rows == bn.rows && an.cols == bn.cols) && !a_scalar && !b_scalar) {
    throw ContractError("shape mismatch " + shape(an.rows, an.cols) + " vs " + shape(bn.rows, bn.cols));
  }
  const DepInfo d = combine({an.dep, an.order, an.direction}, {bn.dep, bn.order, bn.direction});
  Node n;
  n.op = op;
  n.dep = d.dep;
  n.order = d.order;
  n.direction = d.direction;
  n.rows = std::max(an.rows, bn.rows);
  n.cols = std::max(an.cols, bn.cols);
  n.args = {a.id_, b.id_};
  return n;
}

Var Tape::add(Var a, Var b) { return record(binary_node(Op::Add, a, b)); }
Var Tape::sub(Var a, Var b) { return record(binary_node(Op::Sub, a, b)); }
Var Tape::mul(Var a, Var b) { return record(binary_node(Op::Mul, a, b)); }

Var Tape::scale(Var a, double c) {
  check_owned(a);
  const Node& an = node(a);
  Node n;
  n.op = Op::Scale;
  n.dep = an.dep;
  n.order = an.order;
  n.direction = an.direction;
  n.rows = an.rows;
  n.cols = an.cols;
  n.args = {a.id_};
  n.constant = c;
  return record(std::move(n));
}

Var Tape::shift(Var a, double c) {
  Var s = scale(a, 1.0);
  Node& n = nodes_.back();
  n.op = Op::Shift;
  n.constant = c;
  evaluate(n);
  return s;
}

Var Tape::unary(Primitive p, Var a, int exponent) {
  check_owned(a);
  const Node& an = node(a);
  Node n;
  n.op = Op::Unary;
  n.dep = an.dep;
  n.order = an.order;
  n.direction = an.direction;
  n.rows = an.rows;
  n.cols = an.cols;
  n.args = {a.id_};
  n.prim = p;
  n.exponent = exponent;
  return record(std::move(n));
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows needs at least one part");
  if (parts.size() == 1) {
    check_owned(parts[0]);
    return parts[0];
  }
  Node n;
  n.op = Op::Concat;
  DepInfo d{Dependence::Independent, 0, -1};
  for (const Var& p : parts) {
    check_owned(p);
    const Node& pn = node(p);
    if (pn.cols != node(parts[0]).cols) throw ContractError("concat_rows column mismatch");
    d = combine(d, {pn.dep, pn.order, pn.direction});
    n.rows += pn.rows;
    n.args.push_back(p.id_);
  }
  n.cols = node(parts[0]).cols;
  n.dep = d.dep;
  n.order = d.order;
  n.direction = d.direction;
  return record(std::move(n));
}

Var Tape::row(Var a, Index r) {
  check_owned(a);
  const Node& an = node(a);
  if (r < 0 || r >= an.rows) throw ContractError("row index out of range");
  Node n;
  n.op = Op::Row;
  n.dep = an.dep;
  n.order = an.order;
  n.direction = an.direction;
  n.rows = 1;
  n.cols = an.cols;
  n.args = {a.id_};
  n.index = r;
  return record(std::move(n));
}

Var Tape::slot(Var a, int k) {
  check_owned(a);
  const Node& an = node(a);
  if (k < 0 || k > kMaxOrder) throw CapabilityError("slot index outside [0, 3]");
  if (an.dep == Dependence::ValueOnly && k > 0) throw ContractError("value-only node has no derivative slots");
  if (an.dep == Dependence::Seeded && k > an.order) {
    throw ContractError("slot " + std::to_string(k) + " requested from an order-" + std::to_string(an.order) + " jet");
  }
  Node n;
  n.op = Op::Slot;
  n.dep = an.dep == Dependence::Independent ? Dependence::Independent : Dependence::ValueOnly;
  n.rows = an.rows;
  n.cols = an.cols;
  n.args = {a.id_};
  n.index = k;
  return record(std::move(n));
}

Var Tape::sum(Var a) {
  check_owned(a);
  const Node& an = node(a);
  Node n;
  n.op = Op::Sum;
  n.dep = an.dep;
  n.order = an.order;
  n.direction = an.direction;
  n.rows = 1;
  n.cols = 1;
  n.args = {a.id_};
  return record(std::move(n));
}

// ---------------------------------------------------------------- forward

namespace {

// Slot k of a node broadcast to (rows, cols); zero above the node's order.
ArrayXXd expanded(const std::array<ArrayXXd, 4>& val, int order, Index nr, Index nc, int k, Index rows, Index cols) {
  if (k > order) return ArrayXXd::Zero(rows, cols);
  const auto& s = val[static_cast<std::size_t>(k)];
  if (nr == rows && nc == cols) return s;
  return ArrayXXd::Constant(rows, cols, s(0, 0));
}

}  // namespace

void Tape::evaluate(Node& n) {
  const auto arg = [&](std::size_t i) -> const Node& { return nodes_[static_cast<std::size_t>(n.args[i])]; };
  switch (n.op) {
    case Op::Input:
    case Op::Constant:
      return;
    case Op::Param:
      n.val[0] = ArrayXXd::Constant(1, 1, n.group->values[n.index]);
      return;
    case Op::Affine: {
      const Node& x = arg(0);
      const Index in = x.rows;
      const RowMajorMap w(n.group->values.data() + n.offset, n.rows, in);
      const auto b = n.group->values.segment(n.offset + n.rows * in, n.rows);
      for (int k = 0; k <= n.order; ++k) {
        n.val[k].resize(n.rows, n.cols);
        if (in == 1) {
          n.val[k].matrix().noalias() = w.col(0) * x.val[k].matrix().row(0);
        } else if (n.rows == 1) {
          n.val[k].matrix().row(0).noalias() = w.row(0) * x.val[k].matrix();
        } else {
          n.val[k].matrix().noalias() = w * x.val[k].matrix();
        }
      }
      n.val[0].colwise() += b.array();
      return;
    }
    case Op::Add:
    case Op::Sub: {
      const Node& a = arg(0);
      const Node& b = arg(1);
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      for (int k = 0; k <= n.order; ++k) {
        n.val[k] = expanded(a.val, a.order, a.rows, a.cols, k, n.rows, n.cols) +
                   sign * expanded(b.val, b.order, b.rows, b.cols, k, n.rows, n.cols);
      }
      return;
    }
    case Op::Mul: {
      const Node& a = arg(0);
      const Node& b = arg(1);
      std::array<ArrayXXd, 4> x;
      std::array<ArrayXXd, 4> y;
      for (int k = 0; k <= n.order; ++k) {
        x[k] = expanded(a.val, a.order, a.rows, a.cols, k, n.rows, n.cols);
        y[k] = expanded(b.val, b.order, b.rows, b.cols, k, n.rows, n.cols);
      }
      for (int k = 0; k <= n.order; ++k) {
        n.val[k] = x[0] * y[k];
        for (int j = 1; j <= k; ++j) n.val[k] += kernel::kBinomial[k][j] * x[j] * y[k - j];
      }
      return;
    }
    case Op::Scale:
      for (int k = 0; k <= n.order; ++k) n.val[k] = n.constant * arg(0).val[k];
      return;
    case Op::Shift:
      for (int k = 0; k <= n.order; ++k) n.val[k] = arg(0).val[k];
      n.val[0] += n.constant;
      return;
    case Op::Unary: {
      const Node& x = arg(0);
      const int count = std::min(n.order + 2, 5);
      kernel::derivatives(n.prim, n.exponent, x.val[0], n.coef, count);
      kernel::compose(n.coef, x.val.data(), n.val.data(), n.order);
      return;
    }
    case Op::Concat: {
      for (int k = 0; k <= n.order; ++k) {
        n.val[k].resize(n.rows, n.cols);
        Index r = 0;
        for (std::size_t i = 0; i < n.args.size(); ++i) {
          const Node& p = arg(i);
          n.val[k].middleRows(r, p.rows) = expanded(p.val, p.order, p.rows, p.cols, k, p.rows, p.cols);
          r += p.rows;
        }
      }
      return;
    }
    case Op::Row:
      for (int k = 0; k <= n.order; ++k) n.val[k] = arg(0).val[k].row(n.index);
      return;
    case Op::Slot: {
      const Node& x = arg(0);
      n.val[0] = n.index <= x.order ? x.val[static_cast<std::size_t>(n.index)] : ArrayXXd::Zero(x.rows, x.cols);
      return;
    }
    case Op::Sum:
      for (int k = 0; k <= n.order; ++k) n.val[k] = ArrayXXd::Constant(1, 1, arg(0).val[k].sum());
      return;
  }
}

void Tape::replay() {
  for (auto& n : nodes_) {
    if (n.op != Op::Input && n.op != Op::Constant) evaluate(n);
  }
}

// ---------------------------------------------------------------- reverse

void Tape::ensure_adj(Node& n) {
  if (n.has_adj) return;
  for (int k = 0; k <= n.order; ++k) n.adj[k] = ArrayXXd::Zero(n.rows, n.cols);
  n.has_adj = true;
}

namespace {

// Adds g into slot k of an operand's adjoint, summing when the operand was
// broadcast from a scalar.
template <class Expr>
void accumulate(std::array<ArrayXXd, 4>& adj, int order, Index rows, Index cols, int k, const Expr& g) {
  if (k > order) return;
  auto& target = adj[static_cast<std::size_t>(k)];
  if (g.rows() == rows && g.cols() == cols) {
    target += g;
  } else {
    target(0, 0) += g.sum();
  }
}

}  // namespace

void Tape::propagate(Node& n) {
  const auto arg = [&](std::size_t i) -> Node& { return nodes_[static_cast<std::size_t>(n.args[i])]; };
  switch (n.op) {
    case Op::Input:
    case Op::Constant:
      return;
    case Op::Param:
      n.group->grads[n.index] += n.adj[0].sum();
      return;
    case Op::Affine: {
      Node& x = arg(0);
      const Index in = x.rows;
      const RowMajorMap w(n.group->values.data() + n.offset, n.rows, in);
      RowMajorMutMap gw(n.group->grads.data() + n.offset, n.rows, in);
      ensure_adj(x);
      for (int k = 0; k <= n.order; ++k) {
        gw.noalias() += n.adj[k].matrix() * x.val[k].matrix().transpose();
        if (n.rows == 1) {
          x.adj[k].matrix().noalias() += w.row(0).transpose() * n.adj[k].matrix().row(0);
        } else {
          x.adj[k].matrix().noalias() += w.transpose() * n.adj[k].matrix();
        }
      }
      n.group->grads.segment(n.offset + n.rows * in, n.rows) += n.adj[0].rowwise().sum().matrix();
      return;
    }
    case Op::Add:
    case Op::Sub: {
      Node& a = arg(0);
      Node& b = arg(1);
      ensure_adj(a);
      ensure_adj(b);
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      for (int k = 0; k <= n.order; ++k) {
        accumulate(a.adj, a.order, a.rows, a.cols, k, n.adj[k]);
        accumulate(b.adj, b.order, b.rows, b.cols, k, (sign * n.adj[k]).eval());
      }
      return;
    }
    case Op::Mul: {
      Node& a = arg(0);
      Node& b = arg(1);
      ensure_adj(a);
      ensure_adj(b);
      std::array<ArrayXXd, 4> x;
      std::array<ArrayXXd, 4> y;
      for (int k = 0; k <= n.order; ++k) {
        x[k] = expanded(a.val, a.order, a.rows, a.cols, k, n.rows, n.cols);
        y[k] = expanded(b.val, b.order, b.rows, b.cols, k, n.rows, n.cols);
      }
      // z_k = sum_j C(k,j) x_j y_{k-j}
      for (int j = 0; j <= n.order; ++j) {
        if (j <= a.order) {
          ArrayXXd gx = n.adj[j] * y[0];
          for (int k = j + 1; k <= n.order; ++k) gx += kernel::kBinomial[k][j] * n.adj[k] * y[k - j];
          accumulate(a.adj, a.order, a.rows, a.cols, j, gx);
        }
        if (j <= b.order) {
          ArrayXXd gy = n.adj[j] * x[0];
          for (int k = j + 1; k <= n.order; ++k) gy += kernel::kBinomial[k][j] * n.adj[k] * x[k - j];
          accumulate(b.adj, b.order, b.rows, b.cols, j, gy);
        }
      }
      return;
    }
    case Op::Scale: {
      Node& a = arg(0);
      ensure_adj(a);
      for (int k = 0; k <= n.order; ++k) a.adj[k] += n.constant * n.adj[k];
      return;
    }
    case Op::Shift: {
      Node& a = arg(0);
      ensure_adj(a);
      for (int k = 0; k <= n.order; ++k) a.adj[k] += n.adj[k];
      return;
    }
    case Op::Unary: {
      Node& x = arg(0);
      ensure_adj(x);
      kernel::compose_adjoint(n.coef, x.val.data(), n.adj.data(), x.adj.data(), n.order);
      return;
    }
    case Op::Concat: {
      Index r = 0;
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        Node& p = arg(i);
        ensure_adj(p);
        for (int k = 0; k <= std::min(n.order, p.order); ++k) p.adj[k] += n.adj[k].middleRows(r, p.rows);
        r += p.rows;
      }
      return;
    }
    case Op::Row: {
      Node& x = arg(0);
      ensure_adj(x);
      for (int k = 0; k <= n.order; ++k) x.adj[k].row(n.index) += n.adj[k];
      return;
    }
    case Op::Slot: {
      Node& x = arg(0);
      ensure_adj(x);
      if (n.index <= x.order) x.adj[static_cast<std::size_t>(n.index)] += n.adj[0];
      return;
    }
    case Op::Sum: {
      Node& x = arg(0);
      ensure_adj(x);
      for (int k = 0; k <= n.order; ++k) x.adj[k] += n.adj[k](0, 0);
      return;
    }
  }
}

void Tape::backward(Var loss) {
  check_owned(loss);
  const Node& ln = node(loss);
  if (ln.rows != 1 || ln.cols != 1 || ln.order != 0) {
    throw ContractError("backward needs a scalar loss, got a " + shape(ln.rows, ln.cols) + " node of order " +
                        std::to_string(ln.order));
  }
  std::unordered_set<const ParamGroup*> groups;
  for (auto& n : nodes_) {
    if (n.group != nullptr) groups.insert(n.group);
    n.has_adj = false;
  }
  for (const ParamGroup* g : groups) g->zero_grad();

  Node& root = node(loss);
  ensure_adj(root);
  root.adj[0](0, 0) = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.has_adj) propagate(n);
  }
}

// ---------------------------------------------------------------- free ops

namespace {
Tape& tape_of(const Var& a) {
  if (!a.valid()) throw GraphError("operation on an empty variable");
  return *a.tape();
}
}  // namespace

Var operator+(Var a, Var b) { return tape_of(a).add(a, b); }
Var operator-(Var a, Var b) { return tape_of(a).sub(a, b); }
Var operator*(Var a, Var b) { return tape_of(a).mul(a, b); }
Var operator/(Var a, Var b) { return tape_of(a).mul(a, reciprocal(b)); }
Var operator-(Var a) { return tape_of(a).scale(a, -1.0); }
Var operator+(Var a, double c) { return tape_of(a).shift(a, c); }
Var operator+(double c, Var a) { return tape_of(a).shift(a, c); }
Var operator-(Var a, double c) { return tape_of(a).shift(a, -c); }
Var operator-(double c, Var a) { return tape_of(a).shift(tape_of(a).scale(a, -1.0), c); }
Var operator*(Var a, double c) { return tape_of(a).scale(a, c); }
Var operator*(double c, Var a) { return tape_of(a).scale(a, c); }
Var operator/(Var a, double c) { return tape_of(a).scale(a, 1.0 / c); }
Var operator/(double c, Var a) { return tape_of(a).scale(reciprocal(a), c); }

Var tanh(Var a) { return tape_of(a).unary(Primitive::Tanh, a); }
Var exp(Var a) { return tape_of(a).unary(Primitive::Exp, a); }
Var sin(Var a) { return tape_of(a).unary(Primitive::Sin, a); }
Var cos(Var a) { return tape_of(a).unary(Primitive::Cos, a); }
Var abs(Var a) { return tape_of(a).unary(Primitive::Abs, a); }
Var pow(Var a, int n) { return tape_of(a).unary(Primitive::Pow, a, n); }
Var sigmoid(Var a) { return tape_of(a).unary(Primitive::Sigmoid, a); }
Var sqrt(Var a) { return tape_of(a).unary(Primitive::Sqrt, a); }
Var reciprocal(Var a) { return tape_of(a).unary(Primitive::Reciprocal, a); }
Var square(Var a) { return tape_of(a).mul(a, a); }
Var sum(Var a) { return tape_of(a).sum(a); }
Var mean(Var a) { return tape_of(a).scale(tape_of(a).sum(a), 1.0 / static_cast<double>(a.rows() * a.cols())); }
Var slot(Var a, int k) { return tape_of(a).slot(a, k); }
Var row(Var a, Index r) { return tape_of(a).row(a, r); }
Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows needs at least one part");
  return tape_of(parts[0]).concat_rows(parts);
}

}  // namespace abpinn::diff

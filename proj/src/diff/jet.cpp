#include "abpinn/diff/jet.hpp"

#include <string>

namespace abpinn::diff {

Primitive parse_primitive(std::string_view name) {
  if (name == "tanh") return Primitive::Tanh;
  if (name == "exp") return Primitive::Exp;
  if (name == "sin") return Primitive::Sin;
  if (name == "cos") return Primitive::Cos;
  if (name == "abs") return Primitive::Abs;
  if (name == "reciprocal") return Primitive::Reciprocal;
  if (name == "pow") return Primitive::Pow;
  if (name == "sigmoid") return Primitive::Sigmoid;
  if (name == "sqrt") return Primitive::Sqrt;
  throw GraphError("unsupported primitive '" + std::string(name) + "'");
}

std::string_view primitive_name(Primitive p) {
  switch (p) {
    case Primitive::Tanh: return "tanh";
    case Primitive::Exp: return "exp";
    case Primitive::Sin: return "sin";
    case Primitive::Cos: return "cos";
    case Primitive::Abs: return "abs";
    case Primitive::Reciprocal: return "reciprocal";
    case Primitive::Pow: return "pow";
    case Primitive::Sigmoid: return "sigmoid";
    case Primitive::Sqrt: return "sqrt";
  }
  return "?";
}

namespace {

void check_order(int order) {
  if (order < 0 || order > kMaxOrder) {
    throw CapabilityError("jet order " + std::to_string(order) + " is outside [0, 3]");
  }
}

void check_compatible(const Jet& a, const Jet& b) {
  if (a.order != b.order || a.direction != b.direction) {
    throw ContractError("jet arithmetic needs equal order and direction (got order " +
                        std::to_string(a.order) + "/" + std::to_string(b.order) +
                        ", direction " + std::to_string(a.direction) + "/" +
                        std::to_string(b.direction) + ")");
  }
}

}  // namespace

Jet Jet::variable(double x, int order, int direction) {
  check_order(order);
  Jet j;
  j.value = x;
  j.order = order;
  j.direction = direction;
  if (order >= 1) j.d1 = 1.0;
  return j;
}

Jet Jet::constant(double c, int order, int direction) {
  check_order(order);
  Jet j;
  j.value = c;
  j.order = order;
  j.direction = direction;
  return j;
}

double Jet::operator[](int k) const {
  switch (k) {
    case 0: return value;
    case 1: return d1;
    case 2: return d2;
    case 3: return d3;
  }
  throw ContractError("jet slot out of range");
}

double& Jet::operator[](int k) {
  switch (k) {
    case 0: return value;
    case 1: return d1;
    case 2: return d2;
    case 3: return d3;
  }
  throw ContractError("jet slot out of range");
}

Jet Jet::operator-() const {
  Jet r = *this;
  r.value = -value;
  r.d1 = -d1;
  r.d2 = -d2;
  r.d3 = -d3;
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(*this, o);
  for (int k = 0; k <= order; ++k) (*this)[k] += o[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(*this, o);
  for (int k = 0; k <= order; ++k) (*this)[k] -= o[k];
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  check_compatible(*this, o);
  Jet r = *this;
  for (int k = 0; k <= order; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) acc += kernel::kBinomial[k][j] * (*this)[j] * o[k - j];
    r[k] = acc;
  }
  *this = r;
  return *this;
}

Jet& Jet::operator/=(const Jet& o) {
  check_compatible(*this, o);
  return *this *= reciprocal(o);
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(Jet a, const Jet& b) { return a *= b; }
Jet operator/(Jet a, const Jet& b) { return a /= b; }

Jet operator+(Jet a, double c) {
  a.value += c;
  return a;
}
Jet operator+(double c, Jet a) { return a + c; }
Jet operator-(Jet a, double c) { return a + (-c); }
Jet operator-(double c, const Jet& a) { return (-a) + c; }

Jet operator*(Jet a, double c) {
  for (int k = 0; k <= a.order; ++k) a[k] *= c;
  return a;
}
Jet operator*(double c, Jet a) { return a * c; }

Jet apply(Primitive p, const Jet& x, int exponent) {
  std::array<double, 5> f{};
  kernel::derivatives(p, exponent, x.value, f, x.order + 1);
  const double in[4] = {x.value, x.d1, x.d2, x.d3};
  double out[4] = {0, 0, 0, 0};
  kernel::compose(f, in, out, x.order);
  Jet y = x;
  for (int k = 0; k <= x.order; ++k) y[k] = out[k];
  return y;
}

Jet tanh(const Jet& x) { return apply(Primitive::Tanh, x); }
Jet exp(const Jet& x) { return apply(Primitive::Exp, x); }
Jet sin(const Jet& x) { return apply(Primitive::Sin, x); }
Jet cos(const Jet& x) { return apply(Primitive::Cos, x); }
Jet abs(const Jet& x) { return apply(Primitive::Abs, x); }
Jet pow(const Jet& x, int n) { return apply(Primitive::Pow, x, n); }
Jet sigmoid(const Jet& x) { return apply(Primitive::Sigmoid, x); }
Jet sqrt(const Jet& x) { return apply(Primitive::Sqrt, x); }
Jet reciprocal(const Jet& x) { return apply(Primitive::Reciprocal, x); }

}  // namespace abpinn::diff

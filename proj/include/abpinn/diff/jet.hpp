#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include "abpinn/error.hpp"

namespace abpinn::diff {

/// Highest input-derivative order carried by a Jet.
inline constexpr int kMaxOrder = 3;

/// Elementwise primitives known to the differentiation engine. Binary
/// arithmetic (+, -, *, /) is handled separately.
enum class Primitive { Tanh, Exp, Sin, Cos, Abs, Reciprocal, Pow, Sigmoid, Sqrt };

/// Looks up a primitive by name ("tanh", "exp", ...). Unknown names raise
/// GraphError.
Primitive parse_primitive(std::string_view name);
std::string_view primitive_name(Primitive p);

/// Value of a scalar field together with its derivatives along a single
/// input direction, truncated at `order`. Slots above `order` are zero and
/// never read.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
  int order = 0;
  int direction = -1;

  static Jet variable(double x, int order, int direction);
  static Jet constant(double c, int order, int direction);

  double operator[](int k) const;
  double& operator[](int k);

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(Jet a, const Jet& b);
Jet operator/(Jet a, const Jet& b);
Jet operator+(Jet a, double c);
Jet operator+(double c, Jet a);
Jet operator-(Jet a, double c);
Jet operator-(double c, const Jet& a);
Jet operator*(Jet a, double c);
Jet operator*(double c, Jet a);

Jet apply(Primitive p, const Jet& x, int exponent = 0);
Jet tanh(const Jet& x);
Jet exp(const Jet& x);
Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet abs(const Jet& x);
Jet pow(const Jet& x, int n);
Jet sigmoid(const Jet& x);
Jet sqrt(const Jet& x);
Jet reciprocal(const Jet& x);

namespace kernel {

// The kernels below are shared by the scalar Jet and the batched tape; T is
// either double or an Eigen array. `using std::exp` etc. lets ADL pick the
// Eigen overloads for arrays.

inline double sign_of(double x) { return (x > 0.0) - (x < 0.0); }
template <class T>
auto sign_of(const T& x) {
  return x.sign();
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
template <class T>
T stable_sigmoid(const T& x) {
  const T e = (-x.abs()).exp();
  const T s = 1.0 / (1.0 + e);
  return (x >= 0.0).select(s, e * s);
}

inline double fast_tanh(double x) { return std::tanh(x); }
// Vectorizes through exp; absolute error stays at round-off level.
template <class T>
T fast_tanh(const T& x) {
  const T e = (-2.0 * x.abs()).exp();
  return x.sign() * (1.0 - e) / (1.0 + e);
}

inline double int_pow(double x, int n) { return std::pow(x, n); }
template <class T>
T int_pow(const T& x, int n) {
  return x.unaryExpr([n](double v) { return std::pow(v, n); });
}

/// Fills f[0..count) with the first `count` derivatives (f[0] is the value)
/// of primitive p at x. count is at most 5.
template <class T>
void derivatives(Primitive p, int exponent, const T& x, std::array<T, 5>& f, int count) {
  using std::cos;
  using std::exp;
  using std::sin;
  switch (p) {
    case Primitive::Tanh: {
      f[0] = fast_tanh(x);
      if (count > 1) f[1] = 1.0 - f[0] * f[0];
      if (count > 2) f[2] = -2.0 * f[0] * f[1];
      if (count > 3) f[3] = -2.0 * f[1] * f[1] - 2.0 * f[0] * f[2];
      if (count > 4) f[4] = -6.0 * f[1] * f[2] - 2.0 * f[0] * f[3];
      break;
    }
    case Primitive::Sigmoid: {
      f[0] = stable_sigmoid(x);
      if (count > 1) f[1] = f[0] * (1.0 - f[0]);
      if (count > 2) f[2] = f[1] * (1.0 - 2.0 * f[0]);
      if (count > 3) f[3] = f[2] * (1.0 - 2.0 * f[0]) - 2.0 * f[1] * f[1];
      if (count > 4) f[4] = f[3] * (1.0 - 2.0 * f[0]) - 6.0 * f[1] * f[2];
      break;
    }
    case Primitive::Exp: {
      f[0] = exp(x);
      for (int k = 1; k < count; ++k) f[k] = f[0];
      break;
    }
    case Primitive::Sin:
    case Primitive::Cos: {
      const T s = sin(x);
      const T c = cos(x);
      // Derivatives of sin cycle through cos, -sin, -cos, sin.
      const T cycle_sin[4] = {s, c, -s, -c};
      const int shift = p == Primitive::Sin ? 0 : 1;
      for (int k = 0; k < count; ++k) f[k] = cycle_sin[(k + shift) % 4];
      break;
    }
    case Primitive::Abs: {
      using std::abs;
      f[0] = abs(x);
      if (count > 1) f[1] = sign_of(x);
      for (int k = 2; k < count; ++k) f[k] = 0.0 * x;
      break;
    }
    case Primitive::Reciprocal: {
      const T r = 1.0 / x;
      f[0] = r;
      double coeff = -1.0;
      T power = r * r;
      for (int k = 1; k < count; ++k) {
        f[k] = coeff * power;
        coeff *= -(k + 1.0);
        power = power * r;
      }
      break;
    }
    case Primitive::Sqrt: {
      using std::sqrt;
      f[0] = sqrt(x);
      if (count > 1) f[1] = 0.5 / f[0];
      const T inv = 1.0 / x;
      for (int k = 2; k < count; ++k) f[k] = -((2.0 * k - 3.0) / 2.0) * inv * f[k - 1];
      break;
    }
    case Primitive::Pow: {
      double falling = 1.0;
      for (int k = 0; k < count; ++k) {
        if (falling == 0.0) {
          f[k] = 0.0 * x;
        } else {
          f[k] = falling * int_pow(x, exponent - k);
        }
        falling *= static_cast<double>(exponent - k);
      }
      break;
    }
  }
}

/// Taylor-mode composition y = f(x) for a Jet x with slots x[0..order];
/// f holds derivatives of the primitive at x[0].
template <class T>
void compose(const std::array<T, 5>& f, const T* x, T* y, int order) {
  y[0] = f[0];
  if (order >= 1) y[1] = f[1] * x[1];
  if (order >= 2) y[2] = f[2] * x[1] * x[1] + f[1] * x[2];
  if (order >= 3) y[3] = f[3] * x[1] * x[1] * x[1] + 3.0 * f[2] * x[1] * x[2] + f[1] * x[3];
}

/// Reverse of compose: accumulates into gx[0..order] the adjoint of x given
/// the adjoint gy of y. Requires f[0..order+1].
template <class T>
void compose_adjoint(const std::array<T, 5>& f, const T* x, const T* gy, T* gx, int order) {
  switch (order) {
    case 0:
      gx[0] += gy[0] * f[1];
      break;
    case 1:
      gx[0] += gy[0] * f[1] + gy[1] * f[2] * x[1];
      gx[1] += gy[1] * f[1];
      break;
    case 2:
      gx[0] += gy[0] * f[1] + gy[1] * f[2] * x[1] + gy[2] * (f[3] * x[1] * x[1] + f[2] * x[2]);
      gx[1] += gy[1] * f[1] + gy[2] * 2.0 * f[2] * x[1];
      gx[2] += gy[2] * f[1];
      break;
    default:
      gx[0] += gy[0] * f[1] + gy[1] * f[2] * x[1] +
               gy[2] * (f[3] * x[1] * x[1] + f[2] * x[2]) +
               gy[3] * (f[4] * x[1] * x[1] * x[1] + 3.0 * f[3] * x[1] * x[2] + f[2] * x[3]);
      gx[1] += gy[1] * f[1] + gy[2] * 2.0 * f[2] * x[1] +
               gy[3] * (3.0 * f[3] * x[1] * x[1] + 3.0 * f[2] * x[2]);
      gx[2] += gy[2] * f[1] + gy[3] * 3.0 * f[2] * x[1];
      gx[3] += gy[3] * f[1];
      break;
  }
}

inline constexpr double kBinomial[4][4] = {
    {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};

}  // namespace kernel

}  // namespace abpinn::diff

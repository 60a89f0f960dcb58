// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace pinnflow::ad {

// Raised when an operation is evaluated outside its derivative domain
// (log of a nonpositive value, division by zero, ...).
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& op, double value)
      : std::runtime_error("derivative domain error in '" + op +
                           "' at value " + std::to_string(value)) {}
};

// Second-order jet over up to three active inputs: a value, its gradient and
// the upper triangle of its symmetric Hessian, all propagated by the exact
// chain rule. T is double for plain evaluation or Var for tape-recorded
// evaluation (which makes parameter gradients of jet expressions exact).
template <class T>
struct Jet {
  static constexpr int kMaxDim = 3;
  static constexpr int kMaxTri = 6;

  int dim = 0;
  T v{};
  std::array<T, kMaxDim> g{};
  std::array<T, kMaxTri> h{};  // packed upper triangle, row-major

  Jet() = default;
  explicit Jet(int d) : dim(d) { assert(d >= 0 && d <= kMaxDim); }
  Jet(int d, T value) : dim(d), v(value) {}

  static constexpr int tri(int d) { return d * (d + 1) / 2; }
  int hsize() const { return tri(dim); }

  // packed index of (i, j) with i <= j
  static int hindex(int i, int j, int d) {
    assert(0 <= i && i <= j && j < d);
    return i * d - i * (i - 1) / 2 + (j - i);
  }
  const T& hess(int i, int j) const {
    if (i > j) std::swap(i, j);
    return h[hindex(i, j, dim)];
  }
  T& hess(int i, int j) {
    if (i > j) std::swap(i, j);
    return h[hindex(i, j, dim)];
  }
};

using Jet2 = Jet<double>;

// Seeds jets for a coordinate vector. Indices in `active` carry unit
// gradients (in the order given); all other coordinates are carried as
// constants with zero derivatives.
inline std::vector<Jet2> seed_inputs(std::span<const double> coords,
                                     std::span<const int> active) {
  if (active.empty()) throw std::invalid_argument("seed_inputs: empty active set");
  if (active.size() > Jet2::kMaxDim)
    throw std::invalid_argument("seed_inputs: more than 3 active inputs");
  const int dim = static_cast<int>(active.size());
  std::vector<Jet2> jets(coords.size(), Jet2(dim));
  for (std::size_t i = 0; i < coords.size(); ++i) jets[i].v = coords[i];
  for (int a = 0; a < dim; ++a) {
    const int idx = active[a];
    if (idx < 0 || static_cast<std::size_t>(idx) >= coords.size())
      throw std::invalid_argument("seed_inputs: active index out of bounds");
    jets[idx].g[a] = 1.0;
  }
  return jets;
}

// ---- binary arithmetic -----------------------------------------------------

template <class T>
Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
  assert(a.dim == b.dim);
  Jet<T> out(a.dim);
  out.v = a.v + b.v;
  for (int i = 0; i < a.dim; ++i) out.g[i] = a.g[i] + b.g[i];
  for (int p = 0; p < a.hsize(); ++p) out.h[p] = a.h[p] + b.h[p];
  return out;
}

template <class T>
Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
  assert(a.dim == b.dim);
  Jet<T> out(a.dim);
  out.v = a.v - b.v;
  for (int i = 0; i < a.dim; ++i) out.g[i] = a.g[i] - b.g[i];
  for (int p = 0; p < a.hsize(); ++p) out.h[p] = a.h[p] - b.h[p];
  return out;
}

template <class T>
Jet<T> operator-(const Jet<T>& a) {
  Jet<T> out(a.dim);
  out.v = -a.v;
  for (int i = 0; i < a.dim; ++i) out.g[i] = -a.g[i];
  for (int p = 0; p < a.hsize(); ++p) out.h[p] = -a.h[p];
  return out;
}

// product rule to second order:
//   (ab)'  = a'b + ab'
//   (ab)'' = a''b + a'b' + b'a' + ab''
template <class T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  assert(a.dim == b.dim);
  Jet<T> out(a.dim);
  out.v = a.v * b.v;
  for (int i = 0; i < a.dim; ++i) out.g[i] = a.g[i] * b.v + a.v * b.g[i];
  int p = 0;
  for (int i = 0; i < a.dim; ++i)
    for (int j = i; j < a.dim; ++j, ++p)
      out.h[p] = a.h[p] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[p];
  return out;
}

// ---- scalar mixing ----------------------------------------------------------

template <class T>
Jet<T> operator+(const Jet<T>& a, double c) {
  Jet<T> out = a;
  out.v = a.v + c;
  return out;
}
template <class T>
Jet<T> operator+(double c, const Jet<T>& a) { return a + c; }

template <class T>
Jet<T> operator-(const Jet<T>& a, double c) { return a + (-c); }
template <class T>
Jet<T> operator-(double c, const Jet<T>& a) { return (-a) + c; }

template <class T>
Jet<T> operator*(const Jet<T>& a, double c) {
  Jet<T> out(a.dim);
  out.v = a.v * c;
  for (int i = 0; i < a.dim; ++i) out.g[i] = a.g[i] * c;
  for (int p = 0; p < a.hsize(); ++p) out.h[p] = a.h[p] * c;
  return out;
}
template <class T>
Jet<T> operator*(double c, const Jet<T>& a) { return a * c; }

template <class T>
Jet<T> operator/(const Jet<T>& a, double c) { return a * (1.0 / c); }

// scaling by a scalar of the carrier type (a tape Var acting as a constant
// with respect to the jet's active inputs, e.g. a network parameter)
template <class T>
  requires(!std::is_same_v<T, double>)
Jet<T> operator*(const Jet<T>& a, const T& c) {
  Jet<T> out(a.dim);
  out.v = a.v * c;
  for (int i = 0; i < a.dim; ++i) out.g[i] = a.g[i] * c;
  for (int p = 0; p < a.hsize(); ++p) out.h[p] = a.h[p] * c;
  return out;
}
template <class T>
  requires(!std::is_same_v<T, double>)
Jet<T> operator*(const T& c, const Jet<T>& a) { return a * c; }
template <class T>
  requires(!std::is_same_v<T, double>)
Jet<T> operator+(const Jet<T>& a, const T& c) {
  Jet<T> out = a;
  out.v = a.v + c;
  return out;
}
template <class T>
  requires(!std::is_same_v<T, double>)
Jet<T> operator+(const T& c, const Jet<T>& a) { return a + c; }

// ---- unary chain rule (Faa di Bruno to order 2) ------------------------------
//   y = f(u):  y' = f'(u) u',  y'' = f'(u) u'' + f''(u) u' u'
template <class T>
Jet<T> unary_chain(const Jet<T>& x, T f0, T f1, T f2) {
  Jet<T> out(x.dim);
  out.v = f0;
  for (int i = 0; i < x.dim; ++i) out.g[i] = f1 * x.g[i];
  int p = 0;
  for (int i = 0; i < x.dim; ++i)
    for (int j = i; j < x.dim; ++j, ++p)
      out.h[p] = f1 * x.h[p] + f2 * (x.g[i] * x.g[j]);
  return out;
}

namespace detail {
inline double scalar_value(double x) { return x; }
template <class T>
double scalar_value(const T& x) { return x.val(); }  // tape Vars and the like
}  // namespace detail

template <class T>
Jet<T> sin(const Jet<T>& x) {
  using std::cos;
  using std::sin;
  T s = sin(x.v);
  T c = cos(x.v);
  return unary_chain(x, s, c, -s);
}

template <class T>
Jet<T> cos(const Jet<T>& x) {
  using std::cos;
  using std::sin;
  T c = cos(x.v);
  T s = sin(x.v);
  return unary_chain(x, c, -s, -c);
}

template <class T>
Jet<T> tanh(const Jet<T>& x) {
  using std::tanh;
  T t = tanh(x.v);
  T s = 1.0 - t * t;
  return unary_chain(x, t, s, -2.0 * (t * s));
}

template <class T>
Jet<T> exp(const Jet<T>& x) {
  using std::exp;
  T e = exp(x.v);
  return unary_chain(x, e, e, e);
}

template <class T>
Jet<T> log(const Jet<T>& x) {
  using std::log;
  if (detail::scalar_value(x.v) <= 0.0)
    throw DomainError("log", detail::scalar_value(x.v));
  T f0 = log(x.v);
  T f1 = 1.0 / x.v;
  return unary_chain(x, f0, f1, -(f1 * f1));
}

template <class T>
Jet<T> sqrt(const Jet<T>& x) {
  using std::sqrt;
  if (detail::scalar_value(x.v) <= 0.0)
    throw DomainError("sqrt", detail::scalar_value(x.v));
  T r = sqrt(x.v);
  T f1 = 0.5 / r;
  return unary_chain(x, r, f1, -0.5 * (f1 / x.v));
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sigmoid(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x))
                 : std::exp(x) / (1.0 + std::exp(x));
}

// softplus(x) = log(1 + exp(x)); first derivative is the logistic sigmoid.
template <class T>
Jet<T> softplus(const Jet<T>& x) {
  T f0 = softplus(x.v);
  T s = sigmoid(x.v);
  return unary_chain(x, f0, s, s * (1.0 - s));
}

template <class T>
Jet<T> recip(const Jet<T>& x) {
  if (detail::scalar_value(x.v) == 0.0)
    throw DomainError("div", detail::scalar_value(x.v));
  T inv = 1.0 / x.v;
  T inv2 = inv * inv;
  return unary_chain(x, inv, -inv2, 2.0 * (inv2 * inv));
}

template <class T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  return a * recip(b);
}
template <class T>
Jet<T> operator/(double c, const Jet<T>& b) { return recip(b) * c; }

template <class T>
Jet<T> pow(const Jet<T>& x, double p) {
  using std::pow;
  if (p == 0.0) return unary_chain(x, x.v * 0.0 + 1.0, x.v * 0.0, x.v * 0.0);
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  const double xv = detail::scalar_value(x.v);
  const bool integral = p == std::floor(p);
  if ((xv < 0.0 && !integral) || (xv == 0.0 && p < 2.0))
    throw DomainError("pow", xv);
  T f0 = pow(x.v, p);
  T f1 = p * pow(x.v, p - 1.0);
  T f2 = (p * (p - 1.0)) * pow(x.v, p - 2.0);
  return unary_chain(x, f0, f1, f2);
}

// max(x, floor) with the convention that the clamped branch is a constant
// (zero derivatives). Keeps residual evaluations finite for any k, eps >= 0.
template <class T>
Jet<T> clamp_min(const Jet<T>& x, double floor) {
  if (detail::scalar_value(x.v) >= floor) return x;
  Jet<T> out(x.dim);
  out.v = x.v * 0.0 + floor;  // preserves tape membership when T is Var
  for (int i = 0; i < x.dim; ++i) out.g[i] = x.g[i] * 0.0;
  for (int p = 0; p < x.hsize(); ++p) out.h[p] = x.h[p] * 0.0;
  return out;
}

}  // namespace pinnflow::ad

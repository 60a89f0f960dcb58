// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinnflow/jet.hpp"

namespace pinnflow::ad {

class Tape;

// Handle to one tape node. Cheap to copy; arithmetic on Vars appends
// primitive records to the owning tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t idx = -1;

  Var() = default;
  Var(Tape* t, std::int32_t i) : tape(t), idx(i) {}
  double val() const;
};

enum class Op : std::uint8_t {
  kConst, kInput,
  kAdd, kSub, kMul, kDiv,
  kNeg, kTanh, kSin, kCos, kExp, kLog, kSoftplus, kPowC, kSqrt,
  kAffine,  // a*x + b with constants folded into the local partial
};

const char* op_name(Op op);

class TapeNanError : public std::runtime_error {
 public:
  TapeNanError(std::size_t node, Op op)
      : std::runtime_error("NaN adjoint at tape node " + std::to_string(node) +
                           " (" + op_name(op) + ")"),
        node_index(node) {}
  std::size_t node_index;
};

// Append-only record of primitive operations with precomputed local
// partials. Parents always precede children, so one reverse sweep
// accumulates exact adjoints.
class Tape {
 public:
  struct Node {
    Op op;
    std::int32_t p0 = -1, p1 = -1;
    double d0 = 0.0, d1 = 0.0;  // local partials w.r.t. parents
  };

  Var input(double value) { return push_leaf(Op::kInput, value); }
  Var constant(double value) { return push_leaf(Op::kConst, value); }

  Var push_unary(Op op, const Var& a, double value, double d0) {
    assert(a.tape == this);
    nodes_.push_back({op, a.idx, -1, d0, 0.0});
    vals_.push_back(value);
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
  }

  Var push_binary(Op op, const Var& a, const Var& b, double value, double d0,
                  double d1) {
    assert(a.tape == this && b.tape == this);
    nodes_.push_back({op, a.idx, b.idx, d0, d1});
    vals_.push_back(value);
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
  }

  double value(std::int32_t idx) const { return vals_[idx]; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  bool empty() const { return nodes_.empty(); }

  void clear() {
    nodes_.clear();
    vals_.clear();
    adj_.clear();
  }

  // Reverse sweep from a scalar root. Adjoints are reset on entry, so the
  // tape can be swept repeatedly from different roots.
  void backward(const Var& root) {
    if (root.tape != this || root.idx < 0 ||
        static_cast<std::size_t>(root.idx) >= nodes_.size())
      throw std::invalid_argument("backward: root is not a node of this tape");
    adj_.assign(nodes_.size(), 0.0);
    adj_[root.idx] = 1.0;
    for (std::int32_t i = root.idx; i >= 0; --i) {
      const double a = adj_[i];
      if (a == 0.0) continue;
      if (a != a) throw TapeNanError(static_cast<std::size_t>(i), nodes_[i].op);
      const Node& n = nodes_[i];
      if (n.p0 >= 0) adj_[n.p0] += n.d0 * a;
      if (n.p1 >= 0) adj_[n.p1] += n.d1 * a;
    }
  }

  double adjoint(const Var& v) const {
    assert(v.tape == this);
    return adj_.empty() ? 0.0 : adj_[v.idx];
  }

 private:
  Var push_leaf(Op op, double value) {
    nodes_.push_back({op, -1, -1, 0.0, 0.0});
    vals_.push_back(value);
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
  }

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> adj_;
};

inline double Var::val() const { return tape->value(idx); }

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kConst: return "const";
    case Op::kInput: return "input";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kTanh: return "tanh";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSoftplus: return "softplus";
    case Op::kPowC: return "pow";
    case Op::kSqrt: return "sqrt";
    case Op::kAffine: return "affine";
  }
  return "?";
}

// ---- Var arithmetic ---------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
  return a.tape->push_binary(Op::kAdd, a, b, a.val() + b.val(), 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return a.tape->push_binary(Op::kSub, a, b, a.val() - b.val(), 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return a.tape->push_binary(Op::kMul, a, b, a.val() * b.val(), b.val(), a.val());
}
inline Var operator/(const Var& a, const Var& b) {
  const double bv = b.val();
  if (bv == 0.0) throw DomainError("div", bv);
  const double q = a.val() / bv;
  return a.tape->push_binary(Op::kDiv, a, b, q, 1.0 / bv, -q / bv);
}
inline Var operator-(const Var& a) {
  return a.tape->push_unary(Op::kNeg, a, -a.val(), -1.0);
}

// constants fold into a single affine record
inline Var operator+(const Var& a, double c) {
  return a.tape->push_unary(Op::kAffine, a, a.val() + c, 1.0);
}
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return a + (-c); }
inline Var operator-(double c, const Var& a) {
  return a.tape->push_unary(Op::kAffine, a, c - a.val(), -1.0);
}
inline Var operator*(const Var& a, double c) {
  return a.tape->push_unary(Op::kAffine, a, a.val() * c, c);
}
inline Var operator*(double c, const Var& a) { return a * c; }
inline Var operator/(const Var& a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, const Var& a) {
  const double av = a.val();
  if (av == 0.0) throw DomainError("div", av);
  const double q = c / av;
  return a.tape->push_unary(Op::kDiv, a, q, -q / av);
}

inline Var tanh(const Var& a) {
  const double t = std::tanh(a.val());
  return a.tape->push_unary(Op::kTanh, a, t, 1.0 - t * t);
}
inline Var sin(const Var& a) {
  return a.tape->push_unary(Op::kSin, a, std::sin(a.val()), std::cos(a.val()));
}
inline Var cos(const Var& a) {
  return a.tape->push_unary(Op::kCos, a, std::cos(a.val()), -std::sin(a.val()));
}
inline Var exp(const Var& a) {
  const double e = std::exp(a.val());
  return a.tape->push_unary(Op::kExp, a, e, e);
}
inline Var log(const Var& a) {
  const double av = a.val();
  if (av <= 0.0) throw DomainError("log", av);
  return a.tape->push_unary(Op::kLog, a, std::log(av), 1.0 / av);
}
inline Var softplus(const Var& a) {
  return a.tape->push_unary(Op::kSoftplus, a, softplus(a.val()),
                            sigmoid(a.val()));
}
inline Var sigmoid(const Var& a) {
  // lowered to primitives; rarely on hot paths
  return 1.0 / (1.0 + exp(-a));
}
inline Var sqrt(const Var& a) {
  const double av = a.val();
  if (av <= 0.0) throw DomainError("sqrt", av);
  const double r = std::sqrt(av);
  return a.tape->push_unary(Op::kSqrt, a, r, 0.5 / r);
}
inline Var pow(const Var& a, double p) {
  const double av = a.val();
  const bool integral = p == std::floor(p);
  if ((av < 0.0 && !integral) || (av == 0.0 && p < 1.0))
    throw DomainError("pow", av);
  return a.tape->push_unary(Op::kPowC, a, std::pow(av, p),
                            p * std::pow(av, p - 1.0));
}

// Flat gradient of a scalar root with respect to a parameter layout.
// Entries align one-to-one with `params`.
using ParamGradient = std::vector<double>;

inline ParamGradient reverse_grad(const Var& root, std::span<const Var> params) {
  Tape* tape = root.tape;
  if (tape == nullptr) throw std::invalid_argument("reverse_grad: detached root");
  tape->backward(root);
  ParamGradient grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    assert(params[i].tape == tape);
    grad[i] = tape->adjoint(params[i]);
  }
  return grad;
}

// Seeds a full jet (value, gradient, Hessian) as independent tape inputs.
// Used when a jet has been computed elsewhere and re-enters a taped
// expression as data.
inline Jet<Var> seed_jet(Tape& tape, const Jet2& j) {
  Jet<Var> out(j.dim);
  out.v = tape.input(j.v);
  for (int i = 0; i < j.dim; ++i) out.g[i] = tape.input(j.g[i]);
  for (int p = 0; p < j.hsize(); ++p) out.h[p] = tape.input(j.h[p]);
  return out;
}

}  // namespace pinnflow::ad

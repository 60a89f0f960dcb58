// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "pinnflow/jet.hpp"

namespace pinnflow::ad {

// A scalar field expressed over jets, so a single callable provides both
// values (the jet's value slot) and exact derivatives.
using JetField = std::function<Jet2(std::span<const Jet2>)>;

struct FdReport {
  int dim = 0;
  std::array<double, Jet2::kMaxDim> grad_err{};
  std::array<double, Jet2::kMaxTri> hess_err{};
  double max_rel_err_grad = 0.0;
  double max_rel_err_hess = 0.0;
};

namespace detail {
// |a-b| scaled by max(1, scale): relative for large magnitudes, absolute near
// zero. The scale is the infinity norm of the finite-difference block, so one
// near-zero component inside an otherwise large gradient or Hessian is not
// measured against its own roundoff noise.
inline double scaled_err(double a, double b, double scale) {
  return std::abs(a - b) / std::max(1.0, scale);
}
}  // namespace detail

// Compares a field's jet derivatives against central finite differences of
// its own values. Report-only: never throws on mismatch.
inline FdReport check_fd(const JetField& f, std::span<const double> point,
                         double h) {
  const int dim = static_cast<int>(point.size());
  std::vector<int> active(dim);
  for (int i = 0; i < dim; ++i) active[i] = i;

  auto value_at = [&](std::span<const double> p) {
    return f(seed_inputs(p, active)).v;
  };

  std::vector<double> p0(point.begin(), point.end());
  const Jet2 jet = f(seed_inputs(p0, active));
  const double f00 = jet.v;

  auto shifted = [&](int i, double di, int j = -1, double dj = 0.0) {
    std::vector<double> p = p0;
    p[i] += di;
    if (j >= 0) p[j] += dj;
    return value_at(p);
  };

  FdReport rep;
  rep.dim = dim;
  std::array<double, Jet2::kMaxDim> fd_grad{};
  std::array<double, Jet2::kMaxTri> fd_hess{};
  double gscale = 0.0, hscale = 0.0;
  for (int i = 0; i < dim; ++i) {
    fd_grad[i] = (shifted(i, h) - shifted(i, -h)) / (2.0 * h);
    gscale = std::max(gscale, std::abs(fd_grad[i]));
  }
  int p = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j, ++p) {
      if (i == j) {
        fd_hess[p] = (shifted(i, h) - 2.0 * f00 + shifted(i, -h)) / (h * h);
      } else {
        fd_hess[p] = (shifted(i, h, j, h) - shifted(i, h, j, -h) -
                      shifted(i, -h, j, h) + shifted(i, -h, j, -h)) /
                     (4.0 * h * h);
      }
      hscale = std::max(hscale, std::abs(fd_hess[p]));
    }
  }
  for (int i = 0; i < dim; ++i) {
    rep.grad_err[i] = detail::scaled_err(jet.g[i], fd_grad[i], gscale);
    rep.max_rel_err_grad = std::max(rep.max_rel_err_grad, rep.grad_err[i]);
  }
  for (int q = 0; q < Jet2::tri(dim); ++q) {
    rep.hess_err[q] = detail::scaled_err(jet.h[q], fd_hess[q], hscale);
    rep.max_rel_err_hess = std::max(rep.max_rel_err_hess, rep.hess_err[q]);
  }
  return rep;
}

}  // namespace pinnflow::ad

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "pinnflow/data.hpp"
#include "pinnflow/network.hpp"
#include "pinnflow/physics.hpp"

namespace pinnflow {

// PDE loss weights, in the order momentum, continuity, k, eps. Data and
// boundary terms carry unit weights.
struct LossWeights {
  double mom = 1.0, cont = 1.0, k = 1.0, eps = 1.0;
};

struct DataLoss {
  double u = 0, v = 0, p = 0, k = 0, eps = 0;
  double total() const { return u + v + p + k + eps; }
};

// unweighted means of the per-point PDE terms
struct PdeLoss {
  double mom = 0, cont = 0, k = 0, eps = 0;
};

struct LossBreakdown {
  double data_u = 0, data_v = 0, data_p = 0, data_k = 0, data_eps = 0;
  double bc = 0;
  double mom = 0, cont = 0, k = 0, eps = 0;  // lambda-weighted PDE components
  double raw_mom = 0, raw_cont = 0, raw_k = 0, raw_eps = 0;
  double total = 0;
  LossWeights lambdas;
};

// Per-variable MSE over a batch; the eps loss compares the net's native
// log-eps output against log of the data when log_eps is set.
DataLoss data_loss(std::span<const FieldValues> pred,
                   std::span<const FieldSample> samples, bool log_eps = true);

// Tag-wise MSE against the stored boundary targets, summed with unit
// weights: velocity at inlets and walls, pressure at outlets, and
// (v, du/dy) on symmetry planes.
double bc_loss(std::span<const FieldJets2> pred,
               std::span<const FieldSample> samples);

// per-point PDE terms; residuals are already forcing-corrected
template <class T>
T pde_term_mom(const ResidualBundle_<T>& r) {
  return r.mom_x * r.mom_x + r.mom_y * r.mom_y;
}
template <class T>
T pde_term_cont(const ResidualBundle_<T>& r) {
  return r.cont * r.cont;
}
template <class T>
T pde_term_k(const ResidualBundle_<T>& r) {
  return r.k * r.k;
}
// log damping keeps large eps residuals from dominating the total
template <class T>
T pde_term_eps(const ResidualBundle_<T>& r, bool log_eps) {
  using std::log;
  const T sq = r.eps * r.eps;
  return log_eps ? log(1.0 + sq) : sq;
}

PdeLoss pde_loss(std::span<const ResidualBundle> residuals, bool log_eps = true);
double pde_total(const PdeLoss& raw, const LossWeights& w);

// lambda_i = 1 / (m_i + delta), rescaled so the largest lambda is one
LossWeights normalize_lambdas(const PdeLoss& raw_means);

LossBreakdown assemble_breakdown(const DataLoss& d, double bc,
                                 const PdeLoss& raw, const LossWeights& w);

std::string breakdown_csv_header();
std::string breakdown_csv_row(int step, int phase, double lr,
                              const LossBreakdown& b);

}  // namespace pinnflow

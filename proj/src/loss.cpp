// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/loss.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pinnflow {

DataLoss data_loss(std::span<const FieldValues> pred,
                   std::span<const FieldSample> samples, bool log_eps) {
  if (samples.empty()) throw std::invalid_argument("data_loss: empty batch");
  if (pred.size() != samples.size())
    throw std::invalid_argument("data_loss: prediction/sample size mismatch");
  DataLoss acc;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& f = pred[i];
    const auto& s = samples[i];
    const double eu = f.u - s.u, ev = f.v - s.v, ep = f.p - s.p, ek = f.k - s.k;
    const double ee = log_eps ? f.eps_raw - std::log(s.eps) : f.eps - s.eps;
    acc.u += eu * eu;
    acc.v += ev * ev;
    acc.p += ep * ep;
    acc.k += ek * ek;
    acc.eps += ee * ee;
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  acc.u *= inv;
  acc.v *= inv;
  acc.p *= inv;
  acc.k *= inv;
  acc.eps *= inv;
  return acc;
}

double bc_loss(std::span<const FieldJets2> pred,
               std::span<const FieldSample> samples) {
  if (pred.size() != samples.size())
    throw std::invalid_argument("bc_loss: prediction/sample size mismatch");
  double sse[5] = {0, 0, 0, 0, 0};
  std::size_t count[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto& f = pred[i];
    const int t = static_cast<int>(s.tag);
    ++count[t];
    switch (s.tag) {
      case Tag::kInlet:
      case Tag::kWall: {
        const double eu = f.u.v - s.u, ev = f.v.v - s.v;
        sse[t] += eu * eu + ev * ev;
        break;
      }
      case Tag::kOutlet: {
        const double ep = f.p.v - s.p;
        sse[t] += ep * ep;
        break;
      }
      case Tag::kSymmetry: {
        const double ev = f.v.v - s.v;
        const double edudy = f.u.g[1];  // zero normal gradient of u
        sse[t] += ev * ev + edudy * edudy;
        break;
      }
      case Tag::kInterior:
        throw std::invalid_argument("bc_loss: interior row in boundary batch");
    }
  }
  double total = 0.0;
  for (int t = 0; t < 5; ++t)
    if (count[t] > 0) total += sse[t] / static_cast<double>(count[t]);
  return total;
}

PdeLoss pde_loss(std::span<const ResidualBundle> residuals, bool log_eps) {
  if (residuals.empty()) throw std::invalid_argument("pde_loss: empty batch");
  PdeLoss acc;
  for (const auto& r : residuals) {
    acc.mom += pde_term_mom(r);
    acc.cont += pde_term_cont(r);
    acc.k += pde_term_k(r);
    acc.eps += pde_term_eps(r, log_eps);
  }
  const double inv = 1.0 / static_cast<double>(residuals.size());
  acc.mom *= inv;
  acc.cont *= inv;
  acc.k *= inv;
  acc.eps *= inv;
  return acc;
}

double pde_total(const PdeLoss& raw, const LossWeights& w) {
  return w.mom * raw.mom + w.cont * raw.cont + w.k * raw.k + w.eps * raw.eps;
}

LossWeights normalize_lambdas(const PdeLoss& m) {
  constexpr double kDelta = 1e-8;
  LossWeights w;
  w.mom = 1.0 / (m.mom + kDelta);
  w.cont = 1.0 / (m.cont + kDelta);
  w.k = 1.0 / (m.k + kDelta);
  w.eps = 1.0 / (m.eps + kDelta);
  const double top = std::max({w.mom, w.cont, w.k, w.eps});
  w.mom /= top;
  w.cont /= top;
  w.k /= top;
  w.eps /= top;
  return w;
}

LossBreakdown assemble_breakdown(const DataLoss& d, double bc,
                                 const PdeLoss& raw, const LossWeights& w) {
  LossBreakdown b;
  b.data_u = d.u;
  b.data_v = d.v;
  b.data_p = d.p;
  b.data_k = d.k;
  b.data_eps = d.eps;
  b.bc = bc;
  b.raw_mom = raw.mom;
  b.raw_cont = raw.cont;
  b.raw_k = raw.k;
  b.raw_eps = raw.eps;
  b.lambdas = w;
  b.mom = w.mom * raw.mom;
  b.cont = w.cont * raw.cont;
  b.k = w.k * raw.k;
  b.eps = w.eps * raw.eps;
  b.total = d.total() + bc + b.mom + b.cont + b.k + b.eps;
  return b;
}

std::string breakdown_csv_header() {
  return "step,phase,lr,data_u,data_v,data_p,data_k,data_eps,bc,"
         "mom,cont,k,eps,raw_mom,raw_cont,raw_k,raw_eps,"
         "lam_mom,lam_cont,lam_k,lam_eps,total";
}

std::string breakdown_csv_row(int step, int phase, double lr,
                              const LossBreakdown& b) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%.17g,%.17g,%.17g,%.17g",
                step, phase, lr, b.data_u, b.data_v, b.data_p, b.data_k,
                b.data_eps, b.bc, b.mom, b.cont, b.k, b.eps, b.raw_mom,
                b.raw_cont, b.raw_k, b.raw_eps, b.lambdas.mom, b.lambdas.cont,
                b.lambdas.k, b.lambdas.eps, b.total);
  return buf;
}

}  // namespace pinnflow

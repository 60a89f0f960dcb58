// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "pinnflow/jet.hpp"
#include "pinnflow/network.hpp"
#include "pinnflow/tape.hpp"

namespace pinnflow {

struct FluidProps {
  double rho = 1.0;  // nondimensional density
  double mu = 1.0;   // nondimensional molecular viscosity, 1/Re after scaling
};

struct TurbConstants {
  double c_mu = 0.09;
  double c1 = 1.44;
  double c2 = 1.92;
  double sigma_k = 1.0;
  double sigma_eps = 1.3;
  double eps_floor = 1e-10;  // clamp for k and eps denominators
  enum class EpsSign { kStandard, kPaper };
  EpsSign eps_destruction_sign = EpsSign::kStandard;
};

// Characteristic length, inlet velocity and dynamic pressure; k and eps
// scales follow from the velocity scale.
struct RefScales {
  double length = 1.0;
  double u_inlet = 1.0;
  double rho = 1.0;

  double pressure_scale() const { return rho * u_inlet * u_inlet; }
  double k_scale() const { return u_inlet * u_inlet; }
  double eps_scale() const { return u_inlet * u_inlet * u_inlet / length; }
};

double reynolds(double rho, double u_inlet, double length, double mu);

// mu_t = c_mu * k^2 / max(eps, floor); returns (mu_t, mu_eff = mu + mu_t).
std::pair<double, double> eddy_viscosity(double k, double eps,
                                         const TurbConstants& tc, double mu);

struct FieldPoint {
  double x = 0, y = 0, u = 0, v = 0, p = 0, k = 0, eps = 0;
};

FieldPoint nondimensionalize(const FieldPoint& raw, const RefScales& s);
FieldPoint denormalize(const FieldPoint& hat, const RefScales& s);

template <class T>
struct ResidualBundle_ {
  T cont{}, mom_x{}, mom_y{}, k{}, eps{};
};
using ResidualBundle = ResidualBundle_<double>;

namespace detail_physics {

using ad::clamp_min;

inline double clamp_min_scalar(double x, double floor) {
  return x < floor ? floor : x;
}
inline ad::Var clamp_min_scalar(const ad::Var& x, double floor) {
  return x.val() < floor ? x * 0.0 + floor : x;
}

template <class T>
T laplacian(const ad::Jet<T>& j) {
  return j.hess(0, 0) + j.hess(1, 1);
}

// turbulent viscosity as a jet, so diffusion terms can use its gradient
template <class T>
ad::Jet<T> mu_t_jet(const FieldJets<T>& f, const TurbConstants& tc) {
  return (f.k * f.k) * tc.c_mu / clamp_min(f.eps, tc.eps_floor);
}

template <class T>
T production_from(const FieldJets<T>& f, const T& mu_t) {
  const T ux = f.u.g[0], uy = f.u.g[1], vx = f.v.g[0], vy = f.v.g[1];
  const T shear = uy + vx;
  return mu_t * (2.0 * (ux * ux) + 2.0 * (vy * vy) + shear * shear);
}

}  // namespace detail_physics

// div(u) for incompressible flow
template <class T>
T continuity_residual(const FieldJets<T>& f) {
  return f.u.g[0] + f.v.g[1];
}

// rho (u . grad) u + grad p - mu_eff lap(u), with pointwise mu_eff exactly as
// the governing equations state it (no conservative-form product rule).
template <class T>
std::pair<T, T> momentum_residual(const FieldJets<T>& f, const FluidProps& fp,
                                  const TurbConstants& tc) {
  const ad::Jet<T> mut = detail_physics::mu_t_jet(f, tc);
  const T mu_eff = mut.v + fp.mu;
  T rx = fp.rho * (f.u.v * f.u.g[0] + f.v.v * f.u.g[1]) + f.p.g[0] -
         mu_eff * detail_physics::laplacian(f.u);
  T ry = fp.rho * (f.u.v * f.v.g[0] + f.v.v * f.v.g[1]) + f.p.g[1] -
         mu_eff * detail_physics::laplacian(f.v);
  return {rx, ry};
}

// Boussinesq strain-rate production; P_eps reuses P_k.
template <class T>
std::pair<T, T> production_terms(const FieldJets<T>& f, const TurbConstants& tc) {
  const ad::Jet<T> mut = detail_physics::mu_t_jet(f, tc);
  T pk = detail_physics::production_from(f, mut.v);
  return {pk, pk};
}

namespace detail_physics {

// convection - diffusion common to both transported scalars; phi is k or eps
template <class T>
T scalar_transport_lhs(const FieldJets<T>& f, const ad::Jet<T>& phi,
                       const ad::Jet<T>& mut, double sigma,
                       const FluidProps& fp) {
  const T conv = fp.rho * (f.u.v * phi.g[0] + f.v.v * phi.g[1]);
  const T diff = (mut.v / sigma + fp.mu) * laplacian(phi) +
                 (mut.g[0] * phi.g[0] + mut.g[1] * phi.g[1]) / sigma;
  return conv - diff;
}

}  // namespace detail_physics

template <class T>
T k_residual(const FieldJets<T>& f, const FluidProps& fp,
             const TurbConstants& tc) {
  const ad::Jet<T> mut = detail_physics::mu_t_jet(f, tc);
  const T pk = detail_physics::production_from(f, mut.v);
  return detail_physics::scalar_transport_lhs(f, f.k, mut, tc.sigma_k, fp) -
         pk + f.eps.v;
}

// Source sign is configurable: the standard closure destroys with
// -c2 rho eps^2 / k, while the paper-literal variant flips the c2 term.
template <class T>
T eps_residual(const FieldJets<T>& f, const FluidProps& fp,
               const TurbConstants& tc) {
  const ad::Jet<T> mut = detail_physics::mu_t_jet(f, tc);
  const T pk = detail_physics::production_from(f, mut.v);
  const T ratio =
      f.eps.v / detail_physics::clamp_min_scalar(f.k.v, tc.eps_floor);
  T source = tc.eps_destruction_sign == TurbConstants::EpsSign::kStandard
                 ? (tc.c1 * pk - (tc.c2 * fp.rho) * f.eps.v) * ratio
                 : (tc.c1 * pk + tc.c2 * f.eps.v) * ratio;
  return detail_physics::scalar_transport_lhs(f, f.eps, mut, tc.sigma_eps, fp) -
         source;
}

// All five residuals with shared subexpressions evaluated once.
template <class T>
ResidualBundle_<T> rans_residuals(const FieldJets<T>& f, const FluidProps& fp,
                                  const TurbConstants& tc) {
  const ad::Jet<T> mut = detail_physics::mu_t_jet(f, tc);
  const T mu_eff = mut.v + fp.mu;
  const T pk = detail_physics::production_from(f, mut.v);

  ResidualBundle_<T> r;
  r.cont = f.u.g[0] + f.v.g[1];
  r.mom_x = fp.rho * (f.u.v * f.u.g[0] + f.v.v * f.u.g[1]) + f.p.g[0] -
            mu_eff * detail_physics::laplacian(f.u);
  r.mom_y = fp.rho * (f.u.v * f.v.g[0] + f.v.v * f.v.g[1]) + f.p.g[1] -
            mu_eff * detail_physics::laplacian(f.v);
  r.k = detail_physics::scalar_transport_lhs(f, f.k, mut, tc.sigma_k, fp) - pk +
        f.eps.v;
  const T ratio =
      f.eps.v / detail_physics::clamp_min_scalar(f.k.v, tc.eps_floor);
  const T source =
      tc.eps_destruction_sign == TurbConstants::EpsSign::kStandard
          ? (tc.c1 * pk - (tc.c2 * fp.rho) * f.eps.v) * ratio
          : (tc.c1 * pk + tc.c2 * f.eps.v) * ratio;
  r.eps =
      detail_physics::scalar_transport_lhs(f, f.eps, mut, tc.sigma_eps, fp) -
      source;
  return r;
}

}  // namespace pinnflow

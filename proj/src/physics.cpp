// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/physics.hpp"

#include <stdexcept>

namespace pinnflow {

double reynolds(double rho, double u_inlet, double length, double mu) {
  if (rho <= 0 || u_inlet <= 0 || length <= 0 || mu <= 0)
    throw std::invalid_argument("reynolds: all inputs must be positive");
  return rho * u_inlet * length / mu;
}

std::pair<double, double> eddy_viscosity(double k, double eps,
                                         const TurbConstants& tc, double mu) {
  const double mu_t =
      tc.c_mu * k * k / detail_physics::clamp_min_scalar(eps, tc.eps_floor);
  return {mu_t, mu + mu_t};
}

FieldPoint nondimensionalize(const FieldPoint& r, const RefScales& s) {
  FieldPoint out;
  out.x = r.x / s.length;
  out.y = r.y / s.length;
  out.u = r.u / s.u_inlet;
  out.v = r.v / s.u_inlet;
  out.p = r.p / s.pressure_scale();
  out.k = r.k / s.k_scale();
  out.eps = r.eps / s.eps_scale();
  return out;
}

FieldPoint denormalize(const FieldPoint& h, const RefScales& s) {
  FieldPoint out;
  out.x = h.x * s.length;
  out.y = h.y * s.length;
  out.u = h.u * s.u_inlet;
  out.v = h.v * s.u_inlet;
  out.p = h.p * s.pressure_scale();
  out.k = h.k * s.k_scale();
  out.eps = h.eps * s.eps_scale();
  return out;
}

}  // namespace pinnflow

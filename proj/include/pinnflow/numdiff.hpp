// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

namespace pinnflow::numdiff {

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

// second-order central stencils
inline double d1(const Fn1& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}
inline double d2(const Fn1& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// fourth-order central stencils
inline double d1_o4(const Fn1& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) /
         (12.0 * h);
}
inline double d2_o4(const Fn1& f, double x, double h) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) -
          f(x - 2 * h)) /
         (12.0 * h * h);
}

// partial derivatives of a bivariate field, fourth order
inline double dx_o4(const Fn2& f, double x, double y, double h) {
  return d1_o4([&](double t) { return f(t, y); }, x, h);
}
inline double dy_o4(const Fn2& f, double x, double y, double h) {
  return d1_o4([&](double t) { return f(x, t); }, y, h);
}
inline double dxx_o4(const Fn2& f, double x, double y, double h) {
  return d2_o4([&](double t) { return f(t, y); }, x, h);
}
inline double dyy_o4(const Fn2& f, double x, double y, double h) {
  return d2_o4([&](double t) { return f(x, t); }, y, h);
}
inline double dxy_o4(const Fn2& f, double x, double y, double h) {
  return d1_o4([&](double t) { return dy_o4(f, t, y, h); }, x, h);
}

}  // namespace pinnflow::numdiff

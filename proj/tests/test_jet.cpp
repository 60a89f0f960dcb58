// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pinnflow/fdcheck.hpp"
#include "pinnflow/jet.hpp"
#include "pinnflow/rng.hpp"
#include "support/random_expr.hpp"

using namespace pinnflow;
using namespace pinnflow::ad;

TEST_CASE("seeding identities") {
  const double coords2[] = {2.0, 3.0};
  const int active2[] = {0, 1};
  auto jets = seed_inputs(coords2, active2);
  CHECK(jets[0].v == 2.0);
  CHECK(jets[1].v == 3.0);
  CHECK(jets[0].g[0] == 1.0);
  CHECK(jets[0].g[1] == 0.0);
  CHECK(jets[1].g[0] == 0.0);
  CHECK(jets[1].g[1] == 1.0);
  for (int p = 0; p < 3; ++p) {
    CHECK(jets[0].h[p] == 0.0);
    CHECK(jets[1].h[p] == 0.0);
  }
}

TEST_CASE("inactive input carries zero derivatives") {
  const double coords[] = {1.0, 0.0, 5600.0};
  const int active[] = {0, 1};
  auto jets = seed_inputs(coords, active);
  CHECK(jets[2].v == 5600.0);
  CHECK(jets[2].g[0] == 0.0);
  CHECK(jets[2].g[1] == 0.0);
  CHECK(jets[2].dim == 2);
}

TEST_CASE("degenerate single dimension") {
  const double coords[] = {0.7};
  const int active[] = {0};
  auto jets = seed_inputs(coords, active);
  CHECK(jets[0].dim == 1);
  CHECK(jets[0].g[0] == 1.0);
}

TEST_CASE("empty active set rejected") {
  const double coords[] = {1.0};
  CHECK_THROWS_AS(seed_inputs(coords, {}), std::invalid_argument);
}

TEST_CASE("polynomial closed forms") {
  const double c[] = {3.0};
  const int a[] = {0};
  auto x = seed_inputs(c, a)[0];
  auto f = x * x;
  CHECK(f.v == 9.0);
  CHECK(f.g[0] == 6.0);
  CHECK(f.h[0] == 2.0);
}

TEST_CASE("sin at zero") {
  const double c[] = {0.0};
  const int a[] = {0};
  auto f = sin(seed_inputs(c, a)[0]);
  CHECK(f.v == 0.0);
  CHECK(f.g[0] == 1.0);
  CHECK(f.h[0] == 0.0);
}

TEST_CASE("bilinear form x*y") {
  const double c[] = {2.0, 5.0};
  const int a[] = {0, 1};
  auto jets = seed_inputs(c, a);
  auto f = jets[0] * jets[1];
  CHECK(f.v == 10.0);
  CHECK(f.g[0] == 5.0);
  CHECK(f.g[1] == 2.0);
  CHECK(f.hess(0, 1) == 1.0);
  CHECK(f.hess(0, 0) == 0.0);
  CHECK(f.hess(1, 1) == 0.0);
}

TEST_CASE("domain violations raise") {
  const double c[] = {0.5};
  const int a[] = {0};
  auto x = seed_inputs(c, a)[0];
  CHECK_THROWS_AS(log(x - 1.0), DomainError);
  CHECK_THROWS_AS(x / (x - 0.5), DomainError);
  CHECK_THROWS_AS(pow(x - 1.0, 1.5), DomainError);
}

TEST_CASE("check_fd on tanh(3x+y)") {
  JetField f = [](std::span<const Jet2> in) {
    return tanh(in[0] * 3.0 + in[1]);
  };
  const double point[] = {0.1, 0.2};
  auto rep = check_fd(f, point, 1e-4);
  CHECK(rep.max_rel_err_grad < 1e-6);
  CHECK(rep.max_rel_err_hess < 1e-6);
}

TEST_CASE("check_fd on constant field") {
  JetField f = [](std::span<const Jet2> in) {
    return in[0] * 0.0 + 4.2;
  };
  const double point[] = {0.3, -0.4};
  auto rep = check_fd(f, point, 1e-4);
  CHECK(rep.max_rel_err_grad < 1e-12);
  CHECK(rep.max_rel_err_hess < 1e-9);
}

TEST_CASE("check_fd on cubic") {
  JetField f = [](std::span<const Jet2> in) {
    return in[0] * in[0] * in[0];
  };
  const double point[] = {1.0};
  auto jets = seed_inputs(point, std::vector<int>{0});
  auto j = f(jets);
  CHECK(j.h[0] == doctest::Approx(6.0).epsilon(1e-12));
  auto rep = check_fd(f, point, 1e-4);
  CHECK(rep.max_rel_err_hess < 1e-5);
}

TEST_CASE("1000 random compositions match finite differences") {
  double worst_g = 0.0, worst_h = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto expr = pftest::RandomExpr::make(1000 + trial, 2, 12);
    auto rng = make_rng(trial, 7);
    const double point[] = {uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5)};
    JetField f = [&](std::span<const Jet2> in) {
      return expr.eval(std::vector<Jet2>(in.begin(), in.end()));
    };
    auto rep = check_fd(f, point, 1e-4);
    worst_g = std::max(worst_g, rep.max_rel_err_grad);
    worst_h = std::max(worst_h, rep.max_rel_err_hess);
  }
  CHECK(worst_g < 1e-5);
  CHECK(worst_h < 1e-5);
}

TEST_CASE("linearity of jets is exact") {
  const double c[] = {0.37, -1.2};
  const int a[] = {0, 1};
  auto jets = seed_inputs(c, a);
  auto f = jets[0] * jets[0] * jets[1] + jets[1];
  auto g = jets[1] * jets[1] - jets[0] * 3.0;
  auto combo = f * 2.0 + g * 0.25;
  CHECK(combo.v == f.v * 2.0 + g.v * 0.25);
  for (int i = 0; i < 2; ++i) CHECK(combo.g[i] == f.g[i] * 2.0 + g.g[i] * 0.25);
  for (int p = 0; p < 3; ++p) CHECK(combo.h[p] == f.h[p] * 2.0 + g.h[p] * 0.25);
}

TEST_CASE("hessian stays symmetric through composition") {
  // packed upper triangle is symmetric by construction; hess(i,j) accessor
  // must agree for swapped indices
  auto expr = pftest::RandomExpr::make(5, 3, 20);
  const double c[] = {0.2, -0.3, 0.9};
  const int a[] = {0, 1, 2};
  auto out = expr.eval(std::vector<Jet2>(seed_inputs(c, a)));
  CHECK(out.hess(0, 2) == out.hess(2, 0));
  CHECK(out.hess(1, 2) == out.hess(2, 1));
}

TEST_CASE("clamp_min freezes derivatives below the floor") {
  const double c[] = {0.5};
  const int a[] = {0};
  auto x = seed_inputs(c, a)[0];
  auto above = clamp_min(x, 0.1);
  CHECK(above.v == 0.5);
  CHECK(above.g[0] == 1.0);
  auto below = clamp_min(x - 1.0, 0.1);
  CHECK(below.v == 0.1);
  CHECK(below.g[0] == 0.0);
}

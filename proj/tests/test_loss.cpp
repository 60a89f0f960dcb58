// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pinnflow/fdcheck.hpp"
#include "pinnflow/loss.hpp"
#include "pinnflow/rng.hpp"

using namespace pinnflow;
using doctest::Approx;

namespace {
FieldSample sample(double u, double v, double p, double k, double eps,
                   Tag tag = Tag::kInterior) {
  FieldSample s;
  s.u = u;
  s.v = v;
  s.p = p;
  s.k = k;
  s.eps = eps;
  s.tag = tag;
  return s;
}
FieldValues values(double u, double v, double p, double k, double eps) {
  return FieldValues{u, v, p, k, eps, std::log(eps)};
}
}  // namespace

TEST_CASE("perfect data fit gives zero loss") {
  std::vector<FieldSample> s{sample(1, 2, 3, 0.5, 1.5), sample(-1, 0, 1, 0.1, 0.4)};
  std::vector<FieldValues> f{values(1, 2, 3, 0.5, 1.5), values(-1, 0, 1, 0.1, 0.4)};
  const auto d = data_loss(f, s);
  CHECK(d.total() == 0.0);
}

TEST_CASE("constant zero prediction against +-1 data gives MSE one") {
  std::vector<FieldSample> s{sample(1, 0, 0, 0.5, 1), sample(-1, 0, 0, 0.5, 1)};
  std::vector<FieldValues> f{values(0, 0, 0, 0.5, 1), values(0, 0, 0, 0.5, 1)};
  const auto d = data_loss(f, s);
  CHECK(d.u == Approx(1.0).epsilon(1e-15));
  CHECK(d.v == 0.0);
}

TEST_CASE("eps prediction off by factor e gives unit log loss") {
  std::vector<FieldSample> s{sample(0, 0, 0, 0.5, 2.0)};
  const double e = std::exp(1.0);
  std::vector<FieldValues> f{values(0, 0, 0, 0.5, e * 2.0)};
  CHECK(data_loss(f, s, true).eps == Approx(1.0).epsilon(1e-12));
  // without the log treatment it is a plain squared difference
  CHECK(data_loss(f, s, false).eps ==
        Approx((e * 2 - 2) * (e * 2 - 2)).epsilon(1e-12));
}

TEST_CASE("data_loss rejects empty batches") {
  std::vector<FieldSample> s;
  std::vector<FieldValues> f;
  CHECK_THROWS_AS(data_loss(f, s), std::invalid_argument);
}

namespace {
FieldJets2 jets_of(double u, double v, double p, double dudy = 0.0) {
  FieldJets2 f;
  f.u = Jet2(2, u);
  f.u.g[1] = dudy;
  f.v = Jet2(2, v);
  f.p = Jet2(2, p);
  f.k = Jet2(2, 0.5);
  f.eps = Jet2(2, 1.0);
  return f;
}
}  // namespace

TEST_CASE("bc loss composition") {
  // exact satisfaction
  std::vector<FieldSample> s{sample(1, 0, 0, 0, 1, Tag::kInlet),
                             sample(0, 0, 0.0, 0, 1, Tag::kOutlet)};
  std::vector<FieldJets2> f{jets_of(1, 0, 0.3), jets_of(0.7, 0.2, 0.0)};
  CHECK(bc_loss(f, s) == 0.0);

  // wall point with predicted u = 0.3 contributes 0.09 to the wall mean
  std::vector<FieldSample> w{sample(0, 0, 0, 0, 1, Tag::kWall)};
  std::vector<FieldJets2> fw{jets_of(0.3, 0.0, 0.0)};
  CHECK(bc_loss(fw, w) == Approx(0.09).epsilon(1e-15));

  // symmetry needs du/dy
  std::vector<FieldSample> sy{sample(0, 0, 0, 0, 1, Tag::kSymmetry)};
  std::vector<FieldJets2> fs{jets_of(0.5, 0.1, 0.2, 0.25)};
  CHECK(bc_loss(fs, sy) == Approx(0.1 * 0.1 + 0.25 * 0.25).epsilon(1e-14));
}

TEST_CASE("pde loss components and log damping") {
  std::vector<ResidualBundle> r(1);
  r[0] = ResidualBundle{0, 0, 0, 0, 0};
  auto z = pde_loss(r);
  CHECK(z.mom == 0.0);
  CHECK(z.eps == 0.0);

  r[0] = ResidualBundle{2.0, 0, 0, 0, 0};  // cont residual 2
  LossWeights w;
  w.cont = 0.5;
  auto l = pde_loss(r);
  CHECK(l.cont == 4.0);
  CHECK(pde_total(l, w) == Approx(2.0).epsilon(1e-15));

  r[0] = ResidualBundle{0, 0, 0, 0, 1e6};
  auto big = pde_loss(r, true);
  CHECK(big.eps == Approx(2.0 * std::log(1e6)).epsilon(1e-3));
  CHECK(big.eps < 30.0);
  auto raw = pde_loss(r, false);
  CHECK(raw.eps == Approx(1e12).epsilon(1e-12));
}

TEST_CASE("eps log damping is monotone and bounded by the square") {
  double prev = -1.0;
  for (double m : {0.0, 0.1, 0.5, 1.0, 3.0, 10.0, 1e3}) {
    std::vector<ResidualBundle> r{ResidualBundle{0, 0, 0, 0, m}};
    const double val = pde_loss(r, true).eps;
    CHECK(val >= prev);
    CHECK(val <= m * m + 1e-12);
    prev = val;
  }
}

TEST_CASE("lambda normalization follows the inverse-mean rule") {
  PdeLoss m{2.0, 1.0, 4.0, 8.0};
  const auto w = normalize_lambdas(m);
  CHECK(w.mom == Approx(0.5).epsilon(1e-7));
  CHECK(w.cont == Approx(1.0).epsilon(1e-7));
  CHECK(w.k == Approx(0.25).epsilon(1e-7));
  CHECK(w.eps == Approx(0.125).epsilon(1e-7));

  const auto eq = normalize_lambdas(PdeLoss{3, 3, 3, 3});
  CHECK(eq.mom == 1.0);
  CHECK(eq.eps == 1.0);

  const auto guarded = normalize_lambdas(PdeLoss{0.0, 1.0, 1.0, 1.0});
  CHECK(std::isfinite(guarded.mom));
  CHECK(guarded.mom == 1.0);  // zero-mean component gets the cap
}

TEST_CASE("post-normalization balance within a factor of two") {
  auto rng = make_rng(5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    PdeLoss m{uniform(rng, 1e-6, 10), uniform(rng, 1e-6, 10),
              uniform(rng, 1e-6, 10), uniform(rng, 1e-6, 10)};
    const auto w = normalize_lambdas(m);
    const double c[4] = {w.mom * m.mom, w.cont * m.cont, w.k * m.k,
                         w.eps * m.eps};
    const double lo = std::min({c[0], c[1], c[2], c[3]});
    const double hi = std::max({c[0], c[1], c[2], c[3]});
    CHECK(hi <= 2.0 * lo);
  }
}

TEST_CASE("breakdown total equals the weighted component sum") {
  auto rng = make_rng(9, 0);
  for (int trial = 0; trial < 100; ++trial) {
    DataLoss d{uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1),
               uniform(rng, 0, 1), uniform(rng, 0, 1)};
    PdeLoss raw{uniform(rng, 0, 5), uniform(rng, 0, 5), uniform(rng, 0, 5),
                uniform(rng, 0, 5)};
    LossWeights w{uniform(rng, 0.1, 1), uniform(rng, 0.1, 1),
                  uniform(rng, 0.1, 1), uniform(rng, 0.1, 1)};
    const double bc = uniform(rng, 0, 1);
    const auto b = assemble_breakdown(d, bc, raw, w);
    const double sum = b.data_u + b.data_v + b.data_p + b.data_k + b.data_eps +
                       b.bc + b.mom + b.cont + b.k + b.eps;
    CHECK(std::abs(b.total - sum) <= 1e-12 * std::max(1.0, std::abs(sum)));
  }
}

TEST_CASE("csv row round trips the header column count") {
  LossBreakdown b;
  const auto header = breakdown_csv_header();
  const auto row = breakdown_csv_row(3, 1, 1e-3, b);
  const auto count = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',');
  };
  CHECK(count(header) == count(row));
}

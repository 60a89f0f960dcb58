// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "pinnflow/report.hpp"
#include "pinnflow/rng.hpp"

using namespace pinnflow;
using doctest::Approx;

namespace {
std::vector<FieldSample> truth_cloud(int n, std::uint64_t seed) {
  auto m = make_mms_case(MmsFamily::kTrigVortex, 5600);
  auto rng = make_rng(seed, 0);
  std::vector<FieldSample> out;
  for (int i = 0; i < n; ++i) {
    const double x = uniform(rng, m.domain.x0, m.domain.x1);
    const double y = uniform(rng, m.domain.y0, m.domain.y1);
    const auto f = m.fields_at(x, y);
    out.push_back(FieldSample{f.x, f.y, f.u, f.v, f.p, f.k, f.eps, Tag::kInterior});
  }
  return out;
}

Predictor truth_predictor() {
  auto m = make_mms_case(MmsFamily::kTrigVortex, 5600);
  return [m](double x, double y) {
    const auto f = m.fields_at(x, y);
    return FieldValues{f.u, f.v, f.p, f.k, f.eps, std::log(f.eps)};
  };
}
}  // namespace

TEST_CASE("perfect predictor scores zero everywhere") {
  auto cloud = truth_cloud(500, 3);
  const auto m = validation_errors(truth_predictor(), cloud);
  for (int var = 0; var < kNumVars; ++var) {
    CHECK(m.rel_err[var] == 0.0);
    CHECK(!m.absolute_fallback[var]);
  }
}

TEST_CASE("uniform 1.1x prediction gives relative error 0.1") {
  auto cloud = truth_cloud(400, 5);
  Predictor scaled = [base = truth_predictor()](double x, double y) {
    auto f = base(x, y);
    f.u *= 1.1;
    f.v *= 1.1;
    f.p *= 1.1;
    f.k *= 1.1;
    f.eps *= 1.1;
    return f;
  };
  const auto m = validation_errors(scaled, cloud);
  for (int var = 0; var < kNumVars; ++var)
    CHECK(m.rel_err[var] == Approx(0.1).epsilon(1e-9));
}

TEST_CASE("zero-norm truth falls back to absolute RMSE with a flag") {
  std::vector<FieldSample> pts(10);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i].x = 0.1 * static_cast<double>(i);
    pts[i].eps = 1.0;  // keep eps truth nonzero
  }
  Predictor off = [](double, double) {
    return FieldValues{0.5, 0, 0, 0, 1.0, 0.0};
  };
  const auto m = validation_errors(off, pts);
  CHECK(m.absolute_fallback[kU]);
  CHECK(m.rel_err[kU] == Approx(0.5).epsilon(1e-12));
  CHECK(!m.absolute_fallback[kEps]);
}

TEST_CASE("metric is independent of validation point order") {
  auto cloud = truth_cloud(300, 7);
  Predictor noisy = [base = truth_predictor()](double x, double y) {
    auto f = base(x, y);
    f.u += 0.01 * std::sin(37.0 * x * y);
    return f;
  };
  const auto a = validation_errors(noisy, cloud);
  std::vector<FieldSample> shuffled = cloud;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto b = validation_errors(noisy, shuffled);
  CHECK(a.rel_err[kU] == Approx(b.rel_err[kU]).epsilon(1e-12));
}

TEST_CASE("error map of a perfect predictor normalizes to zero") {
  auto cloud = truth_cloud(2000, 9);
  GridSpec spec{8, 8, 0.05, 0.95, 0.05, 0.95};
  const auto g = error_map(truth_predictor(), cloud, kU, spec);
  for (double v : g.values)
    if (!std::isnan(v)) CHECK(v == 0.0);
}

TEST_CASE("a single corrupted point dominates its cell") {
  auto cloud = truth_cloud(4000, 11);
  const double cx = 0.5, cy = 0.5;
  Predictor broken = [base = truth_predictor(), cx, cy](double x, double y) {
    auto f = base(x, y);
    if (std::abs(x - cx) < 0.05 && std::abs(y - cy) < 0.05) f.u += 10.0;
    f.u += 1e-9 * std::sin(x * 9.0);  // background noise
    return f;
  };
  GridSpec spec{9, 9, 0.05, 0.95, 0.05, 0.95};
  const auto g = error_map(broken, cloud, kU, spec);
  // the corrupted region is the unique maximum at 1.0
  int max_ix = -1, max_iy = -1;
  for (int iy = 0; iy < 9; ++iy)
    for (int ix = 0; ix < 9; ++ix)
      if (!std::isnan(g.at(ix, iy)) && g.at(ix, iy) == 1.0) {
        max_ix = ix;
        max_iy = iy;
      }
  const double dx = (spec.xmax - spec.xmin) / spec.nx;
  CHECK(std::abs(spec.xmin + (max_ix + 0.5) * dx - cx) < 2 * dx);
  CHECK(std::abs(spec.ymin + (max_iy + 0.5) * dx - cy) < 2 * dx);
}

TEST_CASE("grid export round trips exactly enough") {
  GridSpec spec{4, 2, 0, 1, 0, 2};
  FieldGrid g;
  g.spec = spec;
  g.variable = "u";
  g.values = {0.125, 1.5, std::nan(""), 4.0, -0.25, 1e-7, 2.0, 3.0};
  const auto path = std::filesystem::temp_directory_path() / "pf_grid.csv";
  export_grid(g, path);

  // header + spec row + ny data rows
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 + 2);

  const auto back = read_grid(path);
  CHECK(back.spec.nx == 4);
  CHECK(back.spec.ny == 2);
  CHECK(back.variable == "u");
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (std::isnan(g.values[i]))
      CHECK(std::isnan(back.values[i]));
    else
      CHECK(back.values[i] == Approx(g.values[i]).epsilon(1e-12));
  }
  std::filesystem::remove(path);
}

TEST_CASE("predict_grid fills every cell and validates the variable name") {
  NetworkConfig cfg;
  cfg.widths = {8};
  cfg.n_freq = 2;
  cfg.seed = 3;
  FieldNetworkSet nets(cfg);
  GridSpec spec{6, 4, 0, 1, 0, 1};
  const auto g = predict_grid(nets, spec, "vmag");
  CHECK(g.values.size() == 24);
  for (double v : g.values) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(predict_grid(nets, spec, "zzz"), std::invalid_argument);
  GridSpec bad{1, 4, 0, 1, 0, 1};
  CHECK_THROWS_AS(predict_grid(nets, bad, "u"), std::invalid_argument);
}

TEST_CASE("metrics json is deterministic across rewrites") {
  auto cloud = truth_cloud(100, 13);
  const auto m = validation_errors(truth_predictor(), cloud);
  const auto p1 = std::filesystem::temp_directory_path() / "pf_m1.json";
  const auto p2 = std::filesystem::temp_directory_path() / "pf_m2.json";
  write_metrics_json(p1, m, "case-a", 5600);
  write_metrics_json(p2, m, "case-a", 5600);
  std::ifstream a(p1), b(p2);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(sa.find("relative_l2") != std::string::npos);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pinnflow/fdcheck.hpp"
#include "pinnflow/network.hpp"
#include "pinnflow/rng.hpp"

using namespace pinnflow;

static NetworkConfig small_cfg(std::uint64_t seed) {
  NetworkConfig cfg;
  cfg.widths = {16, 16};
  cfg.n_freq = 3;
  cfg.seed = seed;
  return cfg;
}

TEST_CASE("parameter count follows the summation formula") {
  NetworkConfig cfg;
  cfg.widths = {64, 64, 64, 64};
  cfg.n_freq = 10;
  cfg.seed = 7;
  FieldNetworkSet set(cfg);
  const std::size_t per_net = (40 * 64 + 64) + (64 * 64 + 64) * 3 + (64 * 1 + 1);
  CHECK(set.shape(kU).param_count() == per_net);
  CHECK(set.params().size() == per_net * kNumVars);
  CHECK(set.embedding().output_dim() == 40);
}

TEST_CASE("same seed gives bit-identical parameters") {
  FieldNetworkSet a(small_cfg(7)), b(small_cfg(7));
  REQUIRE(a.params().size() == b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i] == b.params()[i]);
  FieldNetworkSet c(small_cfg(8));
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params().size(); ++i)
    any_diff |= a.params()[i] != c.params()[i];
  CHECK(any_diff);
}

TEST_CASE("parametric mode widens the embedding") {
  NetworkConfig cfg = small_cfg(1);
  cfg.mode = InputMode::kParametricRe;
  FieldNetworkSet set(cfg);
  CHECK(cfg.input_dim() == 3);
  CHECK(set.embedding().output_dim() == 2 * cfg.n_freq * 3);
}

TEST_CASE("zero-width layer rejected") {
  NetworkConfig cfg = small_cfg(1);
  cfg.widths = {16, 0, 16};
  CHECK_THROWS_AS(FieldNetworkSet{cfg}, std::invalid_argument);
}

TEST_CASE("k and eps outputs are strictly positive everywhere") {
  FieldNetworkSet set(small_cfg(3));
  auto rng = make_rng(11, 0);
  for (int i = 0; i < 200; ++i) {
    const auto f = set.forward(uniform(rng, -2, 2), uniform(rng, -2, 2));
    CHECK(f.k > 0.0);
    CHECK(f.eps > 0.0);
    CHECK(std::isfinite(f.u));
    CHECK(std::isfinite(f.v));
    CHECK(std::isfinite(f.p));
  }
}

TEST_CASE("zero parameters give the transform of zero") {
  FieldNetworkSet set(small_cfg(5));
  std::fill(set.params_mut().begin(), set.params_mut().end(), 0.0);
  const auto f = set.forward(0.3, -0.2);
  CHECK(f.u == 0.0);
  CHECK(f.v == 0.0);
  CHECK(f.p == 0.0);
  CHECK(f.k == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(f.eps == 1.0);
}

TEST_CASE("forward and forward_jets values agree bitwise") {
  FieldNetworkSet set(small_cfg(9));
  auto rng = make_rng(2, 0);
  for (int i = 0; i < 20; ++i) {
    const double x = uniform(rng, -1, 1), y = uniform(rng, -1, 1);
    const auto fv = set.forward(x, y);
    const auto fj = set.forward_jets(x, y);
    CHECK(fv.u == fj.u.v);
    CHECK(fv.v == fj.v.v);
    CHECK(fv.p == fj.p.v);
    CHECK(fv.k == fj.k.v);
    CHECK(fv.eps == fj.eps.v);
    CHECK(fv.eps_raw == fj.eps_raw);
  }
}

TEST_CASE("spatial jets match finite differences at 100 random points") {
  FieldNetworkSet set(small_cfg(13));
  auto rng = make_rng(17, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = uniform(rng, 0, 1), y = uniform(rng, 0, 1);
    for (int var = 0; var < kNumVars; ++var) {
      ad::JetField f = [&](std::span<const Jet2> in) {
        std::vector<Jet2> embedded;
        set.embedding().embed(in, embedded);
        return apply_out_transform(set.shape(var).out,
                                   mlp_forward(set.shape(var), set.net_params(var), embedded));
      };
      const double pt[] = {x, y};
      auto rep = ad::check_fd(f, pt, 1e-5);
      worst = std::max({worst, rep.max_rel_err_grad, rep.max_rel_err_hess});
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("eps jet satisfies the exp chain identity exactly") {
  FieldNetworkSet set(small_cfg(21));
  std::vector<Jet2> in(2, Jet2(2));
  in[0].v = 0.31;
  in[0].g[0] = 1.0;
  in[1].v = 0.77;
  in[1].g[1] = 1.0;
  std::vector<Jet2> embedded;
  set.embedding().embed(std::span<const Jet2>(in), embedded);
  const Jet2 raw = mlp_forward(set.shape(kEps), set.net_params(kEps), embedded);
  const auto fj = set.forward_jets(0.31, 0.77);
  for (int i = 0; i < 2; ++i)
    CHECK(fj.eps.g[i] == fj.eps.v * raw.g[i]);
}

TEST_CASE("constant net has zero spatial derivatives") {
  FieldNetworkSet set(small_cfg(23));
  std::fill(set.params_mut().begin(), set.params_mut().end(), 0.0);
  // nonzero output bias on the u net: last parameter of its segment
  set.params_mut()[set.param_offset(kU) + set.shape(kU).param_count() - 1] = 0.7;
  const auto fj = set.forward_jets(0.4, 0.6);
  CHECK(fj.u.v == 0.7);
  for (int i = 0; i < 2; ++i) CHECK(fj.u.g[i] == 0.0);
  for (int p = 0; p < 3; ++p) CHECK(fj.u.h[p] == 0.0);
}

TEST_CASE("fixed-Re outputs ignore the Re argument; parametric ones do not") {
  FieldNetworkSet fixed(small_cfg(31));
  CHECK(fixed.forward(0.2, 0.3, 1000.0).u == fixed.forward(0.2, 0.3, 9999.0).u);

  NetworkConfig cfg = small_cfg(31);
  cfg.mode = InputMode::kParametricRe;
  FieldNetworkSet param(cfg);
  CHECK(param.forward(0.2, 0.3, 0.1).u != param.forward(0.2, 0.3, 0.9).u);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  NetworkConfig cfg = small_cfg(37);
  cfg.mode = InputMode::kParametricRe;
  cfg.re_min = 2800;
  cfg.re_max = 5600;
  FieldNetworkSet set(cfg);
  const auto path = std::filesystem::temp_directory_path() / "pf_ckpt_test.bin";
  set.save(path);
  auto loaded = FieldNetworkSet::load(path);
  REQUIRE(loaded.params().size() == set.params().size());
  for (std::size_t i = 0; i < set.params().size(); ++i)
    CHECK(loaded.params()[i] == set.params()[i]);
  CHECK(loaded.config().re_min == 2800);
  CHECK(loaded.config().mode == InputMode::kParametricRe);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected with CheckpointError") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "pf_bad_ckpt.bin";
  {
    std::ofstream f(path, std::ios::binary);
    f << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(FieldNetworkSet::load(path), CheckpointError);
  CHECK_THROWS_AS(FieldNetworkSet::load(path / "missing"), CheckpointError);
  fs::remove(path);
}

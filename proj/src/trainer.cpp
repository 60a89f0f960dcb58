// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pinnflow/rng.hpp"

namespace pinnflow {

namespace {
constexpr std::size_t kChunk = 32;  // fixed reduction granularity
}

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kDataOnly: return "data-only";
    case Ablation::kNoLogEps: return "no-log-eps";
  }
  return "?";
}

bool adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& st, double lr) {
  if (params.size() != grad.size() || st.m.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) return false;
  st.t += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
  }
  return true;
}

double lr_schedule(int step, const TrainConfig& cfg) {
  if (step < 0) throw std::invalid_argument("lr_schedule: negative step");
  const int k = step / std::max(cfg.decay_interval, 1);
  return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(k));
}

void write_curve_csv(const std::filesystem::path& path,
                     std::span<const LogRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curve csv: " + path.string());
  out << breakdown_csv_header() << "\n";
  for (const auto& r : rows)
    out << breakdown_csv_row(r.step, r.phase, r.lr, r.loss) << "\n";
}

Trainer::Trainer(FieldNetworkSet& nets, std::vector<CaseDataset> cases,
                 TrainConfig cfg)
    : nets_(&nets), cases_(std::move(cases)), cfg_(cfg) {
  if (cases_.empty()) throw std::invalid_argument("trainer needs at least one case");
  const bool parametric = nets_->config().mode == InputMode::kParametricRe;
  if (cases_.size() > 1 && !parametric)
    throw std::invalid_argument("multiple cases require parametric-Re mode");
  for (const auto& c : cases_) {
    if (c.data_points.empty())
      throw std::invalid_argument("case '" + c.name + "' has no data points");
    if (c.scales.length != cases_[0].scales.length ||
        c.scales.u_inlet != cases_[0].scales.u_inlet ||
        c.scales.rho != cases_[0].scales.rho)
      throw std::invalid_argument("mismatched reference scales across cases");
  }
  if (parametric) {
    double lo = cases_[0].re, hi = cases_[0].re;
    for (const auto& c : cases_) {
      lo = std::min(lo, c.re);
      hi = std::max(hi, c.re);
    }
    nets_->config_mut().re_min = lo;
    nets_->config_mut().re_max = hi;
  }

  rng_pretrain_ = make_rng(cfg_.seed, stream::kBatch * 1000 + 1);
  rng_main_ = make_rng(cfg_.seed, stream::kBatch * 1000 + 2);

  const int n_workers = std::max(cfg_.workers, 1);
  workers_.resize(n_workers);
  for (auto& w : workers_) {
    w.value_eng = std::make_unique<ValueEngine>(*nets_);
    w.jet_eng = std::make_unique<JetEngine>(*nets_);
  }
}

double Trainer::re_norm_of(int case_idx) const {
  return nets_->config().normalize_re(cases_[case_idx].re);
}

Trainer::StepBatch Trainer::draw_batch(std::mt19937_64& rng,
                                       bool with_pde) const {
  const bool parametric = cases_.size() > 1;
  auto draw = [&](std::size_t pool_of_case0,
                  auto pool_size) -> PointRef {
    PointRef r;
    r.case_idx = parametric
                     ? static_cast<int>(uniform_index(rng, cases_.size()))
                     : 0;
    const std::size_t n =
        parametric ? pool_size(r.case_idx) : pool_of_case0;
    r.point_idx = static_cast<int>(uniform_index(rng, n));
    return r;
  };

  StepBatch b;
  b.data.reserve(cfg_.batch_data);
  for (int i = 0; i < cfg_.batch_data; ++i)
    b.data.push_back(draw(cases_[0].data_points.size(), [&](int c) {
      return cases_[c].data_points.size();
    }));
  if (with_pde) {
    b.coll.reserve(cfg_.batch_collocation);
    for (int i = 0; i < cfg_.batch_collocation; ++i)
      b.coll.push_back(draw(cases_[0].collocation_points.size(), [&](int c) {
        return cases_[c].collocation_points.size();
      }));
    const bool have_bnd = !cases_[0].boundary.empty();
    if (have_bnd) {
      b.bnd.reserve(cfg_.batch_boundary);
      for (int i = 0; i < cfg_.batch_boundary; ++i)
        b.bnd.push_back(draw(cases_[0].boundary.size(), [&](int c) {
          return cases_[c].boundary.size();
        }));
    }
  }
  return b;
}

// Runs fn over points in fixed chunks; each chunk accumulates into its own
// gradient buffer and buffers merge in chunk order, so the reduction is
// bit-identical for any worker count.
namespace {
template <class Fn>
void run_chunked(std::size_t n, std::size_t n_params, int n_workers,
                 std::vector<std::vector<double>>& chunk_grads,
                 std::span<double> grad, Fn&& fn) {
  if (n == 0) return;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  if (chunk_grads.size() < n_chunks) chunk_grads.resize(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c)
    chunk_grads[c].assign(n_params, 0.0);

  auto work = [&](int widx) {
    for (std::size_t c = widx; c < n_chunks; c += n_workers) {
      const std::size_t lo = c * kChunk;
      const std::size_t hi = std::min(n, lo + kChunk);
      for (std::size_t i = lo; i < hi; ++i) fn(widx, i, chunk_grads[c]);
    }
  };
  if (n_workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const auto& cg = chunk_grads[c];
    for (std::size_t i = 0; i < n_params; ++i) grad[i] += cg[i];
  }
}
}  // namespace

void Trainer::eval_data_points(std::span<const PointRef> pts,
                               std::span<double> grad,
                               std::vector<FieldValues>& pred_out) {
  pred_out.assign(pts.size(), FieldValues{});
  const double inv_n = 1.0 / static_cast<double>(pts.size());
  const bool log_eps = log_eps_losses();
  run_chunked(
      pts.size(), nets_->params().size(), static_cast<int>(workers_.size()),
      chunk_grads_, grad,
      [&](int widx, std::size_t i, std::span<double> cgrad) {
        Worker& w = workers_[widx];
        const PointRef& ref = pts[i];
        const CaseDataset& cs = cases_[ref.case_idx];
        const FieldSample& s = cs.data_points[ref.point_idx];
        ValueEngine& eng = *w.value_eng;
        eng.forward(s.x, s.y, re_norm_of(ref.case_idx));
        FieldValues f{eng.out(kU)[0], eng.out(kV)[0], eng.out(kP)[0],
                      eng.out(kK)[0], eng.out(kEps)[0], eng.raw(kEps)[0]};
        pred_out[i] = f;
        eng.backward(kU, {2.0 * (f.u - s.u) * inv_n}, 0.0, cgrad);
        eng.backward(kV, {2.0 * (f.v - s.v) * inv_n}, 0.0, cgrad);
        eng.backward(kP, {2.0 * (f.p - s.p) * inv_n}, 0.0, cgrad);
        eng.backward(kK, {2.0 * (f.k - s.k) * inv_n}, 0.0, cgrad);
        if (log_eps) {
          const double ee = f.eps_raw - std::log(s.eps);
          eng.backward(kEps, {0.0}, 2.0 * ee * inv_n, cgrad);
        } else {
          eng.backward(kEps, {2.0 * (f.eps - s.eps) * inv_n}, 0.0, cgrad);
        }
      });
}

void Trainer::eval_coll_points(std::span<const PointRef> pts,
                               std::span<double> grad,
                               std::vector<ResidualBundle>& res_out) {
  res_out.assign(pts.size(), ResidualBundle{});
  const double inv_n = 1.0 / static_cast<double>(pts.size());
  const bool log_eps = log_eps_losses();
  const LossWeights lam = lambdas_;
  run_chunked(
      pts.size(), nets_->params().size(), static_cast<int>(workers_.size()),
      chunk_grads_, grad,
      [&](int widx, std::size_t i, std::span<double> cgrad) {
        using ad::Var;
        Worker& w = workers_[widx];
        const PointRef& ref = pts[i];
        const CaseDataset& cs = cases_[ref.case_idx];
        const FieldSample& c = cs.collocation_points[ref.point_idx];
        const Forcing& fc = cs.collocation_forcing[ref.point_idx];
        JetEngine& eng = *w.jet_eng;
        eng.forward(c.x, c.y, re_norm_of(ref.case_idx));
        const FieldJets2 jets = engine_jets(eng);

        ad::Tape& tape = w.tape;
        tape.clear();
        FieldJets<Var> vj;
        vj.u = ad::seed_jet(tape, jets.u);
        vj.v = ad::seed_jet(tape, jets.v);
        vj.p = ad::seed_jet(tape, jets.p);
        vj.k = ad::seed_jet(tape, jets.k);
        vj.eps = ad::seed_jet(tape, jets.eps);
        vj.eps_raw = tape.constant(jets.eps_raw);

        const auto r = rans_residuals<Var>(vj, cs.props, cfg_.turb);
        ResidualBundle_<Var> rc;
        rc.cont = r.cont - fc.cont;
        rc.mom_x = r.mom_x - fc.mom_x;
        rc.mom_y = r.mom_y - fc.mom_y;
        rc.k = r.k - fc.k;
        rc.eps = r.eps - fc.eps;
        res_out[i] = ResidualBundle{rc.cont.val(), rc.mom_x.val(),
                                    rc.mom_y.val(), rc.k.val(), rc.eps.val()};

        const Var t_mom = pde_term_mom(rc);
        const Var t_cont = pde_term_cont(rc);
        const Var t_k = pde_term_k(rc);
        const Var t_eps = pde_term_eps(rc, log_eps);
        const Var phi = t_mom * lam.mom + t_cont * lam.cont + t_k * lam.k +
                        t_eps * lam.eps;
        tape.backward(phi);

        const Jet<Var>* vars[kNumVars] = {&vj.u, &vj.v, &vj.p, &vj.k, &vj.eps};
        for (int var = 0; var < kNumVars; ++var) {
          const Jet<Var>& j = *vars[var];
          std::array<double, 6> adj{
              tape.adjoint(j.v) * inv_n,    tape.adjoint(j.g[0]) * inv_n,
              tape.adjoint(j.g[1]) * inv_n, tape.adjoint(j.h[0]) * inv_n,
              tape.adjoint(j.h[1]) * inv_n, tape.adjoint(j.h[2]) * inv_n};
          eng.backward(var, adj, 0.0, cgrad);
        }
      });
}

void Trainer::eval_bnd_points(std::span<const PointRef> pts,
                              std::span<double> grad,
                              std::vector<FieldJets2>& jets_out,
                              std::vector<FieldSample>& samples_out) {
  jets_out.assign(pts.size(), FieldJets2{});
  samples_out.assign(pts.size(), FieldSample{});
  // tag counts are global over the batch so adjoint scales are per tag
  double count[5] = {0, 0, 0, 0, 0};
  for (const auto& ref : pts)
    count[static_cast<int>(
        cases_[ref.case_idx].boundary[ref.point_idx].tag)] += 1.0;

  run_chunked(
      pts.size(), nets_->params().size(), static_cast<int>(workers_.size()),
      chunk_grads_, grad,
      [&](int widx, std::size_t i, std::span<double> cgrad) {
        Worker& w = workers_[widx];
        const PointRef& ref = pts[i];
        const CaseDataset& cs = cases_[ref.case_idx];
        const FieldSample& s = cs.boundary[ref.point_idx];
        JetEngine& eng = *w.jet_eng;
        eng.forward(s.x, s.y, re_norm_of(ref.case_idx));
        const FieldJets2 jets = engine_jets(eng);
        jets_out[i] = jets;
        samples_out[i] = s;
        const double scale = 2.0 / count[static_cast<int>(s.tag)];
        switch (s.tag) {
          case Tag::kInlet:
          case Tag::kWall:
            eng.backward(kU, {scale * (jets.u.v - s.u), 0, 0, 0, 0, 0}, 0.0, cgrad);
            eng.backward(kV, {scale * (jets.v.v - s.v), 0, 0, 0, 0, 0}, 0.0, cgrad);
            break;
          case Tag::kOutlet:
            eng.backward(kP, {scale * (jets.p.v - s.p), 0, 0, 0, 0, 0}, 0.0, cgrad);
            break;
          case Tag::kSymmetry:
            eng.backward(kV, {scale * (jets.v.v - s.v), 0, 0, 0, 0, 0}, 0.0, cgrad);
            eng.backward(kU, {0, 0, scale * jets.u.g[1], 0, 0, 0}, 0.0, cgrad);
            break;
          case Tag::kInterior:
            throw std::invalid_argument("interior row in the boundary set");
        }
      });
}

LossBreakdown Trainer::evaluate(const StepBatch& batch, bool with_pde,
                                std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);

  std::vector<FieldValues> pred;
  eval_data_points(batch.data, grad, pred);
  std::vector<FieldSample> data_samples;
  data_samples.reserve(batch.data.size());
  for (const auto& ref : batch.data)
    data_samples.push_back(cases_[ref.case_idx].data_points[ref.point_idx]);
  const DataLoss d = data_loss(pred, data_samples, log_eps_losses());

  PdeLoss raw;
  double bc = 0.0;
  if (with_pde) {
    std::vector<ResidualBundle> bundles;
    eval_coll_points(batch.coll, grad, bundles);
    raw = pde_loss(bundles, log_eps_losses());
    if (!batch.bnd.empty()) {
      std::vector<FieldJets2> bjets;
      std::vector<FieldSample> bsamples;
      eval_bnd_points(batch.bnd, grad, bjets, bsamples);
      bc = bc_loss(bjets, bsamples);
    }
  }
  return assemble_breakdown(d, bc, raw, with_pde ? lambdas_ : LossWeights{});
}

PdeLoss Trainer::pde_means_full() {
  std::vector<ResidualBundle> bundles;
  JetEngine& eng = *workers_[0].jet_eng;
  for (std::size_t ci = 0; ci < cases_.size(); ++ci) {
    const CaseDataset& cs = cases_[ci];
    const double re = re_norm_of(static_cast<int>(ci));
    for (std::size_t pi = 0; pi < cs.collocation_points.size(); ++pi) {
      const FieldSample& c = cs.collocation_points[pi];
      const Forcing& fc = cs.collocation_forcing[pi];
      eng.forward(c.x, c.y, re);
      const auto r = rans_residuals(engine_jets(eng), cs.props, cfg_.turb);
      bundles.push_back(ResidualBundle{r.cont - fc.cont, r.mom_x - fc.mom_x,
                                       r.mom_y - fc.mom_y, r.k - fc.k,
                                       r.eps - fc.eps});
    }
  }
  return pde_loss(bundles, log_eps_losses());
}

TrainReport Trainer::pretrain() {
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport rep;
  rep.lambdas = lambdas_;
  if (cfg_.pretrain_steps <= 0) return rep;

  std::array<AdamState, kNumVars> states;
  for (int var = 0; var < kNumVars; ++var)
    states[var].init(nets_->shape(var).param_count());

  std::vector<double> grad(nets_->params().size());
  std::vector<FieldValues> pred;
  std::vector<FieldSample> samples;
  for (int step = 0; step < cfg_.pretrain_steps; ++step) {
    const double lr = lr_schedule(step, cfg_);
    StepBatch batch = draw_batch(rng_pretrain_, false);
    std::fill(grad.begin(), grad.end(), 0.0);
    eval_data_points(batch.data, grad, pred);
    samples.clear();
    for (const auto& ref : batch.data)
      samples.push_back(cases_[ref.case_idx].data_points[ref.point_idx]);
    const DataLoss d = data_loss(pred, samples, log_eps_losses());

    for (int var = 0; var < kNumVars; ++var) {
      const auto off = nets_->param_offset(var);
      const auto len = nets_->shape(var).param_count();
      adam_step(nets_->params_mut().subspan(off, len),
                std::span<const double>(grad).subspan(off, len), states[var],
                lr);
    }
    LogRow row;
    row.step = step;
    row.phase = 0;
    row.lr = lr;
    row.loss = assemble_breakdown(d, 0.0, PdeLoss{}, LossWeights{});
    rep.log.push_back(row);
    rep.steps_run = step + 1;
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

TrainReport Trainer::train_full() {
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport rep;
  const bool with_pde = cfg_.ablation != Ablation::kDataOnly;

  if (with_pde && !lambdas_ready_) {
    lambdas_ = normalize_lambdas(pde_means_full());
    lambdas_ready_ = true;
  }
  rep.lambdas = lambdas_;

  if (adam_main_.m.size() != nets_->params().size())
    adam_main_.init(nets_->params().size());

  struct Snapshot {
    std::vector<double> params;
    AdamState adam;
    std::string rng;
    LossWeights lambdas;
  };
  auto take_snapshot = [&]() {
    Snapshot s;
    s.params.assign(nets_->params().begin(), nets_->params().end());
    s.adam = adam_main_;
    std::ostringstream os;
    os << rng_main_;
    s.rng = os.str();
    s.lambdas = lambdas_;
    return s;
  };
  Snapshot last_good = take_snapshot();

  std::vector<double> grad(nets_->params().size());
  std::vector<double> totals;
  totals.reserve(cfg_.main_steps);

  for (int step = global_step_; step < cfg_.main_steps; ++step) {
    global_step_ = step + 1;
    if (cfg_.checkpoint_every > 0 && step > 0 &&
        step % cfg_.checkpoint_every == 0)
      last_good = take_snapshot();
    if (with_pde && cfg_.lambda_renorm_every > 0 && step > 0 &&
        step % cfg_.lambda_renorm_every == 0) {
      lambdas_ = normalize_lambdas(pde_means_full());
      rep.lambdas = lambdas_;
    }

    const double lr = lr_schedule(step, cfg_);
    StepBatch batch = draw_batch(rng_main_, with_pde);

    bool ok = true;
    LossBreakdown b;
    try {
      b = evaluate(batch, with_pde, grad);
      ok = std::isfinite(b.total);
    } catch (const ad::TapeNanError&) {
      ok = false;
    }
    if (ok)
      ok = adam_step(nets_->params_mut(), grad, adam_main_, lr);
    if (!ok) {
      std::copy(last_good.params.begin(), last_good.params.end(),
                nets_->params_mut().begin());
      adam_main_ = last_good.adam;
      std::istringstream is(last_good.rng);
      is >> rng_main_;
      lambdas_ = last_good.lambdas;
      rep.nan_abort = true;
      break;
    }

    LogRow row;
    row.step = step;
    row.phase = 1;
    row.lr = lr;
    row.loss = b;
    rep.log.push_back(row);
    rep.steps_run = step + 1;

    totals.push_back(b.total);
    const int w = cfg_.conv_window;
    if (w > 0 && static_cast<int>(totals.size()) >= 2 * w) {
      double now = 0.0, prev = 0.0;
      const std::size_t n = totals.size();
      for (int i = 0; i < w; ++i) {
        now += totals[n - 1 - i];
        prev += totals[n - 1 - w - i];
      }
      now /= w;
      prev /= w;
      if (std::abs(now - prev) / std::max(std::abs(prev), 1e-30) <
          cfg_.conv_tol) {
        rep.converged = true;
        break;
      }
    }
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

namespace {
constexpr char kStateMagic[8] = {'P', 'F', 'T', 'S', '0', '0', '0', '1'};

void write_blob(std::ofstream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void read_blob(std::ifstream& in, std::span<double> v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}
}  // namespace

void Trainer::save_state(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["param_count"] = nets_->params().size();
  j["step"] = global_step_;
  j["adam_t"] = adam_main_.t;
  j["lambdas"] = {lambdas_.mom, lambdas_.cont, lambdas_.k, lambdas_.eps};
  j["lambdas_ready"] = lambdas_ready_;
  std::ostringstream os;
  os << rng_main_;
  j["rng_main"] = os.str();
  const std::string header = j.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write trainer state: " + path.string());
  out.write(kStateMagic, sizeof(kStateMagic));
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(len));
  write_blob(out, nets_->params());
  write_blob(out, adam_main_.m);
  write_blob(out, adam_main_.v);
  if (!out) throw CheckpointError("trainer state write failed");
}

void Trainer::load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open trainer state: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kStateMagic, sizeof(kStateMagic)) != 0)
    throw CheckpointError("not a trainer state file: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  auto j = nlohmann::json::parse(header);
  if (j.at("param_count").get<std::size_t>() != nets_->params().size())
    throw CheckpointError("trainer state does not match network size");
  adam_main_.init(nets_->params().size());
  global_step_ = j.at("step").get<int>();
  adam_main_.t = j.at("adam_t").get<std::int64_t>();
  const auto lam = j.at("lambdas").get<std::vector<double>>();
  lambdas_ = LossWeights{lam[0], lam[1], lam[2], lam[3]};
  lambdas_ready_ = j.at("lambdas_ready").get<bool>();
  std::istringstream is(j.at("rng_main").get<std::string>());
  is >> rng_main_;
  read_blob(in, nets_->params_mut());
  read_blob(in, adam_main_.m);
  read_blob(in, adam_main_.v);
  if (!in) throw CheckpointError("truncated trainer state: " + path.string());
}

}  // namespace pinnflow

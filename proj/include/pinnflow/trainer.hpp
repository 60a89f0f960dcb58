// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pinnflow/data.hpp"
#include "pinnflow/loss.hpp"
#include "pinnflow/netgrad.hpp"
#include "pinnflow/network.hpp"
#include "pinnflow/tape.hpp"

namespace pinnflow {

enum class Ablation { kNone, kDataOnly, kNoLogEps };
const char* ablation_name(Ablation a);

struct TrainConfig {
  int pretrain_steps = 2000;
  int main_steps = 20000;
  int batch_data = 256;
  int batch_collocation = 256;
  int batch_boundary = 64;
  double lr0 = 1e-3;
  double decay = 0.95;
  int decay_interval = 1000;
  std::uint64_t seed = 0;
  int conv_window = 500;
  double conv_tol = 1e-4;
  Ablation ablation = Ablation::kNone;
  int lambda_renorm_every = 0;  // 0: normalize once when the PDE phase starts
  int checkpoint_every = 500;   // in-memory restore points for NaN recovery
  int workers = 1;
  TurbConstants turb;
};

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    t = 0;
  }
};

// Standard bias-corrected Adam update. A non-finite gradient rejects the
// step: parameters and moments stay untouched and the counter does not
// advance. Returns whether the step was applied.
bool adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, double lr);

// lr0 * decay^floor(step / interval)
double lr_schedule(int step, const TrainConfig& cfg);

struct LogRow {
  int step = 0;
  int phase = 0;  // 0 pretrain, 1 main
  double lr = 0;
  LossBreakdown loss;
};

struct TrainReport {
  std::vector<LogRow> log;
  LossWeights lambdas;
  int steps_run = 0;
  bool converged = false;
  bool nan_abort = false;
  double wall_seconds = 0;
};

void write_curve_csv(const std::filesystem::path& path,
                     std::span<const LogRow> rows);

class Trainer {
 public:
  Trainer(FieldNetworkSet& nets, std::vector<CaseDataset> cases,
          TrainConfig cfg);

  // Phase one: every network takes Adam steps on its own variable's data
  // loss; no PDE or boundary term is touched.
  TrainReport pretrain();

  // Phase two: one lambda normalization, then Adam on the full loss over
  // fresh batches until main_steps or the convergence window triggers.
  TrainReport train_full();

  const LossWeights& lambdas() const { return lambdas_; }
  const FieldNetworkSet& nets() const { return *nets_; }
  const std::vector<CaseDataset>& cases() const { return cases_; }

  // exact-resume state: parameters, optimizer moments, batch RNG, lambdas
  void save_state(const std::filesystem::path& path) const;
  void load_state(const std::filesystem::path& path);

  // unweighted PDE component means over every collocation point
  PdeLoss pde_means_full();

 private:
  struct PointRef {
    int case_idx = 0;
    int point_idx = 0;
  };
  struct StepBatch {
    std::vector<PointRef> data, coll, bnd;
  };

  StepBatch draw_batch(std::mt19937_64& rng, bool with_pde) const;
  double re_norm_of(int case_idx) const;

  // full gradient + breakdown of the current loss over one batch
  LossBreakdown evaluate(const StepBatch& batch, bool with_pde,
                         std::span<double> grad);

  void eval_data_points(std::span<const PointRef> pts, std::span<double> grad,
                        std::vector<FieldValues>& pred_out);
  void eval_coll_points(std::span<const PointRef> pts, std::span<double> grad,
                        std::vector<ResidualBundle>& res_out);
  void eval_bnd_points(std::span<const PointRef> pts, std::span<double> grad,
                       std::vector<FieldJets2>& jets_out,
                       std::vector<FieldSample>& samples_out);

  bool log_eps_losses() const { return cfg_.ablation != Ablation::kNoLogEps; }

  FieldNetworkSet* nets_;
  std::vector<CaseDataset> cases_;
  TrainConfig cfg_;
  LossWeights lambdas_;
  bool lambdas_ready_ = false;
  AdamState adam_main_;
  int global_step_ = 0;  // main-phase step counter, survives save/load

  std::mt19937_64 rng_pretrain_, rng_main_;

  // per-worker scratch
  struct Worker {
    std::unique_ptr<ValueEngine> value_eng;
    std::unique_ptr<JetEngine> jet_eng;
    ad::Tape tape;
  };
  std::vector<Worker> workers_;
  std::vector<std::vector<double>> chunk_grads_;

  friend class TrainerTestPeer;
};

}  // namespace pinnflow

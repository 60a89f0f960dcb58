// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "pinnflow/network.hpp"

namespace pinnflow {

// Fused per-point evaluation of the whole network set with hand-derived
// backward passes. The jets carried here are the dim-2 spatial jets
// flattened into slots [v, gx, gy, hxx, hxy, hyy]; with NS == 1 the same
// engine degenerates to a plain value forward/backward for data losses.
//
// The slot arithmetic mirrors the generic jet algebra in network.hpp
// operation for operation, so values computed here agree bitwise with
// forward()/forward_jets(). One engine instance is single-threaded scratch;
// concurrent workers each own an instance.
template <int NS>
class SetEngine {
  static_assert(NS == 1 || NS == 6);

 public:
  explicit SetEngine(const FieldNetworkSet& set);

  void forward(double x, double y, double re_norm = 0.0);

  // raw (pre-transform) output slots of one variable's net
  const std::array<double, NS>& raw(int var) const { return raw_[var]; }
  // slots after the variable's output transform
  std::array<double, NS> out(int var) const;

  // Accumulates the parameter gradient of a scalar whose adjoints w.r.t.
  // this variable's post-transform slots are `out_adj`, plus an optional
  // adjoint of the raw value slot (the eps data loss differentiates the
  // net's native log-eps output directly). Must follow a forward() call.
  void backward(int var, const std::array<double, NS>& out_adj,
                double raw_value_adj, std::span<double> grad) const;

  const FieldNetworkSet& set() const { return *set_; }

 private:
  const FieldNetworkSet* set_;
  int n_emb_ = 0;
  std::vector<double> emb_;  // n_emb * NS
  struct LayerCache {
    std::vector<double> pre;   // width * NS, pre-activation jets
    std::vector<double> post;  // width * NS, tanh jets
  };
  std::array<std::vector<LayerCache>, kNumVars> layers_;
  std::array<std::array<double, NS>, kNumVars> raw_{};
  mutable std::vector<double> zbar_, abar_;
};

using JetEngine = SetEngine<6>;
using ValueEngine = SetEngine<1>;

// Assembles the transformed jets of all five variables from a JetEngine
// that has been forwarded at a point.
FieldJets2 engine_jets(const JetEngine& eng);

extern template class SetEngine<1>;
extern template class SetEngine<6>;

}  // namespace pinnflow

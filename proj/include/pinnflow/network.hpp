// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinnflow/jet.hpp"

namespace pinnflow {

using ad::Jet;
using ad::Jet2;

// Raised when a checkpoint cannot be read or does not match the requesting
// configuration.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InputMode { kFixedRe, kParametricRe };

// Output variable order; also the parameter layout order.
enum FieldVar : int { kU = 0, kV = 1, kP = 2, kK = 3, kEps = 4 };
inline constexpr int kNumVars = 5;
inline constexpr const char* kVarNames[kNumVars] = {"u", "v", "p", "k", "eps"};

enum class OutTransform { kIdentity, kSoftplus, kExp };

struct NetworkConfig {
  std::vector<int> widths{64, 64, 64, 64};  // hidden layer widths
  int n_freq = 10;
  std::uint64_t seed = 0;
  InputMode mode = InputMode::kFixedRe;
  // affine Re normalization for parametric mode, set by the trainer
  double re_min = 0.0;
  double re_max = 1.0;

  int input_dim() const { return mode == InputMode::kParametricRe ? 3 : 2; }
  double normalize_re(double re) const {
    return re_max > re_min ? (re - re_min) / (re_max - re_min) : 0.0;
  }
};

// Fixed sine/cosine features: for every input axis, the integer frequency
// ladder 1..n_freq scaled by 2*pi. Frequencies are not trained.
struct FourierEmbedding {
  int n_freq = 0;
  int n_inputs = 0;
  std::vector<double> freq;  // (n_freq x n_inputs) row-major

  FourierEmbedding() = default;
  FourierEmbedding(int nf, int ni) : n_freq(nf), n_inputs(ni) {
    freq.resize(static_cast<std::size_t>(nf) * ni);
    for (int r = 0; r < nf; ++r)
      for (int c = 0; c < ni; ++c) freq[static_cast<std::size_t>(r) * ni + c] = r + 1;
  }
  int output_dim() const { return 2 * n_freq * n_inputs; }

  // Per axis: [sin(2pi*1*x) .. sin(2pi*n*x), cos(2pi*1*x) .. cos(2pi*n*x)].
  template <class T>
  void embed(std::span<const Jet<T>> in, std::vector<Jet<T>>& out) const {
    out.clear();
    out.reserve(output_dim());
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (int c = 0; c < n_inputs; ++c) {
      for (int r = 0; r < n_freq; ++r)
        out.push_back(sin(in[c] * (kTwoPi * freq[static_cast<std::size_t>(r) * n_inputs + c])));
      for (int r = 0; r < n_freq; ++r)
        out.push_back(cos(in[c] * (kTwoPi * freq[static_cast<std::size_t>(r) * n_inputs + c])));
    }
  }
};

// Shape of one per-variable net: embedding -> tanh hidden layers -> scalar.
struct MlpShape {
  int in_dim = 0;
  std::vector<int> widths;
  OutTransform out = OutTransform::kIdentity;

  std::size_t param_count() const {
    std::size_t n = 0;
    int prev = in_dim;
    for (int w : widths) {
      n += static_cast<std::size_t>(prev) * w + w;
      prev = w;
    }
    n += static_cast<std::size_t>(prev) + 1;  // output row + bias
    return n;
  }
};

struct FieldValues {
  double u = 0, v = 0, p = 0, k = 0, eps = 0;
  double eps_raw = 0;  // the eps net's native output, log(eps)
};

template <class T>
struct FieldJets {
  Jet<T> u, v, p, k, eps;
  T eps_raw{};
};
using FieldJets2 = FieldJets<double>;

// Raw MLP forward over jets of any scalar type. Accumulation order is fixed
// (bias first, then inputs in ascending index), which the fused training
// engine mirrors so values agree bitwise across paths.
template <class T>
Jet<T> mlp_forward(const MlpShape& shape, std::span<const T> params,
                   const std::vector<Jet<T>>& input) {
  std::vector<Jet<T>> act = input;
  std::vector<Jet<T>> next;
  std::size_t off = 0;
  int prev = shape.in_dim;
  for (int w : shape.widths) {
    next.clear();
    next.reserve(w);
    for (int j = 0; j < w; ++j) {
      const T* row = params.data() + off + static_cast<std::size_t>(j) * prev;
      Jet<T> z = act[0] * row[0];
      for (int i = 1; i < prev; ++i) z = z + act[i] * row[i];
      z = z + params[off + static_cast<std::size_t>(w) * prev + j];  // bias
      next.push_back(tanh(z));
    }
    act.swap(next);
    off += static_cast<std::size_t>(w) * prev + w;
    prev = w;
  }
  Jet<T> z = act[0] * params[off];
  for (int i = 1; i < prev; ++i) z = z + act[i] * params[off + i];
  return z + params[off + prev];
}

template <class T>
Jet<T> apply_out_transform(OutTransform t, const Jet<T>& raw) {
  switch (t) {
    case OutTransform::kIdentity: return raw;
    case OutTransform::kSoftplus: return softplus(raw);
    case OutTransform::kExp: return exp(raw);
  }
  return raw;
}

class FieldNetworkSet {
 public:
  explicit FieldNetworkSet(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  NetworkConfig& config_mut() { return cfg_; }
  const FourierEmbedding& embedding() const { return embedding_; }
  const MlpShape& shape(int var) const { return shapes_[var]; }

  std::span<const double> params() const { return params_; }
  std::span<double> params_mut() { return params_; }
  std::size_t param_offset(int var) const { return offsets_[var]; }
  std::span<const double> net_params(int var) const {
    return std::span<const double>(params_).subspan(offsets_[var],
                                                    shapes_[var].param_count());
  }

  FieldValues forward(double x, double y, double re = 0.0) const;
  FieldJets2 forward_jets(double x, double y, double re = 0.0) const;

  void save(const std::filesystem::path& path) const;
  static FieldNetworkSet load(const std::filesystem::path& path);

 private:
  NetworkConfig cfg_;
  FourierEmbedding embedding_;
  std::array<MlpShape, kNumVars> shapes_;
  std::array<std::size_t, kNumVars> offsets_{};
  std::vector<double> params_;
};

// Evaluation of the whole set over any scalar type, given already-seeded
// input jets (x, y[, re]). Reference path for the taped gradient tests.
template <class T>
FieldJets<T> forward_jets_generic(const FieldNetworkSet& set,
                                  std::span<const T> params,
                                  std::span<const Jet<T>> inputs) {
  std::vector<Jet<T>> embedded;
  set.embedding().embed(inputs, embedded);
  FieldJets<T> out;
  Jet<T>* slots[kNumVars] = {&out.u, &out.v, &out.p, &out.k, &out.eps};
  for (int var = 0; var < kNumVars; ++var) {
    const MlpShape& shape = set.shape(var);
    auto seg = params.subspan(set.param_offset(var), shape.param_count());
    Jet<T> raw = mlp_forward(shape, seg, embedded);
    if (var == kEps) out.eps_raw = raw.v;
    *slots[var] = apply_out_transform(shape.out, raw);
  }
  return out;
}

OutTransform var_out_transform(int var);

}  // namespace pinnflow

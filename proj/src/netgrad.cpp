// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/netgrad.hpp"

#include <cmath>

namespace pinnflow {

namespace {

struct Deriv3 {
  double f0, f1, f2, f3;
};

Deriv3 tanh_derivs(double z) {
  const double t = std::tanh(z);
  const double s = 1.0 - t * t;
  return {t, s, -2.0 * (t * s), (6.0 * t * t - 2.0) * s};
}

Deriv3 transform_derivs(OutTransform tr, double z) {
  switch (tr) {
    case OutTransform::kIdentity:
      return {z, 1.0, 0.0, 0.0};
    case OutTransform::kSoftplus: {
      const double s = ad::sigmoid(z);
      const double f2 = s * (1.0 - s);
      return {ad::softplus(z), s, f2, f2 * (1.0 - 2.0 * s)};
    }
    case OutTransform::kExp: {
      const double e = std::exp(z);
      return {e, e, e, e};
    }
  }
  return {z, 1.0, 0.0, 0.0};
}

// y = f(z) on jet slots; matches unary_chain in jet.hpp term for term
template <int NS>
void unary_fwd(const Deriv3& d, const double* z, double* y) {
  y[0] = d.f0;
  if constexpr (NS == 6) {
    y[1] = d.f1 * z[1];
    y[2] = d.f1 * z[2];
    y[3] = d.f1 * z[3] + d.f2 * (z[1] * z[1]);
    y[4] = d.f1 * z[4] + d.f2 * (z[1] * z[2]);
    y[5] = d.f1 * z[5] + d.f2 * (z[2] * z[2]);
  }
}

// adjoint of z given the adjoint of y = f(z); needs f up to third order
// because the Hessian slots carry f'' of the primal
template <int NS>
void unary_bwd(const Deriv3& d, const double* z, const double* ybar,
               double* zbar) {
  if constexpr (NS == 1) {
    zbar[0] = d.f1 * ybar[0];
    return;
  }
  zbar[3] = d.f1 * ybar[3];
  zbar[4] = d.f1 * ybar[4];
  zbar[5] = d.f1 * ybar[5];
  zbar[1] = d.f1 * ybar[1] + ybar[3] * (2.0 * d.f2 * z[1]) + ybar[4] * (d.f2 * z[2]);
  zbar[2] = d.f1 * ybar[2] + ybar[5] * (2.0 * d.f2 * z[2]) + ybar[4] * (d.f2 * z[1]);
  zbar[0] = d.f1 * ybar[0] + d.f2 * (ybar[1] * z[1] + ybar[2] * z[2]) +
            ybar[3] * (d.f2 * z[3] + d.f3 * (z[1] * z[1])) +
            ybar[4] * (d.f2 * z[4] + d.f3 * (z[1] * z[2])) +
            ybar[5] * (d.f2 * z[5] + d.f3 * (z[2] * z[2]));
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

template <int NS>
SetEngine<NS>::SetEngine(const FieldNetworkSet& set) : set_(&set) {
  n_emb_ = set.embedding().output_dim();
  emb_.assign(static_cast<std::size_t>(n_emb_) * NS, 0.0);
  int max_width = 0;
  for (int var = 0; var < kNumVars; ++var) {
    const auto& widths = set.shape(var).widths;
    layers_[var].resize(widths.size());
    for (std::size_t l = 0; l < widths.size(); ++l) {
      layers_[var][l].pre.assign(static_cast<std::size_t>(widths[l]) * NS, 0.0);
      layers_[var][l].post.assign(static_cast<std::size_t>(widths[l]) * NS, 0.0);
      max_width = std::max(max_width, widths[l]);
    }
  }
  max_width = std::max(max_width, n_emb_);
  zbar_.assign(static_cast<std::size_t>(max_width) * NS, 0.0);
  abar_.assign(static_cast<std::size_t>(max_width) * NS, 0.0);
}

template <int NS>
void SetEngine<NS>::forward(double x, double y, double re_norm) {
  const FourierEmbedding& emb = set_->embedding();
  const int ni = emb.n_inputs;
  const double in[3] = {x, y, re_norm};
  std::fill(emb_.begin(), emb_.end(), 0.0);
  std::size_t f = 0;
  for (int c = 0; c < ni; ++c) {
    for (int half = 0; half < 2; ++half) {  // sin block then cos block
      for (int r = 0; r < emb.n_freq; ++r, ++f) {
        const double w = kTwoPi * emb.freq[static_cast<std::size_t>(r) * ni + c];
        const double arg = in[c] * w;
        double* slot = emb_.data() + f * NS;
        const double s = std::sin(arg), cv = std::cos(arg);
        if (half == 0) {
          slot[0] = s;
          if constexpr (NS == 6) {
            if (c < 2) {
              slot[1 + c] = cv * w;                 // gx or gy
              slot[c == 0 ? 3 : 5] = -s * (w * w);  // hxx or hyy
            }
          }
        } else {
          slot[0] = cv;
          if constexpr (NS == 6) {
            if (c < 2) {
              slot[1 + c] = -s * w;
              slot[c == 0 ? 3 : 5] = -cv * (w * w);
            }
          }
        }
      }
    }
  }

  for (int var = 0; var < kNumVars; ++var) {
    const MlpShape& shape = set_->shape(var);
    const double* params = set_->params().data() + set_->param_offset(var);
    const double* a = emb_.data();
    int prev = n_emb_;
    std::size_t off = 0;
    for (std::size_t l = 0; l < shape.widths.size(); ++l) {
      const int w = shape.widths[l];
      LayerCache& cache = layers_[var][l];
      const double* W = params + off;
      const double* b = params + off + static_cast<std::size_t>(w) * prev;
      for (int j = 0; j < w; ++j) {
        double acc[NS];
        for (int s = 0; s < NS; ++s) acc[s] = 0.0;
        const double* row = W + static_cast<std::size_t>(j) * prev;
        for (int i = 0; i < prev; ++i) {
          const double wj = row[i];
          const double* as = a + static_cast<std::size_t>(i) * NS;
          for (int s = 0; s < NS; ++s) acc[s] += wj * as[s];
        }
        acc[0] += b[j];
        double* pre = cache.pre.data() + static_cast<std::size_t>(j) * NS;
        for (int s = 0; s < NS; ++s) pre[s] = acc[s];
        unary_fwd<NS>(tanh_derivs(acc[0]), pre,
                      cache.post.data() + static_cast<std::size_t>(j) * NS);
      }
      a = cache.post.data();
      off += static_cast<std::size_t>(w) * prev + w;
      prev = w;
    }
    // output row
    double acc[NS];
    for (int s = 0; s < NS; ++s) acc[s] = 0.0;
    for (int i = 0; i < prev; ++i) {
      const double wj = params[off + i];
      const double* as = a + static_cast<std::size_t>(i) * NS;
      for (int s = 0; s < NS; ++s) acc[s] += wj * as[s];
    }
    acc[0] += params[off + prev];
    for (int s = 0; s < NS; ++s) raw_[var][s] = acc[s];
  }
}

template <int NS>
std::array<double, NS> SetEngine<NS>::out(int var) const {
  const Deriv3 d = transform_derivs(set_->shape(var).out, raw_[var][0]);
  std::array<double, NS> y;
  unary_fwd<NS>(d, raw_[var].data(), y.data());
  return y;
}

template <int NS>
void SetEngine<NS>::backward(int var, const std::array<double, NS>& out_adj,
                             double raw_value_adj, std::span<double> grad) const {
  const MlpShape& shape = set_->shape(var);
  const double* params = set_->params().data() + set_->param_offset(var);
  double* g = grad.data() + set_->param_offset(var);

  // output transform
  std::array<double, NS> rbar;
  {
    const Deriv3 d = transform_derivs(shape.out, raw_[var][0]);
    unary_bwd<NS>(d, raw_[var].data(), out_adj.data(), rbar.data());
    rbar[0] += raw_value_adj;
  }

  // layer offsets into the parameter segment
  const int n_layers = static_cast<int>(shape.widths.size());
  std::size_t offs_stack[16];
  {
    std::size_t off = 0;
    int prev = shape.in_dim;
    for (int l = 0; l < n_layers; ++l) {
      offs_stack[l] = off;
      off += static_cast<std::size_t>(shape.widths[l]) * prev + shape.widths[l];
      prev = shape.widths[l];
    }
    offs_stack[n_layers] = off;
  }

  // output affine: raw = W_out . a + b_out
  const int last_w = n_layers > 0 ? shape.widths[n_layers - 1] : shape.in_dim;
  const double* a_last =
      n_layers > 0 ? layers_[var][n_layers - 1].post.data() : emb_.data();
  {
    const std::size_t off = offs_stack[n_layers];
    for (int i = 0; i < last_w; ++i) {
      const double* as = a_last + static_cast<std::size_t>(i) * NS;
      double acc = 0.0;
      for (int s = 0; s < NS; ++s) acc += rbar[s] * as[s];
      g[off + i] += acc;
      double* ab = abar_.data() + static_cast<std::size_t>(i) * NS;
      const double wi = params[off + i];
      for (int s = 0; s < NS; ++s) ab[s] = wi * rbar[s];
    }
    g[off + last_w] += rbar[0];
  }

  // hidden layers, last to first; abar_ carries the post-slot adjoints
  for (int l = n_layers - 1; l >= 0; --l) {
    const int w = shape.widths[l];
    const int prev = l > 0 ? shape.widths[l - 1] : shape.in_dim;
    const LayerCache& cache = layers_[var][l];
    const double* a_in = l > 0 ? layers_[var][l - 1].post.data() : emb_.data();
    const double* W = params + offs_stack[l];

    for (int j = 0; j < w; ++j) {
      const double* pre = cache.pre.data() + static_cast<std::size_t>(j) * NS;
      unary_bwd<NS>(tanh_derivs(pre[0]), pre,
                    abar_.data() + static_cast<std::size_t>(j) * NS,
                    zbar_.data() + static_cast<std::size_t>(j) * NS);
    }

    double* gW = g + offs_stack[l];
    double* gb = gW + static_cast<std::size_t>(w) * prev;
    if (l > 0) {
      for (int i = 0; i < prev * NS; ++i) abar_[i] = 0.0;
    }
    for (int j = 0; j < w; ++j) {
      const double* zb = zbar_.data() + static_cast<std::size_t>(j) * NS;
      gb[j] += zb[0];
      double* rowg = gW + static_cast<std::size_t>(j) * prev;
      const double* row = W + static_cast<std::size_t>(j) * prev;
      for (int i = 0; i < prev; ++i) {
        const double* as = a_in + static_cast<std::size_t>(i) * NS;
        double acc = 0.0;
        for (int s = 0; s < NS; ++s) acc += zb[s] * as[s];
        rowg[i] += acc;
        if (l > 0) {
          double* ab = abar_.data() + static_cast<std::size_t>(i) * NS;
          const double wj = row[i];
          for (int s = 0; s < NS; ++s) ab[s] += wj * zb[s];
        }
      }
    }
    // embedding has no trainable parameters; adjoints stop at layer 0
  }
}

FieldJets2 engine_jets(const JetEngine& eng) {
  FieldJets2 out;
  Jet2* slots[kNumVars] = {&out.u, &out.v, &out.p, &out.k, &out.eps};
  for (int var = 0; var < kNumVars; ++var) {
    const auto y = eng.out(var);
    Jet2& j = *slots[var];
    j.dim = 2;
    j.v = y[0];
    j.g = {y[1], y[2], 0.0};
    j.h = {y[3], y[4], y[5], 0.0, 0.0, 0.0};
  }
  out.eps_raw = eng.raw(kEps)[0];
  return out;
}

template class SetEngine<1>;
template class SetEngine<6>;

}  // namespace pinnflow

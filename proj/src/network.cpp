// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pinnflow/rng.hpp"

namespace pinnflow {

OutTransform var_out_transform(int var) {
  // k stays positive through softplus; the eps net predicts log(eps) and the
  // exposed value is exp of that, so both transported scalars are positive
  // for any parameters.
  if (var == kK) return OutTransform::kSoftplus;
  if (var == kEps) return OutTransform::kExp;
  return OutTransform::kIdentity;
}

FieldNetworkSet::FieldNetworkSet(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.n_freq < 1) throw std::invalid_argument("n_freq must be >= 1");
  if (cfg_.widths.empty()) throw std::invalid_argument("at least one hidden layer required");
  for (int w : cfg_.widths)
    if (w < 1) throw std::invalid_argument("zero-width layer");

  embedding_ = FourierEmbedding(cfg_.n_freq, cfg_.input_dim());
  std::size_t total = 0;
  for (int var = 0; var < kNumVars; ++var) {
    shapes_[var] = MlpShape{embedding_.output_dim(), cfg_.widths, var_out_transform(var)};
    offsets_[var] = total;
    total += shapes_[var].param_count();
  }
  params_.assign(total, 0.0);

  // Glorot-uniform weights, zero biases, one stream per net.
  for (int var = 0; var < kNumVars; ++var) {
    auto rng = make_rng(cfg_.seed, stream::kNetInit * 100 + var);
    double* p = params_.data() + offsets_[var];
    int prev = shapes_[var].in_dim;
    std::vector<int> outs = cfg_.widths;
    outs.push_back(1);
    for (int w : outs) {
      const double bound = std::sqrt(6.0 / (prev + w));
      for (int i = 0; i < w * prev; ++i) p[i] = uniform(rng, -bound, bound);
      p += static_cast<std::size_t>(w) * prev + w;  // biases stay zero
      prev = w;
    }
  }
}

FieldValues FieldNetworkSet::forward(double x, double y, double re) const {
  std::vector<Jet2> in(cfg_.input_dim(), Jet2(0));
  in[0].v = x;
  in[1].v = y;
  if (cfg_.input_dim() == 3) in[2].v = re;
  auto jets = forward_jets_generic<double>(*this, params_, in);
  return FieldValues{jets.u.v, jets.v.v, jets.p.v, jets.k.v, jets.eps.v,
                     jets.eps_raw};
}

FieldJets2 FieldNetworkSet::forward_jets(double x, double y, double re) const {
  std::vector<Jet2> in(cfg_.input_dim(), Jet2(2));
  in[0].v = x;
  in[0].g[0] = 1.0;
  in[1].v = y;
  in[1].g[1] = 1.0;
  if (cfg_.input_dim() == 3) in[2].v = re;  // Re is never an active input
  return forward_jets_generic<double>(*this, params_, in);
}

namespace {
constexpr char kMagic[8] = {'P', 'F', 'N', 'C', '0', '0', '0', '1'};
}

void FieldNetworkSet::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["widths"] = cfg_.widths;
  j["n_freq"] = cfg_.n_freq;
  j["seed"] = cfg_.seed;
  j["mode"] = cfg_.mode == InputMode::kParametricRe ? "parametric-re" : "fixed-re";
  j["re_min"] = cfg_.re_min;
  j["re_max"] = cfg_.re_max;
  j["param_count"] = params_.size();
  const std::string header = j.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(double)));
  if (!out) throw CheckpointError("checkpoint write failed: " + path.string());
}

FieldNetworkSet FieldNetworkSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a network checkpoint: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20)) throw CheckpointError("corrupt checkpoint header: " + path.string());
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("truncated checkpoint header: " + path.string());
  auto j = nlohmann::json::parse(header);

  NetworkConfig cfg;
  cfg.widths = j.at("widths").get<std::vector<int>>();
  cfg.n_freq = j.at("n_freq").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.mode = j.at("mode").get<std::string>() == "parametric-re"
                 ? InputMode::kParametricRe
                 : InputMode::kFixedRe;
  cfg.re_min = j.at("re_min").get<double>();
  cfg.re_max = j.at("re_max").get<double>();

  FieldNetworkSet set(cfg);
  const std::size_t expect = j.at("param_count").get<std::size_t>();
  if (expect != set.params_.size())
    throw CheckpointError("checkpoint/config mismatch: parameter count");
  in.read(reinterpret_cast<char*>(set.params_.data()),
          static_cast<std::streamsize>(set.params_.size() * sizeof(double)));
  if (!in) throw CheckpointError("truncated checkpoint payload: " + path.string());
  return set;
}

}  // namespace pinnflow

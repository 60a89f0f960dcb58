// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pinnflow/data.hpp"
#include "pinnflow/network.hpp"

namespace pinnflow {

// Relative L2 errors over a held-out cloud, per variable. When a truth
// vector has zero norm the entry falls back to absolute RMSE and the flag
// is set.
struct ValidationMetrics {
  std::array<double, kNumVars> rel_err{};
  std::array<bool, kNumVars> absolute_fallback{};
  std::size_t n_points = 0;
};

using Predictor = std::function<FieldValues(double x, double y)>;

ValidationMetrics validation_errors(const Predictor& predict,
                                    std::span<const FieldSample> points);
ValidationMetrics validation_errors(const FieldNetworkSet& nets,
                                    std::span<const FieldSample> points,
                                    double re_norm = 0.0);

struct GridSpec {
  int nx = 256, ny = 128;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
};

// Row-major (ny rows of nx cells, y ascending); masked cells carry NaN.
struct FieldGrid {
  GridSpec spec;
  std::string variable;
  std::vector<double> values;

  double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * spec.nx + ix]; }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * spec.nx + ix]; }
};

// Direct prediction on cell centers; variable is one of u,v,p,k,eps,vmag.
FieldGrid predict_grid(const FieldNetworkSet& nets, const GridSpec& spec,
                       const std::string& variable, double re_norm = 0.0);

// log(|pred - true| + 1e-12) per cell, binned over the cloud and min-max
// normalized to [0,1] over the unmasked cells; cells without cloud points
// stay masked.
FieldGrid error_map(const Predictor& predict, std::span<const FieldSample> cloud,
                    int variable, const GridSpec& spec);
FieldGrid error_map(const FieldNetworkSet& nets,
                    std::span<const FieldSample> cloud, int variable,
                    const GridSpec& spec, double re_norm = 0.0);

void export_grid(const FieldGrid& grid, const std::filesystem::path& path);
FieldGrid read_grid(const std::filesystem::path& path);

// companion matplotlib script able to render any exported grid csv
void write_plot_script(const std::filesystem::path& path);

void write_metrics_json(const std::filesystem::path& path,
                        const ValidationMetrics& m,
                        const std::string& case_name, double re);

}  // namespace pinnflow

// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace pinnflow {

namespace {
double value_of(const FieldValues& f, int var) {
  switch (var) {
    case kU: return f.u;
    case kV: return f.v;
    case kP: return f.p;
    case kK: return f.k;
    case kEps: return f.eps;
  }
  throw std::invalid_argument("bad variable index");
}
double truth_of(const FieldSample& s, int var) {
  switch (var) {
    case kU: return s.u;
    case kV: return s.v;
    case kP: return s.p;
    case kK: return s.k;
    case kEps: return s.eps;
  }
  throw std::invalid_argument("bad variable index");
}
}  // namespace

ValidationMetrics validation_errors(const Predictor& predict,
                                    std::span<const FieldSample> points) {
  if (points.empty())
    throw std::invalid_argument("validation_errors: empty validation set");
  std::array<double, kNumVars> num{}, den{};
  for (const auto& s : points) {
    const FieldValues f = predict(s.x, s.y);
    for (int var = 0; var < kNumVars; ++var) {
      const double e = value_of(f, var) - truth_of(s, var);
      num[var] += e * e;
      den[var] += truth_of(s, var) * truth_of(s, var);
    }
  }
  ValidationMetrics m;
  m.n_points = points.size();
  for (int var = 0; var < kNumVars; ++var) {
    if (den[var] > 0.0) {
      m.rel_err[var] = std::sqrt(num[var] / den[var]);
    } else {
      m.rel_err[var] = std::sqrt(num[var] / static_cast<double>(points.size()));
      m.absolute_fallback[var] = true;
    }
  }
  return m;
}

ValidationMetrics validation_errors(const FieldNetworkSet& nets,
                                    std::span<const FieldSample> points,
                                    double re_norm) {
  return validation_errors(
      [&](double x, double y) { return nets.forward(x, y, re_norm); }, points);
}

FieldGrid predict_grid(const FieldNetworkSet& nets, const GridSpec& spec,
                       const std::string& variable, double re_norm) {
  if (spec.nx < 2 || spec.ny < 2)
    throw std::invalid_argument("grid needs nx, ny >= 2");
  FieldGrid grid;
  grid.spec = spec;
  grid.variable = variable;
  grid.values.assign(static_cast<std::size_t>(spec.nx) * spec.ny, 0.0);
  const double dx = (spec.xmax - spec.xmin) / spec.nx;
  const double dy = (spec.ymax - spec.ymin) / spec.ny;
  for (int iy = 0; iy < spec.ny; ++iy) {
    for (int ix = 0; ix < spec.nx; ++ix) {
      const double x = spec.xmin + (ix + 0.5) * dx;
      const double y = spec.ymin + (iy + 0.5) * dy;
      const FieldValues f = nets.forward(x, y, re_norm);
      double v = 0.0;
      if (variable == "vmag")
        v = std::hypot(f.u, f.v);
      else if (variable == "u")
        v = f.u;
      else if (variable == "v")
        v = f.v;
      else if (variable == "p")
        v = f.p;
      else if (variable == "k")
        v = f.k;
      else if (variable == "eps")
        v = f.eps;
      else
        throw std::invalid_argument("unknown grid variable: " + variable);
      grid.at(ix, iy) = v;
    }
  }
  return grid;
}

FieldGrid error_map(const Predictor& predict,
                    std::span<const FieldSample> cloud, int variable,
                    const GridSpec& spec) {
  if (spec.nx < 2 || spec.ny < 2)
    throw std::invalid_argument("grid needs nx, ny >= 2");
  constexpr double kDelta = 1e-12;
  const std::size_t n_cells = static_cast<std::size_t>(spec.nx) * spec.ny;
  std::vector<double> acc(n_cells, 0.0);
  std::vector<std::size_t> count(n_cells, 0);
  const double dx = (spec.xmax - spec.xmin) / spec.nx;
  const double dy = (spec.ymax - spec.ymin) / spec.ny;
  for (const auto& s : cloud) {
    int ix = static_cast<int>((s.x - spec.xmin) / dx);
    int iy = static_cast<int>((s.y - spec.ymin) / dy);
    if (ix < 0 || ix >= spec.nx || iy < 0 || iy >= spec.ny) continue;
    const FieldValues f = predict(s.x, s.y);
    const double err = std::abs(value_of(f, variable) - truth_of(s, variable));
    acc[static_cast<std::size_t>(iy) * spec.nx + ix] += err;
    count[static_cast<std::size_t>(iy) * spec.nx + ix] += 1;
  }

  FieldGrid grid;
  grid.spec = spec;
  grid.variable = std::string(kVarNames[variable]) + "_log_error";
  grid.values.assign(n_cells, std::numeric_limits<double>::quiet_NaN());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t unmasked = 0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    if (count[c] == 0) continue;
    const double v = std::log(acc[c] / static_cast<double>(count[c]) + kDelta);
    grid.values[c] = v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++unmasked;
  }
  if (unmasked == 0) throw std::invalid_argument("error_map: all cells masked");
  const double range = hi - lo;
  for (double& v : grid.values)
    if (!std::isnan(v)) v = range > 0.0 ? (v - lo) / range : 0.0;
  return grid;
}

FieldGrid error_map(const FieldNetworkSet& nets,
                    std::span<const FieldSample> cloud, int variable,
                    const GridSpec& spec, double re_norm) {
  return error_map(
      [&](double x, double y) { return nets.forward(x, y, re_norm); }, cloud,
      variable, spec);
}

void export_grid(const FieldGrid& grid, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write grid: " + path.string());
  std::fputs("nx,ny,xmin,xmax,ymin,ymax,variable\n", f);
  std::fprintf(f, "%d,%d,%.17g,%.17g,%.17g,%.17g,%s\n", grid.spec.nx,
               grid.spec.ny, grid.spec.xmin, grid.spec.xmax, grid.spec.ymin,
               grid.spec.ymax, grid.variable.c_str());
  for (int iy = 0; iy < grid.spec.ny; ++iy) {
    for (int ix = 0; ix < grid.spec.nx; ++ix) {
      const double v = grid.at(ix, iy);
      if (std::isnan(v))
        std::fputs("nan", f);
      else
        std::fprintf(f, "%.17g", v);
      std::fputc(ix + 1 == grid.spec.nx ? '\n' : ',', f);
    }
  }
  if (std::fclose(f) != 0) throw std::runtime_error("grid write failed: " + path.string());
}

FieldGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid: " + path.string());
  std::string line;
  std::getline(in, line);  // header names
  std::getline(in, line);
  FieldGrid grid;
  {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      cells.push_back(line.substr(start, pos == std::string::npos
                                             ? std::string::npos
                                             : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (cells.size() != 7) throw std::runtime_error("bad grid header: " + path.string());
    grid.spec.nx = std::stoi(cells[0]);
    grid.spec.ny = std::stoi(cells[1]);
    grid.spec.xmin = std::stod(cells[2]);
    grid.spec.xmax = std::stod(cells[3]);
    grid.spec.ymin = std::stod(cells[4]);
    grid.spec.ymax = std::stod(cells[5]);
    grid.variable = cells[6];
  }
  grid.values.reserve(static_cast<std::size_t>(grid.spec.nx) * grid.spec.ny);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      const std::string cell = line.substr(
          start, pos == std::string::npos ? std::string::npos : pos - start);
      if (cell == "nan")
        grid.values.push_back(std::numeric_limits<double>::quiet_NaN());
      else
        grid.values.push_back(std::stod(cell));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  }
  if (grid.values.size() !=
      static_cast<std::size_t>(grid.spec.nx) * grid.spec.ny)
    throw std::runtime_error("grid payload size mismatch: " + path.string());
  return grid;
}

void write_plot_script(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plot script: " + path.string());
  out << R"(#!/usr/bin/env python3
"""Render a field grid csv produced by the eval command."""
import sys

import matplotlib.pyplot as plt
import numpy as np

def main(path):
    with open(path) as f:
        f.readline()
        nx, ny, xmin, xmax, ymin, ymax, var = f.readline().strip().split(",")
        data = np.loadtxt(f, delimiter=",")
    data = data.reshape(int(ny), int(nx))
    extent = [float(xmin), float(xmax), float(ymin), float(ymax)]
    plt.imshow(data, origin="lower", extent=extent, aspect="auto", cmap="viridis")
    plt.colorbar(label=var)
    plt.xlabel("x")
    plt.ylabel("y")
    plt.title(var)
    out = path.rsplit(".", 1)[0] + ".png"
    plt.savefig(out, dpi=150, bbox_inches="tight")
    print(out)

if __name__ == "__main__":
    main(sys.argv[1])
)";
}

void write_metrics_json(const std::filesystem::path& path,
                        const ValidationMetrics& m,
                        const std::string& case_name, double re) {
  nlohmann::ordered_json j;
  j["case"] = case_name;
  j["re"] = re;
  j["n_points"] = m.n_points;
  j["metric"] = "relative_l2";
  for (int var = 0; var < kNumVars; ++var) {
    j["rel_err"][kVarNames[var]] = m.rel_err[var];
    if (m.absolute_fallback[var])
      j["absolute_fallback"][kVarNames[var]] = true;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace pinnflow

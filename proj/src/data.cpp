// SPDX-License-Identifier: Apache-2.0
#include "pinnflow/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "pinnflow/numdiff.hpp"
#include "pinnflow/rng.hpp"

namespace pinnflow {

namespace {
constexpr double kPi = std::numbers::pi;
}

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::kInterior: return "interior";
    case Tag::kInlet: return "inlet";
    case Tag::kOutlet: return "outlet";
    case Tag::kWall: return "wall";
    case Tag::kSymmetry: return "symmetry";
  }
  return "?";
}

std::optional<Tag> tag_from(const std::string& s) {
  for (Tag t : {Tag::kInterior, Tag::kInlet, Tag::kOutlet, Tag::kWall, Tag::kSymmetry})
    if (s == tag_name(t)) return t;
  return std::nullopt;
}

const char* family_name(MmsFamily f) {
  return f == MmsFamily::kTrigVortex ? "trig-vortex" : "poly-channel";
}

std::optional<MmsFamily> family_from(const std::string& s) {
  if (s == "trig-vortex") return MmsFamily::kTrigVortex;
  if (s == "poly-channel") return MmsFamily::kPolyChannel;
  return std::nullopt;
}

// ---- manufactured fields -------------------------------------------------------

double MmsCase::amplitude() const { return 0.5 + 0.5 * s / 5600.0; }

double MmsCase::u(double x, double y) const {
  if (family == MmsFamily::kTrigVortex)
    return std::sin(kPi * x) * std::cos(kPi * y) * amplitude();
  const double t = (y - domain.y0) / (domain.y1 - domain.y0);
  return 6.0 * t * (1.0 - t) * amplitude();
}

double MmsCase::v(double x, double y) const {
  if (family == MmsFamily::kTrigVortex)
    return -std::cos(kPi * x) * std::sin(kPi * y) * amplitude();
  (void)x;
  (void)y;
  return 0.0;
}

double MmsCase::p(double x, double y) const {
  if (family == MmsFamily::kTrigVortex)
    return 0.25 * (std::cos(2.0 * kPi * x) + std::cos(2.0 * kPi * y));
  (void)y;
  return (domain.x1 - x) / (domain.x1 - domain.x0);
}

double MmsCase::k(double x, double y) const {
  if (family == MmsFamily::kTrigVortex)
    return 0.1 + 0.05 * std::sin(kPi * x) * std::sin(kPi * y);
  const double t = (y - domain.y0) / (domain.y1 - domain.y0);
  return 0.05 + 0.3 * t * (1.0 - t);
}

double MmsCase::eps(double x, double y) const {
  if (family == MmsFamily::kTrigVortex)
    return std::exp(0.5 + 0.3 * std::cos(kPi * x));
  const double xi = (x - domain.x0) / (domain.x1 - domain.x0);
  const double t = (y - domain.y0) / (domain.y1 - domain.y0);
  return 0.5 + 0.4 * xi * (1.0 - xi) + 0.3 * t * (1.0 - t);
}

FieldPoint MmsCase::fields_at(double x, double y) const {
  return FieldPoint{x, y, u(x, y), v(x, y), p(x, y), k(x, y), eps(x, y)};
}

// Forcing oracle: the governing equations applied to the closed-form fields
// with every derivative taken by fourth-order central differences. This is
// the independent route against which the jet-based residuals are verified,
// so it must not call into the residual evaluation in physics.hpp.
Forcing MmsCase::forcing_at(double x, double y, const FluidProps& fp,
                            const TurbConstants& tc) const {
  namespace nd = numdiff;
  const double h = 1e-3;
  nd::Fn2 fu = [this](double a, double b) { return u(a, b); };
  nd::Fn2 fv = [this](double a, double b) { return v(a, b); };
  nd::Fn2 fpp = [this](double a, double b) { return p(a, b); };
  nd::Fn2 fk = [this](double a, double b) { return k(a, b); };
  nd::Fn2 fe = [this](double a, double b) { return eps(a, b); };
  nd::Fn2 fmt = [this, &tc](double a, double b) {
    const double kv = k(a, b);
    return tc.c_mu * kv * kv / eps(a, b);
  };

  const double uv = u(x, y), vv = v(x, y), kv = k(x, y), ev = eps(x, y);
  const double ux = nd::dx_o4(fu, x, y, h), uy = nd::dy_o4(fu, x, y, h);
  const double vx = nd::dx_o4(fv, x, y, h), vy = nd::dy_o4(fv, x, y, h);
  const double uxx = nd::dxx_o4(fu, x, y, h), uyy = nd::dyy_o4(fu, x, y, h);
  const double vxx = nd::dxx_o4(fv, x, y, h), vyy = nd::dyy_o4(fv, x, y, h);
  const double px = nd::dx_o4(fpp, x, y, h), py = nd::dy_o4(fpp, x, y, h);
  const double kx = nd::dx_o4(fk, x, y, h), ky = nd::dy_o4(fk, x, y, h);
  const double kxx = nd::dxx_o4(fk, x, y, h), kyy = nd::dyy_o4(fk, x, y, h);
  const double ex = nd::dx_o4(fe, x, y, h), ey = nd::dy_o4(fe, x, y, h);
  const double exx = nd::dxx_o4(fe, x, y, h), eyy = nd::dyy_o4(fe, x, y, h);
  const double mt = fmt(x, y);
  const double mtx = nd::dx_o4(fmt, x, y, h), mty = nd::dy_o4(fmt, x, y, h);

  const double mu_eff = fp.mu + mt;
  const double prod =
      mt * (2.0 * ux * ux + 2.0 * vy * vy + (uy + vx) * (uy + vx));

  Forcing f;
  f.cont = ux + vy;
  f.mom_x = fp.rho * (uv * ux + vv * uy) + px - mu_eff * (uxx + uyy);
  f.mom_y = fp.rho * (uv * vx + vv * vy) + py - mu_eff * (vxx + vyy);
  f.k = fp.rho * (uv * kx + vv * ky) -
        ((fp.mu + mt / tc.sigma_k) * (kxx + kyy) + (mtx * kx + mty * ky) / tc.sigma_k) -
        prod + ev;
  const double ratio = ev / kv;
  const double source =
      tc.eps_destruction_sign == TurbConstants::EpsSign::kStandard
          ? (tc.c1 * prod - tc.c2 * fp.rho * ev) * ratio
          : (tc.c1 * prod + tc.c2 * ev) * ratio;
  f.eps = fp.rho * (uv * ex + vv * ey) -
          ((fp.mu + mt / tc.sigma_eps) * (exx + eyy) +
           (mtx * ex + mty * ey) / tc.sigma_eps) -
          source;
  return f;
}

MmsCase make_mms_case(MmsFamily family, double s) {
  if (!(s > 0.0) || s > 56000.0)
    throw std::invalid_argument("mms case parameter s out of range (0, 56000]");
  MmsCase mms;
  mms.family = family;
  mms.s = s;
  return mms;
}

// ---- sampling -------------------------------------------------------------------

namespace {

std::vector<std::size_t> sample_indices(std::size_t pool, std::size_t n,
                                        std::uint64_t seed, std::uint64_t tag) {
  if (n > pool) throw std::invalid_argument("sample larger than the cloud");
  std::vector<std::size_t> idx(pool);
  for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
  auto rng = make_rng(seed, tag);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(rng, pool - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

}  // namespace

std::vector<FieldSample> sample_points(std::span<const FieldSample> cloud,
                                       std::size_t n, std::uint64_t seed) {
  auto idx = sample_indices(cloud.size(), n, seed, stream::kDataSample);
  std::vector<FieldSample> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(cloud[i]);
  return out;
}

void finalize_splits(CaseDataset& ds, const DatasetSpec& spec,
                     const TurbConstants& tc) {
  const std::size_t n_cloud = ds.cloud.size();
  const auto n_val =
      static_cast<std::size_t>(spec.validation_fraction * static_cast<double>(n_cloud));
  auto val_idx = sample_indices(n_cloud, n_val, spec.seed, stream::kValidationSplit);
  std::vector<char> is_val(n_cloud, 0);
  for (std::size_t i : val_idx) is_val[i] = 1;

  std::vector<std::size_t> train_pool;
  train_pool.reserve(n_cloud - n_val);
  for (std::size_t i = 0; i < n_cloud; ++i)
    if (!is_val[i]) train_pool.push_back(i);

  if (static_cast<std::size_t>(spec.n_data) > train_pool.size())
    throw std::invalid_argument("n_data exceeds the non-validation cloud");
  auto data_sel = sample_indices(train_pool.size(),
                                 static_cast<std::size_t>(spec.n_data),
                                 spec.seed, stream::kDataSample);

  std::vector<char> is_data(n_cloud, 0);
  ds.data_points.clear();
  ds.data_points.reserve(spec.n_data);
  for (std::size_t sel : data_sel) {
    const std::size_t i = train_pool[sel];
    is_data[i] = 1;
    ds.data_points.push_back(ds.cloud[i]);
  }

  ds.validation_points.clear();
  ds.validation_points.reserve(n_val);
  for (std::size_t i : val_idx) ds.validation_points.push_back(ds.cloud[i]);

  // collocation: separate stream, disjoint from the data rows
  std::vector<std::size_t> coll_pool;
  coll_pool.reserve(n_cloud);
  for (std::size_t i = 0; i < n_cloud; ++i)
    if (!is_data[i]) coll_pool.push_back(i);
  if (static_cast<std::size_t>(spec.n_collocation) > coll_pool.size())
    throw std::invalid_argument("n_collocation exceeds the available cloud");
  auto coll_sel = sample_indices(coll_pool.size(),
                                 static_cast<std::size_t>(spec.n_collocation),
                                 spec.seed, stream::kCollocationSample);

  ds.collocation_points.clear();
  ds.collocation_forcing.clear();
  ds.collocation_points.reserve(spec.n_collocation);
  ds.collocation_forcing.reserve(spec.n_collocation);
  for (std::size_t sel : coll_sel) {
    const FieldSample& src = ds.cloud[coll_pool[sel]];
    FieldSample c;
    c.x = src.x;
    c.y = src.y;
    ds.collocation_points.push_back(c);
    ds.collocation_forcing.push_back(
        ds.mms ? ds.mms->forcing_at(c.x, c.y, ds.props, tc) : Forcing{});
  }
}

// ---- boundaries -----------------------------------------------------------------

std::vector<FieldSample> boundary_points(const GeometrySpec& geo,
                                         int n_per_boundary,
                                         std::uint64_t seed) {
  const Domain& b = geo.box;
  if (!(b.x1 > b.x0) || !(b.y1 > b.y0))
    throw std::invalid_argument("degenerate geometry box");
  auto rng = make_rng(seed, stream::kBoundary);
  std::vector<FieldSample> out;
  out.reserve(static_cast<std::size_t>(n_per_boundary) *
              (4 + (geo.obstacle.empty() ? 0 : 1)));

  for (int i = 0; i < n_per_boundary; ++i) {  // inlet, left edge
    FieldSample s;
    s.x = b.x0;
    s.y = uniform(rng, b.y0, b.y1);
    s.u = geo.inlet_u;
    s.tag = Tag::kInlet;
    out.push_back(s);
  }
  for (int i = 0; i < n_per_boundary; ++i) {  // outlet, right edge, p = 0
    FieldSample s;
    s.x = b.x1;
    s.y = uniform(rng, b.y0, b.y1);
    s.tag = Tag::kOutlet;
    out.push_back(s);
  }
  for (int side = 0; side < 2; ++side) {  // symmetry planes top and bottom
    for (int i = 0; i < n_per_boundary; ++i) {
      FieldSample s;
      s.x = uniform(rng, b.x0, b.x1);
      s.y = side == 0 ? b.y0 : b.y1;
      s.tag = Tag::kSymmetry;
      out.push_back(s);
    }
  }
  if (!geo.obstacle.empty()) {
    if (geo.obstacle.size() < 3)
      throw std::invalid_argument("obstacle polygon needs at least 3 vertices");
    // uniform along the perimeter
    const auto& poly = geo.obstacle;
    std::vector<double> cum{0.0};
    for (std::size_t e = 0; e < poly.size(); ++e) {
      const auto& a = poly[e];
      const auto& c = poly[(e + 1) % poly.size()];
      cum.push_back(cum.back() + std::hypot(c.first - a.first, c.second - a.second));
    }
    for (int i = 0; i < n_per_boundary; ++i) {
      const double t = uniform(rng, 0.0, cum.back());
      std::size_t e = 0;
      while (e + 1 < cum.size() && cum[e + 1] < t) ++e;
      const auto& a = poly[e];
      const auto& c = poly[(e + 1) % poly.size()];
      const double f = (t - cum[e]) / std::max(cum[e + 1] - cum[e], 1e-300);
      FieldSample s;
      s.x = a.first + f * (c.first - a.first);
      s.y = a.second + f * (c.second - a.second);
      s.tag = Tag::kWall;  // no-slip: u = v = 0 targets
      out.push_back(s);
    }
  }
  return out;
}

std::vector<FieldSample> mms_boundary_points(const MmsCase& mms,
                                             int n_per_boundary,
                                             std::uint64_t seed) {
  const Domain& b = mms.domain;
  auto rng = make_rng(seed, stream::kBoundary);
  std::vector<FieldSample> out;
  out.reserve(static_cast<std::size_t>(n_per_boundary) * 4);
  auto emit = [&](double x, double y, Tag tag) {
    const FieldPoint f = mms.fields_at(x, y);
    out.push_back(FieldSample{f.x, f.y, f.u, f.v, f.p, f.k, f.eps, tag});
  };
  for (int i = 0; i < n_per_boundary; ++i)
    emit(b.x0, uniform(rng, b.y0, b.y1), Tag::kInlet);
  for (int i = 0; i < n_per_boundary; ++i)
    emit(b.x1, uniform(rng, b.y0, b.y1), Tag::kOutlet);
  for (int side = 0; side < 2; ++side)
    for (int i = 0; i < n_per_boundary; ++i)
      emit(uniform(rng, b.x0, b.x1), side == 0 ? b.y0 : b.y1, Tag::kWall);
  return out;
}

// ---- CSV ------------------------------------------------------------------------

namespace {

double parse_cell(const std::string& cell, std::size_t line, const char* col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw CsvError("line " + std::to_string(line) + ", column " + col +
                   ": cannot parse '" + cell + "'");
  if (!std::isfinite(v))
    throw CsvError("line " + std::to_string(line) + ", column " + col +
                   ": non-finite value");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    s.erase(0, b);
  }
  return out;
}

}  // namespace

std::vector<FieldSample> load_csv(const std::filesystem::path& path,
                                  const RefScales& scales) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty file: " + path.string());
  const auto header = split_csv_line(line);

  const char* required[] = {"x", "y", "u", "v", "p", "k", "eps"};
  int col[7];
  for (int c = 0; c < 7; ++c) {
    auto it = std::find(header.begin(), header.end(), required[c]);
    if (it == header.end())
      throw CsvError(path.string() + ": missing column '" + required[c] + "'");
    col[c] = static_cast<int>(it - header.begin());
  }
  int tag_col = -1, re_col = -1;
  if (auto it = std::find(header.begin(), header.end(), "tag"); it != header.end())
    tag_col = static_cast<int>(it - header.begin());
  if (auto it = std::find(header.begin(), header.end(), "re"); it != header.end())
    re_col = static_cast<int>(it - header.begin());

  std::vector<FieldSample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size())
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(header.size()) + " cells, got " +
                     std::to_string(cells.size()));
    FieldPoint raw;
    raw.x = parse_cell(cells[col[0]], line_no, "x");
    raw.y = parse_cell(cells[col[1]], line_no, "y");
    raw.u = parse_cell(cells[col[2]], line_no, "u");
    raw.v = parse_cell(cells[col[3]], line_no, "v");
    raw.p = parse_cell(cells[col[4]], line_no, "p");
    raw.k = parse_cell(cells[col[5]], line_no, "k");
    raw.eps = parse_cell(cells[col[6]], line_no, "eps");
    if (re_col >= 0) parse_cell(cells[re_col], line_no, "re");

    FieldSample s;
    s.tag = Tag::kInterior;
    if (tag_col >= 0) {
      auto t = tag_from(cells[tag_col]);
      if (!t)
        throw CsvError("line " + std::to_string(line_no) + ": unknown tag '" +
                       cells[tag_col] + "'");
      s.tag = *t;
    }
    if (raw.k < 0.0)
      throw CsvError("line " + std::to_string(line_no) + ": negative k");
    if (s.tag == Tag::kInterior && raw.eps <= 0.0)
      throw CsvError("line " + std::to_string(line_no) +
                     ": interior row requires eps > 0");
    const FieldPoint hat = nondimensionalize(raw, scales);
    s.x = hat.x;
    s.y = hat.y;
    s.u = hat.u;
    s.v = hat.v;
    s.p = hat.p;
    s.k = hat.k;
    s.eps = hat.eps;
    out.push_back(s);
  }
  return out;
}

void write_csv(const std::filesystem::path& path,
               std::span<const FieldSample> samples, const RefScales& scales) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw CsvError("cannot open for writing: " + path.string());
  std::fputs("x,y,u,v,p,k,eps,tag\n", f);
  for (const auto& s : samples) {
    const FieldPoint raw =
        denormalize(FieldPoint{s.x, s.y, s.u, s.v, s.p, s.k, s.eps}, scales);
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", raw.x,
                 raw.y, raw.u, raw.v, raw.p, raw.k, raw.eps, tag_name(s.tag));
  }
  if (std::fclose(f) != 0) throw CsvError("write failed: " + path.string());
}

// ---- case directories --------------------------------------------------------------

CaseDataset synth_mms_dataset(MmsFamily family, double s, int n_cloud,
                              int n_per_boundary, std::uint64_t seed,
                              const RefScales& scales) {
  MmsCase mms = make_mms_case(family, s);
  CaseDataset ds;
  ds.name = std::string(family_name(family)) + "-s" +
            std::to_string(static_cast<long long>(s));
  ds.re = s;
  ds.scales = scales;
  ds.props = FluidProps{1.0, 1.0 / s};
  ds.provenance = Provenance::kMms;
  ds.mms = mms;

  auto rng = make_rng(seed, stream::kCloud);
  ds.cloud.reserve(n_cloud);
  for (int i = 0; i < n_cloud; ++i) {
    const double x = uniform(rng, mms.domain.x0, mms.domain.x1);
    const double y = uniform(rng, mms.domain.y0, mms.domain.y1);
    const FieldPoint f = mms.fields_at(x, y);
    ds.cloud.push_back(
        FieldSample{f.x, f.y, f.u, f.v, f.p, f.k, f.eps, Tag::kInterior});
  }
  ds.boundary = mms_boundary_points(mms, n_per_boundary, seed);
  return ds;
}

void write_case_dir(const std::filesystem::path& dir, const CaseDataset& ds,
                    std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["name"] = ds.name;
  j["provenance"] = ds.provenance == Provenance::kMms ? "mms" : "csv";
  if (ds.mms) {
    j["family"] = family_name(ds.mms->family);
    j["s"] = ds.mms->s;
    j["domain"] = {{"x0", ds.mms->domain.x0},
                   {"x1", ds.mms->domain.x1},
                   {"y0", ds.mms->domain.y0},
                   {"y1", ds.mms->domain.y1}};
  }
  j["re"] = ds.re;
  j["scales"] = {{"length", ds.scales.length},
                 {"u_inlet", ds.scales.u_inlet},
                 {"rho", ds.scales.rho}};
  j["seed"] = seed;
  j["files"] = {{"cloud", "cloud.csv"}, {"boundary", "boundary.csv"}};
  std::ofstream out(dir / "case.json");
  if (!out) throw CsvError("cannot write case config in " + dir.string());
  out << j.dump(2) << "\n";
  write_csv(dir / "cloud.csv", ds.cloud, ds.scales);
  write_csv(dir / "boundary.csv", ds.boundary, ds.scales);
}

CaseDataset load_case_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "case.json");
  if (!in)
    throw CsvError("cannot open case config: " + (dir / "case.json").string());
  nlohmann::json j;
  in >> j;

  CaseDataset ds;
  ds.name = j.value("name", dir.filename().string());
  ds.re = j.at("re").get<double>();
  ds.scales.length = j.at("scales").at("length").get<double>();
  ds.scales.u_inlet = j.at("scales").at("u_inlet").get<double>();
  ds.scales.rho = j.at("scales").at("rho").get<double>();
  ds.props = FluidProps{1.0, 1.0 / ds.re};
  ds.provenance = j.at("provenance").get<std::string>() == "mms"
                      ? Provenance::kMms
                      : Provenance::kCsv;
  if (ds.provenance == Provenance::kMms) {
    auto fam = family_from(j.at("family").get<std::string>());
    if (!fam) throw CsvError("unknown mms family in " + dir.string());
    MmsCase mms = make_mms_case(*fam, j.at("s").get<double>());
    if (j.contains("domain")) {
      mms.domain.x0 = j["domain"]["x0"].get<double>();
      mms.domain.x1 = j["domain"]["x1"].get<double>();
      mms.domain.y0 = j["domain"]["y0"].get<double>();
      mms.domain.y1 = j["domain"]["y1"].get<double>();
    }
    ds.mms = mms;
  }
  const std::string cloud_file = j.at("files").at("cloud").get<std::string>();
  const std::string boundary_file = j.at("files").at("boundary").get<std::string>();
  ds.cloud = load_csv(dir / cloud_file, ds.scales);
  ds.boundary = load_csv(dir / boundary_file, ds.scales);
  return ds;
}

}  // namespace pinnflow

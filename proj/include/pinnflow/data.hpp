// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinnflow/physics.hpp"

namespace pinnflow {

enum class Tag { kInterior, kInlet, kOutlet, kWall, kSymmetry };
const char* tag_name(Tag t);
std::optional<Tag> tag_from(const std::string& s);

// One nondimensional point-cloud row. Boundary rows store the constrained
// target values; which components the BC loss reads is decided by the tag.
struct FieldSample {
  double x = 0, y = 0, u = 0, v = 0, p = 0, k = 0, eps = 0;
  Tag tag = Tag::kInterior;
};

struct Forcing {
  double cont = 0, mom_x = 0, mom_y = 0, k = 0, eps = 0;
};

struct Domain {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- manufactured solutions -------------------------------------------------

enum class MmsFamily { kTrigVortex, kPolyChannel };
const char* family_name(MmsFamily f);
std::optional<MmsFamily> family_from(const std::string& s);

// Closed-form smooth fields parameterized by a scalar s standing in for the
// Reynolds number; both transported scalars are strictly positive. Forcing
// terms come from a high-order finite-difference oracle over these closures,
// deliberately sharing no code with the jet-based residual evaluation.
struct MmsCase {
  MmsFamily family = MmsFamily::kTrigVortex;
  double s = 5600.0;
  Domain domain{0.05, 0.95, 0.05, 0.95};

  double amplitude() const;  // g(s), the velocity scale of the family

  double u(double x, double y) const;
  double v(double x, double y) const;
  double p(double x, double y) const;
  double k(double x, double y) const;
  double eps(double x, double y) const;
  FieldPoint fields_at(double x, double y) const;

  Forcing forcing_at(double x, double y, const FluidProps& fp,
                     const TurbConstants& tc) const;
};

MmsCase make_mms_case(MmsFamily family, double s);

// ---- datasets ----------------------------------------------------------------

enum class Provenance { kCsv, kMms };

struct CaseDataset {
  std::string name;
  double re = 0.0;  // case parameter (Reynolds number / MMS s)
  RefScales scales;
  FluidProps props;  // rho = 1, mu = 1/re in nondimensional form
  Provenance provenance = Provenance::kMms;
  std::optional<MmsCase> mms;

  std::vector<FieldSample> cloud;      // full interior cloud
  std::vector<FieldSample> boundary;   // tagged boundary samples
  std::vector<FieldSample> data_points;
  std::vector<FieldSample> validation_points;
  std::vector<FieldSample> collocation_points;  // coordinates only
  std::vector<Forcing> collocation_forcing;     // aligned with collocation
};

struct DatasetSpec {
  int n_data = 3000;
  int n_collocation = 3000;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Uniform sample without replacement; the cloud already carries the mesh
// density, so uniform index sampling inherits it.
std::vector<FieldSample> sample_points(std::span<const FieldSample> cloud,
                                       std::size_t n, std::uint64_t seed);

// Splits cloud into validation / data / collocation per spec. Validation and
// data are disjoint by construction; collocation excludes the data rows and
// carries coordinates only, plus MMS forcing when closures are available.
void finalize_splits(CaseDataset& ds, const DatasetSpec& spec,
                     const TurbConstants& tc = {});

// ---- geometry boundaries ------------------------------------------------------

struct GeometrySpec {
  Domain box;
  double inlet_u = 1.0;                               // normalized inlet speed
  std::vector<std::pair<double, double>> obstacle;    // optional wall polygon
};

// Classic channel layout: inlet on the left (u = U, v = 0), zero-pressure
// outlet on the right, symmetry planes top and bottom, no-slip obstacle walls.
std::vector<FieldSample> boundary_points(const GeometrySpec& geo,
                                         int n_per_boundary,
                                         std::uint64_t seed);

// MMS Dirichlet boundaries: truth values on every edge, tagged inlet (left),
// outlet (right) and wall (top/bottom).
std::vector<FieldSample> mms_boundary_points(const MmsCase& mms,
                                             int n_per_boundary,
                                             std::uint64_t seed);

// ---- CSV and case directories --------------------------------------------------

// Reads a point-cloud CSV (header x,y,u,v,p,k,eps[,tag][,re]); values are
// physical and get nondimensionalized by the given scales. Row/column of the
// first offending cell is reported on error.
std::vector<FieldSample> load_csv(const std::filesystem::path& path,
                                  const RefScales& scales);

void write_csv(const std::filesystem::path& path,
               std::span<const FieldSample> samples, const RefScales& scales);

struct CaseFiles {
  std::string name;
  Provenance provenance = Provenance::kMms;
  std::optional<MmsFamily> family;
  double s = 0.0;
  double re = 0.0;
  RefScales scales;
  Domain domain;
  std::uint64_t seed = 0;
  std::string cloud_file = "cloud.csv";
  std::string boundary_file = "boundary.csv";
};

// Builds an MMS case in memory: cloud + boundary, no splits yet.
CaseDataset synth_mms_dataset(MmsFamily family, double s, int n_cloud,
                              int n_per_boundary, std::uint64_t seed,
                              const RefScales& scales);

void write_case_dir(const std::filesystem::path& dir, const CaseDataset& ds,
                    std::uint64_t seed);

CaseDataset load_case_dir(const std::filesystem::path& dir);

}  // namespace pinnflow

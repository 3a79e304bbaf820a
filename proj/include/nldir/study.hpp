// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_STUDY_HPP
#define NLDIR_STUDY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nldir/assembly.hpp"
#include "nldir/minimize.hpp"
#include "nldir/spectra.hpp"

namespace nldir {

/// Boundary datum with a known solution of the local problem
/// -div(|grad u|^{p-2} grad u) = 0 in Omega, u = a on the boundary.
struct ManufacturedCase {
  std::string id;
  SpatialFunction datum;
  SpatialFunction solution;
  std::function<Point(const Point&)> gradient;
  bool two_dimensional_only = false;
  std::optional<double> required_p;  // set when only p-harmonic for this p
  std::string description;
};

/// Catalog: "zero", "linear_x", "harmonic_x2_minus_y2", "harmonic_xy".
/// Unknown ids raise Error listing the catalog.
ManufacturedCase manufactured_case(std::string_view id);
std::vector<std::string> manufactured_catalog();
bool case_admits(const ManufacturedCase& c, int dim, double p);
/// Largest finite-difference residual of the local p-Laplace equation over a
/// grid of sample points in [-1, 2]^dim. Every catalog entry is checked with
/// this when the catalog is first used.
double manufactured_residual(const ManufacturedCase& c, int dim, double p);

struct EigenRequest {
  int modes = 0;  // 0 disables the eigen columns
  MassModel mass = MassModel::L2;
};

struct StudyConfig {
  Shape shape = Interval{0.0, 1.0};
  std::string kernel_R = "quartic";
  std::string kernel_K = "quartic";
  std::string kernel_W = "wendland";
  std::string kernel_Khat = "quartic";
  PenaltyVariant penalty = PenaltyVariant::product;
  int shi_delta_power = 0;
  double p = 2.0;
  std::string datum = "zero";  // manufactured case id
  std::optional<std::string> datum_csv;  // per-boundary-node values, used by solve
  std::vector<double> deltas{0.1};
  double ratio = 4.0;  // delta / h
  SolveOptions solver;
  EigenRequest eigen;
  int coercivity_trials = 100;
  std::vector<PenaltyVariant> variants;  // for compare
  std::string csv_out;
  std::string json_out;
  int threads = 1;
};

/// Throws Error("config") naming the field on a violated invariant.
void validate_config(const StudyConfig& cfg);

struct StudyRow {
  double delta = 0.0;
  double h = 0.0;
  std::string penalty;
  double p = 2.0;
  double l2_error = 0.0;
  double trace_norm = 0.0;  // ||u~ - a|| over the boundary nodes
  double energy = 0.0;
  double sigma_r = 0.0;
  double seconds = 0.0;
  double energy_ratio = 0.0;  // F_n(u_n) / (sigma_R int |grad u*|^p); NaN when the denominator is 0
  int iterations = 0;
  bool converged = false;
  std::vector<double> eigenvalues;
  std::vector<double> eigen_errors;  // |lambda_i / sigma_R - lambda_i^local| / lambda_i^local
  std::vector<double> minimizer;
  bool ok = true;
  std::string failure;
};

struct StudyReport {
  std::string case_id;
  std::string kernel_R, kernel_K, kernel_W, kernel_Khat;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> warnings;
  std::vector<StudyRow> rows;
};

/// One row per delta on a mesh with h = delta / ratio. A failing row records
/// its reason and the sweep continues.
StudyReport run_delta_sweep(const StudyConfig& cfg);

/// Dirichlet Laplacian eigenvalues of an interval or rectangle, ascending;
/// empty for polygons.
std::vector<double> local_dirichlet_eigenvalues(const Shape& shape, int k);

inline constexpr std::string_view kStudyCsvHeader = "delta,h,penalty,p,l2_error,trace_norm,energy,sigma_r,seconds";
std::string report_csv(const StudyReport& report);
std::string report_json(const StudyReport& report);
/// Writes the CSV and JSON mirror to the given paths (skipped when empty).
void write_report(const StudyReport& report, const std::string& csv_path, const std::string& json_path);

struct CoercivityResult {
  std::string variant;
  double delta = 0.0;
  int trials = 0;
  int skipped = 0;  // probes with zero penalty and zero trace
  int violations = 0;  // probes with C_n * penalty < ||u~||^2
  double min_ratio = 0.0;  // min penalty / ||u~||^2
  double empirical_c = 0.0;  // 1 / min_ratio
  double theoretical_c = 0.0;  // NaN when no closed form applies
  double empirical_c_over_delta2 = 0.0;
  std::vector<double> ratios;
};

/// Seeded standard-normal probes u with a = 0. The theoretical constant is
/// delta^2 / (inf_b omega_b)^2 for product with Khat = K, and
/// delta^2 max(k^_bj / k_bj) / inf_b omega^_b for pointwise and
/// dirac_diagonal, where omega^ is the mollifier weight.
CoercivityResult coercivity_probe(const DomainMesh& mesh, const KernelSpec& R, const PenaltySpec& spec,
                                  const KernelSpec& khat, double delta, int trials, std::uint64_t seed);
/// Same evaluation over caller-chosen probe fields.
CoercivityResult coercivity_probe(const DomainMesh& mesh, const KernelSpec& R, const PenaltySpec& spec,
                                  const KernelSpec& khat, double delta, std::span<const Field> probes);

struct PenaltyDistance {
  std::string a, b;
  std::vector<double> l2_distance;  // per delta; NaN when either row failed
  std::vector<double> lambda1_gap;  // relative, when eigenvalues were requested
};

struct PenaltyComparison {
  StudyReport merged;  // rows of every variant, grouped by variant
  std::vector<PenaltyDistance> distances;
};

PenaltyComparison compare_penalties(const StudyConfig& templ, const std::vector<PenaltyVariant>& variants);

std::string comparison_json(const PenaltyComparison& cmp);

std::string version_string();

}  // namespace nldir

#endif  // NLDIR_STUDY_HPP

// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "nldir/error.hpp"
#include "nldir/parallel.hpp"

namespace nldir {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<ManufacturedCase> build_catalog() {
  std::vector<ManufacturedCase> cases;
  cases.push_back({"zero", [](const Point&) { return 0.0; }, [](const Point&) { return 0.0; },
                   [](const Point&) { return Point{0.0, 0.0}; }, false, std::nullopt, "a = 0, u* = 0"});
  cases.push_back({"linear_x", [](const Point& x) { return x[0]; }, [](const Point& x) { return x[0]; },
                   [](const Point&) { return Point{1.0, 0.0}; }, false, std::nullopt,
                   "a = x, u* = x (p-harmonic for every p)"});
  cases.push_back({"harmonic_x2_minus_y2", [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; },
                   [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; },
                   [](const Point& x) { return Point{2.0 * x[0], -2.0 * x[1]}; }, true, 2.0,
                   "a = x^2 - y^2, u* = x^2 - y^2 (harmonic)"});
  cases.push_back({"harmonic_xy", [](const Point& x) { return x[0] * x[1]; },
                   [](const Point& x) { return x[0] * x[1]; },
                   [](const Point& x) { return Point{x[1], x[0]}; }, true, 2.0, "a = xy, u* = xy (harmonic)"});
  for (const auto& c : cases) {
    for (int dim : {1, 2}) {
      if (c.two_dimensional_only && dim == 1) continue;
      for (double p : {2.0, 3.0, 4.0}) {
        if (!case_admits(c, dim, p)) continue;
        const double r = manufactured_residual(c, dim, p);
        if (!(r <= 1e-6)) {
          throw Error("study", "manufactured case '" + c.id + "' fails its PDE check (residual " +
                                   std::to_string(r) + ")");
        }
      }
    }
  }
  return cases;
}

const std::vector<ManufacturedCase>& catalog() {
  static const std::vector<ManufacturedCase> cases = build_catalog();
  return cases;
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

KernelSpec penalty_kernel(const StudyConfig& cfg, const KernelSpec& R, const KernelSpec& K) {
  return (cfg.penalty == PenaltyVariant::wang || cfg.penalty == PenaltyVariant::shi) ? R : K;
}

double gradient_integral(const DomainMesh& mesh, const ManufacturedCase& c, double p) {
  double total = 0.0;
  for (const auto& node : mesh.interior()) {
    const Point g = c.gradient(node.x);
    const double sq = mesh.dim() == 1 ? g[0] * g[0] : g[0] * g[0] + g[1] * g[1];
    total += node.weight * std::pow(sq, 0.5 * p);
  }
  return total;
}

StudyRow run_row(const StudyConfig& cfg, const ManufacturedCase& mcase, const KernelSpec& R, const KernelSpec& K,
                 const KernelSpec& Khat, const KernelSpec& W, double sigma, double sigma2, double delta) {
  StudyRow row;
  row.delta = delta;
  row.h = delta / cfg.ratio;
  row.penalty = std::string(to_string(cfg.penalty));
  row.p = cfg.p;
  row.sigma_r = sigma;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const DomainMesh mesh = build_mesh(cfg.shape, row.h);
    row.h = mesh.h();
    const BoundaryData a = sample_boundary(mesh, mcase.datum);
    const PenaltySpec spec{cfg.penalty, penalty_kernel(cfg, R, K), cfg.shi_delta_power};
    const EnergyOperator op = assemble(mesh, R, spec, delta, cfg.p, a);
    const SolveResult sol = minimize(op, cfg.solver);
    const Field exact = sample_interior(mesh, mcase.solution);
    row.l2_error = discrete_lp_norm(mesh, Field(sol.minimizer.values() - exact.values()), 2.0);
    const MollifiedField moll = mollify(mesh, Khat, delta, sol.minimizer);
    row.trace_norm = discrete_boundary_l2_norm(mesh, BoundaryData(moll.boundary.values() - a.values()));
    row.energy = sol.energy;
    const double local = sigma * gradient_integral(mesh, mcase, cfg.p);
    row.energy_ratio = local > 0.0 ? sol.energy / local : kNaN;
    row.iterations = sol.iterations;
    row.converged = sol.converged;
    row.minimizer.assign(sol.minimizer.values().begin(), sol.minimizer.values().end());
    if (cfg.eigen.modes > 0) {
      const EnergyOperator stiff = op.with_datum(BoundaryData::zeros(mesh.boundary_count()));
      const EigenProblem prob = make_eigen_problem(stiff, cfg.eigen.mass, cfg.eigen.modes, &W);
      const EigenResult eig = solve_eigen(prob, EigenOptions{1e-9, 20000, cfg.solver.seed});
      row.eigenvalues = eig.eigenvalues;
      const auto local_eigs = local_dirichlet_eigenvalues(cfg.shape, cfg.eigen.modes);
      for (std::size_t i = 0; i < local_eigs.size() && i < eig.eigenvalues.size(); ++i) {
        row.eigen_errors.push_back(std::abs(eig.eigenvalues[i] / sigma2 - local_eigs[i]) / local_eigs[i]);
      }
    }
  } catch (const std::exception& e) {
    row.ok = false;
    row.failure = e.what();
    row.l2_error = row.trace_norm = row.energy = row.energy_ratio = kNaN;
  }
  row.seconds = elapsed_since(t0);
  return row;
}

}  // namespace

ManufacturedCase manufactured_case(std::string_view id) {
  for (const auto& c : catalog()) {
    if (c.id == id) return c;
  }
  std::string known;
  for (const auto& name : manufactured_catalog()) known += (known.empty() ? "" : ", ") + name;
  throw Error("config", "unknown manufactured case '" + std::string(id) + "' (known: " + known + ")", "datum");
}

std::vector<std::string> manufactured_catalog() {
  return {"zero", "linear_x", "harmonic_x2_minus_y2", "harmonic_xy"};
}

bool case_admits(const ManufacturedCase& c, int dim, double p) {
  if (c.two_dimensional_only && dim != 2) return false;
  if (c.required_p && *c.required_p != p) return false;
  return p > 1.0;
}

double manufactured_residual(const ManufacturedCase& c, int dim, double p) {
  const double e = 1e-3;
  const auto flux = [&](const Point& x) {
    const Point g = c.gradient(x);
    const double sq = dim == 1 ? g[0] * g[0] : g[0] * g[0] + g[1] * g[1];
    const double scale = sq == 0.0 ? 0.0 : std::pow(sq, 0.5 * (p - 2.0));
    return Point{scale * g[0], dim == 1 ? 0.0 : scale * g[1]};
  };
  double worst = 0.0;
  for (int i = 0; i <= 6; ++i) {
    for (int j = 0; j <= (dim == 1 ? 0 : 6); ++j) {
      const Point x{-1.0 + 0.5 * i, dim == 1 ? 0.0 : -1.0 + 0.5 * j};
      // The gradient must match the solution.
      const Point g = c.gradient(x);
      for (int axis = 0; axis < dim; ++axis) {
        Point xp = x, xm = x;
        xp[static_cast<std::size_t>(axis)] += e;
        xm[static_cast<std::size_t>(axis)] -= e;
        const double fd = (c.solution(xp) - c.solution(xm)) / (2.0 * e);
        worst = std::max(worst, std::abs(fd - g[static_cast<std::size_t>(axis)]));
      }
      // div(|grad u|^{p-2} grad u) = 0.
      double div = 0.0;
      for (int axis = 0; axis < dim; ++axis) {
        Point xp = x, xm = x;
        xp[static_cast<std::size_t>(axis)] += e;
        xm[static_cast<std::size_t>(axis)] -= e;
        div += (flux(xp)[static_cast<std::size_t>(axis)] - flux(xm)[static_cast<std::size_t>(axis)]) / (2.0 * e);
      }
      worst = std::max(worst, std::abs(div));
      // The datum is the trace of the solution.
      worst = std::max(worst, std::abs(c.datum(x) - c.solution(x)));
    }
  }
  return worst;
}

void validate_config(const StudyConfig& cfg) {
  if (cfg.deltas.empty()) throw Error("config", "deltas: at least one horizon is required", "deltas");
  for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
    if (!(cfg.deltas[i] > 0.0)) throw Error("config", "deltas: horizons must be positive", "deltas");
    if (i > 0 && !(cfg.deltas[i] < cfg.deltas[i - 1])) {
      throw Error("config", "deltas: horizons must be strictly decreasing", "deltas");
    }
  }
  if (!(cfg.ratio >= 2.0)) throw Error("config", "ratio: delta / h must be at least 2", "ratio");
  if (!(cfg.p > 1.0)) throw Error("config", "p: exponent must exceed 1", "p");
  if (cfg.p != 2.0 && !supports_general_p(cfg.penalty)) {
    throw Error("config", "p: the " + std::string(to_string(cfg.penalty)) + " penalty is defined for p = 2 only", "p");
  }
  if (cfg.shi_delta_power != 0 && cfg.shi_delta_power != 2) {
    throw Error("config", "penalty.shi_delta_power: must be 0 or 2", "penalty.shi_delta_power");
  }
  if (cfg.eigen.modes < 0) throw Error("config", "eigen.modes: must be nonnegative", "eigen.modes");
  if (cfg.eigen.modes > 0 && cfg.p != 2.0) throw Error("config", "eigen.modes: eigen problems need p = 2", "eigen.modes");
  if (cfg.coercivity_trials < 10) {
    throw Error("config", "coercivity.trials: at least 10 probes are required", "coercivity.trials");
  }
  if (cfg.threads < 0) throw Error("config", "threads: must be nonnegative", "threads");
  try {
    validate_options(cfg.solver);
  } catch (const Error& e) {
    throw Error("config", "solver." + std::string(e.what()), "solver." + e.field());
  }
  for (const auto* id : {&cfg.kernel_R, &cfg.kernel_K, &cfg.kernel_W, &cfg.kernel_Khat}) {
    try {
      (void)make_kernel(*id);
    } catch (const Error& e) {
      const std::string which = id == &cfg.kernel_R ? "R" : id == &cfg.kernel_K ? "K" : id == &cfg.kernel_W ? "W" : "Khat";
      throw Error("config", "kernels." + which + ": " + e.what(), "kernels." + which);
    }
  }
  const ManufacturedCase c = manufactured_case(cfg.datum);
  if (!case_admits(c, shape_dim(cfg.shape), cfg.p)) {
    throw Error("config", "datum: case '" + c.id + "' does not apply to this shape and p", "datum");
  }
}

std::vector<double> local_dirichlet_eigenvalues(const Shape& shape, int k) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  std::vector<double> out;
  if (const auto* iv = std::get_if<Interval>(&shape)) {
    const double L = iv->b - iv->a;
    for (int m = 1; m <= k; ++m) out.push_back(pi2 * m * m / (L * L));
  } else if (const auto* r = std::get_if<Rect>(&shape)) {
    const double lx = r->hi[0] - r->lo[0];
    const double ly = r->hi[1] - r->lo[1];
    for (int m = 1; m <= k; ++m) {
      for (int n = 1; n <= k; ++n) out.push_back(pi2 * (m * m / (lx * lx) + n * n / (ly * ly)));
    }
    std::sort(out.begin(), out.end());
    out.resize(static_cast<std::size_t>(k));
  }
  return out;
}

StudyReport run_delta_sweep(const StudyConfig& cfg) {
  validate_config(cfg);
  const ManufacturedCase mcase = manufactured_case(cfg.datum);
  const KernelSpec R = make_kernel(cfg.kernel_R);
  const KernelSpec K = make_kernel(cfg.kernel_K);
  const KernelSpec Khat = make_kernel(cfg.kernel_Khat);
  const KernelSpec W = make_kernel(cfg.kernel_W);
  const int dim = shape_dim(cfg.shape);
  const double sigma = sigma_R(R, cfg.p, dim).value;
  const double sigma2 = cfg.p == 2.0 ? sigma : sigma_R(R, 2.0, dim).value;

  StudyReport report;
  report.case_id = mcase.id;
  report.kernel_R = cfg.kernel_R;
  report.kernel_K = cfg.kernel_K;
  report.kernel_W = cfg.kernel_W;
  report.kernel_Khat = cfg.kernel_Khat;
  report.seed = cfg.solver.seed;
  report.version = version_string();
  if (cfg.ratio < 4.0) {
    report.warnings.push_back("delta/h = " + fmt17(cfg.ratio) + " is below 4; the kernel is resolved by few nodes");
  }
  report.rows.resize(cfg.deltas.size());
  parallel_for(cfg.deltas.size(), cfg.threads == 0 ? default_thread_count() : cfg.threads, [&](std::size_t i) {
    report.rows[i] = run_row(cfg, mcase, R, K, Khat, W, sigma, sigma2, cfg.deltas[i]);
  });
  return report;
}

std::string report_csv(const StudyReport& report) {
  std::ostringstream out;
  out << kStudyCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << fmt17(r.delta) << ',' << fmt17(r.h) << ',' << r.penalty << ',' << fmt17(r.p) << ',' << fmt17(r.l2_error)
        << ',' << fmt17(r.trace_norm) << ',' << fmt17(r.energy) << ',' << fmt17(r.sigma_r) << ','
        << fmt17(r.seconds) << '\n';
  }
  return out.str();
}

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json rows_json(const std::vector<StudyRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json eig = nlohmann::json::array();
    for (double v : r.eigenvalues) eig.push_back(num(v));
    nlohmann::json eig_err = nlohmann::json::array();
    for (double v : r.eigen_errors) eig_err.push_back(num(v));
    out.push_back({{"delta", num(r.delta)},
                   {"h", num(r.h)},
                   {"penalty", r.penalty},
                   {"p", num(r.p)},
                   {"l2_error", num(r.l2_error)},
                   {"trace_norm", num(r.trace_norm)},
                   {"energy", num(r.energy)},
                   {"sigma_r", num(r.sigma_r)},
                   {"seconds", num(r.seconds)},
                   {"energy_ratio", num(r.energy_ratio)},
                   {"iterations", r.iterations},
                   {"converged", r.converged},
                   {"eigenvalues", eig},
                   {"eigen_errors", eig_err},
                   {"ok", r.ok},
                   {"failure", r.failure}});
  }
  return out;
}

nlohmann::json report_object(const StudyReport& report) {
  return {{"environment",
           {{"version", report.version},
            {"seed", report.seed},
            {"case", report.case_id},
            {"case_catalog_note", "manufactured cases are chosen by this tool, not taken from a reference"},
            {"kernels", {{"R", report.kernel_R}, {"K", report.kernel_K}, {"W", report.kernel_W}, {"Khat", report.kernel_Khat}}}}},
          {"warnings", report.warnings},
          {"rows", rows_json(report.rows)}};
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'", "output");
  out << body;
  if (!out) throw Error("io", "failed while writing '" + path + "'", "output");
}

}  // namespace

std::string report_json(const StudyReport& report) { return report_object(report).dump(2) + "\n"; }

void write_report(const StudyReport& report, const std::string& csv_path, const std::string& json_path) {
  if (!csv_path.empty()) write_text(csv_path, report_csv(report));
  if (!json_path.empty()) write_text(json_path, report_json(report));
}

CoercivityResult coercivity_probe(const DomainMesh& mesh, const KernelSpec& R, const PenaltySpec& spec,
                                  const KernelSpec& khat, double delta, std::span<const Field> probes) {
  const EnergyOperator op = assemble(mesh, R, spec, delta, 2.0, BoundaryData::zeros(mesh.boundary_count()));

  CoercivityResult out;
  out.variant = std::string(to_string(spec.variant));
  out.delta = delta;
  out.trials = static_cast<int>(probes.size());
  out.theoretical_c = kNaN;

  // Mollifier weights do not depend on u.
  const MollifiedField base = mollify(mesh, khat, delta, Field::zeros(mesh.interior_count()));
  const double inf_omega_hat = *std::min_element(base.omega_boundary.begin(), base.omega_boundary.end());
  const auto& pen = op.penalty();
  if (spec.variant == PenaltyVariant::product && spec.kernel.label() == khat.label() &&
      spec.kernel.support_radius() == khat.support_radius()) {
    double inf_s = std::numeric_limits<double>::infinity();
    for (const auto& row : pen.rows) inf_s = std::min(inf_s, row.kernel_sum);
    out.theoretical_c = delta * delta / (inf_s * inf_s);
  } else if (spec.variant == PenaltyVariant::dirac_diagonal || spec.variant == PenaltyVariant::pointwise) {
    // kappa = max k^_bj / k_bj; infinite when Khat reaches beyond K.
    double kappa = 0.0;
    const ScaledKernel k{spec.kernel, delta, mesh.dim()};
    const ScaledKernel kh{khat, delta, mesh.dim()};
    for (const auto& b : mesh.boundary()) {
      for (const auto& node : mesh.interior()) {
        const double rho = distance(b.x, node.x);
        const double top = kh(rho);
        if (top == 0.0) continue;
        const double bottom = k(rho);
        kappa = bottom > 0.0 ? std::max(kappa, top / bottom) : std::numeric_limits<double>::infinity();
      }
    }
    if (std::isfinite(kappa)) out.theoretical_c = delta * delta * kappa / inf_omega_hat;
  }

  out.min_ratio = std::numeric_limits<double>::infinity();
  for (const Field& u : probes) {
    const double penalty = penalty_energy(op, u);
    const MollifiedField m = mollify(mesh, khat, delta, u);
    double trace = 0.0;
    for (std::size_t b = 0; b < mesh.boundary_count(); ++b) trace += mesh.boundary()[b].weight * m.boundary[b] * m.boundary[b];
    if (penalty == 0.0 && trace == 0.0) {
      ++out.skipped;
      continue;
    }
    const double ratio = trace == 0.0 ? std::numeric_limits<double>::infinity() : penalty / trace;
    out.ratios.push_back(ratio);
    out.min_ratio = std::min(out.min_ratio, ratio);
    if (std::isfinite(out.theoretical_c) && out.theoretical_c * penalty < trace * (1.0 - 1e-12)) ++out.violations;
  }
  out.empirical_c = out.ratios.empty() ? kNaN : 1.0 / out.min_ratio;
  out.empirical_c_over_delta2 = out.empirical_c / (delta * delta);
  return out;
}

CoercivityResult coercivity_probe(const DomainMesh& mesh, const KernelSpec& R, const PenaltySpec& spec,
                                  const KernelSpec& khat, double delta, int trials, std::uint64_t seed) {
  if (trials < 10) throw Error("study", "coercivity_probe needs at least 10 trials", "trials");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Field> probes;
  probes.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    Field u = Field::zeros(mesh.interior_count());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = normal(rng);
    probes.push_back(std::move(u));
  }
  return coercivity_probe(mesh, R, spec, khat, delta, probes);
}

PenaltyComparison compare_penalties(const StudyConfig& templ, const std::vector<PenaltyVariant>& variants) {
  if (variants.empty()) throw Error("config", "variants: at least one penalty variant is required", "variants");
  PenaltyComparison cmp;
  std::vector<StudyReport> reports;
  for (PenaltyVariant v : variants) {
    StudyConfig cfg = templ;
    cfg.penalty = v;
    reports.push_back(run_delta_sweep(cfg));
  }
  cmp.merged = reports.front();
  cmp.merged.rows.clear();
  for (const auto& r : reports) {
    cmp.merged.rows.insert(cmp.merged.rows.end(), r.rows.begin(), r.rows.end());
    for (const auto& w : r.warnings) {
      if (std::find(cmp.merged.warnings.begin(), cmp.merged.warnings.end(), w) == cmp.merged.warnings.end()) {
        cmp.merged.warnings.push_back(w);
      }
    }
  }
  for (std::size_t a = 0; a < variants.size(); ++a) {
    for (std::size_t b = a + 1; b < variants.size(); ++b) {
      PenaltyDistance d;
      d.a = std::string(to_string(variants[a]));
      d.b = std::string(to_string(variants[b]));
      for (std::size_t i = 0; i < templ.deltas.size(); ++i) {
        const StudyRow& ra = reports[a].rows[i];
        const StudyRow& rb = reports[b].rows[i];
        if (!ra.ok || !rb.ok) {
          d.l2_distance.push_back(kNaN);
        } else {
          const DomainMesh mesh = build_mesh(templ.shape, templ.deltas[i] / templ.ratio);
          double total = 0.0;
          for (std::size_t j = 0; j < ra.minimizer.size(); ++j) {
            const double diff = ra.minimizer[j] - rb.minimizer[j];
            total += mesh.interior()[j].weight * diff * diff;
          }
          d.l2_distance.push_back(std::sqrt(total));
        }
        if (!ra.eigenvalues.empty() && !rb.eigenvalues.empty()) {
          d.lambda1_gap.push_back(std::abs(ra.eigenvalues[0] - rb.eigenvalues[0]) / std::abs(ra.eigenvalues[0]));
        }
      }
      cmp.distances.push_back(std::move(d));
    }
  }
  return cmp;
}

std::string comparison_json(const PenaltyComparison& cmp) {
  nlohmann::json out = report_object(cmp.merged);
  nlohmann::json dist = nlohmann::json::array();
  for (const auto& d : cmp.distances) {
    nlohmann::json l2 = nlohmann::json::array();
    for (double v : d.l2_distance) l2.push_back(num(v));
    nlohmann::json gap = nlohmann::json::array();
    for (double v : d.lambda1_gap) gap.push_back(num(v));
    dist.push_back({{"a", d.a}, {"b", d.b}, {"l2_distance", l2}, {"lambda1_gap", gap}});
  }
  out["distances"] = dist;
  return out.dump(2) + "\n";
}

std::string version_string() { return "nldir 1.0.0"; }

}  // namespace nldir

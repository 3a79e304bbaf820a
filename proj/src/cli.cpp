// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nldir/config.hpp"
#include "nldir/error.hpp"
#include "nldir/parallel.hpp"
#include "nldir/study.hpp"

namespace nldir {

namespace {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Globals {
  std::string config;
  std::string out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path);
  if (!f) throw Error("io", "cannot write '" + path + "'", "out");
  f << body;
  if (!f) throw Error("io", "failed while writing '" + path + "'", "out");
}

// Writes machine output to --out when given, otherwise to stdout.
void emit(const Globals& g, std::ostream& out, const std::string& body) {
  if (g.out.empty()) {
    out << body;
  } else {
    write_file(g.out, body);
  }
}

StudyConfig load_config(const Globals& g) {
  if (g.config.empty()) throw Error("config", "this subcommand needs --config PATH", "config");
  StudyConfig cfg = load_study_config(g.config);
  if (g.seed) cfg.solver.seed = *g.seed;
  cfg.threads = g.threads ? *g.threads : default_thread_count();
  if (cfg.threads < 1) throw Error("config", "threads: must be at least 1", "threads");
  return cfg;
}

int run_sigma(const Globals& g, const std::string& kernel, double p, int dim, std::ostream& out, std::ostream& err) {
  const KernelSpec k = make_kernel(kernel);
  const QuadratureResult r = sigma_R(k, p, dim);
  out << fmt6(r.value) << '\n';
  if (g.verbose) err << "error estimate " << fmt6(r.error_estimate) << ", " << r.points << " points\n";
  if (!g.out.empty()) {
    const nlohmann::json j = {{"kernel", kernel}, {"p", p}, {"dim", dim}, {"sigma_r", r.value},
                              {"error_estimate", r.error_estimate}, {"points", r.points}};
    write_file(g.out, j.dump(2) + "\n");
  }
  return 0;
}

int run_validate(const Globals& g, const std::string& kernel, int samples, std::ostream& out) {
  const KernelSpec k = make_kernel(kernel);
  const ValidationReport report = validate_kernel(k, static_cast<std::size_t>(samples));
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    out << c.condition << ": " << (c.passed ? "pass" : "FAIL");
    if (c.first_violation) out << " at s=" << fmt6(*c.first_violation);
    out << " (" << c.detail << ")\n";
    checks.push_back({{"condition", c.condition},
                      {"passed", c.passed},
                      {"first_violation", c.first_violation ? nlohmann::json(*c.first_violation) : nlohmann::json(nullptr)},
                      {"detail", c.detail}});
  }
  if (!g.out.empty()) {
    write_file(g.out, nlohmann::json{{"kernel", kernel}, {"passed", report.passed()}, {"checks", checks}}.dump(2) + "\n");
  }
  if (!report.passed()) {
    std::string failed;
    for (const auto& c : report.checks) {
      if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.condition;
    }
    throw Error("kernel", "kernel '" + kernel + "' failed validation: " + failed, "kernel");
  }
  return 0;
}

int run_solve(const Globals& g, std::ostream& out, std::ostream& err) {
  const StudyConfig cfg = load_config(g);
  const double delta = cfg.deltas.front();
  const DomainMesh mesh = build_mesh(cfg.shape, delta / cfg.ratio);
  const ManufacturedCase mcase = manufactured_case(cfg.datum);
  const BoundaryData a = cfg.datum_csv ? load_boundary_csv(*cfg.datum_csv, mesh) : sample_boundary(mesh, mcase.datum);
  const KernelSpec R = make_kernel(cfg.kernel_R);
  const bool uses_R = cfg.penalty == PenaltyVariant::wang || cfg.penalty == PenaltyVariant::shi;
  const PenaltySpec spec{cfg.penalty, uses_R ? R : make_kernel(cfg.kernel_K), cfg.shi_delta_power};
  const EnergyOperator op = assemble(mesh, R, spec, delta, cfg.p, a, AssemblyOptions{cfg.threads, 512});
  const SolveResult sol = minimize(op, cfg.solver);
  std::ostringstream csv;
  csv << (mesh.dim() == 1 ? "x,u\n" : "x,y,u\n");
  for (std::size_t i = 0; i < mesh.interior_count(); ++i) {
    const Point& x = mesh.interior()[i].x;
    csv << fmt17(x[0]) << ',';
    if (mesh.dim() == 2) csv << fmt17(x[1]) << ',';
    csv << fmt17(sol.minimizer[i]) << '\n';
  }
  if (g.out.empty() && cfg.csv_out.empty()) {
    out << csv.str();
  } else {
    write_file(g.out.empty() ? cfg.csv_out : g.out, csv.str());
  }
  (g.out.empty() && cfg.csv_out.empty() ? err : out)
      << "delta " << fmt6(delta) << "  h " << fmt6(mesh.h()) << "  energy " << fmt6(sol.energy) << "  gradient "
      << fmt6(sol.gradient_norm) << "  iterations " << sol.iterations << "  " << sol.status << '\n';
  if (!sol.converged) throw Error("minimize", "solver did not converge: " + sol.status);
  return 0;
}

int run_eigen(const Globals& g, std::ostream& out, std::ostream& err) {
  const StudyConfig cfg = load_config(g);
  if (cfg.p != 2.0) throw Error("config", "p: eigen problems need p = 2", "p");
  const int modes = cfg.eigen.modes > 0 ? cfg.eigen.modes : 3;
  const KernelSpec R = make_kernel(cfg.kernel_R);
  const KernelSpec W = make_kernel(cfg.kernel_W);
  const bool uses_R = cfg.penalty == PenaltyVariant::wang || cfg.penalty == PenaltyVariant::shi;
  const PenaltySpec spec{cfg.penalty, uses_R ? R : make_kernel(cfg.kernel_K), cfg.shi_delta_power};
  std::ostringstream csv;
  csv << "mode,lambda,residual,mass_model,delta,h\n";
  bool all_converged = true;
  for (double delta : cfg.deltas) {
    const DomainMesh mesh = build_mesh(cfg.shape, delta / cfg.ratio);
    const EnergyOperator op = assemble(mesh, R, spec, delta, 2.0, BoundaryData::zeros(mesh.boundary_count()),
                                       AssemblyOptions{cfg.threads, 512});
    const EigenResult res =
        solve_eigen(make_eigen_problem(op, cfg.eigen.mass, modes, &W), EigenOptions{1e-9, 20000, cfg.solver.seed});
    all_converged = all_converged && res.converged;
    for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
      csv << i + 1 << ',' << fmt17(res.eigenvalues[i]) << ',' << fmt17(res.residuals[i]) << ','
          << to_string(res.mass) << ',' << fmt17(delta) << ',' << fmt17(mesh.h()) << '\n';
    }
    if (g.verbose) err << "delta " << fmt6(delta) << ": lambda_1 " << fmt6(res.eigenvalues.front()) << '\n';
  }
  emit(g, out, csv.str());
  if (!all_converged) throw Error("spectra", "some eigenpairs did not reach the residual tolerance");
  return 0;
}

void print_rows(const StudyReport& report, std::ostream& os) {
  os << "delta        h            penalty         l2_error     trace_norm   energy       seconds\n";
  for (const auto& r : report.rows) {
    char line[200];
    std::snprintf(line, sizeof line, "%-12.6g %-12.6g %-15s %-12.6g %-12.6g %-12.6g %-8.3g", r.delta, r.h,
                  r.penalty.c_str(), r.l2_error, r.trace_norm, r.energy, r.seconds);
    os << line;
    if (!r.ok) os << "  failed: " << r.failure;
    os << '\n';
  }
  for (const auto& w : report.warnings) os << "warning: " << w << '\n';
}

int run_sweep(const Globals& g, std::ostream& out, std::ostream& err) {
  const StudyConfig cfg = load_config(g);
  const StudyReport report = run_delta_sweep(cfg);
  const std::string csv_path = g.out.empty() ? cfg.csv_out : g.out;
  const std::string json_path = g.out.empty() ? cfg.json_out : g.out + ".json";
  if (csv_path.empty()) {
    out << report_csv(report);
    print_rows(report, err);
  } else {
    write_report(report, csv_path, json_path);
    print_rows(report, out);
  }
  return 0;
}

int run_compare(const Globals& g, std::ostream& out, std::ostream& err) {
  const StudyConfig cfg = load_config(g);
  std::vector<PenaltyVariant> variants = cfg.variants;
  if (variants.empty()) throw Error("config", "variants: compare needs a list of penalty variants", "variants");
  const PenaltyComparison cmp = compare_penalties(cfg, variants);
  const std::string csv_path = g.out.empty() ? cfg.csv_out : g.out;
  const std::string json_path = g.out.empty() ? cfg.json_out : g.out + ".json";
  std::ostream& human = csv_path.empty() ? err : out;
  if (csv_path.empty()) {
    out << report_csv(cmp.merged);
  } else {
    write_file(csv_path, report_csv(cmp.merged));
  }
  if (!json_path.empty()) write_file(json_path, comparison_json(cmp));
  print_rows(cmp.merged, human);
  for (const auto& d : cmp.distances) {
    human << d.a << " vs " << d.b << ": L2 distance";
    for (double v : d.l2_distance) human << ' ' << fmt6(v);
    if (!d.lambda1_gap.empty()) {
      human << "; lambda_1 gap";
      for (double v : d.lambda1_gap) human << ' ' << fmt6(v);
    }
    human << '\n';
  }
  return 0;
}

int run_probe(const Globals& g, std::ostream& out) {
  const StudyConfig cfg = load_config(g);
  const double delta = cfg.deltas.front();
  const DomainMesh mesh = build_mesh(cfg.shape, delta / cfg.ratio);
  const KernelSpec R = make_kernel(cfg.kernel_R);
  const bool uses_R = cfg.penalty == PenaltyVariant::wang || cfg.penalty == PenaltyVariant::shi;
  const PenaltySpec spec{cfg.penalty, uses_R ? R : make_kernel(cfg.kernel_K), cfg.shi_delta_power};
  const CoercivityResult r =
      coercivity_probe(mesh, R, spec, make_kernel(cfg.kernel_Khat), delta, cfg.coercivity_trials, cfg.solver.seed);
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json ratios = nlohmann::json::array();
  for (double v : r.ratios) ratios.push_back(num(v));
  const nlohmann::json j = {{"variant", r.variant},
                            {"delta", r.delta},
                            {"trials", r.trials},
                            {"skipped", r.skipped},
                            {"violations", r.violations},
                            {"min_ratio", num(r.min_ratio)},
                            {"empirical_c", num(r.empirical_c)},
                            {"theoretical_c", num(r.theoretical_c)},
                            {"empirical_c_over_delta2", num(r.empirical_c_over_delta2)},
                            {"ratios", ratios}};
  if (!g.out.empty()) write_file(g.out, j.dump(2) + "\n");
  out << r.variant << " delta " << fmt6(delta) << ": min ratio " << fmt6(r.min_ratio) << ", empirical C_n "
      << fmt6(r.empirical_c) << ", theoretical C_n " << fmt6(r.theoretical_c) << ", C_n/delta^2 "
      << fmt6(r.empirical_c_over_delta2) << ", skipped " << r.skipped << ", violations " << r.violations << '\n';
  if (r.violations > 0 || !(r.min_ratio > 0.0)) {
    throw Error("coercivity", "coercivity bound violated by " + std::to_string(r.violations) + " probe(s)");
  }
  return 0;
}

void error_json(std::ostream& err, const std::string& code, const std::string& message, const std::string& field) {
  nlohmann::json j = {{"error", code}, {"message", message}, {"field", field.empty() ? nlohmann::json(nullptr) : nlohmann::json(field)}};
  err << j.dump() << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized nonlocal Dirichlet energies: kernels, solves, spectra and horizon sweeps", "nldir"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out", g.out, "Output path (overrides the config)");
  app.add_option("--threads", g.threads, "Worker count (default: NLDIR_THREADS or all cores)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for random probes and eigen starts");
  app.add_flag("--verbose", g.verbose, "Extra diagnostics on stderr");

  std::string kernel = "quartic";
  double p = 2.0;
  int dim = 1;
  int samples = 512;
  auto* sigma = app.add_subcommand("sigma", "Print sigma_R = int R(|z|^2) |z_1|^p dz");
  sigma->add_option("--kernel", kernel, "Kernel id")->required();
  sigma->add_option("--p", p, "Exponent p > 1");
  sigma->add_option("--dim", dim, "Dimension (1 or 2)")->check(CLI::Range(1, 2));
  auto* validate = app.add_subcommand("validate-kernel", "Check a kernel profile against K1-K3");
  validate->add_option("--kernel", kernel, "Kernel id")->required();
  validate->add_option("--samples", samples, "Sample count")->check(CLI::Range(2, 10000000));
  auto* solve = app.add_subcommand("solve", "Minimize the energy at the first horizon of the config");
  auto* eigen = app.add_subcommand("eigen", "Lowest eigenpairs per horizon (CSV)");
  auto* sweep = app.add_subcommand("sweep", "Horizon sweep against a manufactured solution");
  auto* compare = app.add_subcommand("compare", "Sweep several penalty variants on identical meshes");
  auto* probe = app.add_subcommand("probe-coercivity", "Random-probe check of the penalty coercivity bound");
  for (auto* sub : {sigma, validate, solve, eigen, sweep, compare, probe}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*sigma) return run_sigma(g, kernel, p, dim, out, err);
    if (*validate) return run_validate(g, kernel, samples, out);
    if (*solve) return run_solve(g, out, err);
    if (*eigen) return run_eigen(g, out, err);
    if (*sweep) return run_sweep(g, out, err);
    if (*compare) return run_compare(g, out, err);
    if (*probe) return run_probe(g, out);
  } catch (const Error& e) {
    error_json(err, e.code(), e.what(), e.field());
    return 1;
  } catch (const std::exception& e) {
    error_json(err, "internal", e.what(), "");
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace nldir

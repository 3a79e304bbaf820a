// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "nldir/assembly.hpp"
#include "nldir/error.hpp"
#include "nldir/minimize.hpp"
#include "oracles.hpp"

using namespace nldir;

namespace {

double l2_distance_to(const DomainMesh& mesh, const Field& u, const SpatialFunction& f) {
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.interior_count(); ++i) {
    const double d = u[i] - f(mesh.interior()[i].x);
    total += mesh.interior()[i].weight * d * d;
  }
  return std::sqrt(total);
}

EnergyOperator linear_problem(const DomainMesh& mesh, double delta, double p,
                              PenaltyVariant v = PenaltyVariant::product) {
  const BoundaryData a = sample_boundary(mesh, [](const Point& x) { return x[0]; });
  return assemble(mesh, quartic_kernel(), {v, quartic_kernel(), 0}, delta, p, a);
}

const SpatialFunction kIdentity = [](const Point& x) { return x[0]; };

}  // namespace

TEST_CASE("option validation") {
  CHECK_NOTHROW(validate_options({}));
  SolveOptions bad;
  bad.tol = 1.0;
  CHECK_THROWS_AS(validate_options(bad), Error);
  bad = {};
  bad.max_iter = 0;
  CHECK_THROWS_AS(validate_options(bad), Error);
  bad = {};
  bad.backtrack = 1.5;
  CHECK_THROWS_AS(validate_options(bad), Error);
}

TEST_CASE("zero data gives the zero minimizer") {
  const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, 0.05);
  const BoundaryData zero = BoundaryData::zeros(mesh.boundary_count());
  for (PenaltyVariant v : {PenaltyVariant::product, PenaltyVariant::pointwise, PenaltyVariant::dirac_diagonal,
                           PenaltyVariant::wang, PenaltyVariant::shi}) {
    const EnergyOperator op = assemble(mesh, quartic_kernel(), {v, quartic_kernel(), 0}, 0.2, 2.0, zero);
    const SolveResult r = solve_quadratic(op);
    CHECK(r.converged);
    CHECK(r.energy == 0.0);
    CHECK(r.minimizer.values().norm() == 0.0);
  }
  const EnergyOperator p3 = assemble(mesh, quartic_kernel(), {PenaltyVariant::product, quartic_kernel(), 0}, 0.2, 3.0,
                                     zero);
  const SolveResult r = solve_p_energy(p3);
  CHECK(r.converged);
  CHECK(r.minimizer.values().norm() == 0.0);
}

TEST_CASE("linear data on the interval, p = 2") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.025);
  const EnergyOperator op = linear_problem(mesh, 0.1, 2.0);
  const SolveResult r = solve_quadratic(op);
  REQUIRE(r.converged);
  CHECK(r.gradient_norm <= 1e-10 * (1.0 + std::abs(r.energy)));

  // Dense direct solve of the same discrete system.
  const Eigen::MatrixXd A = oracle::dense_stiffness(op);
  const Eigen::VectorXd direct = A.ldlt().solve(op.linear_term());
  CHECK((r.minimizer.values() - direct).lpNorm<Eigen::Infinity>() <= 1e-8 * direct.lpNorm<Eigen::Infinity>());
  CHECK(l2_distance_to(mesh, r.minimizer, kIdentity) <= 0.05);
  CHECK(energy_gradient(op, r.minimizer).values().norm() <= 1e-8);

  SUBCASE("positive scaling keeps the argmin") {
    for (double c : {3.7, 0.01, 250.0}) {
      const SolveResult s = solve_quadratic(op.scaled(c));
      CHECK((s.minimizer.values() - r.minimizer.values()).lpNorm<Eigen::Infinity>() <= 1e-8);
      CHECK(oracle::rel(s.energy, c * r.energy) <= 1e-8);
    }
  }
  SUBCASE("both solvers agree") {
    const SolveResult q = solve_p_energy(op);
    CHECK(q.converged);
    CHECK((q.minimizer.values() - r.minimizer.values()).lpNorm<Eigen::Infinity>() <= 10.0 * 1e-10 * (1.0 + direct.norm()));
    CHECK(std::abs(q.energy - r.energy) <= 10.0 * 1e-10 * (1.0 + r.energy));
  }
}

TEST_CASE("p = 3 with linear data") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.0125);
  const EnergyOperator op = linear_problem(mesh, 0.05, 3.0);
  const SolveResult r = solve_p_energy(op);
  REQUIRE(r.converged);
  CHECK(r.gradient_norm <= 1e-10 * (1.0 + std::abs(r.energy)));
  CHECK(l2_distance_to(mesh, r.minimizer, kIdentity) <= 0.05);

  // A fine-mesh solve of the same problem lands closer.
  const DomainMesh fine = build_mesh(Interval{0.0, 1.0}, 0.00625);
  const SolveResult f = solve_p_energy(linear_problem(fine, 0.025, 3.0));
  CHECK(f.converged);
  CHECK(l2_distance_to(fine, f.minimizer, kIdentity) < l2_distance_to(mesh, r.minimizer, kIdentity));

  SUBCASE("energy history never increases") {
    REQUIRE(r.energy_history.size() >= 2);
    for (std::size_t k = 1; k < r.energy_history.size(); ++k) CHECK(r.energy_history[k] <= r.energy_history[k - 1]);
  }
  SUBCASE("pointwise penalty also converges") {
    const SolveResult s = solve_p_energy(linear_problem(mesh, 0.05, 3.0, PenaltyVariant::pointwise));
    CHECK(s.converged);
    CHECK(l2_distance_to(mesh, s.minimizer, kIdentity) <= 0.05);
  }
  SUBCASE("p = 4 as well") {
    const SolveResult s = solve_p_energy(linear_problem(mesh, 0.05, 4.0));
    CHECK(s.converged);
    CHECK(l2_distance_to(mesh, s.minimizer, kIdentity) <= 0.05);
  }
}

TEST_CASE("determinism") {
  const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, 0.05);
  const BoundaryData a = sample_boundary(mesh, [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; });
  for (double p : {2.0, 3.0}) {
    const EnergyOperator op = assemble(mesh, quartic_kernel(), {PenaltyVariant::product, quartic_kernel(), 0}, 0.2, p, a);
    const SolveResult r1 = minimize(op);
    const SolveResult r2 = minimize(op);
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.minimizer.values() == r2.minimizer.values());
    CHECK(r1.energy == r2.energy);
  }
}

TEST_CASE("exhausted budget is flagged, not thrown") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.0125);
  SolveOptions opts;
  opts.max_iter = 3;
  for (double p : {2.0, 3.0}) {
    const SolveResult r = minimize(linear_problem(mesh, 0.05, p), opts);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK_FALSE(r.status.empty());
    CHECK(r.minimizer.size() == mesh.interior_count());
    CHECK(std::isfinite(r.energy));
  }
}

TEST_CASE("negative curvature is reported") {
  // Two nodes joined by a negative weight and tied to datum 1 by a weak
  // pointwise penalty: the form is indefinite.
  InteriorPairs pairs;
  pairs.adjacency.offsets = {0, 1, 2};
  pairs.adjacency.indices = {1, 0};
  pairs.weights = {-1.0, -1.0};
  PenaltyData pen;
  pen.variant = PenaltyVariant::pointwise;
  pen.kind = PenaltyKind::pointwise;
  pen.rows.push_back({0.1, 1.0, 2.0, 0, 2});
  pen.cols = {0, 1};
  pen.coeffs = {1.0, 0.5};
  const EnergyOperator op(nullptr, 2, 0.1, 2.0, {1.0, 1.0}, pairs, pen);
  try {
    (void)solve_quadratic(op);
    FAIL("expected a curvature error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("curvature") != std::string::npos);
  }
  CHECK_THROWS_AS((void)solve_quadratic(linear_problem(build_mesh(Interval{0.0, 1.0}, 0.025), 0.1, 3.0)), Error);
}

TEST_CASE("nonlocal Poincare boundedness") {
  std::vector<double> constants;
  for (double delta : {0.2, 0.1, 0.05}) {
    const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, delta / 4.0);
    const BoundaryData a = sample_boundary(mesh, [](const Point& x) { return 1.0 + x[0]; });
    for (double p : {2.0, 3.0}) {
      const EnergyOperator op =
          assemble(mesh, quartic_kernel(), {PenaltyVariant::product, quartic_kernel(), 0}, delta, p, a);
      const SolveResult r = minimize(op);
      REQUIRE(r.converged);
      CHECK(std::isfinite(r.max_iterate_norm));
      const double norm = discrete_lp_norm(mesh, r.minimizer, p);
      CHECK(r.max_iterate_norm >= norm * (1.0 - 1e-12));
      const double a_norm = std::pow(std::abs(a[0]), p) + std::pow(std::abs(a[1]), p);
      const double c = norm / (std::pow(r.energy, 1.0 / p) + std::pow(a_norm, 1.0 / p));
      if (p == 2.0) constants.push_back(c);
    }
  }
  const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
  CHECK(*hi <= 1.5 * *lo);
}

// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nldir/assembly.hpp"
#include "nldir/error.hpp"
#include "nldir/spectra.hpp"
#include "oracles.hpp"

using namespace nldir;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

EnergyOperator stiffness(const DomainMesh& mesh, double delta,
                         PenaltyVariant v = PenaltyVariant::product) {
  return assemble(mesh, quartic_kernel(), {v, quartic_kernel(), 0}, delta, 2.0,
                  BoundaryData::zeros(mesh.boundary_count()));
}

Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& B) { return Eigen::MatrixXd(B); }

double sigma1() { return sigma_R(quartic_kernel(), 2.0, 1).value; }

void check_invariants(const EigenProblem& prob, const EigenResult& r) {
  const int k = static_cast<int>(r.eigenvalues.size());
  for (int i = 0; i < k; ++i) {
    if (i > 0) CHECK(r.eigenvalues[i] >= r.eigenvalues[i - 1]);
    CHECK(r.eigenvalues[i] >= -1e-8);
    const Eigen::VectorXd& ui = r.eigenfields[i].values();
    Eigen::Index top = 0;
    ui.cwiseAbs().maxCoeff(&top);
    CHECK(ui[top] > 0.0);
    // lambda is the constrained energy of its own mode.
    CHECK(oracle::rel(r.eigenvalues[i], total_energy(prob.stiffness, r.eigenfields[i])) <= 1e-8);
    for (int j = 0; j < k; ++j) {
      const double g = ui.dot(prob.mass_matrix * r.eigenfields[j].values());
      CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) <= 1e-8);
    }
  }
}

}  // namespace

TEST_CASE("mass model names") {
  CHECK(parse_mass_model("L2") == MassModel::L2);
  CHECK(parse_mass_model("nonlocalW") == MassModel::nonlocal_w);
  CHECK(to_string(MassModel::nonlocal_w) == "nonlocalW");
  CHECK_THROWS_AS((void)parse_mass_model("H1"), Error);
}

TEST_CASE("interval spectrum approaches sigma_R k^2 pi^2") {
  double last = 1.0;
  for (double delta : {0.08, 0.04, 0.02}) {
    const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, delta / 4.0);
    REQUIRE(mesh.interior_count() <= 200);
    const EigenProblem prob = make_eigen_problem(stiffness(mesh, delta), MassModel::L2, 3);
    const EigenResult r = solve_eigen(prob);
    REQUIRE(r.converged);
    check_invariants(prob, r);
    for (double res : r.residuals) CHECK(res <= 1e-9);

    const double err = std::abs(r.eigenvalues[0] / sigma1() - kPi2) / kPi2;
    CHECK(err < last);
    last = err;

    const Eigen::VectorXd ref = oracle::dense_eigenvalues(oracle::dense_stiffness(prob.stiffness), dense(prob.mass_matrix));
    for (int i = 0; i < 3; ++i) CHECK(oracle::rel(r.eigenvalues[i], ref[i]) <= 1e-8);
  }
  CHECK(last <= 0.1);
}

TEST_CASE("unit square modes") {
  SUBCASE("delta = 0.05 against the local targets") {
    const double delta = 0.05;
    const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, delta / 4.0);
    const EigenProblem prob = make_eigen_problem(stiffness(mesh, delta), MassModel::L2, 3);
    const EigenResult r = solve_eigen(prob);
    REQUIRE(r.converged);
    const double s = sigma_R(quartic_kernel(), 2.0, 2).value;
    CHECK(std::abs(r.eigenvalues[0] / s - 2.0 * kPi2) <= 0.15 * 2.0 * kPi2);
    // Near-degenerate pair, compared as a set.
    std::vector<double> pair{r.eigenvalues[1] / s, r.eigenvalues[2] / s};
    std::sort(pair.begin(), pair.end());
    for (double v : pair) CHECK(std::abs(v - 5.0 * kPi2) <= 0.15 * 5.0 * kPi2);
    CHECK(oracle::rel(pair[0], pair[1]) <= 1e-3);
  }
  SUBCASE("dense oracle on a small square") {
    const double delta = 0.3;
    const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, delta / 4.0);
    REQUIRE(mesh.interior_count() <= 200);
    const EigenProblem prob = make_eigen_problem(stiffness(mesh, delta), MassModel::L2, 4);
    const EigenResult r = solve_eigen(prob);
    REQUIRE(r.converged);
    check_invariants(prob, r);
    const Eigen::VectorXd ref = oracle::dense_eigenvalues(oracle::dense_stiffness(prob.stiffness), dense(prob.mass_matrix));
    std::vector<double> got(r.eigenvalues.begin(), r.eigenvalues.end());
    std::sort(got.begin(), got.end());
    for (int i = 0; i < 4; ++i) CHECK(oracle::rel(got[i], ref[i]) <= 1e-8);
  }
}

TEST_CASE("single mode normalization on various meshes") {
  for (const Shape& shape : {Shape{Interval{0.0, 2.0}}, Shape{Rect{{0, 0}, {1, 0.5}}}}) {
    const double delta = 0.2;
    const DomainMesh mesh = build_mesh(shape, delta / 4.0);
    for (PenaltyVariant v : {PenaltyVariant::product, PenaltyVariant::dirac_diagonal, PenaltyVariant::shi}) {
      const EigenProblem prob = make_eigen_problem(stiffness(mesh, delta, v), MassModel::L2, 1);
      const EigenResult r = solve_eigen(prob);
      REQUIRE(r.converged);
      const auto& u = r.eigenfields[0].values();
      CHECK(std::abs(u.dot(prob.mass_matrix * u) - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("scaling the stiffness scales the spectrum only") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.01);
  const EnergyOperator op = stiffness(mesh, 0.04);
  const EigenResult a = solve_eigen(make_eigen_problem(op, MassModel::L2, 3));
  for (double c : {0.25, 7.0}) {
    const EigenResult b = solve_eigen(make_eigen_problem(op.scaled(c), MassModel::L2, 3));
    for (int i = 0; i < 3; ++i) {
      CHECK(oracle::rel(b.eigenvalues[i], c * a.eigenvalues[i]) <= 1e-8);
      // Same sign convention, so the fields match directly.
      CHECK((b.eigenfields[i].values() - a.eigenfields[i].values()).norm() <= 1e-6 * a.eigenfields[i].values().norm());
    }
  }
}

TEST_CASE("normalized against unnormalized mass") {
  const KernelSpec W = wendland_kernel();
  SUBCASE("identity weights give no gap") {
    const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.01);
    const EnergyOperator op = stiffness(mesh, 0.04);
    const MassComparison cmp = compare_mass_models(mesh, op, l2_mass_matrix(mesh), 3);
    for (double g : cmp.relative_gap) CHECK(g <= 1e-12);
  }
  SUBCASE("gap is small at delta = 0.02 and shrinks when delta halves") {
    std::vector<double> gaps;
    for (double delta : {0.08, 0.04, 0.02}) {
      const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, delta / 8.0);
      const EnergyOperator op = stiffness(mesh, delta);
      const MassComparison cmp = compare_mass_models(mesh, op, W, 3);
      REQUIRE(cmp.l2.converged);
      REQUIRE(cmp.w.converged);
      const EigenProblem wp = make_eigen_problem(op, MassModel::nonlocal_w, 3, &W);
      check_invariants(wp, cmp.w);
      gaps.push_back(cmp.relative_gap[0]);
      if (delta == 0.02) {
        for (double g : cmp.relative_gap) CHECK(g <= 0.05);
      }
    }
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[2] < gaps[1]);
  }
}

TEST_CASE("eigen problem preconditions") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.01);
  const EnergyOperator op = stiffness(mesh, 0.04);
  // The quartic profile's W form is not positive definite on this mesh.
  const KernelSpec q = quartic_kernel();
  CHECK_THROWS_AS((void)make_eigen_problem(op, MassModel::nonlocal_w, 2, &q), Error);
  CHECK_THROWS_AS((void)make_eigen_problem(op, MassModel::nonlocal_w, 2, nullptr), Error);

  const BoundaryData one = BoundaryData::constant(mesh.boundary_count(), 1.0);
  CHECK_THROWS_AS((void)make_eigen_problem(op.with_datum(one), MassModel::L2, 2), Error);
  CHECK_THROWS_AS((void)make_eigen_problem(op, MassModel::L2, 0), Error);

  const EnergyOperator p3 = assemble(mesh, quartic_kernel(), {PenaltyVariant::product, quartic_kernel(), 0}, 0.04, 3.0,
                                     BoundaryData::zeros(mesh.boundary_count()));
  CHECK_THROWS_AS((void)make_eigen_problem(p3, MassModel::L2, 1), Error);

  Eigen::SparseMatrix<double> neg = l2_mass_matrix(mesh);
  neg.coeffRef(3, 3) = -1.0;
  CHECK_THROWS_AS(certify_mass(neg), Error);
}

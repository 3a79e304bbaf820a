// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "nldir/assembly.hpp"
#include "nldir/error.hpp"
#include "nldir/operator_io.hpp"
#include "oracles.hpp"

using namespace nldir;

namespace {

constexpr double kPi = std::numbers::pi;

const PenaltyVariant kAllVariants[] = {PenaltyVariant::product, PenaltyVariant::pointwise,
                                       PenaltyVariant::dirac_diagonal, PenaltyVariant::wang, PenaltyVariant::shi};

PenaltySpec spec_of(PenaltyVariant v, int shi_power = 0) { return {v, quartic_kernel(), shi_power}; }

BoundaryData datum_for(const DomainMesh& mesh, PenaltyVariant v, std::mt19937_64& rng) {
  if (!accepts_boundary_data(v)) return BoundaryData::zeros(mesh.boundary_count());
  std::normal_distribution<double> normal(0.0, 1.0);
  BoundaryData a = BoundaryData::zeros(mesh.boundary_count());
  for (std::size_t b = 0; b < a.size(); ++b) a[b] = normal(rng);
  return a;
}

std::vector<double> to_vec(const BoundaryData& a) { return {a.values().begin(), a.values().end()}; }

// Three interior nodes with unequal weights, built by hand.
DomainMesh toy_mesh() {
  std::vector<InteriorNode> in{{{0.2, 0.0}, 0.1, {0, 0}}, {{0.35, 0.0}, 0.3, {1, 0}}, {{0.7, 0.0}, 0.2, {2, 0}}};
  std::vector<BoundaryNode> bd{{{0.0, 0.0}, 1.0, {-1.0, 0.0}}, {{1.0, 0.0}, 1.0, {1.0, 0.0}}};
  return DomainMesh(Interval{0.0, 1.0}, 1, 0.1, {0.1, 0.0}, {0.0, 0.0}, {3, 1}, std::move(in), std::move(bd));
}

DomainMesh with_weights_scaled(const DomainMesh& m, double c) {
  std::vector<InteriorNode> in(m.interior().begin(), m.interior().end());
  for (auto& n : in) n.weight *= c;
  std::vector<BoundaryNode> bd(m.boundary().begin(), m.boundary().end());
  const std::array<std::int64_t, 2> cells{static_cast<std::int64_t>(in.size()), 1};
  return DomainMesh(m.shape(), m.dim(), m.h(), m.spacing(), {0.0, 0.0}, cells, std::move(in), std::move(bd));
}

}  // namespace

TEST_CASE("interior energy examples") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.05);
  const BoundaryData zero = BoundaryData::zeros(mesh.boundary_count());
  const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::product), 0.2, 2.0, zero);
  CHECK(interior_energy(op, Field::constant(mesh.interior_count(), 3.5)) == 0.0);

  SUBCASE("hand-built three-node mesh") {
    const DomainMesh toy = toy_mesh();
    const BoundaryData a = BoundaryData::zeros(2);
    for (double p : {2.0, 3.0}) {
      const EnergyOperator t = assemble(toy, quartic_kernel(), spec_of(PenaltyVariant::product), 0.4, p, a);
      const Field u(Eigen::Vector3d(1.0, -0.5, 2.0));
      // pairs (0,1) at 0.15 and (1,2) at 0.35 lie inside delta = 0.4, (0,2) at 0.5 does not
      const auto w = [](double r, double qi, double qj) { return qi * qj * std::pow(1.0 - r * r / 0.16, 2) / 0.4; };
      const double hand = 2.0 * (w(0.15, 0.1, 0.3) * std::pow(1.5, p) + w(0.35, 0.3, 0.2) * std::pow(2.5, p)) /
                          std::pow(0.4, p);
      CHECK(oracle::rel(interior_energy(t, u), hand) <= 1e-14);
      CHECK(oracle::rel(interior_energy(t, u), oracle::interior_energy(toy, quartic_kernel(), 0.4, p, {1.0, -0.5, 2.0})) <=
            1e-14);
    }
  }

  SUBCASE("u = x stays under sigma_R |u'|^2") {
    const DomainMesh fine = build_mesh(Interval{0.0, 1.0}, 0.0125);
    const EnergyOperator t = assemble(fine, quartic_kernel(), spec_of(PenaltyVariant::product), 0.1, 2.0,
                                      BoundaryData::zeros(2));
    const double e = interior_energy(t, sample_interior(fine, [](const Point& x) { return x[0]; }));
    CHECK(e <= sigma_R(quartic_kernel(), 2.0, 1).value + 0.05);
    CHECK(e > 0.5 * sigma_R(quartic_kernel(), 2.0, 1).value);
  }
}

TEST_CASE("neighbor-table assembly equals the direct double loop") {
  std::mt19937_64 rng(11);
  struct Case {
    Shape shape;
    double h, delta;
  };
  const Case cases[] = {{Interval{0.0, 1.0}, 0.02, 0.1}, {Interval{-0.5, 0.5}, 0.05, 0.2},
                        {Rect{{0, 0}, {1, 1}}, 0.1, 0.25}, {Rect{{0, 0}, {2, 1}}, 0.15, 0.35}};
  for (const auto& c : cases) {
    const DomainMesh mesh = build_mesh(c.shape, c.h);
    REQUIRE(mesh.interior_count() <= 100);
    for (PenaltyVariant v : kAllVariants) {
      for (double p : {2.0, 3.0}) {
        if (p != 2.0 && !supports_general_p(v)) continue;
        for (int shi_power : {0, 2}) {
          if (v != PenaltyVariant::shi && shi_power != 0) continue;
          const BoundaryData a = datum_for(mesh, v, rng);
          const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(v, shi_power), c.delta, p, a);
          for (int trial = 0; trial < 3; ++trial) {
            const Field u = oracle::random_field(mesh.interior_count(), rng);
            const auto uv = oracle::to_vec(u);
            const double in_ref = oracle::interior_energy(mesh, quartic_kernel(), c.delta, p, uv);
            const double pen_ref =
                oracle::penalty_energy(mesh, quartic_kernel(), v, c.delta, p, uv, to_vec(a), shi_power);
            CHECK_MESSAGE(oracle::rel(interior_energy(op, u), in_ref) <= 1e-12, to_string(v));
            CHECK_MESSAGE(oracle::rel(penalty_energy(op, u), pen_ref) <= 1e-12, to_string(v));
            CHECK(oracle::rel(total_energy(op, u), in_ref + pen_ref) <= 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("penalty examples and errors") {
  const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, 0.05);
  const std::size_t n = mesh.interior_count();
  const BoundaryData zero = BoundaryData::zeros(mesh.boundary_count());

  const EnergyOperator prod =
      assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::product), 0.2, 2.0, BoundaryData::constant(zero.size(), 1.7));
  const Field c = Field::constant(n, 1.7);
  CHECK(std::abs(penalty_energy(prod, c)) <= 1e-20);

  // Supported away from the collar r_K delta: every variant vanishes exactly.
  const double delta = 0.1;
  Field inside = sample_interior(mesh, [&](const Point& x) {
    return distance_to_boundary(mesh.shape(), x) > delta + 1e-12 ? std::sin(7.0 * x[0]) + 2.0 : 0.0;
  });
  for (PenaltyVariant v : kAllVariants) {
    const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(v), delta, 2.0, zero);
    CHECK_MESSAGE(penalty_energy(op, inside) == 0.0, to_string(v));
    CHECK(penalty_energy(op, Field::constant(n, 1.0)) > 0.0);
  }

  CHECK_THROWS_AS((void)assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::shi), 0.2, 2.0,
                                 BoundaryData::constant(zero.size(), 1.0)),
                  Error);
  CHECK_THROWS_AS((void)assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::dirac_diagonal), 0.2, 2.0,
                                 BoundaryData::constant(zero.size(), 1.0)),
                  Error);
  for (PenaltyVariant v : {PenaltyVariant::dirac_diagonal, PenaltyVariant::wang, PenaltyVariant::shi}) {
    CHECK_THROWS_AS((void)assemble(mesh, quartic_kernel(), spec_of(v), 0.2, 3.0, zero), Error);
  }
  try {
    (void)assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::product), 0.09, 2.0, zero);
    FAIL("expected an error for delta < 2h");
  } catch (const Error& e) {
    CHECK(e.field() == "delta");
  }
  const KernelSpec increasing("increasing", [](double s) { return s; }, 1.0);
  CHECK_THROWS_AS((void)assemble(mesh, increasing, spec_of(PenaltyVariant::product), 0.2, 2.0, zero), Error);
  CHECK_THROWS_AS((void)assemble(mesh, quartic_kernel(), {PenaltyVariant::product, increasing, 0}, 0.2, 2.0, zero),
                  Error);
  CHECK_THROWS_AS((void)interior_energy(prod, Field::zeros(n + 1)), Error);
  CHECK_THROWS_AS((void)prod.with_datum(BoundaryData::zeros(3)), Error);
  CHECK_THROWS_AS((void)parse_penalty_variant("robin"), Error);
}

TEST_CASE("quadratic form") {
  std::mt19937_64 rng(5);
  const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, 0.0625);
  for (PenaltyVariant v : kAllVariants) {
    const BoundaryData a = datum_for(mesh, v, rng);
    const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(v), 0.25, 2.0, a);

    SUBCASE("agrees with direct evaluation") {
      for (int trial = 0; trial < 20; ++trial) {
        const Field u = oracle::random_field(mesh.interior_count(), rng, 3.0);
        CHECK(oracle::rel(quadratic_energy(op, u), total_energy(op, u)) <= 1e-10);
      }
    }
    SUBCASE("zero datum has no affine part") {
      const EnergyOperator z = op.with_datum(BoundaryData::zeros(mesh.boundary_count()));
      CHECK(z.linear_term().norm() == 0.0);
      CHECK(z.constant_term() == 0.0);
    }
    SUBCASE("symmetric positive semidefinite") {
      const Eigen::MatrixXd A = oracle::dense_stiffness(op);
      CHECK((A - A.transpose()).norm() <= 1e-12 * A.norm());
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
      for (int trial = 0; trial < 50; ++trial) {
        const Field u = oracle::random_field(mesh.interior_count(), rng);
        CHECK(u.values().dot(op.apply(u.values())) >= 0.0);
        CHECK(total_energy(op, u) >= 0.0);
      }
    }
  }
}

TEST_CASE("doubling the quadrature weights in 1D") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.025);
  const DomainMesh twice = with_weights_scaled(mesh, 2.0);
  const BoundaryData zero = BoundaryData::zeros(2);
  const EnergyOperator a = assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::product), 0.1, 2.0, zero);
  const EnergyOperator b = assemble(twice, quartic_kernel(), spec_of(PenaltyVariant::product), 0.1, 2.0, zero);
  REQUIRE(a.pairs().weights.size() == b.pairs().weights.size());
  for (std::size_t e = 0; e < a.pairs().weights.size(); ++e) {
    CHECK(b.pairs().weights[e] == doctest::Approx(4.0 * a.pairs().weights[e]).epsilon(1e-15));
  }
  std::mt19937_64 rng(3);
  const Field u = oracle::random_field(mesh.interior_count(), rng);
  CHECK(oracle::rel(interior_energy(b, u), 4.0 * interior_energy(a, u)) <= 1e-13);
}

TEST_CASE("energy gradient") {
  std::mt19937_64 rng(17);
  const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, 0.1);
  for (PenaltyVariant v : kAllVariants) {
    const BoundaryData a = datum_for(mesh, v, rng);
    const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(v), 0.25, 2.0, a);
    for (int trial = 0; trial < 5; ++trial) {
      const Field u = oracle::random_field(mesh.interior_count(), rng);
      const Eigen::VectorXd expect = 2.0 * op.apply(u.values()) - 2.0 * op.linear_term();
      CHECK((energy_gradient(op, u).values() - expect).norm() <= 1e-12 * expect.norm());
    }
  }
  for (double p : {3.0, 4.0, 2.5}) {
    for (PenaltyVariant v : {PenaltyVariant::product, PenaltyVariant::pointwise}) {
      const BoundaryData a = datum_for(mesh, v, rng);
      const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(v), 0.25, p, a);
      for (int trial = 0; trial < 5; ++trial) {
        const Field u = oracle::random_field(mesh.interior_count(), rng);
        const double step = 1e-5 * (1.0 + u.values().lpNorm<Eigen::Infinity>());
        const Eigen::VectorXd fd = oracle::fd_gradient(op, u, step);
        CHECK((energy_gradient(op, u).values() - fd).norm() <= 1e-6 * fd.norm());
      }
    }
  }
}

TEST_CASE("energy_change matches the difference of energies") {
  std::mt19937_64 rng(23);
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.02);
  for (double p : {2.0, 3.0}) {
    const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::pointwise), 0.1, p,
                                       datum_for(mesh, PenaltyVariant::pointwise, rng));
    const Field u = oracle::random_field(mesh.interior_count(), rng);
    const Field v = oracle::random_field(mesh.interior_count(), rng);
    CHECK(oracle::rel(energy_change(op, u, v), total_energy(op, v) - total_energy(op, u)) <= 1e-10);
    CHECK(energy_change(op, u, u) == 0.0);
  }
}

TEST_CASE("invariances on randomized inputs") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  const DomainMesh mesh1 = build_mesh(Interval{0.0, 1.0}, 0.05);
  const DomainMesh mesh2 = build_mesh(Rect{{0, 0}, {1, 1}}, 0.1);
  int cases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const DomainMesh& mesh = trial % 2 ? mesh2 : mesh1;
    const double p = 2.0 + (trial % 3) * 0.75;
    const BoundaryData a = datum_for(mesh, PenaltyVariant::product, rng);
    const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(PenaltyVariant::product), 0.25, p, a);
    const Field u = oracle::random_field(mesh.interior_count(), rng);
    const double c = unif(rng);
    Field shifted = u;
    shifted.values().array() += c;
    BoundaryData a_shifted = a;
    a_shifted.values().array() += c;
    CHECK(oracle::rel(interior_energy(op, shifted), interior_energy(op, u)) <= 1e-12);
    CHECK(oracle::rel(penalty_energy(op, shifted, a_shifted), penalty_energy(op, u, a)) <= 1e-12);
    ++cases;
  }
  CHECK(cases >= 100);
}

TEST_CASE("mollify") {
  const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, 0.05);
  const std::size_t n = mesh.interior_count();
  const double delta = 0.2;
  const KernelSpec khat = quartic_kernel();

  const MollifiedField c = mollify(mesh, khat, delta, Field::constant(n, 2.5));
  for (std::size_t i = 0; i < n; ++i) CHECK(c.interior[i] == doctest::Approx(2.5).epsilon(1e-14));
  for (std::size_t b = 0; b < c.boundary.size(); ++b) CHECK(c.boundary[b] == doctest::Approx(2.5).epsilon(1e-14));

  const MollifiedField z = mollify(mesh, khat, delta, Field::zeros(n));
  CHECK(z.interior.values().norm() == 0.0);
  CHECK(z.boundary.values().norm() == 0.0);

  // Direct sum for u = x; nodes with the whole ball inside see no first moment.
  const Field u = sample_interior(mesh, [](const Point& x) { return x[0]; });
  const MollifiedField m = mollify(mesh, khat, delta, u);
  int full = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point xi = mesh.interior()[i].x;
    double top = 0.0, bottom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double k = mesh.interior()[j].weight * oracle::scaled(khat, delta, 2, oracle::dist(xi, mesh.interior()[j].x));
      top += k * u[j];
      bottom += k;
    }
    CHECK(std::abs(m.interior[i] - top / bottom) <= 1e-13);
    if (distance_to_boundary(mesh, xi) > delta) {
      ++full;
      CHECK(std::abs(m.interior[i] - xi[0]) <= mesh.h() * mesh.h());
    }
  }
  CHECK(full > 0);

  const DomainMesh coarse = build_mesh(Interval{0.0, 1.0}, 0.1);
  try {
    (void)mollify(coarse, khat, 0.01, Field::constant(coarse.interior_count(), 1.0));
    FAIL("expected a vanishing-weight error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
}

TEST_CASE("nonlocal inner product") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.0125);
  const double delta = 0.05;
  const NormalizedKernel w = normalize_W(wendland_kernel(), 1);
  const std::size_t n = mesh.interior_count();
  const double c = 1.7;
  const Field u = Field::constant(n, c);
  const double value = nonlocal_inner_product(mesh, w.kernel, delta, u, u);
  CHECK(oracle::rel(value, oracle::inner_product(mesh, w.kernel, delta, oracle::to_vec(u), oracle::to_vec(u))) <=
        1e-12);
  CHECK(value < c * c);
  CHECK(c * c - value <= c * c * 2.0 * w.kernel.support_radius() * delta);
  CHECK(nonlocal_inner_product(mesh, w.kernel, delta, u, Field::zeros(n)) == 0.0);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Field x = oracle::random_field(n, rng);
    const Field y = oracle::random_field(n, rng);
    CHECK(nonlocal_inner_product(mesh, w.kernel, delta, x, y) == nonlocal_inner_product(mesh, w.kernel, delta, y, x));
    CHECK(oracle::rel(nonlocal_inner_product(mesh, w.kernel, delta, x, y),
                      oracle::inner_product(mesh, w.kernel, delta, oracle::to_vec(x), oracle::to_vec(y))) <= 1e-10);
  }
  const Eigen::SparseMatrix<double> B = w_mass_matrix(mesh, w.kernel, delta);
  const Field x = oracle::random_field(n, rng);
  CHECK(oracle::rel(x.values().dot(B * x.values()), nonlocal_inner_product(mesh, w.kernel, delta, x, x)) <= 1e-12);
}

TEST_CASE("kernel scale ratio") {
  const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, 0.01);
  const KernelSpec q = quartic_kernel();
  const ScaleRatio one = kernel_scale_ratio(mesh, q, 0.05, 2.0, 1.0, 20, 1);
  for (double r : one.ratios) CHECK(r == 1.0);

  const ScaleRatio two = kernel_scale_ratio(mesh, q, 0.05, 2.0, 2.0, 100, 1);
  const ScaleRatio two_more = kernel_scale_ratio(mesh, q, 0.05, 2.0, 2.0, 200, 1);
  CHECK(std::isfinite(two.max_ratio));
  CHECK(two.ratios.size() == 100);
  CHECK(two_more.max_ratio >= two.max_ratio);
  CHECK(two_more.max_ratio <= 1.1 * two.max_ratio);

  const ScaleRatio half = kernel_scale_ratio(mesh, q, 0.05, 2.0, 0.5, 100, 1);
  CHECK(std::isfinite(half.max_ratio));
  CHECK(half.max_ratio > 0.0);
  CHECK_THROWS_AS((void)kernel_scale_ratio(mesh, q, 0.05, 2.0, 0.0, 10, 1), Error);
}

TEST_CASE("consistency and mollifier gradient estimates") {
  const KernelSpec q = quartic_kernel();
  SUBCASE("convolution defect of a smooth field shrinks with delta") {
    double last = 1e300;
    for (double delta : {0.2, 0.1, 0.05}) {
      const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, delta / 4.0);
      const Field u = sample_interior(mesh, [](const Point& x) { return std::sin(kPi * x[0]); });
      const double norm = discrete_lp_norm(mesh, convolution_defect(mesh, q, delta, u), 2.0);
      CHECK(norm < last);
      last = norm;
    }
  }
  SUBCASE("gradient of the mollified field") {
    std::vector<double> constants;
    std::mt19937_64 rng(37);
    for (double delta : {0.2, 0.1, 0.05}) {
      const DomainMesh mesh = build_mesh(Interval{0.0, 1.0}, delta / 4.0);
      const Field u = oracle::random_field(mesh.interior_count(), rng);
      const MollifiedField m = mollify(mesh, q, delta, u);
      const double grad = finite_difference_gradient_norm(mesh, m.interior, 2.0);
      const double sum = raw_interior_sum(mesh, q, delta, 2.0, u);
      constants.push_back(delta * grad / std::sqrt(sum));
    }
    const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
    CHECK(*hi <= 2.0 * *lo);
  }
}

TEST_CASE("operator dump round trip") {
  std::mt19937_64 rng(41);
  const DomainMesh mesh = build_mesh(Rect{{0, 0}, {1, 1}}, 0.1);
  for (PenaltyVariant v : kAllVariants) {
    for (double p : {2.0, 3.0}) {
      if (p != 2.0 && !supports_general_p(v)) continue;
      const EnergyOperator op = assemble(mesh, quartic_kernel(), spec_of(v), 0.25, p, datum_for(mesh, v, rng));
      const EnergyOperator back = parse_operator(dump_operator(op));
      CHECK(back.mesh() == nullptr);
      CHECK(back.size() == op.size());
      for (int trial = 0; trial < 3; ++trial) {
        const Field u = oracle::random_field(mesh.interior_count(), rng);
        CHECK(total_energy(back, u) == total_energy(op, u));
        CHECK(energy_gradient(back, u).values() == energy_gradient(op, u).values());
      }
    }
  }
  CHECK_THROWS_AS((void)parse_operator("{\"format\": \"other\"}"), Error);
  CHECK_THROWS_AS((void)parse_operator("not json"), Error);
}

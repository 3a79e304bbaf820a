// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_ASSEMBLY_HPP
#define NLDIR_ASSEMBLY_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "nldir/geometry.hpp"
#include "nldir/kernel.hpp"

namespace nldir {

struct InteriorTag {};
struct BoundaryTag {};

/// Real values attached to one node set of a mesh. Field (interior nodes) and
/// BoundaryData (boundary nodes) are distinct types so they cannot be mixed up.
template <typename Tag>
class NodeValues {
 public:
  NodeValues() = default;
  explicit NodeValues(Eigen::VectorXd values) : values_(std::move(values)) {}

  static NodeValues zeros(std::size_t n) { return NodeValues(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))); }
  static NodeValues constant(std::size_t n, double c) {
    return NodeValues(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), c));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::VectorXd& values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  Eigen::VectorXd values_;
};

using Field = NodeValues<InteriorTag>;
using BoundaryData = NodeValues<BoundaryTag>;

using SpatialFunction = std::function<double(const Point&)>;

Field sample_interior(const DomainMesh& mesh, const SpatialFunction& f);
BoundaryData sample_boundary(const DomainMesh& mesh, const SpatialFunction& f);

enum class PenaltyVariant { product, pointwise, dirac_diagonal, wang, shi };

std::string_view to_string(PenaltyVariant v);
PenaltyVariant parse_penalty_variant(std::string_view name);
/// product, pointwise and wang take a general datum; dirac_diagonal and shi
/// are defined for a = 0 only.
bool accepts_boundary_data(PenaltyVariant v);
/// Only product and pointwise are defined for p != 2.
bool supports_general_p(PenaltyVariant v);

/// Boundary penalty choice. `kernel` is K for product / pointwise /
/// dirac_diagonal and the base profile R whose antiderivatives feed wang / shi.
struct PenaltySpec {
  PenaltyVariant variant;
  KernelSpec kernel;
  /// shi prefactor 4 / (delta^power * mu); 0 and 2 are the two published forms.
  int shi_delta_power = 0;
};

/// Per-boundary-node penalty data. For averaged variants the node contributes
/// coefficient * |kernel_sum * datum - k.u|^p; for pointwise variants
/// coefficient * sum_j k_j |u_j - datum|^p.
struct PenaltyRow {
  double coefficient = 0.0;
  double datum = 0.0;
  double kernel_sum = 0.0;
  std::size_t begin = 0;  // range into PenaltyData::cols / coeffs
  std::size_t end = 0;
};

enum class PenaltyKind { averaged, pointwise };

struct PenaltyData {
  PenaltyVariant variant = PenaltyVariant::product;
  PenaltyKind kind = PenaltyKind::averaged;
  std::vector<PenaltyRow> rows;
  std::vector<std::size_t> cols;
  std::vector<double> coeffs;
};

/// Ordered interior pairs (i, j), j != i, with w_ij = q_i q_j R_delta(|x_i - x_j|) / delta^p.
struct InteriorPairs {
  Adjacency adjacency;
  std::vector<double> weights;  // aligned with adjacency.indices
};

/// Assembled discrete functional
///   F(u) = sum_{i != j} w_ij |u_i - u_j|^p + penalty(u, a).
/// For p = 2 it additionally holds the quadratic form F(u) = u'Au - 2 l'u + c0,
/// with A split into a sparse part (interior + pointwise penalties) and the
/// rank-one terms of averaged penalties, which are applied but never formed.
class EnergyOperator {
 public:
  EnergyOperator(std::shared_ptr<const DomainMesh> mesh, std::size_t size, double delta, double p,
                 std::vector<double> quadrature, InteriorPairs pairs, PenaltyData penalty);

  const DomainMesh* mesh() const noexcept { return mesh_.get(); }
  std::size_t size() const noexcept { return size_; }
  double delta() const noexcept { return delta_; }
  double p() const noexcept { return p_; }
  bool is_quadratic() const noexcept { return p_ == 2.0; }
  std::span<const double> quadrature() const noexcept { return quadrature_; }
  const InteriorPairs& pairs() const noexcept { return pairs_; }
  const PenaltyData& penalty() const noexcept { return penalty_; }

  /// p = 2 only.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& sparse_part() const;
  const Eigen::VectorXd& linear_term() const;
  double constant_term() const;
  /// A u (p = 2 only).
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  /// Diagonal of the p = 2 form built from the same weights, used as a
  /// preconditioner for every p.
  const Eigen::VectorXd& diagonal() const noexcept { return diagonal_; }

  /// Operator for c * F (argmin-invariant for c > 0).
  EnergyOperator scaled(double c) const;
  /// Same operator with a different boundary datum.
  EnergyOperator with_datum(const BoundaryData& a) const;

 private:
  void build_quadratic_form();

  std::shared_ptr<const DomainMesh> mesh_;
  std::size_t size_;
  double delta_;
  double p_;
  std::vector<double> quadrature_;
  InteriorPairs pairs_;
  PenaltyData penalty_;
  Eigen::VectorXd diagonal_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_;
  Eigen::VectorXd linear_;
  double constant_ = 0.0;
};

struct AssemblyOptions {
  int threads = 1;
  std::size_t validation_samples = 512;
};

/// Builds F for horizon delta and exponent p. Throws when delta < 2h, when a
/// kernel fails validation, for p != 2 with a p = 2-only variant, or for a
/// nonzero datum with a zero-data-only variant.
EnergyOperator assemble(const DomainMesh& mesh, const KernelSpec& R, const PenaltySpec& spec, double delta,
                        double p, const BoundaryData& a, const AssemblyOptions& opts = {});

/// (1/delta^p) sum_{i != j} q_i q_j R_delta |u_i - u_j|^p, both orderings.
double interior_energy(const EnergyOperator& op, const Field& u);
/// Penalty with the assembled datum.
double penalty_energy(const EnergyOperator& op, const Field& u);
/// Penalty with datum `a` in place of the assembled one.
double penalty_energy(const EnergyOperator& op, const Field& u, const BoundaryData& a);
/// interior_energy + penalty_energy, by direct summation.
double total_energy(const EnergyOperator& op, const Field& u);
/// u'Au - 2 l'u + c0 (p = 2 only).
double quadratic_energy(const EnergyOperator& op, const Field& u);
/// Analytic gradient of total_energy.
Field energy_gradient(const EnergyOperator& op, const Field& u);
/// total_energy(v) - total_energy(u), summed term by term from the
/// differences so that small changes keep their relative accuracy.
double energy_change(const EnergyOperator& op, const Field& u, const Field& v);

struct MollifiedField {
  Field interior;
  BoundaryData boundary;
  std::vector<double> omega_interior;
  std::vector<double> omega_boundary;
};

/// u~(x) = sum_j q_j Khat_delta(|x - x_j|) u_j / omega(x) at every interior
/// and boundary node. Throws naming the node when omega vanishes there.
MollifiedField mollify(const DomainMesh& mesh, const KernelSpec& khat, double delta, const Field& u);

/// B_ij = q_i q_j W_delta(|x_i - x_j|), diagonal included.
Eigen::SparseMatrix<double> w_mass_matrix(const DomainMesh& mesh, const KernelSpec& W, double delta);

/// sum_i sum_j q_i q_j W_delta(|x_i - x_j|) u_i v_j; symmetric in (u, v) bit for bit.
double nonlocal_inner_product(const DomainMesh& mesh, const KernelSpec& W, double delta, const Field& u,
                              const Field& v);

struct ScaleRatio {
  double max_ratio = 0.0;
  std::vector<double> ratios;  // one per accepted trial
};

/// Empirical constant of the kernel rescaling bound: max over random fields of
/// sum q_i q_j R_delta |du|^p / sum q_i q_j R_{m delta} |du|^p.
ScaleRatio kernel_scale_ratio(const DomainMesh& mesh, const KernelSpec& R, double delta, double p, double m,
                              int trials, std::uint64_t seed);

/// Unscaled double sum sum_{i != j} q_i q_j R_delta(|x_i - x_j|) |u_i - u_j|^p.
double raw_interior_sum(const DomainMesh& mesh, const KernelSpec& R, double delta, double p, const Field& u);

/// r_i = sum_j q_j R_delta(|x_i - x_j|) (u_i - u_j) at each interior node.
Field convolution_defect(const DomainMesh& mesh, const KernelSpec& R, double delta, const Field& u);

/// Discrete (sum_i q_i |grad u|^p)^(1/p) with central differences on the cell
/// grid (one-sided next to missing cells).
double finite_difference_gradient_norm(const DomainMesh& mesh, const Field& u, double p);

/// (sum_i q_i |u_i|^p)^(1/p).
double discrete_lp_norm(const DomainMesh& mesh, const Field& u, double p);
/// (sum_b w_b v_b^2)^(1/2).
double discrete_boundary_l2_norm(const DomainMesh& mesh, const BoundaryData& v);

}  // namespace nldir

#endif  // NLDIR_ASSEMBLY_HPP

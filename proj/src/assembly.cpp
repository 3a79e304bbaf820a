// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "nldir/error.hpp"
#include "nldir/parallel.hpp"

namespace nldir {

namespace {

double abs_pow(double t, double p) {
  t = std::abs(t);
  if (p == 2.0) return t * t;
  if (p == 3.0) return t * t * t;
  if (p == 4.0) return (t * t) * (t * t);
  return std::pow(t, p);
}

// |t|^{p-2} t
double signed_pow(double t, double p) {
  if (p == 2.0) return t;
  if (p == 3.0) return std::abs(t) * t;
  if (p == 4.0) return t * t * t;
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), p - 1.0), t);
}

// |y + dy|^p - |y|^p without cancellation when dy is small against y.
double pow_change(double y, double dy, double p) {
  const double x = y + dy;
  const double ay = std::abs(y);
  if (x == 0.0 || (x > 0.0) != (y > 0.0) || std::abs(dy) > 0.5 * ay) return abs_pow(x, p) - abs_pow(y, p);
  const double dd = y > 0.0 ? dy : -dy;  // |x| - |y|
  if (p == 2.0) return dd * (2.0 * ay + dd);
  return abs_pow(ay, p) * std::expm1(p * std::log1p(dd / ay));
}

std::vector<Point> interior_points(const DomainMesh& mesh) {
  std::vector<Point> pts;
  pts.reserve(mesh.interior_count());
  for (const auto& n : mesh.interior()) pts.push_back(n.x);
  return pts;
}

std::vector<Point> boundary_points(const DomainMesh& mesh) {
  std::vector<Point> pts;
  pts.reserve(mesh.boundary_count());
  for (const auto& n : mesh.boundary()) pts.push_back(n.x);
  return pts;
}

void check_field(const EnergyOperator& op, const Field& u) {
  if (u.size() != op.size()) {
    throw Error("mesh", "field has " + std::to_string(u.size()) + " values but the operator has " +
                            std::to_string(op.size()) + " interior nodes");
  }
}

void check_field(const DomainMesh& mesh, const Field& u) {
  if (u.size() != mesh.interior_count()) {
    throw Error("mesh", "field has " + std::to_string(u.size()) + " values but the mesh has " +
                            std::to_string(mesh.interior_count()) + " interior nodes");
  }
}

void require_validated(const KernelSpec& k, std::size_t samples, const std::string& role) {
  const ValidationReport report = validate_kernel(k, samples);
  if (report.passed()) return;
  std::string failed;
  for (const auto& c : report.checks) {
    if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.condition + " (" + c.detail + ")";
  }
  throw Error("kernel", role + " kernel '" + k.label() + "' failed validation: " + failed, "kernel");
}

bool all_zero(const BoundaryData& a) { return a.size() == 0 || a.values().cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

Field sample_interior(const DomainMesh& mesh, const SpatialFunction& f) {
  Field u = Field::zeros(mesh.interior_count());
  for (std::size_t i = 0; i < mesh.interior_count(); ++i) u[i] = f(mesh.interior()[i].x);
  return u;
}

BoundaryData sample_boundary(const DomainMesh& mesh, const SpatialFunction& f) {
  BoundaryData a = BoundaryData::zeros(mesh.boundary_count());
  for (std::size_t b = 0; b < mesh.boundary_count(); ++b) a[b] = f(mesh.boundary()[b].x);
  return a;
}

std::string_view to_string(PenaltyVariant v) {
  switch (v) {
    case PenaltyVariant::product: return "product";
    case PenaltyVariant::pointwise: return "pointwise";
    case PenaltyVariant::dirac_diagonal: return "dirac_diagonal";
    case PenaltyVariant::wang: return "wang";
    case PenaltyVariant::shi: return "shi";
  }
  return "unknown";
}

PenaltyVariant parse_penalty_variant(std::string_view name) {
  for (auto v : {PenaltyVariant::product, PenaltyVariant::pointwise, PenaltyVariant::dirac_diagonal,
                 PenaltyVariant::wang, PenaltyVariant::shi}) {
    if (to_string(v) == name) return v;
  }
  throw Error("config",
              "unknown penalty variant '" + std::string(name) +
                  "' (known: product, pointwise, dirac_diagonal, wang, shi)",
              "penalty");
}

bool accepts_boundary_data(PenaltyVariant v) {
  return v == PenaltyVariant::product || v == PenaltyVariant::pointwise || v == PenaltyVariant::wang;
}

bool supports_general_p(PenaltyVariant v) { return v == PenaltyVariant::product || v == PenaltyVariant::pointwise; }

EnergyOperator::EnergyOperator(std::shared_ptr<const DomainMesh> mesh, std::size_t size, double delta, double p,
                               std::vector<double> quadrature, InteriorPairs pairs, PenaltyData penalty)
    : mesh_(std::move(mesh)),
      size_(size),
      delta_(delta),
      p_(p),
      quadrature_(std::move(quadrature)),
      pairs_(std::move(pairs)),
      penalty_(std::move(penalty)) {
  if (pairs_.adjacency.rows() != size_ || quadrature_.size() != size_) {
    throw Error("assembly", "operator parts disagree on the interior node count");
  }
  build_quadratic_form();
}

void EnergyOperator::build_quadratic_form() {
  const auto n = static_cast<Eigen::Index>(size_);
  diagonal_ = Eigen::VectorXd::Zero(n);
  const auto& adj = pairs_.adjacency;
  for (std::size_t i = 0; i < size_; ++i) {
    double sum = 0.0;
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) sum += pairs_.weights[e];
    diagonal_[static_cast<Eigen::Index>(i)] = 2.0 * sum;
  }
  const bool averaged = penalty_.kind == PenaltyKind::averaged;
  for (const auto& row : penalty_.rows) {
    for (std::size_t e = row.begin; e < row.end; ++e) {
      const double k = penalty_.coeffs[e];
      diagonal_[static_cast<Eigen::Index>(penalty_.cols[e])] += row.coefficient * (averaged ? k * k : k);
    }
  }

  if (!is_quadratic()) {
    sparse_ = {};
    linear_ = {};
    constant_ = 0.0;
    return;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(adj.indices.size() + size_);
  for (std::size_t i = 0; i < size_; ++i) {
    double sum = 0.0;
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
      sum += pairs_.weights[e];
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(adj.indices[e]), -2.0 * pairs_.weights[e]);
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 2.0 * sum);
  }
  linear_ = Eigen::VectorXd::Zero(n);
  constant_ = 0.0;
  for (const auto& row : penalty_.rows) {
    const double c = row.coefficient;
    const double a = row.datum;
    if (averaged) {
      for (std::size_t e = row.begin; e < row.end; ++e) {
        linear_[static_cast<Eigen::Index>(penalty_.cols[e])] += c * row.kernel_sum * a * penalty_.coeffs[e];
      }
      constant_ += c * row.kernel_sum * row.kernel_sum * a * a;
    } else {
      for (std::size_t e = row.begin; e < row.end; ++e) {
        const auto j = static_cast<int>(penalty_.cols[e]);
        triplets.emplace_back(j, j, c * penalty_.coeffs[e]);
        linear_[j] += c * penalty_.coeffs[e] * a;
      }
      constant_ += c * row.kernel_sum * a * a;
    }
  }
  sparse_.resize(n, n);
  sparse_.setFromTriplets(triplets.begin(), triplets.end());
}

const Eigen::SparseMatrix<double, Eigen::RowMajor>& EnergyOperator::sparse_part() const {
  if (!is_quadratic()) throw Error("assembly", "quadratic form is only available for p = 2");
  return sparse_;
}

const Eigen::VectorXd& EnergyOperator::linear_term() const {
  if (!is_quadratic()) throw Error("assembly", "quadratic form is only available for p = 2");
  return linear_;
}

double EnergyOperator::constant_term() const {
  if (!is_quadratic()) throw Error("assembly", "quadratic form is only available for p = 2");
  return constant_;
}

Eigen::VectorXd EnergyOperator::apply(const Eigen::VectorXd& u) const {
  if (!is_quadratic()) throw Error("assembly", "quadratic form is only available for p = 2");
  Eigen::VectorXd y = sparse_ * u;
  if (penalty_.kind == PenaltyKind::averaged) {
    for (const auto& row : penalty_.rows) {
      double dot = 0.0;
      for (std::size_t e = row.begin; e < row.end; ++e) dot += penalty_.coeffs[e] * u[static_cast<Eigen::Index>(penalty_.cols[e])];
      const double scale = row.coefficient * dot;
      for (std::size_t e = row.begin; e < row.end; ++e) {
        y[static_cast<Eigen::Index>(penalty_.cols[e])] += scale * penalty_.coeffs[e];
      }
    }
  }
  return y;
}

EnergyOperator EnergyOperator::scaled(double c) const {
  if (!(c > 0.0)) throw Error("assembly", "operator scale factor must be positive");
  InteriorPairs pairs = pairs_;
  for (double& w : pairs.weights) w *= c;
  PenaltyData penalty = penalty_;
  for (auto& row : penalty.rows) row.coefficient *= c;
  return EnergyOperator(mesh_, size_, delta_, p_, quadrature_, std::move(pairs), std::move(penalty));
}

EnergyOperator EnergyOperator::with_datum(const BoundaryData& a) const {
  if (a.size() != penalty_.rows.size()) throw Error("mesh", "boundary datum size does not match the boundary nodes");
  if (!accepts_boundary_data(penalty_.variant) && !all_zero(a)) {
    throw Error("assembly", std::string(to_string(penalty_.variant)) + " penalty is defined for zero data only", "datum");
  }
  PenaltyData penalty = penalty_;
  for (std::size_t b = 0; b < penalty.rows.size(); ++b) penalty.rows[b].datum = a[b];
  return EnergyOperator(mesh_, size_, delta_, p_, quadrature_, pairs_, std::move(penalty));
}

EnergyOperator assemble(const DomainMesh& mesh, const KernelSpec& R, const PenaltySpec& spec, double delta, double p,
                        const BoundaryData& a, const AssemblyOptions& opts) {
  if (!(p > 1.0)) throw Error("assembly", "exponent p must exceed 1", "p");
  if (!(delta > 0.0)) throw Error("assembly", "horizon delta must be positive", "delta");
  if (delta < 2.0 * mesh.h() * (1.0 - 1e-12)) {
    throw Error("assembly",
                "horizon delta = " + std::to_string(delta) + " is below 2h = " + std::to_string(2.0 * mesh.h()),
                "delta");
  }
  if (p != 2.0 && !supports_general_p(spec.variant)) {
    throw Error("assembly", std::string(to_string(spec.variant)) + " penalty is only defined for p = 2", "p");
  }
  if (a.size() != mesh.boundary_count()) throw Error("mesh", "boundary datum size does not match the boundary nodes");
  if (!accepts_boundary_data(spec.variant) && !all_zero(a)) {
    throw Error("assembly", std::string(to_string(spec.variant)) + " penalty is defined for zero data only", "datum");
  }
  require_validated(R, opts.validation_samples, "interior");
  require_validated(spec.kernel, opts.validation_samples, "penalty");

  const int d = mesh.dim();
  const auto inner = interior_points(mesh);
  const auto outer = boundary_points(mesh);
  const std::size_t n = inner.size();
  std::vector<double> quad(n);
  for (std::size_t i = 0; i < n; ++i) quad[i] = mesh.interior()[i].weight;

  // Interior pairs.
  InteriorPairs pairs;
  pairs.adjacency = neighbor_pairs(std::span<const Point>(inner), R.support_radius() * delta);
  pairs.weights.resize(pairs.adjacency.indices.size());
  const ScaledKernel r_delta{R, delta, d};
  const double inv_delta_p = 1.0 / std::pow(delta, p);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    for (std::size_t e = pairs.adjacency.offsets[i]; e < pairs.adjacency.offsets[i + 1]; ++e) {
      const std::size_t j = pairs.adjacency.indices[e];
      pairs.weights[e] = quad[i] * quad[j] * r_delta(distance(inner[i], inner[j])) * inv_delta_p;
    }
  });

  // Boundary penalty rows.
  PenaltyData penalty;
  penalty.variant = spec.variant;
  const bool uses_bar = spec.variant == PenaltyVariant::wang || spec.variant == PenaltyVariant::shi;
  penalty.kind = (spec.variant == PenaltyVariant::product || spec.variant == PenaltyVariant::wang)
                     ? PenaltyKind::averaged
                     : PenaltyKind::pointwise;
  const KernelSpec row_kernel = uses_bar ? antiderivative_kernel(spec.kernel) : spec.kernel;
  const ScaledKernel k_delta{row_kernel, delta, d};
  Adjacency support = neighbor_pairs(std::span<const Point>(outer), std::span<const Point>(inner),
                                     row_kernel.support_radius() * delta);
  penalty.cols = support.indices;
  penalty.coeffs.resize(support.indices.size());
  penalty.rows.resize(outer.size());

  std::optional<ScaledKernel> bar_bar;
  if (spec.variant == PenaltyVariant::wang) bar_bar = ScaledKernel{antiderivative_kernel(row_kernel), delta, d};

  parallel_for(outer.size(), opts.threads, [&](std::size_t b) {
    PenaltyRow& row = penalty.rows[b];
    row.begin = support.offsets[b];
    row.end = support.offsets[b + 1];
    row.datum = a[b];
    double sum = 0.0;
    for (std::size_t e = row.begin; e < row.end; ++e) {
      const std::size_t j = support.indices[e];
      penalty.coeffs[e] = quad[j] * k_delta(distance(outer[b], inner[j]));
      sum += penalty.coeffs[e];
    }
    row.kernel_sum = sum;
    const double w = mesh.boundary()[b].weight;
    switch (spec.variant) {
      case PenaltyVariant::product:
      case PenaltyVariant::pointwise:
        row.coefficient = w * inv_delta_p;
        break;
      case PenaltyVariant::dirac_diagonal:
        row.coefficient = w / (delta * delta);
        break;
      case PenaltyVariant::wang: {
        double omega = 0.0;
        for (std::size_t e = row.begin; e < row.end; ++e) {
          omega += quad[support.indices[e]] * (*bar_bar)(distance(outer[b], inner[support.indices[e]]));
        }
        if (!(omega > 0.0)) {
          throw Error("assembly", "wang weight vanishes at boundary node " + std::to_string(b));
        }
        row.coefficient = w * 2.0 / (delta * delta * omega);
        break;
      }
      case PenaltyVariant::shi: {
        const double dist = distance_to_boundary(mesh, outer[b]);
        const double mu = std::min(2.0 * delta, std::max(delta * delta, dist));
        row.coefficient = w * 4.0 / (std::pow(delta, spec.shi_delta_power) * mu);
        break;
      }
    }
  });

  return EnergyOperator(std::make_shared<const DomainMesh>(mesh), n, delta, p, std::move(quad), std::move(pairs),
                        std::move(penalty));
}

double interior_energy(const EnergyOperator& op, const Field& u) {
  check_field(op, u);
  const auto& adj = op.pairs().adjacency;
  const auto& w = op.pairs().weights;
  const double p = op.p();
  double total = 0.0;
  for (std::size_t i = 0; i < op.size(); ++i) {
    double row = 0.0;
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
      row += w[e] * abs_pow(u[i] - u[adj.indices[e]], p);
    }
    total += row;
  }
  return total;
}

double penalty_energy(const EnergyOperator& op, const Field& u, const BoundaryData& a) {
  check_field(op, u);
  const auto& pen = op.penalty();
  if (a.size() != pen.rows.size()) throw Error("mesh", "boundary datum size does not match the boundary nodes");
  if (!accepts_boundary_data(pen.variant) && !all_zero(a)) {
    throw Error("assembly", std::string(to_string(pen.variant)) + " penalty is defined for zero data only", "datum");
  }
  const double p = op.p();
  double total = 0.0;
  for (std::size_t b = 0; b < pen.rows.size(); ++b) {
    const PenaltyRow& row = pen.rows[b];
    if (pen.kind == PenaltyKind::averaged) {
      double avg = 0.0;
      for (std::size_t e = row.begin; e < row.end; ++e) avg += pen.coeffs[e] * u[pen.cols[e]];
      total += row.coefficient * abs_pow(row.kernel_sum * a[b] - avg, p);
    } else {
      double sum = 0.0;
      for (std::size_t e = row.begin; e < row.end; ++e) sum += pen.coeffs[e] * abs_pow(u[pen.cols[e]] - a[b], p);
      total += row.coefficient * sum;
    }
  }
  return total;
}

double penalty_energy(const EnergyOperator& op, const Field& u) {
  BoundaryData a = BoundaryData::zeros(op.penalty().rows.size());
  for (std::size_t b = 0; b < a.size(); ++b) a[b] = op.penalty().rows[b].datum;
  return penalty_energy(op, u, a);
}

double total_energy(const EnergyOperator& op, const Field& u) { return interior_energy(op, u) + penalty_energy(op, u); }

double quadratic_energy(const EnergyOperator& op, const Field& u) {
  check_field(op, u);
  const Eigen::VectorXd& x = u.values();
  return x.dot(op.apply(x)) - 2.0 * op.linear_term().dot(x) + op.constant_term();
}

Field energy_gradient(const EnergyOperator& op, const Field& u) {
  check_field(op, u);
  const double p = op.p();
  Field g = Field::zeros(op.size());
  const auto& adj = op.pairs().adjacency;
  const auto& w = op.pairs().weights;
  for (std::size_t i = 0; i < op.size(); ++i) {
    double row = 0.0;
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
      row += w[e] * signed_pow(u[i] - u[adj.indices[e]], p);
    }
    g[i] = 2.0 * p * row;
  }
  const auto& pen = op.penalty();
  for (const auto& row : pen.rows) {
    if (pen.kind == PenaltyKind::averaged) {
      double avg = 0.0;
      for (std::size_t e = row.begin; e < row.end; ++e) avg += pen.coeffs[e] * u[pen.cols[e]];
      const double factor = -row.coefficient * p * signed_pow(row.kernel_sum * row.datum - avg, p);
      for (std::size_t e = row.begin; e < row.end; ++e) g[pen.cols[e]] += factor * pen.coeffs[e];
    } else {
      for (std::size_t e = row.begin; e < row.end; ++e) {
        g[pen.cols[e]] += row.coefficient * p * pen.coeffs[e] * signed_pow(u[pen.cols[e]] - row.datum, p);
      }
    }
  }
  return g;
}

double energy_change(const EnergyOperator& op, const Field& u, const Field& v) {
  check_field(op, u);
  check_field(op, v);
  const double p = op.p();
  const Eigen::VectorXd s = v.values() - u.values();
  const auto& adj = op.pairs().adjacency;
  const auto& w = op.pairs().weights;
  double total = 0.0;
  for (std::size_t i = 0; i < op.size(); ++i) {
    double row = 0.0;
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
      const std::size_t j = adj.indices[e];
      row += w[e] * pow_change(u[i] - u[j], s[static_cast<Eigen::Index>(i)] - s[static_cast<Eigen::Index>(j)], p);
    }
    total += row;
  }
  const auto& pen = op.penalty();
  for (const auto& row : pen.rows) {
    if (pen.kind == PenaltyKind::averaged) {
      double avg = 0.0, step = 0.0;
      for (std::size_t e = row.begin; e < row.end; ++e) {
        avg += pen.coeffs[e] * u[pen.cols[e]];
        step += pen.coeffs[e] * s[static_cast<Eigen::Index>(pen.cols[e])];
      }
      total += row.coefficient * pow_change(row.kernel_sum * row.datum - avg, -step, p);
    } else {
      double sum = 0.0;
      for (std::size_t e = row.begin; e < row.end; ++e) {
        const std::size_t j = pen.cols[e];
        sum += pen.coeffs[e] * pow_change(u[j] - row.datum, s[static_cast<Eigen::Index>(j)], p);
      }
      total += row.coefficient * sum;
    }
  }
  return total;
}

MollifiedField mollify(const DomainMesh& mesh, const KernelSpec& khat, double delta, const Field& u) {
  check_field(mesh, u);
  const auto inner = interior_points(mesh);
  const auto outer = boundary_points(mesh);
  const ScaledKernel k{khat, delta, mesh.dim()};
  const double radius = khat.support_radius() * delta;
  const Adjacency in_adj = neighbor_pairs(std::span<const Point>(inner), radius);
  const Adjacency out_adj = neighbor_pairs(std::span<const Point>(outer), std::span<const Point>(inner), radius);

  MollifiedField out{Field::zeros(inner.size()), BoundaryData::zeros(outer.size()),
                     std::vector<double>(inner.size()), std::vector<double>(outer.size())};
  const double self = k(0.0);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double qi = mesh.interior()[i].weight;
    double omega = qi * self;
    double acc = qi * self * u[i];
    for (std::size_t j : in_adj.row(i)) {
      const double kw = mesh.interior()[j].weight * k(distance(inner[i], inner[j]));
      omega += kw;
      acc += kw * u[j];
    }
    if (!(omega > 0.0)) {
      throw Error("mollifier", "mollifier weight vanishes at interior node " + std::to_string(i) +
                                   "; the kernel support is smaller than the mesh spacing");
    }
    out.omega_interior[i] = omega;
    out.interior[i] = acc / omega;
  }
  for (std::size_t b = 0; b < outer.size(); ++b) {
    double omega = 0.0;
    double acc = 0.0;
    for (std::size_t j : out_adj.row(b)) {
      const double kw = mesh.interior()[j].weight * k(distance(outer[b], inner[j]));
      omega += kw;
      acc += kw * u[j];
    }
    if (!(omega > 0.0)) {
      throw Error("mollifier", "mollifier weight vanishes at boundary node " + std::to_string(b) +
                                   "; the kernel support is smaller than the mesh spacing");
    }
    out.omega_boundary[b] = omega;
    out.boundary[b] = acc / omega;
  }
  return out;
}

Eigen::SparseMatrix<double> w_mass_matrix(const DomainMesh& mesh, const KernelSpec& W, double delta) {
  const auto inner = interior_points(mesh);
  const ScaledKernel k{W, delta, mesh.dim()};
  const Adjacency adj = neighbor_pairs(std::span<const Point>(inner), W.support_radius() * delta);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(adj.indices.size() + inner.size());
  const double self = k(0.0);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double qi = mesh.interior()[i].weight;
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), qi * qi * self);
    for (std::size_t j : adj.row(i)) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(j),
                            qi * mesh.interior()[j].weight * k(distance(inner[i], inner[j])));
    }
  }
  const auto n = static_cast<Eigen::Index>(inner.size());
  Eigen::SparseMatrix<double> B(n, n);
  B.setFromTriplets(triplets.begin(), triplets.end());
  return B;
}

double nonlocal_inner_product(const DomainMesh& mesh, const KernelSpec& W, double delta, const Field& u,
                              const Field& v) {
  check_field(mesh, u);
  check_field(mesh, v);
  const auto inner = interior_points(mesh);
  const ScaledKernel k{W, delta, mesh.dim()};
  const Adjacency adj = neighbor_pairs(std::span<const Point>(inner), W.support_radius() * delta);
  const double self = k(0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double qi = mesh.interior()[i].weight;
    double row = qi * qi * self * (u[i] * v[i]);
    for (std::size_t j : adj.row(i)) {
      if (j <= i) continue;
      row += qi * mesh.interior()[j].weight * k(distance(inner[i], inner[j])) * (u[i] * v[j] + u[j] * v[i]);
    }
    total += row;
  }
  return total;
}

double raw_interior_sum(const DomainMesh& mesh, const KernelSpec& R, double delta, double p, const Field& u) {
  check_field(mesh, u);
  const auto inner = interior_points(mesh);
  const ScaledKernel k{R, delta, mesh.dim()};
  const Adjacency adj = neighbor_pairs(std::span<const Point>(inner), R.support_radius() * delta);
  double total = 0.0;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double qi = mesh.interior()[i].weight;
    for (std::size_t j : adj.row(i)) {
      total += qi * mesh.interior()[j].weight * k(distance(inner[i], inner[j])) * abs_pow(u[i] - u[j], p);
    }
  }
  return total;
}

ScaleRatio kernel_scale_ratio(const DomainMesh& mesh, const KernelSpec& R, double delta, double p, double m,
                              int trials, std::uint64_t seed) {
  if (!(m > 0.0)) throw Error("assembly", "kernel scale factor m must be positive", "m");
  if (trials < 1) throw Error("assembly", "kernel_scale_ratio needs at least one trial", "trials");
  const auto inner = interior_points(mesh);
  const double wide = std::max(delta, m * delta);
  const Adjacency adj = neighbor_pairs(std::span<const Point>(inner), R.support_radius() * wide);
  const ScaledKernel near{R, delta, mesh.dim()};
  const ScaledKernel far{R, m * delta, mesh.dim()};
  std::vector<double> w_near(adj.indices.size()), w_far(adj.indices.size());
  for (std::size_t i = 0; i < inner.size(); ++i) {
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
      const std::size_t j = adj.indices[e];
      const double qq = mesh.interior()[i].weight * mesh.interior()[j].weight;
      const double r = distance(inner[i], inner[j]);
      w_near[e] = qq * near(r);
      w_far[e] = qq * far(r);
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ScaleRatio result;
  int attempts = 0;
  while (static_cast<int>(result.ratios.size()) < trials) {
    if (++attempts > 100 * trials) throw Error("assembly", "kernel_scale_ratio kept drawing zero-energy fields");
    std::vector<double> u(inner.size());
    for (double& x : u) x = normal(rng);
    double top = 0.0, bottom = 0.0;
    for (std::size_t i = 0; i < inner.size(); ++i) {
      for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
        const double diff = abs_pow(u[i] - u[adj.indices[e]], p);
        top += w_near[e] * diff;
        bottom += w_far[e] * diff;
      }
    }
    if (bottom == 0.0) continue;
    result.ratios.push_back(top / bottom);
    result.max_ratio = std::max(result.max_ratio, top / bottom);
  }
  return result;
}

Field convolution_defect(const DomainMesh& mesh, const KernelSpec& R, double delta, const Field& u) {
  check_field(mesh, u);
  const auto inner = interior_points(mesh);
  const ScaledKernel k{R, delta, mesh.dim()};
  const Adjacency adj = neighbor_pairs(std::span<const Point>(inner), R.support_radius() * delta);
  Field r = Field::zeros(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j : adj.row(i)) acc += mesh.interior()[j].weight * k(distance(inner[i], inner[j])) * (u[i] - u[j]);
    r[i] = acc;
  }
  return r;
}

double finite_difference_gradient_norm(const DomainMesh& mesh, const Field& u, double p) {
  check_field(mesh, u);
  double total = 0.0;
  for (std::size_t n = 0; n < mesh.interior_count(); ++n) {
    const auto& node = mesh.interior()[n];
    double sq = 0.0;
    for (int axis = 0; axis < mesh.dim(); ++axis) {
      auto step = node.cell;
      step[axis] += 1;
      const std::int64_t plus = mesh.node_at(step[0], step[1]);
      step[axis] -= 2;
      const std::int64_t minus = mesh.node_at(step[0], step[1]);
      const double h = mesh.spacing()[static_cast<std::size_t>(axis)];
      double g = 0.0;
      if (plus >= 0 && minus >= 0) {
        g = (u[static_cast<std::size_t>(plus)] - u[static_cast<std::size_t>(minus)]) / (2.0 * h);
      } else if (plus >= 0) {
        g = (u[static_cast<std::size_t>(plus)] - u[n]) / h;
      } else if (minus >= 0) {
        g = (u[n] - u[static_cast<std::size_t>(minus)]) / h;
      }
      sq += g * g;
    }
    total += node.weight * std::pow(sq, 0.5 * p);
  }
  return std::pow(total, 1.0 / p);
}

double discrete_lp_norm(const DomainMesh& mesh, const Field& u, double p) {
  check_field(mesh, u);
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.interior_count(); ++i) total += mesh.interior()[i].weight * abs_pow(u[i], p);
  return std::pow(total, 1.0 / p);
}

double discrete_boundary_l2_norm(const DomainMesh& mesh, const BoundaryData& v) {
  if (v.size() != mesh.boundary_count()) throw Error("mesh", "boundary values do not match the boundary nodes");
  double total = 0.0;
  for (std::size_t b = 0; b < mesh.boundary_count(); ++b) total += mesh.boundary()[b].weight * v[b] * v[b];
  return std::sqrt(total);
}

}  // namespace nldir

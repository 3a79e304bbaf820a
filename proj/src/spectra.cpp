// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "nldir/error.hpp"

namespace nldir {

std::string_view to_string(MassModel m) { return m == MassModel::L2 ? "L2" : "nonlocalW"; }

MassModel parse_mass_model(std::string_view name) {
  if (name == "L2") return MassModel::L2;
  if (name == "nonlocalW") return MassModel::nonlocal_w;
  throw Error("config", "unknown mass model '" + std::string(name) + "' (known: L2, nonlocalW)", "mass_model");
}

Eigen::SparseMatrix<double> l2_mass_matrix(const DomainMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.interior_count());
  Eigen::SparseMatrix<double> B(n, n);
  B.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) B.insert(i, i) = mesh.interior()[static_cast<std::size_t>(i)].weight;
  B.makeCompressed();
  return B;
}

void certify_mass(const Eigen::SparseMatrix<double>& B) {
  if (B.rows() != B.cols()) throw Error("spectra", "mass matrix is not square");
  const Eigen::SparseMatrix<double> Bt = B.transpose();
  const double asym = (B - Bt).cwiseAbs().sum();
  double inf_norm = 0.0;
  for (Eigen::Index c = 0; c < B.outerSize(); ++c) {
    double col = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(B, c); it; ++it) col += std::abs(it.value());
    inf_norm = std::max(inf_norm, col);  // column sums; equal to row sums for symmetric B
  }
  if (asym > 1e-12 * inf_norm * static_cast<double>(B.rows())) {
    throw Error("spectra", "mass matrix is not symmetric");
  }
  Eigen::SparseMatrix<double> shifted = B;
  for (Eigen::Index i = 0; i < B.rows(); ++i) shifted.coeffRef(i, i) -= 1e-8 * inf_norm;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw Error("spectra",
                "mass form is not positive definite: Cholesky of B - 1e-8 ||B|| I failed; "
                "use a positive definite W kernel (e.g. wendland) for the normalized model",
                "W");
  }
}

namespace {

void check_stiffness(const EnergyOperator& A) {
  if (!A.is_quadratic()) throw Error("spectra", "eigen problems need a p = 2 stiffness", "p");
  if (A.linear_term().cwiseAbs().maxCoeff() != 0.0 || A.constant_term() != 0.0) {
    throw Error("spectra", "eigen problems need a zero boundary datum (l = 0, c0 = 0)", "datum");
  }
}

}  // namespace

EigenProblem make_eigen_problem(const EnergyOperator& stiffness, MassModel mass, int k,
                                Eigen::SparseMatrix<double> mass_matrix) {
  if (k < 1) throw Error("spectra", "number of modes k must be at least 1", "k");
  if (static_cast<std::size_t>(k) > stiffness.size()) throw Error("spectra", "k exceeds the number of nodes", "k");
  check_stiffness(stiffness);
  if (mass_matrix.rows() != static_cast<Eigen::Index>(stiffness.size())) {
    throw Error("spectra", "mass matrix size does not match the stiffness");
  }
  certify_mass(mass_matrix);
  return EigenProblem{stiffness, mass, std::move(mass_matrix), k};
}

EigenProblem make_eigen_problem(const EnergyOperator& stiffness, MassModel mass, int k, const KernelSpec* W) {
  if (stiffness.mesh() == nullptr) throw Error("spectra", "stiffness carries no mesh");
  const DomainMesh& mesh = *stiffness.mesh();
  if (mass == MassModel::L2) return make_eigen_problem(stiffness, mass, k, l2_mass_matrix(mesh));
  if (W == nullptr) throw Error("spectra", "the nonlocalW mass model needs a W kernel", "W");
  const KernelSpec normalized = normalize_W(*W, mesh.dim()).kernel;
  return make_eigen_problem(stiffness, mass, k, w_mass_matrix(mesh, normalized, stiffness.delta()));
}

namespace {

struct Deflation {
  const Eigen::SparseMatrix<double>& B;
  std::vector<Eigen::VectorXd> modes;
  std::vector<Eigen::VectorXd> b_modes;

  void project(Eigen::VectorXd& v) const {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < modes.size(); ++i) v -= b_modes[i].dot(v) * modes[i];
    }
  }
};

}  // namespace

EigenResult solve_eigen(const EigenProblem& prob, const EigenOptions& opts) {
  if (!(opts.tol > 0.0 && opts.tol < 1.0)) throw Error("config", "eigen tol must lie in (0, 1)", "tol");
  if (opts.max_iter < 1) throw Error("config", "eigen max_iter must be at least 1", "max_iter");
  const EnergyOperator& A = prob.stiffness;
  const auto& B = prob.mass_matrix;
  const auto n = static_cast<Eigen::Index>(A.size());
  Eigen::VectorXd minv = A.diagonal();
  for (Eigen::Index i = 0; i < n; ++i) minv[i] = minv[i] > 0.0 ? 1.0 / minv[i] : 1.0;

  EigenResult result;
  result.mass = prob.mass;
  result.converged = true;
  Deflation defl{B, {}, {}};
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int mode = 0; mode < prob.k; ++mode) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
    defl.project(x);
    x /= std::sqrt(x.dot(B * x));
    Eigen::VectorXd ax = A.apply(x);
    Eigen::VectorXd bx = B * x;
    double lambda = x.dot(ax);
    Eigen::VectorXd p, ap, bp;
    double rel = 0.0;
    bool done = false;
    int it = 0;
    for (; it <= opts.max_iter; ++it) {
      const Eigen::VectorXd r = ax - lambda * bx;
      rel = r.norm() / (std::max(std::abs(lambda), 1e-300) * bx.norm());
      if (rel <= opts.tol) {
        done = true;
        break;
      }
      if (it == opts.max_iter) break;

      // B-orthonormal basis [x, w, p]; columns that collapse are dropped.
      std::vector<Eigen::VectorXd> S{x}, AS{ax}, BS{bx};
      const auto add = [&](Eigen::VectorXd v) {
        defl.project(v);
        const double before = std::sqrt(std::max(0.0, v.dot(B * v)));
        if (!(before > 0.0)) return;
        for (int pass = 0; pass < 2; ++pass) {
          for (std::size_t c = 0; c < S.size(); ++c) v -= BS[c].dot(v) * S[c];
        }
        Eigen::VectorXd bv = B * v;
        const double norm = std::sqrt(std::max(0.0, v.dot(bv)));
        if (!(norm > 1e-10 * before)) return;
        v /= norm;
        bv /= norm;
        AS.push_back(A.apply(v));
        BS.push_back(std::move(bv));
        S.push_back(std::move(v));
      };
      add(minv.cwiseProduct(r));
      if (p.size() == n) add(p);

      const auto m = static_cast<Eigen::Index>(S.size());
      Eigen::MatrixXd H(m, m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a; b < m; ++b) {
          H(a, b) = H(b, a) = 0.5 * (S[static_cast<std::size_t>(a)].dot(AS[static_cast<std::size_t>(b)]) +
                                     S[static_cast<std::size_t>(b)].dot(AS[static_cast<std::size_t>(a)]));
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(H);
      const Eigen::VectorXd c = small.eigenvectors().col(0);

      Eigen::VectorXd nx = c[0] * S[0], nax = c[0] * AS[0], nbx = c[0] * BS[0];
      p = Eigen::VectorXd::Zero(n);
      ap = Eigen::VectorXd::Zero(n);
      bp = Eigen::VectorXd::Zero(n);
      for (Eigen::Index a = 1; a < m; ++a) {
        const auto s = static_cast<std::size_t>(a);
        p += c[a] * S[s];
        ap += c[a] * AS[s];
        bp += c[a] * BS[s];
      }
      x = nx + p;
      ax = nax + ap;
      bx = nbx + bp;
      const double norm = std::sqrt(x.dot(bx));
      x /= norm;
      ax /= norm;
      bx /= norm;
      lambda = x.dot(ax);
    }

    // Final clean-up: exact deflation, unit mass, sign convention.
    defl.project(x);
    bx = B * x;
    const double norm = std::sqrt(x.dot(bx));
    x /= norm;
    bx /= norm;
    Eigen::Index imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    if (x[imax] < 0.0) {
      x = -x;
      bx = -bx;
    }
    ax = A.apply(x);
    lambda = x.dot(ax);
    rel = (ax - lambda * bx).norm() / (std::max(std::abs(lambda), 1e-300) * bx.norm());

    result.eigenvalues.push_back(lambda);
    result.residuals.push_back(rel);
    result.iterations.push_back(it);
    result.converged = result.converged && done;
    result.eigenfields.emplace_back(x);
    defl.modes.push_back(x);
    defl.b_modes.push_back(bx);
  }

  // Deflation normally returns ascending values; restore the order if a
  // near-degenerate pair came out swapped.
  std::vector<std::size_t> order(result.eigenvalues.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return result.eigenvalues[a] < result.eigenvalues[b]; });
  EigenResult sorted = result;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.eigenvalues[i] = result.eigenvalues[order[i]];
    sorted.eigenfields[i] = result.eigenfields[order[i]];
    sorted.residuals[i] = result.residuals[order[i]];
    sorted.iterations[i] = result.iterations[order[i]];
  }
  return sorted;
}

MassComparison compare_mass_models(const DomainMesh& mesh, const EnergyOperator& stiffness,
                                   const Eigen::SparseMatrix<double>& w_mass, int k, const EigenOptions& opts) {
  MassComparison out;
  out.l2 = solve_eigen(make_eigen_problem(stiffness, MassModel::L2, k, l2_mass_matrix(mesh)), opts);
  out.w = solve_eigen(make_eigen_problem(stiffness, MassModel::nonlocal_w, k, w_mass), opts);
  for (int i = 0; i < k; ++i) {
    const double a = out.l2.eigenvalues[static_cast<std::size_t>(i)];
    const double b = out.w.eigenvalues[static_cast<std::size_t>(i)];
    out.relative_gap.push_back(std::abs(a - b) / std::abs(a));
  }
  return out;
}

MassComparison compare_mass_models(const DomainMesh& mesh, const EnergyOperator& stiffness, const KernelSpec& W,
                                   int k, const EigenOptions& opts) {
  const KernelSpec normalized = normalize_W(W, mesh.dim()).kernel;
  return compare_mass_models(mesh, stiffness, w_mass_matrix(mesh, normalized, stiffness.delta()), k, opts);
}

}  // namespace nldir

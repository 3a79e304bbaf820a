// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_SPECTRA_HPP
#define NLDIR_SPECTRA_HPP

#include <Eigen/SparseCore>
#include <cstdint>
#include <string_view>
#include <vector>

#include "nldir/assembly.hpp"

namespace nldir {

enum class MassModel { L2, nonlocal_w };

std::string_view to_string(MassModel m);
/// Accepts "L2" and "nonlocalW".
MassModel parse_mass_model(std::string_view name);

/// min u'Au subject to u'Bu = 1 and B-orthogonality to earlier modes, where
/// u'Au is the zero-datum p = 2 energy and B the chosen mass form.
struct EigenProblem {
  EnergyOperator stiffness;
  MassModel mass;
  Eigen::SparseMatrix<double> mass_matrix;
  int k;
};

/// diag(q_i).
Eigen::SparseMatrix<double> l2_mass_matrix(const DomainMesh& mesh);

/// Throws Error("spectra") unless B is symmetric positive definite, certified
/// by a sparse Cholesky factorization of B - tau I with tau = 1e-8 ||B||_inf.
void certify_mass(const Eigen::SparseMatrix<double>& B);

/// Checks that the stiffness is p = 2 with zero affine part and certifies the
/// mass. For nonlocal_w the kernel W is normalized to unit mass first.
EigenProblem make_eigen_problem(const EnergyOperator& stiffness, MassModel mass, int k,
                                const KernelSpec* W = nullptr);
/// Same with a caller-supplied mass matrix.
EigenProblem make_eigen_problem(const EnergyOperator& stiffness, MassModel mass, int k,
                                Eigen::SparseMatrix<double> mass_matrix);

struct EigenOptions {
  double tol = 1e-9;  // relative residual ||Au - lambda Bu|| / (|lambda| ||Bu||)
  int max_iter = 20000;  // per mode
  std::uint64_t seed = 0;
};

struct EigenResult {
  MassModel mass = MassModel::L2;
  std::vector<double> eigenvalues;  // ascending
  std::vector<Field> eigenfields;   // B-orthonormal, largest entry positive
  std::vector<double> residuals;    // relative residual per mode
  std::vector<int> iterations;
  bool converged = false;
};

/// Preconditioned Rayleigh-Ritz iteration on span{x, M^-1 r, previous step}
/// per mode, with every iterate B-orthogonalized against the modes already
/// found. A mode that does not converge is kept and flagged.
EigenResult solve_eigen(const EigenProblem& prob, const EigenOptions& opts = {});

struct MassComparison {
  EigenResult l2;
  EigenResult w;
  std::vector<double> relative_gap;  // |lambda_i^L2 - lambda_i^W| / lambda_i^L2
};

MassComparison compare_mass_models(const DomainMesh& mesh, const EnergyOperator& stiffness, const KernelSpec& W,
                                   int k, const EigenOptions& opts = {});
/// With an explicit W-mass matrix in place of the kernel form.
MassComparison compare_mass_models(const DomainMesh& mesh, const EnergyOperator& stiffness,
                                   const Eigen::SparseMatrix<double>& w_mass, int k, const EigenOptions& opts = {});

}  // namespace nldir

#endif  // NLDIR_SPECTRA_HPP

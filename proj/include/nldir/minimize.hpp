// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_MINIMIZE_HPP
#define NLDIR_MINIMIZE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nldir/assembly.hpp"

namespace nldir {

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 20000;
  std::uint64_t seed = 0;
  double armijo = 1e-4;     // sufficient-decrease constant
  double backtrack = 0.5;   // step reduction factor
};

/// Throws Error("config") unless tol in (0, 1), max_iter >= 1, armijo in
/// (0, 1/2) and backtrack in (0, 1).
void validate_options(const SolveOptions& opts);

struct SolveResult {
  Field minimizer;
  double energy = 0.0;
  double gradient_norm = 0.0;  // Euclidean norm of the nodal gradient
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::vector<double> energy_history;  // energy of every accepted iterate, start included
  double max_iterate_norm = 0.0;       // sup over iterates of (sum q_i |u_i|^p)^(1/p)
};

/// Preconditioned conjugate gradients on A u = l from u = 0 (p = 2 only).
/// Stops once ||l - Au|| <= tol ||l|| and the gradient norm is at most
/// tol (1 + |F|). Throws Error("minimize") on a direction of nonpositive
/// curvature.
SolveResult solve_quadratic(const EnergyOperator& op, const SolveOptions& opts = {});

/// Minimizes the energy for any p > 1 from u = 0 with Polak-Ribiere
/// conjugate directions, preconditioned by the p = 2 diagonal, and a line
/// search that ends with Armijo backtracking. Energies never increase.
SolveResult solve_p_energy(const EnergyOperator& op, const SolveOptions& opts = {});

/// solve_quadratic for p = 2, solve_p_energy otherwise.
SolveResult minimize(const EnergyOperator& op, const SolveOptions& opts = {});

}  // namespace nldir

#endif  // NLDIR_MINIMIZE_HPP

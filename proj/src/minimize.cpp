// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nldir/error.hpp"

namespace nldir {

namespace {

double lp_norm(const EnergyOperator& op, const Eigen::VectorXd& u) {
  const auto q = op.quadrature();
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) total += q[static_cast<std::size_t>(i)] * std::pow(std::abs(u[i]), op.p());
  return std::pow(total, 1.0 / op.p());
}

Eigen::VectorXd inverse_diagonal(const EnergyOperator& op) {
  Eigen::VectorXd m = op.diagonal();
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = m[i] > 0.0 ? 1.0 / m[i] : 1.0;
  return m;
}

bool stationary(double gnorm, double energy, double tol) { return gnorm <= tol * (1.0 + std::abs(energy)); }

}  // namespace

void validate_options(const SolveOptions& opts) {
  if (!(opts.tol > 0.0 && opts.tol < 1.0)) throw Error("config", "solver tol must lie in (0, 1)", "tol");
  if (opts.max_iter < 1) throw Error("config", "solver max_iter must be at least 1", "max_iter");
  if (!(opts.armijo > 0.0 && opts.armijo < 0.5)) throw Error("config", "armijo constant must lie in (0, 0.5)", "armijo");
  if (!(opts.backtrack > 0.0 && opts.backtrack < 1.0)) {
    throw Error("config", "backtrack factor must lie in (0, 1)", "backtrack");
  }
}

SolveResult solve_quadratic(const EnergyOperator& op, const SolveOptions& opts) {
  validate_options(opts);
  if (!op.is_quadratic()) throw Error("minimize", "solve_quadratic needs an operator with p = 2", "p");
  const auto n = static_cast<Eigen::Index>(op.size());
  const Eigen::VectorXd& l = op.linear_term();
  const double c0 = op.constant_term();
  const Eigen::VectorXd minv = inverse_diagonal(op);
  const double lnorm = l.norm();

  SolveResult result;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  result.energy_history.push_back(c0);
  if (lnorm == 0.0) {
    result.minimizer = Field(u);
    result.energy = c0;
    result.converged = true;
    result.status = "zero right-hand side";
    return result;
  }

  const double curvature_floor = 1e-14 * op.diagonal().cwiseAbs().maxCoeff();
  Eigen::VectorXd r = l;
  Eigen::VectorXd z = minv.cwiseProduct(r);
  Eigen::VectorXd d = z;
  double rz = r.dot(z);
  int it = 0;
  int refreshes = 0;
  while (true) {
    const double energy = c0 - l.dot(u) - r.dot(u);
    const double gnorm = 2.0 * r.norm();
    if (r.norm() <= opts.tol * lnorm && stationary(gnorm, energy, opts.tol)) {
      // Confirm on the true residual; the recursive one drifts.
      Eigen::VectorXd true_r = l - op.apply(u);
      const double true_energy = total_energy(op, Field(u));
      if (true_r.norm() <= opts.tol * lnorm && stationary(2.0 * true_r.norm(), true_energy, opts.tol)) {
        result.converged = true;
        result.status = "converged";
        break;
      }
      if (++refreshes > 5) {
        result.status = "residual stagnated at the floating-point floor";
        break;
      }
      r = true_r;
      z = minv.cwiseProduct(r);
      d = z;
      rz = r.dot(z);
    }
    if (it >= opts.max_iter) {
      result.status = "iteration budget exhausted";
      break;
    }
    const Eigen::VectorXd ad = op.apply(d);
    const double dad = d.dot(ad);
    if (!(dad > curvature_floor * d.squaredNorm())) {
      throw Error("minimize", "nonpositive curvature d'Ad = " + std::to_string(dad) +
                                  " along the conjugate direction of iteration " + std::to_string(it) +
                                  "; the quadratic form is not positive definite");
    }
    const double alpha = rz / dad;
    u += alpha * d;
    r -= alpha * ad;
    z = minv.cwiseProduct(r);
    const double rz_next = r.dot(z);
    d = z + (rz_next / rz) * d;
    rz = rz_next;
    ++it;
    result.energy_history.push_back(c0 - l.dot(u) - r.dot(u));
    result.max_iterate_norm = std::max(result.max_iterate_norm, lp_norm(op, u));
  }
  result.minimizer = Field(u);
  result.energy = total_energy(op, result.minimizer);
  result.gradient_norm = 2.0 * (op.apply(u) - l).norm();
  result.iterations = it;
  return result;
}

SolveResult solve_p_energy(const EnergyOperator& op, const SolveOptions& opts) {
  validate_options(opts);
  const auto n = static_cast<Eigen::Index>(op.size());
  const Eigen::VectorXd minv = inverse_diagonal(op);

  SolveResult result;
  Field u = Field::zeros(op.size());
  double energy = total_energy(op, u);
  Eigen::VectorXd g = energy_gradient(op, u).values();
  result.energy_history.push_back(energy);

  const auto slope_at = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& dir) {
    return energy_gradient(op, Field(x)).values().dot(dir);
  };

  Eigen::VectorXd z = minv.cwiseProduct(g);
  Eigen::VectorXd d = -z;
  double step_guess = 1.0;
  int it = 0;
  while (true) {
    if (stationary(g.norm(), energy, opts.tol)) {
      result.converged = true;
      result.status = "converged";
      break;
    }
    if (it >= opts.max_iter) {
      result.status = "iteration budget exhausted";
      break;
    }
    double s0 = g.dot(d);
    if (!(s0 < 0.0)) {
      d = -z;
      s0 = g.dot(d);
    }

    // Bracket the root of the directional derivative, which is increasing
    // because the energy is convex, then refine it by regula falsi.
    double lo = 0.0, slo = s0;
    double hi = step_guess;
    double shi = slope_at(u.values() + hi * d, d);
    for (int k = 0; k < 60 && shi < 0.0; ++k) {
      lo = hi;
      slo = shi;
      hi *= 2.0;
      shi = slope_at(u.values() + hi * d, d);
    }
    double t = hi;
    if (shi >= 0.0) {
      int side = 0;
      for (int k = 0; k < 30; ++k) {
        t = (slo == shi) ? 0.5 * (lo + hi) : lo - slo * (hi - lo) / (shi - slo);
        if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
        const double st = slope_at(u.values() + t * d, d);
        if (std::abs(st) <= 0.1 * std::abs(s0)) break;
        if (st < 0.0) {
          lo = t;
          slo = st;
          if (side == -1) shi *= 0.5;  // Illinois modification
          side = -1;
        } else {
          hi = t;
          shi = st;
          if (side == 1) slo *= 0.5;
          side = 1;
        }
      }
    }

    // Sufficient decrease, measured on the energy change itself so that it
    // stays resolvable once the change drops below the rounding of F.
    Field trial(u.values() + t * d);
    double change = energy_change(op, u, trial);
    while (!(change <= opts.armijo * t * s0)) {
      t *= opts.backtrack;
      if (t < 1e-30) break;
      trial = Field(u.values() + t * d);
      change = energy_change(op, u, trial);
    }
    if (!(change <= opts.armijo * t * s0) || !(change <= 0.0)) {
      result.status = "line search failed to reduce the energy";
      break;
    }

    u = std::move(trial);
    energy += change;
    const Eigen::VectorXd g_next = energy_gradient(op, u).values();
    const Eigen::VectorXd z_next = minv.cwiseProduct(g_next);
    const double beta = std::max(0.0, g_next.dot(z_next - z) / g.dot(z));
    d = -z_next + beta * d;
    g = g_next;
    z = z_next;
    step_guess = std::max(t, 1e-12);
    ++it;
    if (n > 0 && it % static_cast<int>(std::min<Eigen::Index>(n, 1000000)) == 0) d = -z;
    result.energy_history.push_back(energy);
    result.max_iterate_norm = std::max(result.max_iterate_norm, lp_norm(op, u.values()));
  }
  result.minimizer = u;
  result.energy = total_energy(op, u);
  result.gradient_norm = g.norm();
  result.iterations = it;
  return result;
}

SolveResult minimize(const EnergyOperator& op, const SolveOptions& opts) {
  return op.is_quadratic() ? solve_quadratic(op, opts) : solve_p_energy(op, opts);
}

}  // namespace nldir

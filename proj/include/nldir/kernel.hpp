// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_KERNEL_HPP
#define NLDIR_KERNEL_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nldir {

/// Radial kernel profile s -> profile(s), where s is the squared (unscaled)
/// radius. The profile is zero for s > r^2, r being the stored support radius.
///
/// A KernelSpec may carry a closed-form antiderivative s -> int_s^inf profile,
/// which in turn may carry its own; antiderivative_kernel() uses it when
/// present and falls back to tabulation otherwise.
class KernelSpec {
 public:
  using Profile = std::function<double(double)>;

  KernelSpec(std::string label, Profile profile, double support_radius);

  /// Profile value; exactly zero for s > r^2.
  double operator()(double s) const;

  double support_radius() const noexcept { return radius_; }
  const std::string& label() const noexcept { return label_; }

  /// c * profile, keeping the support and scaling any registered antiderivative.
  KernelSpec scaled(double factor) const;

  KernelSpec with_antiderivative(KernelSpec antiderivative) const;
  const KernelSpec* closed_form_antiderivative() const noexcept { return antiderivative_.get(); }

 private:
  std::string label_;
  Profile profile_;
  double radius_;
  std::shared_ptr<const KernelSpec> antiderivative_;
};

/// K_delta(rho) = delta^{-d} K(rho^2 / delta^2).
struct ScaledKernel {
  KernelSpec base;
  double delta;
  int dim;

  double operator()(double rho) const;
  /// Radius beyond which the scaled kernel vanishes: r * delta.
  double support_radius() const noexcept { return base.support_radius() * delta; }
};

double eval_scaled(const ScaledKernel& k, double rho);

struct QuadratureOptions {
  double rel_tol = 1e-8;
  std::size_t max_points = 10'000'000;
  std::size_t initial_cells = 16;  // per axis, must be even
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t points = 0;  // total integrand evaluations
};

/// int_{R^d} profile(|z|^2) |z_axis|^p dz by Richardson-refined composite
/// midpoint on the tensor grid covering the support ball. p = 0 gives the
/// kernel mass. Throws QuadratureError when the point budget runs out.
QuadratureResult kernel_moment(const KernelSpec& k, double p, int dim, int axis = 0,
                               const QuadratureOptions& opts = {});

/// sigma_R = int_{R^d} R(|z|^2) |z . e_1|^p dz.
QuadratureResult sigma_R(const KernelSpec& k, double p, int dim, const QuadratureOptions& opts = {});

/// int_{R^d} profile(|z|^2) dz.
QuadratureResult kernel_mass(const KernelSpec& k, int dim, const QuadratureOptions& opts = {});

/// s -> int_s^inf profile(r) dr with the same support bound. Closed form when
/// registered, otherwise tabulated on `table_size` intervals and linearly
/// interpolated.
KernelSpec antiderivative_kernel(const KernelSpec& k, std::size_t table_size = 8192);

struct ConditionCheck {
  std::string condition;  // "nonnegative", "K1", "K2", "K3"
  bool passed = true;
  std::optional<double> first_violation;  // s at the first failing sample
  std::string detail;
};

struct ValidationReport {
  std::string label;
  std::vector<ConditionCheck> checks;
  std::size_t derivative_kinks = 0;  // informational: piecewise-C1 points found

  bool passed() const;
  const ConditionCheck* find(std::string_view condition) const;
};

/// Sampled checks of nonnegativity and (K1)-(K3). Failures are report entries.
ValidationReport validate_kernel(const KernelSpec& k, std::size_t samples, double tol = 1e-9);

struct NormalizedKernel {
  KernelSpec kernel;
  double scale;  // factor the input profile was multiplied by
};

/// Rescales the profile to unit mass in R^d. Throws on a zero-mass profile.
NormalizedKernel normalize_W(const KernelSpec& k, int dim, const QuadratureOptions& opts = {});

// Catalog. Ids: "quartic" (1-s)^2, "cubic" (1-s)^3, "bump" (1+cos(pi s))/2,
// "wendland" (1-sqrt s)^4 (4 sqrt s + 1), "corollary:<c1>:<c2>",
// "tabulated:<path>". All built-ins except "wendland" carry closed-form
// antiderivatives two levels deep.
KernelSpec quartic_kernel();
KernelSpec cubic_kernel();
KernelSpec bump_kernel();
KernelSpec wendland_kernel();
/// Lower-bound kernel (c1/c2^2)(s-c2)^2 on [0, c2], zero beyond.
KernelSpec corollary_kernel(double c1, double c2);
/// Linear interpolation of (s, value) samples, s strictly increasing from 0.
/// Support radius is sqrt(s_last).
KernelSpec tabulated_kernel(std::vector<double> s, std::vector<double> values, std::string label);
KernelSpec load_tabulated_kernel(const std::string& path);

KernelSpec make_kernel(std::string_view id);
std::vector<std::string> kernel_catalog();

}  // namespace nldir

#endif  // NLDIR_KERNEL_HPP

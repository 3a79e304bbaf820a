// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>

#include "nldir/error.hpp"

namespace nldir {

KernelSpec::KernelSpec(std::string label, Profile profile, double support_radius)
    : label_(std::move(label)), profile_(std::move(profile)), radius_(support_radius) {
  if (!profile_) throw Error("kernel", "kernel '" + label_ + "' has no profile");
  if (!(support_radius > 0.0) || !std::isfinite(support_radius)) {
    throw Error("kernel", "kernel '" + label_ + "' needs a positive finite support radius");
  }
}

double KernelSpec::operator()(double s) const {
  if (s > radius_ * radius_) return 0.0;
  return profile_(s);
}

KernelSpec KernelSpec::scaled(double factor) const {
  auto base = profile_;
  KernelSpec out(label_, [base, factor](double s) { return factor * base(s); }, radius_);
  if (antiderivative_) out.antiderivative_ = std::make_shared<const KernelSpec>(antiderivative_->scaled(factor));
  return out;
}

KernelSpec KernelSpec::with_antiderivative(KernelSpec antiderivative) const {
  KernelSpec out = *this;
  out.antiderivative_ = std::make_shared<const KernelSpec>(std::move(antiderivative));
  return out;
}

double ScaledKernel::operator()(double rho) const {
  const double t = rho / delta;
  return base(t * t) / std::pow(delta, dim);
}

double eval_scaled(const ScaledKernel& k, double rho) { return k(rho); }

namespace {

// Midpoint sum over the positive orthant [0, r]^d with n cells per axis,
// multiplied by 2^d; the integrand is even in every coordinate.
double orthant_midpoint(const KernelSpec& k, double p, int dim, int axis, std::size_t n) {
  const double r = k.support_radius();
  const double cell = r / static_cast<double>(n);
  const auto moment = [p](double z) { return p == 0.0 ? 1.0 : std::pow(std::abs(z), p); };
  double sum = 0.0;
  if (dim == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (static_cast<double>(i) + 0.5) * cell;
      sum += k(z * z) * moment(z);
    }
    return 2.0 * sum * cell;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * cell;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = (static_cast<double>(j) + 0.5) * cell;
      const double s = x * x + y * y;
      if (s > r * r) break;
      row += k(s) * moment(axis == 0 ? x : y);
    }
    sum += row;
  }
  return 4.0 * sum * cell * cell;
}

}  // namespace

QuadratureResult kernel_moment(const KernelSpec& k, double p, int dim, int axis,
                               const QuadratureOptions& opts) {
  if (dim != 1 && dim != 2) throw Error("kernel", "moment quadrature supports d = 1 or 2");
  if (axis < 0 || axis >= dim) throw Error("kernel", "moment axis out of range");
  if (p < 0.0) throw Error("kernel", "moment exponent must be nonnegative");

  // Cells per axis on the full box [-r, r]^d; the orthant sum uses n/2.
  std::size_t n = std::max<std::size_t>(2, opts.initial_cells + opts.initial_cells % 2);
  const auto cost = [dim](std::size_t cells) {
    return dim == 1 ? cells : cells * cells;
  };
  std::size_t points = cost(n);
  double coarse = orthant_midpoint(k, p, dim, axis, n / 2);
  std::optional<double> previous;
  std::optional<double> older;
  while (true) {
    const std::size_t fine_n = 2 * n;
    if (points + cost(fine_n) > opts.max_points) {
      throw QuadratureError("kernel moment quadrature for '" + k.label() +
                                "' did not reach tolerance within the point budget",
                            older.value_or(coarse), previous.value_or(coarse));
    }
    points += cost(fine_n);
    const double fine = orthant_midpoint(k, p, dim, axis, fine_n / 2);
    const double extrapolated = (4.0 * fine - coarse) / 3.0;
    if (previous) {
      const double diff = std::abs(extrapolated - *previous);
      if (diff <= opts.rel_tol * std::abs(extrapolated)) {
        return {extrapolated, diff, points};
      }
    }
    older = previous;
    previous = extrapolated;
    coarse = fine;
    n = fine_n;
  }
}

QuadratureResult sigma_R(const KernelSpec& k, double p, int dim, const QuadratureOptions& opts) {
  if (!(p > 1.0)) throw Error("kernel", "sigma_R needs p > 1", "p");
  return kernel_moment(k, p, dim, 0, opts);
}

QuadratureResult kernel_mass(const KernelSpec& k, int dim, const QuadratureOptions& opts) {
  return kernel_moment(k, 0.0, dim, 0, opts);
}

KernelSpec antiderivative_kernel(const KernelSpec& k, std::size_t table_size) {
  if (const KernelSpec* closed = k.closed_form_antiderivative()) return *closed;

  // Three-point Gauss-Legendre per table interval, accumulated from the right.
  const double top = k.support_radius() * k.support_radius();
  const std::size_t n = std::max<std::size_t>(table_size, 16);
  const double ds = top / static_cast<double>(n);
  auto table = std::make_shared<std::vector<double>>(n + 1, 0.0);
  const double g = std::sqrt(0.6);
  for (std::size_t i = n; i-- > 0;) {
    const double mid = (static_cast<double>(i) + 0.5) * ds;
    const double half = 0.5 * ds;
    const double piece =
        half * (5.0 * k(mid - g * half) + 8.0 * k(mid) + 5.0 * k(mid + g * half)) / 9.0;
    (*table)[i] = (*table)[i + 1] + piece;
  }
  auto profile = [table, ds, n](double s) {
    if (s <= 0.0) return (*table)[0];
    const double pos = s / ds;
    const auto i = static_cast<std::size_t>(pos);
    if (i >= n) return 0.0;
    const double t = pos - static_cast<double>(i);
    return (1.0 - t) * (*table)[i] + t * (*table)[i + 1];
  };
  return KernelSpec(k.label() + "_bar", profile, k.support_radius());
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ConditionCheck* ValidationReport::find(std::string_view condition) const {
  for (const auto& c : checks) {
    if (c.condition == condition) return &c;
  }
  return nullptr;
}

namespace {

// Bisects [a, b] towards the larger change; a jump keeps |f(b) - f(a)| bounded
// below while a continuous profile drives it to zero.
bool has_jump(const KernelSpec& k, double a, double b, double threshold) {
  double fa = k(a);
  double fb = k(b);
  for (int level = 0; level < 48; ++level) {
    if (std::abs(fb - fa) <= threshold) return false;
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = k(m);
    if (std::abs(fm - fa) >= std::abs(fb - fm)) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  return std::abs(fb - fa) > threshold;
}

}  // namespace

ValidationReport validate_kernel(const KernelSpec& k, std::size_t samples, double tol) {
  if (samples < 2) throw Error("kernel", "validate_kernel needs at least 2 samples", "samples");
  const double top = k.support_radius() * k.support_radius();
  const double ds = top / static_cast<double>(samples - 1);
  std::vector<double> s(samples), f(samples);
  double scale = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    s[i] = i + 1 == samples ? top : static_cast<double>(i) * ds;
    f[i] = k(s[i]);
    scale = std::max(scale, std::abs(f[i]));
  }
  if (scale == 0.0) scale = 1.0;
  const double threshold = tol * scale;

  ValidationReport report;
  report.label = k.label();

  ConditionCheck nonneg{"nonnegative", true, std::nullopt, "profile(s) >= 0"};
  for (std::size_t i = 0; i < samples; ++i) {
    if (!std::isfinite(f[i]) || f[i] < -threshold) {
      nonneg.passed = false;
      nonneg.first_violation = s[i];
      nonneg.detail = "negative or non-finite value " + std::to_string(f[i]);
      break;
    }
  }

  ConditionCheck k1{"K1", true, std::nullopt, "continuous on [0, r^2] and vanishing at the edge"};
  for (std::size_t i = 0; i + 1 < samples && k1.passed; ++i) {
    if (has_jump(k, s[i], s[i + 1], 10.0 * threshold)) {
      k1.passed = false;
      k1.first_violation = s[i];
      k1.detail = "jump discontinuity in [" + std::to_string(s[i]) + ", " + std::to_string(s[i + 1]) + "]";
    }
  }
  if (k1.passed && std::abs(f.back()) > 10.0 * threshold) {
    k1.passed = false;
    k1.first_violation = top;
    k1.detail = "profile does not vanish at the support edge (value " + std::to_string(f.back()) + ")";
  }
  // Derivative kinks: the one-sided difference quotient gap of a C1 profile
  // halves with the step, at a kink it does not.
  for (std::size_t i = 1; i + 1 < samples; ++i) {
    const double e = 0.25 * ds;
    const auto gap = [&](double step) {
      return (k(s[i] + step) - f[i]) / step - (f[i] - k(s[i] - step)) / step;
    };
    const double g1 = gap(e);
    const double g2 = gap(0.5 * e);
    if (std::abs(g2) > 1e-6 * scale / top && std::abs(g2) > 0.75 * std::abs(g1)) ++report.derivative_kinks;
  }
  if (report.derivative_kinks > 0) {
    k1.detail += "; " + std::to_string(report.derivative_kinks) + " derivative kink(s), accepted as piecewise C1";
  }

  ConditionCheck k2{"K2", true, std::nullopt, "nonincreasing"};
  for (std::size_t i = 0; i + 1 < samples; ++i) {
    if (f[i + 1] > f[i] + threshold) {
      k2.passed = false;
      k2.first_violation = s[i + 1];
      k2.detail = "profile increases between s=" + std::to_string(s[i]) + " and s=" + std::to_string(s[i + 1]);
      break;
    }
  }

  ConditionCheck k3{"K3", true, std::nullopt, "zero beyond r^2"};
  for (std::size_t i = 1; i <= samples; ++i) {
    const double beyond = top * (1.0 + 3.0 * static_cast<double>(i) / static_cast<double>(samples));
    if (k(beyond) != 0.0) {
      k3.passed = false;
      k3.first_violation = beyond;
      k3.detail = "nonzero value beyond the support bound";
      break;
    }
  }

  report.checks = {nonneg, k1, k2, k3};
  return report;
}

NormalizedKernel normalize_W(const KernelSpec& k, int dim, const QuadratureOptions& opts) {
  const double mass = kernel_mass(k, dim, opts).value;
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw Error("kernel", "cannot normalize kernel '" + k.label() + "' with zero mass");
  }
  const double scale = 1.0 / mass;
  return {k.scaled(scale), scale};
}

namespace {

KernelSpec power_family(const std::string& label, int power) {
  // (1-s)^n -> (1-s)^{n+1}/(n+1) -> (1-s)^{n+2}/((n+1)(n+2))
  const auto pw = [](double base, int n) { return std::pow(std::max(0.0, base), n); };
  KernelSpec second(label + "_bar_bar",
                    [=](double s) { return pw(1.0 - s, power + 2) / ((power + 1.0) * (power + 2.0)); }, 1.0);
  KernelSpec first(label + "_bar", [=](double s) { return pw(1.0 - s, power + 1) / (power + 1.0); }, 1.0);
  KernelSpec base(label, [=](double s) { return pw(1.0 - s, power); }, 1.0);
  return base.with_antiderivative(first.with_antiderivative(second));
}

}  // namespace

KernelSpec quartic_kernel() { return power_family("quartic", 2); }

KernelSpec cubic_kernel() { return power_family("cubic", 3); }

KernelSpec bump_kernel() {
  constexpr double pi = std::numbers::pi;
  KernelSpec second("bump_bar_bar", [](double s) {
    return (1.0 - s) * (1.0 - s) / 4.0 - (1.0 + std::cos(pi * s)) / (2.0 * pi * pi);
  }, 1.0);
  KernelSpec first("bump_bar", [](double s) { return (1.0 - s) / 2.0 - std::sin(pi * s) / (2.0 * pi); }, 1.0);
  KernelSpec base("bump", [](double s) { return 0.5 * (1.0 + std::cos(pi * s)); }, 1.0);
  return base.with_antiderivative(first.with_antiderivative(second));
}

KernelSpec wendland_kernel() {
  return KernelSpec("wendland", [](double s) {
    const double r = std::sqrt(std::max(0.0, s));
    const double t = std::max(0.0, 1.0 - r);
    return t * t * t * t * (4.0 * r + 1.0);
  }, 1.0);
}

KernelSpec corollary_kernel(double c1, double c2) {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw Error("kernel", "corollary kernel needs c1, c2 > 0");
  const double a = c1 / (c2 * c2);
  const double radius = std::sqrt(c2);
  std::ostringstream label;
  label << "corollary:" << c1 << ":" << c2;
  const auto gap = [c2](double s) { return std::max(0.0, c2 - s); };
  KernelSpec second(label.str() + "_bar_bar", [=](double s) { return a * std::pow(gap(s), 4) / 12.0; }, radius);
  KernelSpec first(label.str() + "_bar", [=](double s) { return a * std::pow(gap(s), 3) / 3.0; }, radius);
  KernelSpec base(label.str(), [=](double s) { return a * gap(s) * gap(s); }, radius);
  return base.with_antiderivative(first.with_antiderivative(second));
}

KernelSpec tabulated_kernel(std::vector<double> s, std::vector<double> values, std::string label) {
  if (s.size() != values.size() || s.size() < 2) {
    throw Error("kernel", "tabulated kernel '" + label + "' needs at least two (s, value) rows");
  }
  if (s.front() < 0.0) throw Error("kernel", "tabulated kernel '" + label + "' has negative s");
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s[i] > s[i - 1])) {
      throw Error("kernel", "tabulated kernel '" + label + "' must have strictly increasing s");
    }
  }
  const double radius = std::sqrt(s.back());
  auto xs = std::make_shared<const std::vector<double>>(std::move(s));
  auto ys = std::make_shared<const std::vector<double>>(std::move(values));
  auto profile = [xs, ys](double q) {
    const auto& x = *xs;
    const auto& y = *ys;
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    const auto i = static_cast<std::size_t>(it - x.begin());
    const double t = (q - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - t) * y[i - 1] + t * y[i];
  };
  return KernelSpec(std::move(label), profile, radius);
}

KernelSpec load_tabulated_kernel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("kernel", "cannot open tabulated kernel file '" + path + "'", "kernel");
  std::vector<double> s, v;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a = 0.0, b = 0.0;
    const bool first = std::exchange(header_allowed, false);
    if (!(row >> a >> b)) {
      if (first) continue;  // header
      throw Error("kernel", "malformed row " + std::to_string(line_no) + " in '" + path + "'", "kernel");
    }
    s.push_back(a);
    v.push_back(b);
  }
  return tabulated_kernel(std::move(s), std::move(v), "tabulated:" + path);
}

KernelSpec make_kernel(std::string_view id) {
  if (id == "quartic") return quartic_kernel();
  if (id == "cubic") return cubic_kernel();
  if (id == "bump") return bump_kernel();
  if (id == "wendland") return wendland_kernel();
  if (id.starts_with("tabulated:")) return load_tabulated_kernel(std::string(id.substr(10)));
  if (id.starts_with("corollary:")) {
    std::string rest(id.substr(10));
    std::replace(rest.begin(), rest.end(), ':', ' ');
    std::istringstream in(rest);
    double c1 = 0.0, c2 = 0.0;
    if (!(in >> c1 >> c2)) throw Error("kernel", "corollary kernel id must be corollary:<c1>:<c2>", "kernel");
    return corollary_kernel(c1, c2);
  }
  std::string known;
  for (const auto& name : kernel_catalog()) known += (known.empty() ? "" : ", ") + name;
  throw Error("kernel", "unknown kernel id '" + std::string(id) + "' (known: " + known + ")", "kernel");
}

std::vector<std::string> kernel_catalog() {
  return {"quartic", "cubic", "bump", "wendland", "corollary:<c1>:<c2>", "tabulated:<path>"};
}

}  // namespace nldir

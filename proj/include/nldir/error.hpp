// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_ERROR_HPP
#define NLDIR_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace nldir {

/// Domain error raised by any module. `code` is a short machine-readable tag
/// ("mesh", "kernel", "config", ...); `field` names the offending input when
/// there is one.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(std::move(code)), field_(std::move(field)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string code_;
  std::string field_;
};

/// Composite quadrature that ran out of budget before meeting its tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& message, double previous, double last)
      : Error("quadrature", message), previous_(previous), last_(last) {}

  double previous_estimate() const noexcept { return previous_; }
  double last_estimate() const noexcept { return last_; }

 private:
  double previous_;
  double last_;
};

}  // namespace nldir

#endif  // NLDIR_ERROR_HPP

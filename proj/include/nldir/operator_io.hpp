// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_OPERATOR_IO_HPP
#define NLDIR_OPERATOR_IO_HPP

#include <string>
#include <string_view>

#include "nldir/assembly.hpp"

namespace nldir {

/// JSON dump of an assembled operator, used for test fixtures:
///
///   {"format": "nldir-operator", "version": 1, "delta": ..., "p": ...,
///    "variant": "product", "kind": "averaged", "quadrature": [...],
///    "pairs": {"offsets": [...], "indices": [...], "weights": [...]},
///    "penalty": {"rows": [{"coefficient", "datum", "kernel_sum", "begin", "end"}, ...],
///                "cols": [...], "coeffs": [...]}}
///
/// Doubles are written with round-trip precision. A loaded operator has no mesh.
std::string dump_operator(const EnergyOperator& op);
EnergyOperator parse_operator(std::string_view text);

void save_operator(const EnergyOperator& op, const std::string& path);
EnergyOperator load_operator(const std::string& path);

}  // namespace nldir

#endif  // NLDIR_OPERATOR_IO_HPP

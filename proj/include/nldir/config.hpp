// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_CONFIG_HPP
#define NLDIR_CONFIG_HPP

#include <string>
#include <string_view>

#include "nldir/study.hpp"

namespace nldir {

/// JSON experiment config. Every key is optional:
///
///   {"shape": {"interval": [0, 1]} | {"rect": [[0, 0], [1, 1]]} | {"polygon": [[x, y], ...]},
///    "kernels": {"R": "quartic", "K": "quartic", "W": "wendland", "Khat": "quartic"},
///    "penalty": "product" | {"variant": "shi", "shi_delta_power": 2},
///    "p": 2, "datum": "harmonic_x2_minus_y2", "datum_csv": "a.csv",
///    "deltas": [0.2, 0.1, 0.05], "ratio": 4,
///    "solver": {"tol": 1e-10, "max_iter": 20000, "seed": 0},
///    "eigen": {"modes": 3, "mass_model": "L2"},
///    "coercivity": {"trials": 100},
///    "variants": ["product", "wang"],
///    "output": {"csv": "sweep.csv", "json": "sweep.json"},
///    "threads": 1}
///
/// Errors are Error("config") with field() set to the dotted key path.
StudyConfig parse_study_config(std::string_view json_text);
StudyConfig load_study_config(const std::string& path);

/// {"interval": [a, b]} etc. as JSON text.
Shape parse_shape(std::string_view json_text);

/// Per-boundary-node values, one row per node; the last column of each row
/// is the value, a header line and '#' comments are skipped.
BoundaryData load_boundary_csv(const std::string& path, const DomainMesh& mesh);

}  // namespace nldir

#endif  // NLDIR_CONFIG_HPP

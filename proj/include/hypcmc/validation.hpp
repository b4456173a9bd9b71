// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hypcmc {

/// One measured invariant. `relation` is "<", "<=", ">" or ">=" and reads
/// "measured relation bound".
struct Check {
    std::string name;
    double measured = 0.0;
    std::string relation = "<";
    double bound = 0.0;
    bool passed = false;
    std::string note;
};

Check make_check(std::string name, double measured, const std::string& relation, double bound);

struct ValidationOptions {
    std::uint64_t seed = 1;
    /// Randomized inputs per algebraic identity.
    int samples = 100;
    /// Step of the finite-difference geometry used by the cross-oracle and
    /// by foliation sampling.
    double fd_step = 1e-3;
    /// Mesh used for the discrete operator and closed-surface checks.
    int mesh_subdiv = 2;
    /// Mesh used for the total-area check.
    int area_subdiv = 3;
};

inline constexpr int kCriterionCount = 8;

/// Short title of suite group `id` (1..8).
std::string criterion_title(int id);

/// Checks of group `id` (1..8):
///   1 Schwarzian and Schwarzian-tensor algebra
///   2 Epstein defining property
///   3 mean-curvature formula against finite-difference geometry
///   4 discrete Helmholtz operator and total area of the genus-2 mesh
///   5 residual and linearization at the Fuchsian anchors
///   6 Newton and continuation
///   7 foliation properties of solved families
///   8 negative controls
/// A group that raises an Error yields one failed "<group>_completed" check
/// carrying the message. Throws InvalidArgument for an unknown id.
std::vector<Check> criterion_checks(int id, const ValidationOptions& options);

/// All groups in order.
std::vector<Check> validation_suite(const ValidationOptions& options);

/// Rows "name | measured | relation bound | PASS/FAIL".
std::string format_checks(const std::vector<Check>& checks);

} // namespace hypcmc

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hypcmc/cmc_solver.hpp"
#include "hypcmc/validation.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hypcmc {

inline constexpr const char* kVersion = "0.1.0";

/// Flat key = value run configuration. Lines starting with '#' and blank
/// lines are ignored; every key below may appear at most once.
///
///   mode              disc | mesh
///   map               identity | cubic          (disc: developing map)
///   epsilon           cubic coefficient of z + epsilon z^3
///   grid_n, half_width                          (disc grid)
///   subdiv, qd_amplitude                        (mesh; amplitude 0 gives phi = 0)
///   h_min, h_max      continuation range, inside (-1, 1)
///   leaves            evenly spaced targets; 0 keeps every accepted step
///   newton_tol, max_newton, h_step, h_step_min, cross_check
///   fd_step, sample_stride                      (geometry sampling)
///   validate_samples                            (randomized inputs per identity)
struct RunConfig {
    std::string mode = "disc";
    std::string map = "cubic";
    double epsilon = 0.01;
    int grid_n = 41;
    double half_width = 0.5;
    int subdiv = 2;
    double qd_amplitude = 0.01;
    double h_min = -0.9;
    double h_max = 0.9;
    int leaves = 19;
    SolverConfig solver;
    double fd_step = 1e-3;
    int sample_stride = 4;
    int validate_samples = 100;

    /// Throws Config on unknown keys, duplicates or malformed values.
    static RunConfig parse(const std::string& text);
    /// Throws Io if the file cannot be read.
    static RunConfig load(const std::string& path);

    /// Throws Config unless the configuration can run; in particular the
    /// range must satisfy -1 < h_min <= h_max < 1.
    void validate() const;
    /// Throws Config on an unknown key or malformed value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();
    /// Every key, one per line, in a form parse() reads back identically.
    std::string to_kv() const;

    std::vector<double> targets() const;
    ValidationOptions validation_options(std::uint64_t seed) const;
};

/// Discretized problem described by the configuration.
std::shared_ptr<const CmcContext> make_context(const RunConfig& cfg);

/// Outcome of one pipeline: measured checks plus a human-readable summary.
struct RunReport {
    std::vector<Check> checks;
    std::string summary;

    bool passed() const;
};

/// Full invariant suite with the configured tolerances and samples.
RunReport run_validate(const RunConfig& cfg, std::uint64_t seed);

/// Continuation solve. Writes into out_dir:
///   manifest.kv        config copy, version, seed, status, family metadata
///   leaves/leaf_NNN.csv  index,re_z,im_z,H,v,u per unknown
///   summary.csv        leaf,H,residual_norm,residual_sup,newton_iters,u_min,u_max
///   convergence.csv    leaf,H,iteration,residual
/// On a solver error the manifest records status=failed with the message
/// (which names the failing H) and the error is rethrown.
RunReport run_solve(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed);

/// A completed run read back from its directory. Throws Io on missing or
/// malformed artifacts.
struct LoadedRun {
    RunConfig config;
    std::map<std::string, std::string> manifest;
    ContinuationResult family;
};
LoadedRun load_run(const std::string& run_dir);

/// Foliation checks of a run directory, solving first (with `cfg`) when the
/// directory holds no completed run. Writes foliation_report.kv and
/// foliation_leaves.csv.
RunReport run_foliate(const RunConfig* cfg, const std::string& run_dir, std::uint64_t seed);

/// OBJ surfaces, Epstein sample tables and Matrix Market operators under
/// run_dir/export.
RunReport run_export(const std::string& run_dir);

/// Summary of a run directory (and its foliation report if present),
/// also written to run_dir/report.txt.
RunReport run_report(const std::string& run_dir);

} // namespace hypcmc

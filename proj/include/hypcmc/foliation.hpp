// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hypcmc/cmc_solver.hpp"
#include "hypcmc/epstein.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hypcmc {

/// (tanh(mu1 + r) + tanh(mu2 + r)) / 2
double equidistant_mean_curvature(double mu1, double mu2, double r);

/// Envelopes f_- <= f_+ of the mean curvature of the equidistant surfaces
/// of a CMC leaf, sampled on an increasing grid containing 0.
struct FBounds {
    double H = 0.0;
    std::vector<double> r;
    std::vector<double> f_minus;
    std::vector<double> f_plus;

    double eval_minus(double radius) const;
    double eval_plus(double radius) const;
    /// Monotone cubic inverses. Throws OutOfRange outside the sampled range.
    double inverse_minus(double value) const;
    double inverse_plus(double value) const;
};

/// Integrates g_-(r) = min_p dH_p/dr and g_+(r) = max_p dH_p/dr from 0, with
/// H_p(r) = equidistant_mean_curvature(mu1(p), mu2(p), r). For r < 0 the
/// roles swap so that f_- stays the lower envelope.
/// Throws NonConstantH if some H_p(0) differs from H by more than `tol`,
/// and InvalidArgument if the grid is not increasing or misses 0.
FBounds f_bounds(double H, const std::vector<std::pair<double, double>>& principal_field,
                 const std::vector<double>& r_grid, double tol = 1e-6);

struct Leaf {
    double H = 0.0;
    ScalarField u;
    double residual = 0.0;
    /// Disc mode: Epstein samples on the interior subgrid.
    std::vector<EpsteinSample> samples;
};

struct FoliationOptions {
    double step = 1e-3;
    int stride = 4;
    FdScheme scheme = FdScheme::Richardson;
};

/// Leaves strictly ordered by H, with the context they were solved in.
struct Foliation {
    std::shared_ptr<const CmcContext> ctx;
    std::vector<Leaf> leaves;
    FoliationOptions options;
};

/// Converts a continuation family; in disc mode each leaf is sampled by
/// fd_geometry on z -> Eps(f, e^{2u} h). Throws InvalidArgument if the
/// entries are not strictly increasing in H.
Foliation build_foliation(std::shared_ptr<const CmcContext> ctx, const ContinuationResult& family,
                          const FoliationOptions& options = {});

/// Negative control: the same H values with the fields permuted between
/// leaves (deterministic for a given seed, never the identity).
Foliation shuffled_control(const Foliation& fol, std::uint64_t seed);

struct LeafDiagnostics {
    double H = 0.0;
    double min_lambda = 0.0;
    double max_lambda = 0.0;
    double residual = 0.0;
    /// Min and max signed distance of the leaf from its predecessor (disc mode).
    double gap_min = 0.0;
    double gap_max = 0.0;
};

struct FoliationReport {
    bool monotone = true;
    int monotone_violations = 0;
    /// Disc mode: smallest |signed distance| between consecutive leaves.
    double min_leaf_gap = 0.0;
    std::pair<double, double> principal_range{0.0, 0.0};
    int principal_flags = 0;
    /// Worst excursion of a signed distance outside [f_+^{-1}(H'), f_-^{-1}(H')].
    double fplus_fminus_check = 0.0;
    double window_tolerance = 0.0;
    bool window_ok = true;
    /// Samples whose signed distance has the wrong sign (leaves crossing).
    int intersections = 0;
    std::vector<LeafDiagnostics> leaves;
};

/// Pointwise strict decrease of u in H; in disc mode also the signed
/// distances between consecutive leaves along normal geodesics, their
/// envelope window (tolerance 10 step) and crossing flags.
FoliationReport monotonicity_check(const Foliation& fol);

/// Range of sampled principal curvatures; samples with |lambda| > 1 - 1e-5
/// are flagged.
FoliationReport principal_curvature_check(const Foliation& fol);

/// Both checks merged into one report.
FoliationReport foliation_report(const Foliation& fol);

/// Point of the unit-speed geodesic leaving p along the unit normal n.
H3Point normal_geodesic(const H3Point& p, const std::array<double, 3>& normal, double t);

/// Flat key=value file plus a CSV of per-leaf diagnostics.
void write_foliation_report(const std::string& kv_path, const std::string& csv_path, const FoliationReport& report);

} // namespace hypcmc

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/foliation.hpp"

#include "hypcmc/error.hpp"
#include "hypcmc/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

namespace hypcmc {

namespace {

constexpr double kPrincipalMargin = 1e-5;
constexpr int kSubintervals = 16;

double dH_dr(double mu1, double mu2, double r)
{
    const double s1 = 1.0 / std::cosh(mu1 + r);
    const double s2 = 1.0 / std::cosh(mu2 + r);
    return 0.5 * (s1 * s1 + s2 * s2);
}

// Fritsch-Carlson monotone cubic through (x_k, y_k), x strictly increasing.
double pchip(const std::vector<double>& x, const std::vector<double>& y, double t)
{
    const std::size_t n = x.size();
    if (t < x.front() || t > x.back()) fail(ErrorCode::OutOfRange, "value outside the sampled range");
    std::size_t k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
    k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
    auto secant = [&](std::size_t i) { return (y[i + 1] - y[i]) / (x[i + 1] - x[i]); };
    auto slope = [&](std::size_t i) {
        if (i == 0) return secant(0);
        if (i == n - 1) return secant(n - 2);
        const double a = secant(i - 1);
        const double b = secant(i);
        if (a * b <= 0.0) return 0.0;
        const double ha = x[i] - x[i - 1];
        const double hb = x[i + 1] - x[i];
        const double wa = 2.0 * hb + ha;
        const double wb = hb + 2.0 * ha;
        return (wa + wb) / (wa / a + wb / b);
    };
    const double h = x[k + 1] - x[k];
    const double s = (t - x[k]) / h;
    const double m0 = slope(k) * h;
    const double m1 = slope(k + 1) * h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y[k] + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y[k + 1] + (s3 - s2) * m1;
}

double interpolate(const std::vector<double>& r, const std::vector<double>& f, double radius)
{
    return pchip(r, f, radius);
}

struct Envelope {
    double lo;
    double hi;
};

Envelope derivative_envelope(const std::vector<std::pair<double, double>>& mu, double r)
{
    Envelope e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& m : mu) {
        const double d = dH_dr(m.first, m.second, r);
        e.lo = std::min(e.lo, d);
        e.hi = std::max(e.hi, d);
    }
    return e;
}

// Composite Simpson of g_- and g_+ over [a, b].
Envelope integrate_envelope(const std::vector<std::pair<double, double>>& mu, double a, double b)
{
    const double h = (b - a) / kSubintervals;
    Envelope sum{0.0, 0.0};
    for (int k = 0; k <= kSubintervals; ++k) {
        const double w = (k == 0 || k == kSubintervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        const Envelope e = derivative_envelope(mu, a + k * h);
        sum.lo += w * e.lo;
        sum.hi += w * e.hi;
    }
    return {sum.lo * h / 3.0, sum.hi * h / 3.0};
}

std::vector<std::pair<double, double>> principal_field_of(const Leaf& leaf)
{
    std::vector<std::pair<double, double>> mu;
    mu.reserve(leaf.samples.size());
    for (const EpsteinSample& s : leaf.samples) {
        if (std::abs(s.principal.first) >= 1.0 || std::abs(s.principal.second) >= 1.0)
            fail(ErrorCode::OutOfRange, "principal curvature outside (-1, 1)");
        mu.emplace_back(std::atanh(s.principal.first), std::atanh(s.principal.second));
    }
    return mu;
}

// Signed arclength along the normal geodesic of `base` at which it meets the
// surface `target`, solved jointly with the chart point of the meeting.
bool shoot(const EpsteinSample& base, const H3Sampler& target, double tau0, double& tau)
{
    Eigen::Vector3d x(base.z.real(), base.z.imag(), tau0);
    auto residual = [&](const Eigen::Vector3d& p) {
        const H3Point a = target({p[0], p[1]});
        const H3Point b = normal_geodesic(base.point, base.normal, p[2]);
        return Eigen::Vector3d(a.x1 - b.x1, a.x2 - b.x2, a.y - b.y);
    };
    constexpr double kStep = 1e-7;
    for (int it = 0; it < 30; ++it) {
        const Eigen::Vector3d F = residual(x);
        Eigen::Matrix3d J;
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d xp = x;
            Eigen::Vector3d xm = x;
            xp[c] += kStep;
            xm[c] -= kStep;
            J.col(c) = (residual(xp) - residual(xm)) / (2.0 * kStep);
        }
        const Eigen::Vector3d dx = J.fullPivLu().solve(-F);
        if (!dx.allFinite()) return false;
        x += dx;
        if (dx.norm() < 1e-13) break;
    }
    if (residual(x).norm() > 1e-10) return false;
    tau = x[2];
    return true;
}

LeafDiagnostics diagnostics_of(const Leaf& leaf)
{
    LeafDiagnostics d;
    d.H = leaf.H;
    d.residual = leaf.residual;
    if (!leaf.samples.empty()) {
        d.min_lambda = std::numeric_limits<double>::infinity();
        d.max_lambda = -std::numeric_limits<double>::infinity();
        for (const EpsteinSample& s : leaf.samples) {
            d.min_lambda = std::min(d.min_lambda, s.principal.first);
            d.max_lambda = std::max(d.max_lambda, s.principal.second);
        }
    }
    return d;
}

} // namespace

double equidistant_mean_curvature(double mu1, double mu2, double r)
{
    return 0.5 * (std::tanh(mu1 + r) + std::tanh(mu2 + r));
}

double FBounds::eval_minus(double radius) const { return interpolate(r, f_minus, radius); }
double FBounds::eval_plus(double radius) const { return interpolate(r, f_plus, radius); }
double FBounds::inverse_minus(double value) const { return pchip(f_minus, r, value); }
double FBounds::inverse_plus(double value) const { return pchip(f_plus, r, value); }

FBounds f_bounds(double H, const std::vector<std::pair<double, double>>& principal_field,
                 const std::vector<double>& r_grid, double tol)
{
    if (principal_field.empty()) fail(ErrorCode::InvalidArgument, "empty principal field");
    if (r_grid.size() < 2) fail(ErrorCode::InvalidArgument, "r grid needs two points");
    for (std::size_t k = 1; k < r_grid.size(); ++k)
        if (!(r_grid[k] > r_grid[k - 1])) fail(ErrorCode::InvalidArgument, "r grid must be increasing");
    const auto zero = std::find(r_grid.begin(), r_grid.end(), 0.0);
    if (zero == r_grid.end()) fail(ErrorCode::InvalidArgument, "r grid must contain 0");
    for (const auto& m : principal_field) {
        if (!std::isfinite(m.first) || !std::isfinite(m.second))
            fail(ErrorCode::InvalidArgument, "principal field must be finite");
        const double h0 = equidistant_mean_curvature(m.first, m.second, 0.0);
        if (std::abs(h0 - H) > tol) fail(ErrorCode::NonConstantH, "leaf mean curvature varies beyond tolerance");
    }

    FBounds out;
    out.H = H;
    out.r = r_grid;
    const std::size_t n = r_grid.size();
    const std::size_t k0 = static_cast<std::size_t>(zero - r_grid.begin());
    out.f_minus.assign(n, H);
    out.f_plus.assign(n, H);
    for (std::size_t k = k0 + 1; k < n; ++k) {
        const Envelope e = integrate_envelope(principal_field, r_grid[k - 1], r_grid[k]);
        out.f_minus[k] = out.f_minus[k - 1] + e.lo;
        out.f_plus[k] = out.f_plus[k - 1] + e.hi;
    }
    for (std::size_t k = k0; k-- > 0;) {
        const Envelope e = integrate_envelope(principal_field, r_grid[k], r_grid[k + 1]);
        out.f_minus[k] = out.f_minus[k + 1] - e.hi;
        out.f_plus[k] = out.f_plus[k + 1] - e.lo;
    }
    for (std::size_t k = 1; k < n; ++k)
        if (!(out.f_minus[k] > out.f_minus[k - 1]) || !(out.f_plus[k] > out.f_plus[k - 1]))
            fail(ErrorCode::SolverFailure, "envelopes are not strictly increasing on the grid");
    return out;
}

H3Point normal_geodesic(const H3Point& p, const std::array<double, 3>& normal, double t)
{
    // Euclidean unit direction; the hyperbolic unit normal is y times it.
    const double ex = normal[0] / p.y;
    const double ey = normal[1] / p.y;
    const double ez = normal[2] / p.y;
    const double eh = std::hypot(ex, ey);
    if (eh < 1e-14) return {p.x1, p.x2, p.y * std::exp(ez > 0.0 ? t : -t)};
    const double ux = ex / eh;
    const double uy = ey / eh;
    const double sc = p.y * ez / eh;
    const double radius = std::hypot(sc, p.y);
    const double cx = p.x1 + sc * ux;
    const double cy = p.x2 + sc * uy;
    const double s = std::atanh(-sc / radius) + t;
    const double along = radius * std::tanh(s);
    return {cx + along * ux, cy + along * uy, radius / std::cosh(s)};
}

Foliation build_foliation(std::shared_ptr<const CmcContext> ctx, const ContinuationResult& family,
                          const FoliationOptions& options)
{
    if (!ctx) fail(ErrorCode::InvalidArgument, "null context");
    if (options.stride < 1 || !(options.step > 0.0)) fail(ErrorCode::InvalidArgument, "bad sampling options");
    for (std::size_t k = 1; k < family.entries.size(); ++k)
        if (!(family.entries[k].H > family.entries[k - 1].H))
            fail(ErrorCode::InvalidArgument, "leaves must be strictly increasing in H");
    Foliation fol;
    fol.ctx = ctx;
    fol.options = options;
    const bool disc = ctx->mode() == CmcContext::Mode::Disc;
    for (const ContinuationEntry& e : family.entries) {
        if (e.v.size() != ctx->size()) fail(ErrorCode::SizeMismatch, "entry field does not match the context");
        Leaf leaf;
        leaf.H = e.H;
        leaf.u = u_from_v(e.H, e.v);
        leaf.residual = e.residual_sup;
        if (disc) {
            const GridSpec& g = ctx->grid();
            const ConformalMetric sigma = solved_metric(*ctx, e.H, leaf.u);
            const HoloMap& f = ctx->developing_map();
            const H3Sampler sampler = [&](Complex z) { return epstein_chart(f, sigma, z); };
            for (int j = 6; j <= g.ny - 7; j += options.stride)
                for (int i = 6; i <= g.nx - 7; i += options.stride)
                    leaf.samples.push_back(fd_geometry(sampler, g.node(i, j), options.step, options.scheme));
        }
        fol.leaves.push_back(std::move(leaf));
    }
    return fol;
}

Foliation shuffled_control(const Foliation& fol, std::uint64_t seed)
{
    const std::size_t n = fol.leaves.size();
    if (n < 2) fail(ErrorCode::InvalidArgument, "shuffling needs two leaves");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t k = n - 1; k > 0; --k) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k + 1));
        std::swap(perm[k], perm[std::min(j, k)]);
    }
    bool identity = true;
    for (std::size_t k = 0; k < n; ++k) identity = identity && perm[k] == k;
    if (identity) std::rotate(perm.begin(), perm.begin() + 1, perm.end());

    Foliation out = fol;
    for (std::size_t k = 0; k < n; ++k) {
        out.leaves[k].u = fol.leaves[perm[k]].u;
        out.leaves[k].samples = fol.leaves[perm[k]].samples;
        out.leaves[k].residual = fol.leaves[perm[k]].residual;
    }
    return out;
}

FoliationReport monotonicity_check(const Foliation& fol)
{
    if (fol.leaves.size() < 2) fail(ErrorCode::InvalidArgument, "monotonicity needs two leaves");
    FoliationReport rep;
    for (const Leaf& leaf : fol.leaves) rep.leaves.push_back(diagnostics_of(leaf));
    for (std::size_t k = 1; k < fol.leaves.size(); ++k) {
        const ScalarField& a = fol.leaves[k - 1].u;
        const ScalarField& b = fol.leaves[k].u;
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (!(b[i] < a[i])) ++rep.monotone_violations;
    }

    const bool disc = fol.ctx->mode() == CmcContext::Mode::Disc && !fol.leaves.front().samples.empty();
    rep.window_tolerance = 10.0 * fol.options.step;
    if (disc) {
        const HoloMap& map = fol.ctx->developing_map();
        rep.min_leaf_gap = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < fol.leaves.size(); ++k) {
            const Leaf& lo = fol.leaves[k - 1];
            const Leaf& hi = fol.leaves[k];
            const ConformalMetric sigma = solved_metric(*fol.ctx, hi.H, hi.u);
            const H3Sampler target = [&](Complex z) { return epstein_chart(map, sigma, z); };
            const double delta = std::atanh(hi.H) - std::atanh(lo.H);

            bool have_window = true;
            double w_lo = 0.0;
            double w_hi = 0.0;
            try {
                const double reach = std::max(1.0, 3.0 * std::abs(delta));
                std::vector<double> grid;
                for (int s = -200; s <= 200; ++s) grid.push_back(reach * s / 200.0);
                const FBounds fb = f_bounds(lo.H, principal_field_of(lo), grid);
                w_lo = fb.inverse_plus(hi.H);
                w_hi = fb.inverse_minus(hi.H);
            } catch (const Error&) {
                have_window = false;
                rep.window_ok = false;
            }

            LeafDiagnostics& d = rep.leaves[k];
            d.gap_min = std::numeric_limits<double>::infinity();
            d.gap_max = -std::numeric_limits<double>::infinity();
            for (const EpsteinSample& s : lo.samples) {
                double tau = 0.0;
                if (!shoot(s, target, delta, tau)) {
                    ++rep.intersections;
                    continue;
                }
                d.gap_min = std::min(d.gap_min, tau);
                d.gap_max = std::max(d.gap_max, tau);
                rep.min_leaf_gap = std::min(rep.min_leaf_gap, std::abs(tau));
                if (!(tau * delta > 0.0)) ++rep.intersections;
                if (have_window) {
                    const double excursion = std::max({0.0, w_lo - tau, tau - w_hi});
                    rep.fplus_fminus_check = std::max(rep.fplus_fminus_check, excursion);
                }
            }
            if (!std::isfinite(d.gap_min)) d.gap_min = d.gap_max = 0.0;
        }
        if (!std::isfinite(rep.min_leaf_gap)) rep.min_leaf_gap = 0.0;
        if (rep.fplus_fminus_check > rep.window_tolerance) rep.window_ok = false;
    }
    rep.monotone = rep.monotone_violations == 0 && rep.intersections == 0;
    return rep;
}

FoliationReport principal_curvature_check(const Foliation& fol)
{
    FoliationReport rep;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Leaf& leaf : fol.leaves) {
        if (leaf.samples.empty()) fail(ErrorCode::InvalidArgument, "principal check needs sampled leaves");
        rep.leaves.push_back(diagnostics_of(leaf));
        for (const EpsteinSample& s : leaf.samples) {
            lo = std::min(lo, s.principal.first);
            hi = std::max(hi, s.principal.second);
            if (std::abs(s.principal.first) > 1.0 - kPrincipalMargin ||
                std::abs(s.principal.second) > 1.0 - kPrincipalMargin)
                ++rep.principal_flags;
        }
    }
    if (fol.leaves.empty()) lo = hi = 0.0;
    rep.principal_range = {lo, hi};
    return rep;
}

FoliationReport foliation_report(const Foliation& fol)
{
    FoliationReport rep = monotonicity_check(fol);
    const bool sampled = std::all_of(fol.leaves.begin(), fol.leaves.end(),
                                     [](const Leaf& l) { return !l.samples.empty(); });
    if (sampled) {
        const FoliationReport pc = principal_curvature_check(fol);
        rep.principal_range = pc.principal_range;
        rep.principal_flags = pc.principal_flags;
    }
    return rep;
}

void write_foliation_report(const std::string& kv_path, const std::string& csv_path, const FoliationReport& report)
{
    std::ofstream kv(kv_path);
    if (!kv) fail(ErrorCode::Io, "cannot write " + kv_path);
    kv << std::setprecision(17);
    kv << "monotone=" << (report.monotone ? "true" : "false") << '\n';
    kv << "monotone_violations=" << report.monotone_violations << '\n';
    kv << "min_leaf_gap=" << report.min_leaf_gap << '\n';
    kv << "principal_min=" << report.principal_range.first << '\n';
    kv << "principal_max=" << report.principal_range.second << '\n';
    kv << "principal_flags=" << report.principal_flags << '\n';
    kv << "fplus_fminus_check=" << report.fplus_fminus_check << '\n';
    kv << "window_tolerance=" << report.window_tolerance << '\n';
    kv << "window_ok=" << (report.window_ok ? "true" : "false") << '\n';
    kv << "intersections=" << report.intersections << '\n';
    kv << "leaves=" << report.leaves.size() << '\n';
    if (!kv) fail(ErrorCode::Io, "write failed: " + kv_path);

    std::ofstream csv(csv_path);
    if (!csv) fail(ErrorCode::Io, "cannot write " + csv_path);
    csv << std::setprecision(17);
    csv << "H,min_lambda,max_lambda,max_residual,gap_min,gap_max\n";
    for (const LeafDiagnostics& d : report.leaves)
        csv << d.H << ',' << d.min_lambda << ',' << d.max_lambda << ',' << d.residual << ',' << d.gap_min << ','
            << d.gap_max << '\n';
    if (!csv) fail(ErrorCode::Io, "write failed: " + csv_path);
}

} // namespace hypcmc

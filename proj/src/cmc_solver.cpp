// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/cmc_solver.hpp"

#include "hypcmc/error.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hypcmc {

namespace {


// 4th-order central weights on offsets -2..2.
constexpr double kD1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr double kD2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

void check_H(double H)
{
    if (!(std::abs(H) <= 1.0)) fail(ErrorCode::OutOfRange, "H must lie in [-1, 1]");
}

void check_field(const CmcContext& ctx, const ScalarField& v)
{
    if (v.size() != ctx.size()) fail(ErrorCode::SizeMismatch, "field size does not match the context");
    if (!v.allFinite()) fail(ErrorCode::InvalidArgument, "field has non-finite entries");
}

double log_ratio(double H)
{
    if (!(std::abs(H) < 1.0)) fail(ErrorCode::OutOfRange, "the change of variables needs |H| < 1");
    return 0.5 * std::log((1.0 + H) / (1.0 - H));
}

} // namespace

void SolverConfig::validate() const
{
    if (!(newton_tol > 0) || !(h_step > 0) || !(h_step_min > 0) || max_newton < 1) {
        fail(ErrorCode::InvalidArgument, "solver tolerances and steps must be positive");
    }
    if (!(h_step_min < h_step)) fail(ErrorCode::InvalidArgument, "h_step_min must be below h_step");
    if (!(damping > 0 && damping < 1)) fail(ErrorCode::InvalidArgument, "damping must lie in (0, 1)");
}

// ---------------------------------------------------------------- context

CmcContext CmcContext::disc(const HoloMap& f, int grid_n, double half_width)
{
    if (grid_n < 9) fail(ErrorCode::InvalidArgument, "disc grid needs at least 9 nodes per side");
    if (!(half_width > 0)) fail(ErrorCode::InvalidArgument, "half width must be positive");
    CmcContext c;
    c.mode_ = Mode::Disc;
    c.f_ = std::make_shared<HoloMap>(f);
    const double h = 2.0 * half_width / (grid_n - 1);
    c.grid_ = GridSpec{-half_width, -half_width, h, grid_n, grid_n};
    const GridSpec& g = c.grid_;
    for (int j = 0; j < grid_n; ++j) {
        for (int i = 0; i < grid_n; ++i) {
            const Complex z = g.node(i, j);
            if (!(std::abs(z) < 1.0) || !f.chart().contains(z)) {
                fail(ErrorCode::DomainMismatch, "disc grid leaves the developing map's chart");
            }
        }
    }
    c.unknown_of_node_.assign(g.size(), -1);
    for (int j = kGridMargin; j < grid_n - kGridMargin; ++j) {
        for (int i = kGridMargin; i < grid_n - kGridMargin; ++i) {
            c.unknown_of_node_[g.index(i, j)] = static_cast<int>(c.positions_.size());
            c.positions_.push_back(g.node(i, j));
        }
    }
    const int n = static_cast<int>(c.positions_.size());
    c.mass_.resize(n);
    c.rho_.resize(n);
    c.rho_z_.resize(n);
    c.phi_.resize(n);
    std::vector<Eigen::Triplet<double>> lap;
    std::vector<Eigen::Triplet<Complex>> d1, d2;
    const Complex I(0.0, 1.0);
    for (int j = kGridMargin; j < grid_n - kGridMargin; ++j) {
        for (int i = kGridMargin; i < grid_n - kGridMargin; ++i) {
            const int row = c.unknown_of_node_[g.index(i, j)];
            const Complex z = g.node(i, j);
            const double q = 1.0 - std::norm(z);
            c.rho_[row] = std::log(2.0 / q);
            c.rho_z_[row] = std::conj(z) / q;
            c.mass_[row] = std::exp(2.0 * c.rho_[row]) * h * h;
            c.phi_[row] = schwarzian(f, z);
            const double inv_density = std::exp(-2.0 * c.rho_[row]);
            auto col = [&](int a, int b) { return c.unknown_of_node_[g.index(i + a, j + b)]; };
            for (int a = -2; a <= 2; ++a) {
                const int cx = col(a, 0), cy = col(0, a);
                const double w2 = kD2[a + 2] / (h * h), w1 = kD1[a + 2] / h;
                if (cx >= 0) {
                    lap.emplace_back(row, cx, inv_density * w2);
                    d1.emplace_back(row, cx, 0.5 * w1);
                    d2.emplace_back(row, cx, 0.25 * w2);
                }
                if (cy >= 0) {
                    lap.emplace_back(row, cy, inv_density * w2);
                    d1.emplace_back(row, cy, -0.5 * I * w1);
                    d2.emplace_back(row, cy, -0.25 * w2);
                }
                for (int b = -2; b <= 2; ++b) {
                    const int cxy = col(a, b);
                    const double wxy = kD1[a + 2] * kD1[b + 2] / (h * h);
                    if (cxy >= 0 && wxy != 0.0) d2.emplace_back(row, cxy, -0.5 * I * wxy);
                }
            }
        }
    }
    c.lap_.resize(n, n);
    c.lap_.setFromTriplets(lap.begin(), lap.end());
    c.dz_.resize(n, n);
    c.dz_.setFromTriplets(d1.begin(), d1.end());
    c.dzz_.resize(n, n);
    c.dzz_.setFromTriplets(d2.begin(), d2.end());
    c.phi_base_ = c.phi_;
    c.build_colouring();
    return c;
}

CmcContext CmcContext::closed_surface(std::shared_ptr<const SurfaceMesh> mesh, const QDField& phi,
                                      double equivariance_tol)
{
    if (!mesh) fail(ErrorCode::InvalidArgument, "mesh is null");
    if (static_cast<int>(phi.values.size()) != mesh->raw_node_count()) {
        fail(ErrorCode::SizeMismatch, "QD field is not sized to the raw mesh nodes");
    }
    const double mismatch = equivariance_residual(*mesh, phi);
    if (!(mismatch <= equivariance_tol)) {
        std::ostringstream msg;
        msg << "QD field equivariance residual " << mismatch << " exceeds " << equivariance_tol;
        fail(ErrorCode::DomainMismatch, msg.str());
    }
    CmcContext c;
    c.mode_ = Mode::ClosedSurface;
    c.mesh_ = mesh;
    const int n = mesh->node_count();
    c.mass_ = mesh->mass();
    c.rho_ = mesh->rho();
    c.rho_z_ = mesh->rho_z();
    c.dz_ = mesh->dz_operator();
    c.dzz_ = mesh->dzz_operator();
    c.phi_.resize(n);
    for (int k = 0; k < n; ++k) {
        c.phi_[k] = phi.values[mesh->canonical_raw()[k]];
        c.positions_.push_back(mesh->node_position(k));
    }
    c.lap_ = -(c.mass_.cwiseInverse().asDiagonal() * mesh->stiffness());
    c.phi_base_ = c.phi_;
    c.build_colouring();
    return c;
}

void CmcContext::build_colouring()
{
    const int n = size();
    SparseMatrixD pattern(n, n);
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
        for (const SparseMatrixC* m : {&dz_, &dzz_}) {
            for (int k = 0; k < m->outerSize(); ++k) {
                for (SparseMatrixC::InnerIterator it(*m, k); it; ++it) trip.emplace_back(it.row(), it.col(), 1.0);
            }
        }
        pattern.setFromTriplets(trip.begin(), trip.end(), [](double, double) { return 1.0; });
    }
    const Eigen::SparseMatrix<double, Eigen::RowMajor> rows(pattern);
    auto col = std::make_shared<Colouring>();
    col->colour.assign(n, -1);
    std::vector<int> seen;
    for (int j = 0; j < n; ++j) {
        seen.clear();
        for (SparseMatrixD::InnerIterator it(pattern, j); it; ++it) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator jt(rows, it.row()); jt; ++jt) {
                if (col->colour[jt.col()] >= 0) seen.push_back(col->colour[jt.col()]);
            }
        }
        std::sort(seen.begin(), seen.end());
        int k = 0;
        for (int s : seen) {
            if (s == k) ++k;
            else if (s > k) break;
        }
        col->colour[j] = k;
        col->count = std::max(col->count, k + 1);
    }
    col->pattern = std::move(pattern);
    colours_ = std::move(col);
}

CmcContext CmcContext::with_phi_scale(double s) const
{
    CmcContext c = *this;
    c.phi_ = phi_base_ * s;
    c.phi_scale_ = s;
    return c;
}

const HoloMap& CmcContext::developing_map() const
{
    if (mode_ != Mode::Disc) fail(ErrorCode::InvalidArgument, "developing map exists in disc mode only");
    return *f_;
}

const GridSpec& CmcContext::grid() const
{
    if (mode_ != Mode::Disc) fail(ErrorCode::InvalidArgument, "grid exists in disc mode only");
    return grid_;
}

std::vector<double> CmcContext::full_grid(const ScalarField& v, double margin) const
{
    if (mode_ != Mode::Disc) fail(ErrorCode::InvalidArgument, "full grid exists in disc mode only");
    if (v.size() != size()) fail(ErrorCode::SizeMismatch, "field size does not match the context");
    std::vector<double> out(grid_.size(), margin);
    for (int k = 0; k < grid_.size(); ++k) {
        if (unknown_of_node_[k] >= 0) out[k] = v[unknown_of_node_[k]];
    }
    return out;
}

double CmcContext::phi_consistency() const
{
    const HoloMap& f = developing_map();
    double worst = 0.0;
    for (int i = 0; i < size(); ++i) worst = std::max(worst, std::abs(phi_[i] - phi_scale_ * schwarzian(f, positions_[i])));
    return worst;
}

const SurfaceMesh& CmcContext::mesh() const
{
    if (mode_ != Mode::ClosedSurface) fail(ErrorCode::InvalidArgument, "mesh exists in closed-surface mode only");
    return *mesh_;
}

double CmcContext::norm(const ScalarField& r) const
{
    if (r.size() != size()) fail(ErrorCode::SizeMismatch, "field size does not match the context");
    return std::sqrt((mass_.array() * r.array().square()).sum());
}

// ---------------------------------------------------------------- residual

namespace {

Eigen::VectorXcd b_of(const CmcContext& ctx, const ScalarField& v)
{
    const Eigen::VectorXcd vc = v.cast<Complex>();
    const Eigen::VectorXcd vz = ctx.dz_operator() * vc;
    const Eigen::VectorXcd vzz = ctx.dzz_operator() * vc;
    return vzz - 2.0 * ctx.rho_z().cwiseProduct(vz) - vz.cwiseProduct(vz);
}

ScalarField b_norm2_of(const CmcContext& ctx, const ScalarField& v)
{
    const Eigen::VectorXcd d = b_of(ctx, v) - 0.5 * ctx.phi();
    return (-4.0 * (ctx.rho() + v)).array().exp() * d.array().abs2();
}

ScalarField curvature_of(const CmcContext& ctx, const ScalarField& v)
{
    const ScalarField lap = ctx.laplacian_matrix() * v;
    return (-2.0 * v).array().exp() * (-lap.array() - 1.0);
}

} // namespace

ResidualTerms residual_terms(const CmcContext& ctx, const ScalarField& v)
{
    check_field(ctx, v);
    ResidualTerms t;
    t.curvature = curvature_of(ctx, v);
    t.b_tensor = b_of(ctx, v);
    const Eigen::VectorXcd d = t.b_tensor - 0.5 * ctx.phi();
    t.b_norm2 = (-4.0 * (ctx.rho() + v)).array().exp() * d.array().abs2();
    return t;
}

ScalarField residual_G(double H, const CmcContext& ctx, const ScalarField& v)
{
    check_H(H);
    check_field(ctx, v);
    const ScalarField k = curvature_of(ctx, v);
    const ScalarField n = b_norm2_of(ctx, v);
    return ((1.0 - H) - 2.0 * H * k.array() - (1.0 + H) * (k.array().square() - 16.0 * n.array())).matrix();
}

SparseMatrixD linearize_G(double H, const CmcContext& ctx, const ScalarField& v)
{
    check_H(H);
    check_field(ctx, v);
    const ScalarField k = curvature_of(ctx, v);
    // dK = -2 K w - e^{-2v} Delta w
    const ScalarField a = -2.0 * H - 2.0 * (1.0 + H) * k.array();
    const ScalarField em2v = (-2.0 * v).array().exp();
    SparseMatrixD dk = -(em2v.asDiagonal() * ctx.laplacian_matrix());
    dk += SparseMatrixD((-2.0 * k).asDiagonal());
    SparseMatrixD j = a.asDiagonal() * dk;

    // B part: dN = -4 N w + 2 e^{-4(rho + v)} Re(conj(B - phi/2) dB),
    // dB = w_zz - 2 (rho_z + v_z) w_z.
    const ResidualTerms t = residual_terms(ctx, v);
    const Eigen::VectorXcd vz = ctx.dz_operator() * v.cast<Complex>();
    const Eigen::VectorXcd coef = -2.0 * (ctx.rho_z() + vz);
    const SparseMatrixC db = ctx.dzz_operator() + SparseMatrixC(coef.asDiagonal() * ctx.dz_operator());
    const ScalarField e4 = (-4.0 * (ctx.rho() + v)).array().exp();
    const Eigen::VectorXcd left = (2.0 * e4).cast<Complex>().cwiseProduct((t.b_tensor - 0.5 * ctx.phi()).conjugate());
    const double scale = 16.0 * (1.0 + H);
    SparseMatrixD jb = scale * SparseMatrixD(SparseMatrixC(left.asDiagonal() * db).real());
    jb += SparseMatrixD((-4.0 * scale * t.b_norm2).asDiagonal());
    j += jb;
    j.makeCompressed();
    return j;
}

// ---------------------------------------------------------------- Newton

NewtonResult newton_solve(double H, const CmcContext& ctx, const ScalarField& v_init, const SolverConfig& cfg)
{
    cfg.validate();
    check_H(H);
    if (std::abs(H) == 1.0) {
        fail(ErrorCode::SingularLinearization, "H = +-1 is an excluded endpoint of the change of variables");
    }
    check_field(ctx, v_init);
    NewtonResult res;
    res.v = v_init;
    ScalarField r = residual_G(H, ctx, res.v);
    double norm = ctx.norm(r);
    res.residuals.push_back(norm);
    while (!(norm < cfg.newton_tol)) {
        if (res.iterations >= cfg.max_newton) {
            std::ostringstream msg;
            msg << "Newton did not converge in " << cfg.max_newton << " iterations at H = " << H << " (residual "
                << norm << ")";
            fail(ErrorCode::NewtonDiverged, msg.str());
        }
        const SparseMatrixD j = linearize_G(H, ctx, res.v);
        Eigen::SparseLU<SparseMatrixD> lu;
        lu.compute(j);
        if (lu.info() != Eigen::Success) fail(ErrorCode::SingularLinearization, "linearization is singular");
        const ScalarField delta = lu.solve(-r);
        if (lu.info() != Eigen::Success || !delta.allFinite()) {
            fail(ErrorCode::SingularLinearization, "linear solve failed");
        }
        double lambda = 1.0;
        for (;;) {
            const ScalarField trial = res.v + lambda * delta;
            const ScalarField rt = residual_G(H, ctx, trial);
            const double nt = ctx.norm(rt);
            if (std::isfinite(nt) && nt < norm) {
                res.v = trial;
                r = rt;
                norm = nt;
                break;
            }
            lambda *= cfg.damping;
            if (lambda < 1e-6) {
                std::ostringstream msg;
                msg << "residual did not decrease after full damping at H = " << H << " (residual " << norm << ")";
                fail(ErrorCode::NewtonDiverged, msg.str());
            }
        }
        ++res.iterations;
        res.residuals.push_back(norm);
    }
    res.residual_sup = r.lpNorm<Eigen::Infinity>();
    return res;
}

// ---------------------------------------------------------------- continuation

namespace {

const double kEndT = std::sqrt(0.1);

// Marching parameter: H in the middle, sqrt(1 +- H) near the ends.
double theta_of(double H, bool t_param)
{
    if (!t_param) return H;
    if (H < -0.9) return -0.9 - (kEndT - std::sqrt(1.0 + H));
    if (H > 0.9) return 0.9 + (kEndT - std::sqrt(1.0 - H));
    return H;
}

double H_of(double th, bool t_param)
{
    if (!t_param) return th;
    if (th < -0.9) {
        const double s = std::max(0.0, kEndT + (th + 0.9));
        return -1.0 + s * s;
    }
    if (th > 0.9) {
        const double s = std::max(0.0, kEndT - (th - 0.9));
        return 1.0 - s * s;
    }
    return th;
}

struct Marcher {
    const CmcContext& ctx;
    const SolverConfig& cfg;
    int steps = 0;

    // Marches from (H, v) to H_end, hitting every stop (ordered along the
    // march, excluding the start) exactly. Stops are sent to `emit`, or every
    // accepted step with `every_step`.
    template <class Emit>
    void run(double H, ScalarField v, double H_end, const std::vector<double>& stops, Emit&& emit,
             bool every_step = false)
    {
        const double dir = H_end > H ? 1.0 : -1.0;
        std::size_t next = 0;
        double step = cfg.h_step;
        while (dir * (H_end - H) > 0) {
            const double goal = next < stops.size() ? stops[next] : H_end;
            double Hn = H_of(theta_of(H, cfg.use_t_param) + dir * step, cfg.use_t_param);
            if (dir * (Hn - goal) >= 0 || std::abs(Hn - goal) < 1e-12) Hn = goal;
            try {
                NewtonResult nr = newton_solve(Hn, ctx, v, cfg);
                ++steps;
                H = Hn;
                v = nr.v;
                const bool at_stop = next < stops.size() && H == stops[next];
                if (at_stop || every_step) emit(H, nr);
                if (at_stop) ++next;
                step = std::min(cfg.h_step, 2.0 * step);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NewtonDiverged && e.code() != ErrorCode::SingularLinearization) throw;
                step *= 0.5;
                if (step < cfg.h_step_min) {
                    std::ostringstream msg;
                    msg << "continuation step underflow between H = " << H << " and H = " << Hn << ": " << e.what();
                    fail(ErrorCode::ContinuationStalled, msg.str());
                }
            }
        }
    }
};

ContinuationEntry make_entry(double H, const NewtonResult& nr)
{
    return {H, nr.v, nr.residuals.back(), nr.residual_sup, nr.iterations, nr.residuals};
}

} // namespace

ContinuationResult continuation(const CmcContext& ctx, double H_lo, double H_hi, const SolverConfig& cfg,
                                const std::vector<double>& targets)
{
    cfg.validate();
    if (!(H_lo > -1.0 && H_hi < 1.0 && H_lo <= H_hi)) {
        fail(ErrorCode::OutOfRange, "continuation range must satisfy -1 < H_lo <= H_hi < 1");
    }
    std::vector<double> stops = targets;
    for (double t : stops) {
        if (!(t >= H_lo && t <= H_hi)) fail(ErrorCode::OutOfRange, "target outside the continuation range");
    }
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    ContinuationResult out;
    const ScalarField zero = ScalarField::Zero(ctx.size());

    // End anchor: at H = -1 the B term drops out and v = 0 solves for any phi.
    Marcher a{ctx, cfg};
    auto keep = [&](double Hs, const NewtonResult& nr) { out.entries.push_back(make_entry(Hs, nr)); };
    if (!stops.empty()) {
        a.run(-1.0, zero, stops.back(), stops, keep);
    } else {
        a.run(-1.0, zero, H_lo, {H_lo}, keep);
        if (H_hi > H_lo) a.run(H_lo, out.entries.back().v, H_hi, {H_hi}, keep, true);
    }
    out.steps = a.steps;
    out.anchors = "end anchor H=-1, v=0";

    if (!cfg.cross_check) {
        out.cross_check = std::numeric_limits<double>::quiet_NaN();
        return out;
    }

    // Fuchsian anchor: v = 0 at phi = 0 for every H, then a phi ramp.
    const double H0 = 0.5 * (H_lo + H_hi);
    ScalarField v0 = zero;
    double ramp_residual = 0.0;
    if (ctx.phi().cwiseAbs().maxCoeff() > 0.0) {
        for (double s : {0.25, 0.5, 0.75, 1.0}) {
            const CmcContext scaled = ctx.with_phi_scale(ctx.phi_scale() * s);
            const NewtonResult nr = newton_solve(H0, scaled, v0, cfg);
            v0 = nr.v;
            ramp_residual = nr.residuals.back();
        }
    }
    std::vector<double> lower, upper;
    bool at_anchor = false;
    for (const auto& e : out.entries) {
        if (e.H < H0) lower.push_back(e.H);
        else if (e.H > H0) upper.push_back(e.H);
        else at_anchor = true;
    }
    std::reverse(lower.begin(), lower.end());
    std::vector<std::pair<double, ScalarField>> other;
    Marcher b{ctx, cfg};
    if (at_anchor) other.emplace_back(H0, v0);
    if (!lower.empty()) {
        b.run(H0, v0, lower.back(), lower, [&](double Hs, const NewtonResult& nr) { other.emplace_back(Hs, nr.v); });
    }
    if (!upper.empty()) {
        b.run(H0, v0, upper.back(), upper, [&](double Hs, const NewtonResult& nr) { other.emplace_back(Hs, nr.v); });
    }
    double worst = 0.0;
    for (const auto& [Hs, vs] : other) {
        for (const auto& e : out.entries) {
            if (e.H == Hs) worst = std::max(worst, (e.v - vs).lpNorm<Eigen::Infinity>());
        }
    }
    out.cross_check = worst;
    std::ostringstream desc;
    desc << "end anchor H=-1, v=0; Fuchsian anchor H=" << H0 << ", v=0 with phi ramp 0.25/0.5/0.75/1 (residual "
         << ramp_residual << ")";
    out.anchors = desc.str();
    if (!(worst <= 1e-7)) {
        std::ostringstream msg;
        msg << "end-anchor and Fuchsian-anchor families disagree by " << worst;
        fail(ErrorCode::SolverFailure, msg.str());
    }
    return out;
}

// ---------------------------------------------------------------- change of variables

ScalarField u_from_v(double H, const ScalarField& v)
{
    return (v.array() - log_ratio(H)).matrix();
}

ScalarField v_from_u(double H, const ScalarField& u)
{
    return (u.array() + log_ratio(H)).matrix();
}

// ---------------------------------------------------------------- surrogate metric

namespace {

// Coefficients (ascending powers of t) of the Lagrange basis on nodes -3..3.
struct LagrangeBasis {
    double coeff[7][7] = {};

    LagrangeBasis()
    {
        for (int k = 0; k < 7; ++k) {
            double p[7] = {1.0};
            int deg = 0;
            double denom = 1.0;
            for (int m = 0; m < 7; ++m) {
                if (m == k) continue;
                // multiply p by (t - (m - 3))
                for (int d = deg + 1; d >= 1; --d) p[d] = p[d - 1] - (m - 3) * p[d];
                p[0] = -(m - 3) * p[0];
                ++deg;
                denom *= (k - m);
            }
            for (int d = 0; d < 7; ++d) coeff[k][d] = p[d] / denom;
        }
    }

    // Values and first two derivatives of every basis polynomial at t.
    void eval(double t, double l[7], double l1[7], double l2[7]) const
    {
        for (int k = 0; k < 7; ++k) {
            double v = 0, d1 = 0, d2 = 0;
            for (int d = 6; d >= 0; --d) {
                d2 = d2 * t + 2.0 * d1;
                d1 = d1 * t + v;
                v = v * t + coeff[k][d];
            }
            l[k] = v;
            l1[k] = d1;
            l2[k] = d2;
        }
    }
};

} // namespace

ConformalMetric solved_metric(const CmcContext& ctx, double H, const ScalarField& u)
{
    const GridSpec g = ctx.grid();
    const double shift = log_ratio(H);
    auto samples = std::make_shared<std::vector<double>>(ctx.full_grid(u, -shift));
    static const LagrangeBasis basis;
    const ConformalMetric base = poincare_disc_metric();
    const Chart chart = Chart::rectangle(g.x0 + 3 * g.h, g.x0 + (g.nx - 4) * g.h, g.y0 + 3 * g.h,
                                         g.y0 + (g.ny - 4) * g.h);
    return ConformalMetric::analytic(chart, [g, samples, base](Complex z) {
        const int i0 = std::clamp(static_cast<int>(std::lround((z.real() - g.x0) / g.h)), 3, g.nx - 4);
        const int j0 = std::clamp(static_cast<int>(std::lround((z.imag() - g.y0) / g.h)), 3, g.ny - 4);
        const double tx = (z.real() - (g.x0 + i0 * g.h)) / g.h;
        const double ty = (z.imag() - (g.y0 + j0 * g.h)) / g.h;
        double lx[7], lx1[7], lx2[7], ly[7], ly1[7], ly2[7];
        basis.eval(tx, lx, lx1, lx2);
        basis.eval(ty, ly, ly1, ly2);
        double u0 = 0, ux = 0, uy = 0, uxx = 0, uyy = 0, uxy = 0;
        for (int b = 0; b < 7; ++b) {
            for (int a = 0; a < 7; ++a) {
                const double s = (*samples)[g.index(i0 + a - 3, j0 + b - 3)];
                u0 += lx[a] * ly[b] * s;
                ux += lx1[a] * ly[b] * s;
                uy += lx[a] * ly1[b] * s;
                uxx += lx2[a] * ly[b] * s;
                uyy += lx[a] * ly2[b] * s;
                uxy += lx1[a] * ly1[b] * s;
            }
        }
        const double h = g.h;
        ux /= h;
        uy /= h;
        uxx /= h * h;
        uyy /= h * h;
        uxy /= h * h;
        Jet j = base.log_density(z);
        j += Jet{u0, 0.5 * Complex(ux, -uy), 0.25 * Complex(uxx - uyy, -2.0 * uxy), 0.25 * (uxx + uyy)};
        return j;
    });
}

GeometricCheck geometric_mean_curvature_check(const CmcContext& ctx, double H, const ScalarField& u, double step,
                                              int stride)
{
    if (ctx.mode() != CmcContext::Mode::Disc) fail(ErrorCode::InvalidArgument, "geometric check needs disc mode");
    if (stride < 1) fail(ErrorCode::InvalidArgument, "stride must be positive");
    const GridSpec& g = ctx.grid();
    const ConformalMetric sigma = solved_metric(ctx, H, u);
    const HoloMap& f = ctx.developing_map();
    const H3Sampler sampler = [&](Complex z) { return epstein_chart(f, sigma, z); };
    GeometricCheck out;
    for (int j = 6; j <= g.ny - 7; j += stride) {
        for (int i = 6; i <= g.nx - 7; i += stride) {
            EpsteinSample s = fd_geometry(sampler, g.node(i, j), step);
            out.max_deviation = std::max(out.max_deviation, std::abs(s.mean_curv - H));
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

} // namespace hypcmc

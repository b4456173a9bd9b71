// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/cmc_solver.hpp"
#include "hypcmc/epstein.hpp"
#include "hypcmc/error.hpp"
#include "hypcmc/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hypcmc;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const SurfaceMesh> mesh(int subdiv)
{
    static std::shared_ptr<const SurfaceMesh> cache[4];
    if (!cache[subdiv]) cache[subdiv] = std::make_shared<const SurfaceMesh>(SurfaceMesh::build(subdiv));
    return cache[subdiv];
}

QDField zero_qd(const SurfaceMesh& m) { return QDField{std::vector<Complex>(m.raw_node_count())}; }

const CmcContext& fuchsian_disc()
{
    static const CmcContext ctx = CmcContext::disc(identity_map(Chart::disc()));
    return ctx;
}

const CmcContext& cubic_disc()
{
    static const CmcContext ctx = CmcContext::disc(cubic_perturbation(0.01, Chart::disc(0.0, 0.9)));
    return ctx;
}

const CmcContext& fuchsian_mesh()
{
    static const CmcContext ctx = CmcContext::closed_surface(mesh(1), zero_qd(*mesh(1)));
    return ctx;
}

// amp exp(-|z - c|^2 / w^2), vanishing near the edge of the disc grid.
ScalarField bump(const CmcContext& ctx, double amp, Complex c = {0.05, -0.03}, double w = 0.15)
{
    ScalarField v(ctx.size());
    for (int i = 0; i < ctx.size(); ++i) v[i] = amp * std::exp(-std::norm(ctx.position(i) - c) / (w * w));
    return v;
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

// Exact B-part Jacobian, for comparison with the coloured differences.
SparseMatrixD exact_b_jacobian(double H, const CmcContext& ctx, const ScalarField& v)
{
    const ResidualTerms t = residual_terms(ctx, v);
    const Eigen::VectorXcd vz = ctx.dz_operator() * v.cast<Complex>();
    const Eigen::VectorXcd d = t.b_tensor - 0.5 * ctx.phi();
    const ScalarField e4 = (-4.0 * (ctx.rho() + v)).array().exp();
    // dB = dzz w - 2 (rho_z + v_z) dz w
    const Eigen::VectorXcd coef = -2.0 * (ctx.rho_z() + vz);
    SparseMatrixC db = ctx.dzz_operator() + SparseMatrixC(coef.asDiagonal() * ctx.dz_operator());
    const Eigen::VectorXcd left = (2.0 * e4).cast<Complex>().cwiseProduct(d.conjugate());
    SparseMatrixC dn = left.asDiagonal() * db;
    SparseMatrixD out = 16.0 * (1.0 + H) * SparseMatrixD(dn.real());
    out += SparseMatrixD((16.0 * (1.0 + H) * -4.0 * t.b_norm2).asDiagonal());
    return out;
}

} // namespace

TEST_CASE("SolverConfig validation")
{
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.h_step_min = cfg.h_step;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = SolverConfig{};
    cfg.newton_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("disc context carries the Schwarzian of its developing map")
{
    CHECK(cubic_disc().phi_consistency() < 1e-10);
    CHECK(cubic_disc().size() == 37 * 37);
    CHECK(fuchsian_disc().phi().cwiseAbs().maxCoeff() == 0.0);
    const CmcContext half = cubic_disc().with_phi_scale(0.5);
    CHECK((half.phi() - 0.5 * cubic_disc().phi()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(half.phi_consistency() < 1e-10);
    CHECK(code_of([] { (void)CmcContext::disc(identity_map(Chart::disc(0.0, 0.6))); }) == ErrorCode::DomainMismatch);
    CHECK(code_of([] { (void)CmcContext::closed_surface(mesh(1), QDField{}); }) == ErrorCode::SizeMismatch);
}

TEST_CASE("residual vanishes at the anchors")
{
    for (const CmcContext* ctx : {&fuchsian_disc(), &fuchsian_mesh()}) {
        const ScalarField zero = ScalarField::Zero(ctx->size());
        for (int k = 0; k < 20; ++k) {
            const double H = -1.0 + k * (1.99 / 19);
            CHECK(residual_G(H, *ctx, zero).lpNorm<Eigen::Infinity>() < 1e-13);
        }
    }
    // At H = -1 the phi-dependent term drops out.
    const ScalarField zero = ScalarField::Zero(cubic_disc().size());
    CHECK(residual_G(-1.0, cubic_disc(), zero).lpNorm<Eigen::Infinity>() < 1e-13);
    CHECK(residual_G(0.0, cubic_disc(), zero).lpNorm<Eigen::Infinity>() > 1e-4);

    CHECK(code_of([&] { (void)residual_G(1.01, fuchsian_disc(), ScalarField::Zero(fuchsian_disc().size())); }) ==
          ErrorCode::OutOfRange);
    CHECK(code_of([&] { (void)residual_G(0.0, fuchsian_disc(), ScalarField::Zero(3)); }) == ErrorCode::SizeMismatch);
}

TEST_CASE("residual agrees with the mean-curvature formula after the change of variables")
{
    // (H - H_formula(sigma)) ((K_sigma - 1)^2 - 16 n^2) = c G with c = (1+H)/(1-H).
    const CmcContext& ctx = cubic_disc();
    const ConformalMetric poincare = poincare_disc_metric();
    Rng rng(21);
    for (int trial = 0; trial < 6; ++trial) {
        const double H = rng.uniform(-0.95, 0.95);
        const ScalarField v = bump(ctx, rng.uniform(-0.2, 0.2), rng.complex_in_disc(0.2), rng.uniform(0.1, 0.2));
        const ScalarField u = u_from_v(H, v);
        const ScalarField g = residual_G(H, ctx, v);
        const Eigen::VectorXcd vz = ctx.dz_operator() * v.cast<Complex>();
        const Eigen::VectorXcd vzz = ctx.dzz_operator() * v.cast<Complex>();
        const ScalarField lap = ctx.laplacian_matrix() * v;
        const double c = (1 + H) / (1 - H);
        double worst = 0.0;
        for (int i = 0; i < ctx.size(); i += 7) {
            const Complex z = ctx.position(i);
            Jet eta = poincare.log_density(z);
            eta += Jet{u[i], vz[i], vzz[i], 0.25 * std::exp(2 * ctx.rho()[i]) * lap[i]};
            const double hf = mean_curvature_formula(eta, ctx.phi()[i]);
            const double k = -4.0 * std::exp(-2 * eta.value) * eta.dzzbar;
            const double n = std::exp(-2 * eta.value) * std::abs(b_tensor(eta) - 0.5 * ctx.phi()[i]);
            const double d = (k - 1) * (k - 1) - 16 * n * n;
            worst = std::max(worst, std::abs((H - hf) * d - c * g[i]) / std::max(1.0, c));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("linearization at the anchors is 2 (2 - Delta) for every H")
{
    const CmcContext& ctx = fuchsian_mesh();
    const SurfaceMesh& m = ctx.mesh();
    const ScalarField zero = ScalarField::Zero(ctx.size());
    Rng rng(4);
    ScalarField w(ctx.size());
    for (int i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1, 1);
    const ScalarField ref = 2.0 * apply_helmholtz(m, ScalarField::Constant(ctx.size(), 2.0), w);
    for (double H : {-1.0, -0.5, 0.0, 0.3, 0.9}) {
        const SparseMatrixD l = linearize_G(H, ctx, zero);
        CHECK((l * w - ref).norm() / ref.norm() < 1e-10);
        // Symmetric positive definite in the mass inner product.
        const SparseMatrixD ml = ctx.mass().asDiagonal() * l;
        CHECK((SparseMatrixD(ml.transpose()) - ml).norm() < 1e-10 * ml.norm());
        CHECK(w.dot(ml * w) > 0.0);
    }
    // The operator (1 - H)(2 - Delta) coincides with it only at H = -1.
    const SparseMatrixD l0 = linearize_G(0.3, ctx, zero);
    CHECK((l0 * w - 0.7 * 0.5 * ref).norm() / ref.norm() > 0.1);
}

TEST_CASE("linearization matches difference quotients")
{
    for (const CmcContext* ctx : {&cubic_disc(), &fuchsian_mesh()}) {
        const double H = 0.4;
        const ScalarField v = bump(*ctx, 0.05);
        ScalarField w = bump(*ctx, 1.0, {-0.1, 0.1}, 0.2);
        if (ctx->mode() == CmcContext::Mode::ClosedSurface) {
            w = ctx->mesh().sample([](Complex z) { return std::cos(3 * z.real()) * std::exp(-4 * std::norm(z)); });
        }
        const ScalarField lw = linearize_G(H, *ctx, v) * w;
        const ScalarField g0 = residual_G(H, *ctx, v);
        std::vector<double> err;
        for (double eps : {1e-4, 1e-5, 1e-6}) {
            const ScalarField q = (residual_G(H, *ctx, v + eps * w) - g0) / eps;
            err.push_back((q - lw).norm() / lw.norm());
        }
        CHECK(err[0] / err[1] > 5.0);
        CHECK(err[0] / err[1] < 20.0);
        CHECK(err[1] / err[2] > 5.0);
    }
}

TEST_CASE("Jacobian agrees with coloured central differences of the residual")
{
    for (const CmcContext* ctx : {&cubic_disc(), &fuchsian_mesh()}) {
        const double H = 0.2;
        const ScalarField v = ctx->mode() == CmcContext::Mode::Disc
                                  ? bump(*ctx, 0.1)
                                  : ctx->mesh().sample([](Complex z) { return 0.05 * std::exp(-3 * std::norm(z)); });
        const SparseMatrixD j = linearize_G(H, *ctx, v);
        // Columns of one colour share no row of the pattern, so one pair of
        // residual evaluations recovers all of them.
        const int n = ctx->size();
        std::vector<std::vector<int>> members(ctx->colour_count());
        for (int c = 0; c < n; ++c) members[ctx->column_colours()[c]].push_back(c);
        const double h = 1e-5;
        double worst = 0.0;
        double scale = 0.0;
        for (const auto& cols : members) {
            auto central = [&](double step) {
                ScalarField vp = v, vm = v;
                for (int c : cols) {
                    vp[c] += step;
                    vm[c] -= step;
                }
                return ScalarField((residual_G(H, *ctx, vp) - residual_G(H, *ctx, vm)) / (2 * step));
            };
            const ScalarField dq = (4.0 * central(h) - central(2 * h)) / 3.0;
            for (int c : cols) {
                for (SparseMatrixD::InnerIterator it(ctx->b_pattern(), c); it; ++it) {
                    worst = std::max(worst, std::abs(dq[it.row()] - j.coeff(it.row(), c)));
                    scale = std::max(scale, std::abs(j.coeff(it.row(), c)));
                }
            }
        }
        CHECK(worst < 1e-7 * scale);
        // Every Jacobian entry lies on the pattern used by the colouring.
        for (int c = 0; c < j.outerSize(); ++c)
            for (SparseMatrixD::InnerIterator it(j, c); it; ++it)
                if (it.value() != 0.0) CHECK(ctx->b_pattern().coeff(it.row(), c) != 0.0);
        if (ctx->mode() == CmcContext::Mode::Disc) CHECK(ctx->colour_count() < n / 10);
    }
}

TEST_CASE("B part of the Jacobian agrees with an independent derivation")
{
    const CmcContext& ctx = cubic_disc();
    const double H = 0.2;
    const ScalarField v = bump(ctx, 0.1);
    const SparseMatrixD b = linearize_G(H, ctx, v) - linearize_G(H, ctx.with_phi_scale(0.0), v) +
                            exact_b_jacobian(H, ctx.with_phi_scale(0.0), v);
    const SparseMatrixD exact = exact_b_jacobian(H, ctx, v);
    CHECK((b - exact).norm() < 1e-12 * exact.norm());
}

TEST_CASE("Newton recovers the constant solution quadratically")
{
    SolverConfig cfg;
    for (const CmcContext* ctx : {&fuchsian_disc(), &fuchsian_mesh()}) {
        // Broad enough that K(tau) stays on the K = -1 branch of G = 0.
        ScalarField seed(ctx->size());
        for (int i = 0; i < ctx->size(); ++i) {
            const Complex z = ctx->position(i);
            seed[i] = 0.05 * std::pow(std::cos(kPi * z.real()) * std::cos(kPi * z.imag()), 2);
        }
        if (ctx->mode() == CmcContext::Mode::ClosedSurface) {
            seed = ctx->mesh().sample([](Complex z) { return 0.05 * std::exp(-6 * std::norm(z)); });
        }
        const NewtonResult r = newton_solve(0.3, *ctx, seed, cfg);
        CHECK(r.v.lpNorm<Eigen::Infinity>() < 1e-9);
        CHECK(r.residuals.back() < cfg.newton_tol);
        const auto& res = r.residuals;
        REQUIRE(res.size() >= 4);
        for (std::size_t k = res.size() - 3; k < res.size(); ++k) {
            if (res[k] > 1e-14) CHECK(res[k] / (res[k - 1] * res[k - 1]) < 100.0);
        }
    }
}

TEST_CASE("a seed on the positive-curvature branch reaches a different root")
{
    // G = 0 is quadratic in K with roots on either side of -H/(1 + H); at
    // v = 0 they are K = -1 and K = (1 - H)/(1 + H).
    SolverConfig cfg;
    const CmcContext& ctx = fuchsian_disc();
    const NewtonResult r = newton_solve(0.3, ctx, bump(ctx, 0.05), cfg);
    CHECK(r.residuals.back() < cfg.newton_tol);
    const ScalarField k = residual_terms(ctx, r.v).curvature;
    CHECK(k.maxCoeff() > -0.3 / 1.3);
    CHECK(r.v.lpNorm<Eigen::Infinity>() > 1e-2);
}

TEST_CASE("Newton rejects the endpoints")
{
    SolverConfig cfg;
    const ScalarField zero = ScalarField::Zero(fuchsian_mesh().size());
    CHECK(code_of([&] { (void)newton_solve(1.0, fuchsian_mesh(), zero, cfg); }) == ErrorCode::SingularLinearization);
    CHECK(code_of([&] { (void)newton_solve(-1.0, fuchsian_mesh(), zero, cfg); }) == ErrorCode::SingularLinearization);
    CHECK(code_of([&] { (void)newton_solve(1.5, fuchsian_mesh(), zero, cfg); }) == ErrorCode::OutOfRange);
    SolverConfig strict;
    strict.max_newton = 1;
    CHECK(code_of([&] { (void)newton_solve(0.0, cubic_disc(), ScalarField::Zero(cubic_disc().size()), strict); }) ==
          ErrorCode::NewtonDiverged);
}

TEST_CASE("change of variables")
{
    Rng rng(2);
    ScalarField v(50);
    for (int i = 0; i < 50; ++i) v[i] = rng.uniform(-1, 1);
    CHECK((u_from_v(0.0, v) - v).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((u_from_v(0.5, ScalarField::Zero(3)).array() + 0.5 * std::log(3.0)).abs().maxCoeff() < 1e-15);
    for (double H : {-0.99, -0.3, 0.7}) {
        CHECK((v_from_u(H, u_from_v(H, v)) - v).lpNorm<Eigen::Infinity>() < 1e-15);
        const ScalarField u = u_from_v(H, v);
        for (int i = 0; i < 50; ++i) {
            CHECK(std::exp(2 * v[i]) == doctest::Approx((1 + H) / (1 - H) * std::exp(2 * u[i])).epsilon(1e-14));
        }
    }
    CHECK(code_of([&] { (void)u_from_v(1.0, v); }) == ErrorCode::OutOfRange);
    CHECK(code_of([&] { (void)v_from_u(-1.0, v); }) == ErrorCode::OutOfRange);
}

TEST_CASE("continuation of the Fuchsian family reproduces the closed form")
{
    SolverConfig cfg;
    for (const CmcContext* ctx : {&fuchsian_mesh(), &fuchsian_disc()}) {
        const ContinuationResult r = continuation(*ctx, -0.99, 0.99, cfg);
        REQUIRE(r.entries.size() > 10);
        CHECK(r.entries.front().H == -0.99);
        CHECK(r.entries.back().H == 0.99);
        CHECK(r.cross_check < 1e-12);
        for (std::size_t k = 0; k < r.entries.size(); ++k) {
            const auto& e = r.entries[k];
            if (k > 0) CHECK(e.H > r.entries[k - 1].H);
            CHECK(e.v.lpNorm<Eigen::Infinity>() < 1e-12);
            const ScalarField u = u_from_v(e.H, e.v);
            CHECK((u.array() + 0.5 * std::log((1 + e.H) / (1 - e.H))).abs().maxCoeff() < 1e-10);
        }
    }
    CHECK(code_of([] { (void)continuation(fuchsian_mesh(), -1.0, 0.5, SolverConfig{}); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { (void)continuation(fuchsian_mesh(), -0.5, 1.0, SolverConfig{}); }) == ErrorCode::OutOfRange);
}

TEST_CASE("continuation uses the end parameterization and hits targets")
{
    SolverConfig cfg;
    cfg.cross_check = false;
    const std::vector<double> targets{-0.99, -0.95, -0.2, 0.37, 0.97};
    const ContinuationResult r = continuation(fuchsian_mesh(), -0.99, 0.99, cfg, targets);
    REQUIRE(r.entries.size() == targets.size());
    for (std::size_t k = 0; k < targets.size(); ++k) CHECK(r.entries[k].H == targets[k]);
    CHECK(std::isnan(r.cross_check));

    // Steps below -0.9 are uniform in sqrt(1 + H).
    const ContinuationResult all = continuation(fuchsian_mesh(), -0.99, -0.9, cfg);
    for (std::size_t k = 1; k + 1 < all.entries.size(); ++k) {
        const double dt = std::sqrt(1 + all.entries[k + 1].H) - std::sqrt(1 + all.entries[k].H);
        if (all.entries[k + 1].H < -0.9) CHECK(dt == doctest::Approx(cfg.h_step).epsilon(1e-9));
    }
}

TEST_CASE("small-data continuation in disc mode")
{
    SolverConfig cfg;
    const CmcContext& ctx = cubic_disc();
    const ContinuationResult r = continuation(ctx, -0.9, 0.9, cfg);
    REQUIRE(r.entries.size() > 10);
    CHECK(r.cross_check < 1e-9);
    for (std::size_t k = 0; k < r.entries.size(); ++k) {
        CHECK(r.entries[k].residual_norm < cfg.newton_tol);
        if (k == 0) continue;
        CHECK(r.entries[k].H > r.entries[k - 1].H);
        const ScalarField du = u_from_v(r.entries[k].H, r.entries[k].v) - u_from_v(r.entries[k - 1].H, r.entries[k - 1].v);
        CHECK(du.maxCoeff() < 0.0);
    }
    // Regular root: a perturbed seed returns the same field.
    const ContinuationEntry& e = r.entries[r.entries.size() / 2];
    const NewtonResult again = newton_solve(e.H, ctx, e.v + bump(ctx, 1e-3), cfg);
    CHECK((again.v - e.v).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(e.v.lpNorm<Eigen::Infinity>() > 1e-6);
}

TEST_CASE("small-data continuation on the closed surface")
{
    SolverConfig cfg;
    const auto m = mesh(2);
    const QDField phi = manufactured_qd_field(*m, 0.01);
    CHECK(qd_sup_norm(*m, phi) <= 0.01 + 1e-15);
    const CmcContext ctx = CmcContext::closed_surface(m, phi);
    const ContinuationResult r = continuation(ctx, -0.9, 0.9, cfg);
    CHECK(r.cross_check < 1e-9);
    for (std::size_t k = 0; k < r.entries.size(); ++k) {
        CHECK(r.entries[k].residual_norm < cfg.newton_tol);
        if (k == 0) continue;
        CHECK(r.entries[k].H > r.entries[k - 1].H);
        const ScalarField du = u_from_v(r.entries[k].H, r.entries[k].v) - u_from_v(r.entries[k - 1].H, r.entries[k - 1].v);
        CHECK(du.maxCoeff() < 0.0);
    }
    CHECK(r.entries.back().v.lpNorm<Eigen::Infinity>() > 1e-7);
}

TEST_CASE("closed-surface context rejects a non-equivariant QD field")
{
    const auto m = mesh(1);
    QDField naive;
    for (Complex z : m->raw_nodes()) naive.values.push_back(Complex(1.0, 0.5) + z * z);
    CHECK(code_of([&] { (void)CmcContext::closed_surface(m, naive); }) == ErrorCode::DomainMismatch);
    CHECK_NOTHROW((void)CmcContext::closed_surface(m, manufactured_qd_field(*m, 0.01)));
    CHECK_NOTHROW((void)CmcContext::closed_surface(m, naive, 1e6));
}

TEST_CASE("continuation reports step underflow")
{
    SolverConfig cfg;
    cfg.newton_tol = 1e-30;
    cfg.h_step = 0.05;
    cfg.h_step_min = 0.01;
    cfg.cross_check = false;
    CHECK(code_of([&] { (void)continuation(cubic_disc(), -0.5, 0.5, cfg); }) == ErrorCode::ContinuationStalled);
}

TEST_CASE("geometric mean curvature of solved leaves")
{
    SolverConfig cfg;
    const CmcContext& fc = fuchsian_disc();
    for (double H : {-0.5, 0.0, 0.6}) {
        const ScalarField u = u_from_v(H, ScalarField::Zero(fc.size()));
        CHECK(geometric_mean_curvature_check(fc, H, u).max_deviation < 1e-4);
    }
    const CmcContext& ctx = cubic_disc();
    const NewtonResult r = newton_solve(0.5, ctx, ScalarField::Zero(ctx.size()), cfg);
    const ScalarField u = u_from_v(0.5, r.v);
    const GeometricCheck coarse = geometric_mean_curvature_check(ctx, 0.5, u, 2e-3);
    const GeometricCheck fine = geometric_mean_curvature_check(ctx, 0.5, u, 1e-3);
    CHECK(fine.max_deviation < 5e-4);
    CHECK(fine.samples.size() == 64);
    CHECK(fine.max_deviation < 0.6 * coarse.max_deviation);
    // The unsolved seed is visibly not CMC.
    const ScalarField u0 = u_from_v(0.5, ScalarField::Zero(ctx.size()));
    CHECK(geometric_mean_curvature_check(ctx, 0.5, u0).max_deviation > 1e-4);
    CHECK(code_of([&] { (void)geometric_mean_curvature_check(fuchsian_mesh(), 0.5, u); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("solved metric interpolates the grid field")
{
    const CmcContext& ctx = cubic_disc();
    const double H = 0.2;
    const ScalarField v = bump(ctx, 0.1);
    const ScalarField u = u_from_v(H, v);
    const ConformalMetric s = solved_metric(ctx, H, u);
    const ConformalMetric p = poincare_disc_metric();
    const Eigen::VectorXcd vz = ctx.dz_operator() * v.cast<Complex>();
    for (int i = 0; i < ctx.size(); i += 97) {
        const Complex z = ctx.position(i);
        if (!s.chart().contains(z)) continue;
        const Jet j = s.log_density(z);
        CHECK(j.value - p.log_density(z).value == doctest::Approx(u[i]).epsilon(1e-12));
        // Interpolant and 4th-order stencil differ by truncation error only.
        CHECK(std::abs(j.dz - p.log_density(z).dz - vz[i]) < 2e-4);
    }
}

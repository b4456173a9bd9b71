// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/epstein.hpp"
#include "hypcmc/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace hypcmc;

namespace {

double dist3(const H3Point& p, const H3Point& q) { return std::hypot(p.x1 - q.x1, p.x2 - q.x2, p.y - q.y); }

ConformalMetric perturbed_poincare(Rng& rng, double amp = 0.2)
{
    const Complex c = rng.complex_in_disc(0.3);
    return poincare_disc_metric().conformal_change(jets::gaussian(c, rng.uniform(0.4, 0.7), rng.uniform(-amp, amp)));
}

H3Sampler sampler_of(const ConformalMetric& s)
{
    return [s](Complex z) { return epstein_point(s, z); };
}

// Geometric oracle for the Epstein point: horizontal offset and height from
// the defining tangency of visual densities, solved by a Newton iteration on
// (x1, x2, y) using only visual_metric_density values and its first jets.
H3Point defining_property_solve(const ConformalMetric& s, Complex z)
{
    const Jet eta = s.log_density(z);
    // Visual log-density log(2y) - log(|z - w|^2 + y^2) must match eta to first order at z.
    // Unknowns: p = (w, y). Equations: value match and z-derivative match.
    H3Point p{z.real(), z.imag(), 1.0};
    for (int it = 0; it < 100; ++it) {
        auto residual = [&](const H3Point& q) {
            const Complex w = q.horizontal();
            const double den = std::norm(z - w) + q.y * q.y;
            const double val = std::log(2 * q.y) - std::log(den);
            const Complex dz = -std::conj(z - w) / den;
            return std::array<double, 3>{val - eta.value, (dz - eta.dz).real(), (dz - eta.dz).imag()};
        };
        const auto r = residual(p);
        if (std::abs(r[0]) + std::abs(r[1]) + std::abs(r[2]) < 1e-15) break;
        double jac[3][3];
        const double e = 1e-7;
        for (int c = 0; c < 3; ++c) {
            H3Point q = p;
            (c == 0 ? q.x1 : c == 1 ? q.x2 : q.y) += e;
            const auto rq = residual(q);
            for (int r2 = 0; r2 < 3; ++r2) jac[r2][c] = (rq[r2] - r[r2]) / e;
        }
        Eigen::Matrix3d J;
        Eigen::Vector3d b;
        for (int i = 0; i < 3; ++i) {
            b(i) = -r[i];
            for (int c = 0; c < 3; ++c) J(i, c) = jac[i][c];
        }
        const Eigen::Vector3d dx = J.fullPivLu().solve(b);
        p.x1 += dx(0);
        p.x2 += dx(1);
        p.y = std::max(0.5 * p.y, p.y + dx(2));
    }
    return p;
}

} // namespace

TEST_CASE("epstein_point examples")
{
    Rng rng(21);
    const ConformalMetric sph = spherical_metric(Chart::disc(0.0, 4.0));
    for (int k = 0; k < 10; ++k) {
        const Complex z = rng.complex_in_disc(3.0);
        CHECK(dist3(epstein_point(sph, z), H3Point{0, 0, 1}) < 1e-12);
    }
    CHECK(dist3(epstein_point(poincare_disc_metric(), 0.0), H3Point{0, 0, 1}) < 1e-15);
    for (int k = 0; k < 10; ++k) {
        const Complex z = rng.complex_in_disc(0.95);
        const double q = 1 + std::norm(z);
        const H3Point ref{2 * z.real() / q, 2 * z.imag() / q, (1 - std::norm(z)) / q};
        CHECK(dist3(epstein_point(poincare_disc_metric(), z), ref) < 1e-12);
    }
    for (double t : {-0.5, 0.4, 1.2}) {
        CHECK(dist3(epstein_point(poincare_disc_metric().scaled(t), 0.0), H3Point{0, 0, std::exp(-t)}) < 1e-14);
    }
    CHECK(dist3(epstein_point(flat_metric(Chart::disc()), {0.2, 0.1}), H3Point{0.2, 0.1, 2.0}) < 1e-15);
}

TEST_CASE("epstein_point satisfies the defining tangency")
{
    Rng rng(22);
    for (int k = 0; k < 20; ++k) {
        const ConformalMetric s = perturbed_poincare(rng);
        const Complex z = rng.complex_in_disc(0.6);
        CHECK(dist3(epstein_point(s, z), defining_property_solve(s, z)) < 1e-8);
    }
}

TEST_CASE("visual_defining_residual")
{
    Rng rng(23);
    const ConformalMetric sph = spherical_metric(Chart::disc(0.0, 4.0));
    const ConformalMetric quad = poincare_disc_metric().conformal_change(jets::harmonic({0.0, 0.0, 0.1}));
    for (int k = 0; k < 30; ++k) {
        const Complex z = rng.complex_in_disc(0.9);
        CHECK(visual_defining_residual(sph, z) < 1e-10);
        CHECK(visual_defining_residual(poincare_disc_metric(), z) < 1e-9 * poincare_disc_metric().density(z));
        CHECK(visual_defining_residual(quad, z) < 1e-7);
        CHECK(visual_defining_residual(perturbed_poincare(rng), z) < 1e-7);
    }
}

TEST_CASE("epstein_chart")
{
    Rng rng(24);
    const Chart disc = Chart::disc();
    const ConformalMetric P = poincare_disc_metric();
    for (int k = 0; k < 10; ++k) {
        const ConformalMetric s = perturbed_poincare(rng);
        const Complex z = rng.complex_in_disc(0.6);
        CHECK(dist3(epstein_chart(identity_map(disc), s, z), epstein_point(s, z)) < 1e-15);

        const MoebiusMap m = test::random_disc_automorphism(rng, 0.5);
        const HoloMap f = moebius_holomap(m, disc);
        const ConformalMetric fP = pullback_metric(f, P);
        CHECK(dist3(epstein_chart(f, fP, z), apply_h3(m, epstein_point(P, z))) < 1e-10);
    }
    // Pushforward along z + eps z^3 equals the Epstein point of P at f(z), since P = f^* (f_* P).
    const HoloMap g = cubic_perturbation(0.05, Chart::disc(0.0, 0.9));
    const ConformalMetric gP = pullback_metric(g, P);
    const Complex z(0.3, 0.2);
    CHECK(dist3(epstein_chart(g, gP, z), epstein_point(P, g(z))) < 1e-12);
    const HoloMap bad(disc, [](Complex w) { return HoloJet{w, 0.0, 1.0, 0.0}; });
    CHECK_THROWS_AS(epstein_chart(bad, P, 0.1), Error);
}

TEST_CASE("Moebius equivariance of epstein_point")
{
    Rng rng(25);
    const Chart disc = Chart::disc();
    for (int k = 0; k < 20; ++k) {
        const MoebiusMap m = test::random_disc_automorphism(rng, 0.4);
        const ConformalMetric s = perturbed_poincare(rng);
        // m_* s = (m^{-1})^* s
        const ConformalMetric pushed = pullback_metric(moebius_holomap(m.inverse(), disc), s);
        const Complex z = rng.complex_in_disc(0.4);
        CHECK(dist3(epstein_point(pushed, m(z)), apply_h3(m, epstein_point(s, z))) < 1e-8);
    }
}

TEST_CASE("fd_geometry on the umbilical families")
{
    const Complex z(0.2, -0.1);
    const EpsteinSample hemi = fd_geometry(sampler_of(poincare_disc_metric()), z, 1e-3);
    CHECK(std::abs(hemi.mean_curv) < 1e-5);
    CHECK(std::abs(hemi.principal.first) < 1e-5);
    CHECK(std::abs(hemi.principal.second) < 1e-5);

    const ConformalMetric flat = flat_metric(Chart::disc());
    const H3Sampler horosphere = [&](Complex w) { return epstein_point(flat, w); };
    const EpsteinSample h = fd_geometry(horosphere, z, 1e-3);
    CHECK(std::abs(h.point.y - 2.0) < 1e-15);
    CHECK(std::abs(std::abs(h.principal.first) - 1) < 1e-5);
    CHECK(std::abs(std::abs(h.principal.second) - 1) < 1e-5);
    CHECK(std::abs(h.mean_curv + 1.0) < 1e-5);

    const EpsteinSample eq = fd_geometry(sampler_of(poincare_disc_metric().scaled(0.4)), z, 1e-3);
    CHECK(std::abs(std::abs(eq.mean_curv) - 0.379949) < 1e-4);
    CHECK(std::abs(eq.mean_curv + std::tanh(0.4)) < 1e-5);
    CHECK(std::abs(eq.principal.first - eq.principal.second) < 1e-5);
    CHECK(eq.normal[2] > 0.0);
}

TEST_CASE("EpsteinSample invariants")
{
    Rng rng(26);
    for (int k = 0; k < 10; ++k) {
        const ConformalMetric s = perturbed_poincare(rng);
        const EpsteinSample e = fd_geometry(sampler_of(s), rng.complex_in_disc(0.5), 1e-3);
        CHECK(e.first_ff.determinant() > 0.0);
        CHECK(e.first_ff(0, 0) > 0.0);
        CHECK(std::abs(e.mean_curv - 0.5 * (e.principal.first + e.principal.second)) < 1e-12);
        CHECK(e.principal.first <= e.principal.second);
        const double n = std::hypot(e.normal[0], e.normal[1], e.normal[2]) / e.point.y;
        CHECK(std::abs(n - 1.0) < 1e-10);
    }
}

TEST_CASE("fd_geometry rejects non-immersed samplers")
{
    const H3Sampler constant = [](Complex) { return H3Point{0, 0, 1}; };
    CHECK_THROWS_AS(fd_geometry(constant, 0.1, 1e-3), Error);
    const H3Sampler line = [](Complex z) { return H3Point{z.real(), 0, 1}; };
    CHECK_THROWS_AS(fd_geometry(line, 0.1, 1e-3), Error);
}

TEST_CASE("mean_curvature_formula examples")
{
    const Chart disc = Chart::disc();
    const QuadDifferential zero = zero_differential(disc);
    for (double h0 : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        const double u0 = -0.5 * std::log((1 + h0) / (1 - h0));
        const ConformalMetric s = poincare_disc_metric().scaled(u0);
        for (Complex z : {Complex(0.0), Complex(0.3, 0.4), Complex(-0.7, 0.1)}) {
            CHECK(std::abs(mean_curvature_formula(s, zero, z) - h0) < 1e-12);
        }
    }
    CHECK(std::abs(mean_curvature_formula(flat_metric(disc), zero, 0.2) + 1.0) < 1e-15);
    CHECK(std::abs(mean_curvature_formula(poincare_disc_metric(), zero, 0.2)) < 1e-15);
    // K = 1, B = 0: the Epstein map is constant and the formula degenerates.
    CHECK_THROWS_AS(mean_curvature_formula(spherical_metric(disc), zero, 0.2), Error);
}

namespace {

double cross_oracle_gap(const HoloMap& f, const ConformalMetric& s, Complex z, double step)
{
    const H3Sampler sampler = [&](Complex w) { return epstein_chart(f, s, w); };
    const double fd = fd_geometry(sampler, z, step).mean_curv;
    return std::abs(fd - mean_curvature_formula(s, schwarzian_differential(f), z));
}

} // namespace

TEST_CASE("finite-difference geometry agrees with the mean-curvature formula")
{
    Rng rng(27);
    const HoloMap maps[] = {identity_map(Chart::disc()), cubic_perturbation(0.05)};
    for (const HoloMap& f : maps) {
        for (int k = 0; k < 6; ++k) {
            const ConformalMetric s = perturbed_poincare(rng);
            const Complex z = rng.complex_in_disc(0.5);
            CHECK(cross_oracle_gap(f, s, z, 1e-3) < 1e-4);
            const double e1 = cross_oracle_gap(f, s, z, 2e-2);
            const double e2 = cross_oracle_gap(f, s, z, 1e-2);
            CHECK(std::log2(e1 / e2) >= 1.8);
        }
    }
}

TEST_CASE("Richardson scheme is fourth order")
{
    Rng rng(28);
    const ConformalMetric s = perturbed_poincare(rng);
    const Complex z(0.1, 0.2);
    const double ref = mean_curvature_formula(s, zero_differential(Chart::disc()), z);
    auto gap = [&](double h) { return std::abs(fd_geometry(sampler_of(s), z, h, FdScheme::Richardson).mean_curv - ref); };
    CHECK(std::log2(gap(4e-2) / gap(2e-2)) >= 3.5);
}

TEST_CASE("surface exports")
{
    const auto dir = std::filesystem::temp_directory_path();
    const GridSpec g{-0.5, -0.5, 0.25, 5, 5};
    const std::string obj = (dir / "hypcmc_eps.obj").string();
    write_epstein_obj(obj, sampler_of(poincare_disc_metric()), g);
    std::ifstream in(obj);
    int v = 0, f = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    CHECK(v == 25);
    CHECK(f == 32);
    const std::string csv = (dir / "hypcmc_eps.csv").string();
    write_epstein_samples_csv(csv, {fd_geometry(sampler_of(poincare_disc_metric()), 0.1)});
    std::ifstream c(csv);
    std::string header;
    std::getline(c, header);
    CHECK(header == "re_z,im_z,x1,x2,y,H,lambda1,lambda2");
    std::remove(obj.c_str());
    std::remove(csv.c_str());
}

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/epstein.hpp"

#include "hypcmc/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>

namespace hypcmc {

namespace {

using Vec3 = Eigen::Vector3d;

Vec3 to_vec(const H3Point& p) { return {p.x1, p.x2, p.y}; }

// Christoffel term of the half-space metric |dx|^2 / y^2.
Vec3 christoffel(const Vec3& a, const Vec3& b, double y)
{
    return (-(a.z() * b + b.z() * a) + a.dot(b) * Vec3::UnitZ()) / y;
}

struct Derivatives {
    Vec3 p, xu, xv, xuu, xuv, xvv;
};

Derivatives central(const H3Sampler& s, Complex z, double h)
{
    auto at = [&](int i, int j) { return to_vec(s(z + Complex(i * h, j * h))); };
    Derivatives d;
    d.p = at(0, 0);
    const Vec3 e = at(1, 0), w = at(-1, 0), n = at(0, 1), so = at(0, -1);
    d.xu = (e - w) / (2 * h);
    d.xv = (n - so) / (2 * h);
    d.xuu = (e - 2 * d.p + w) / (h * h);
    d.xvv = (n - 2 * d.p + so) / (h * h);
    d.xuv = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
    return d;
}

} // namespace

H3Point epstein_point(const Jet& eta, Complex z)
{
    const double e = std::exp(eta.value);
    const double c = 2.0 / (e * e + 4.0 * std::norm(eta.dz));
    const Complex horiz = z + c * 2.0 * std::conj(eta.dz);
    return {horiz.real(), horiz.imag(), c * e};
}

H3Point epstein_point(const ConformalMetric& sigma, Complex z) { return epstein_point(sigma.log_density(z), z); }

H3Point epstein_chart(const HoloMap& f, const ConformalMetric& sigma, Complex z)
{
    const HoloJet j = f.eval(z);
    if (std::abs(j.d1) < 1e-12) fail(ErrorCode::DegenerateDerivative, "f' vanishes");
    const Jet eta = sigma.log_density(z);
    Jet pushed;
    pushed.value = eta.value - std::log(std::abs(j.d1));
    pushed.dz = (eta.dz - 0.5 * j.d2 / j.d1) / j.d1;
    return epstein_point(pushed, j.f);
}

EpsteinSample fd_geometry(const H3Sampler& sampler, Complex z, double step, FdScheme scheme)
{
    if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "finite-difference step must be positive");
    Derivatives d = central(sampler, z, step);
    if (scheme == FdScheme::Richardson) {
        const Derivatives c = central(sampler, z, 2 * step);
        d.xu = (4 * d.xu - c.xu) / 3;
        d.xv = (4 * d.xv - c.xv) / 3;
        d.xuu = (4 * d.xuu - c.xuu) / 3;
        d.xuv = (4 * d.xuv - c.xuv) / 3;
        d.xvv = (4 * d.xvv - c.xvv) / 3;
    }
    const double y = d.p.z();
    if (!(y > 0.0)) fail(ErrorCode::OutOfDomain, "sampled point is not in upper half-space");

    EpsteinSample out;
    out.z = z;
    out.point = {d.p.x(), d.p.y(), y};
    const double y2 = y * y;
    Eigen::Matrix2d first;
    first << d.xu.squaredNorm(), d.xu.dot(d.xv), d.xu.dot(d.xv), d.xv.squaredNorm();
    first /= y2;
    if (first.determinant() < 1e-10) fail(ErrorCode::NonImmersion, "tangent vectors are degenerate");

    const Vec3 cross = d.xu.cross(d.xv);
    const Vec3 normal = y * cross / cross.norm();
    const Vec3 duu = d.xuu + christoffel(d.xu, d.xu, y);
    const Vec3 duv = d.xuv + christoffel(d.xu, d.xv, y);
    const Vec3 dvv = d.xvv + christoffel(d.xv, d.xv, y);
    Eigen::Matrix2d second;
    second << normal.dot(duu), normal.dot(duv), normal.dot(duv), normal.dot(dvv);
    second /= -y2;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> eig(second, first, Eigen::EigenvaluesOnly);
    out.normal = {normal.x(), normal.y(), normal.z()};
    out.first_ff = first;
    out.second_ff = second;
    out.principal = {eig.eigenvalues()(0), eig.eigenvalues()(1)};
    out.mean_curv = 0.5 * (out.principal.first + out.principal.second);
    return out;
}

double mean_curvature_formula(const Jet& eta, Complex phi_dev)
{
    const double k = -std::exp(-2.0 * eta.value) * 4.0 * eta.dzzbar;
    const double n = std::exp(-2.0 * eta.value) * std::abs(b_tensor(eta) - 0.5 * phi_dev);
    const double n16 = 16.0 * n * n;
    const double den = (k - 1.0) * (k - 1.0) - n16;
    if (std::abs(den) < 1e-10) fail(ErrorCode::NonImmersion, "mean-curvature denominator vanishes");
    return (k * k - 1.0 - n16) / den;
}

double mean_curvature_formula(const ConformalMetric& sigma, const QuadDifferential& phi_dev, Complex z)
{
    return mean_curvature_formula(sigma.log_density(z), phi_dev.coeff(z));
}

double visual_defining_residual(const ConformalMetric& sigma, Complex z)
{
    const Jet eta = sigma.log_density(z);
    return std::abs(visual_metric_density(epstein_point(eta, z), z) - std::exp(2.0 * eta.value));
}

void write_epstein_obj(const std::string& path, const H3Sampler& sampler, const GridSpec& grid)
{
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) fail(ErrorCode::Io, "cannot write " + path);
    std::fprintf(f, "# hypcmc Epstein surface, %d x %d nodes\n", grid.nx, grid.ny);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const H3Point p = sampler(grid.node(i, j));
            std::fprintf(f, "v %.17g %.17g %.17g\n", p.x1, p.x2, p.y);
        }
    }
    for (int j = 0; j + 1 < grid.ny; ++j) {
        for (int i = 0; i + 1 < grid.nx; ++i) {
            const int a = grid.index(i, j) + 1, b = grid.index(i + 1, j) + 1;
            const int c = grid.index(i + 1, j + 1) + 1, d = grid.index(i, j + 1) + 1;
            std::fprintf(f, "f %d %d %d\nf %d %d %d\n", a, b, c, a, c, d);
        }
    }
    std::fclose(f);
}

void write_epstein_samples_csv(const std::string& path, const std::vector<EpsteinSample>& samples)
{
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) fail(ErrorCode::Io, "cannot write " + path);
    std::fprintf(f, "re_z,im_z,x1,x2,y,H,lambda1,lambda2\n");
    for (const auto& s : samples) {
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.z.real(), s.z.imag(), s.point.x1,
                     s.point.x2, s.point.y, s.mean_curv, s.principal.first, s.principal.second);
    }
    std::fclose(f);
}

} // namespace hypcmc

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/conformal.hpp"

#include "hypcmc/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace hypcmc {

// ---------------------------------------------------------------- Chart

Chart Chart::disc(Complex center, double radius)
{
    if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "disc radius must be positive");
    Chart c;
    c.kind_ = Kind::Disc;
    c.center_ = center;
    c.p0_ = radius;
    return c;
}

Chart Chart::half_plane()
{
    Chart c;
    c.kind_ = Kind::HalfPlane;
    return c;
}

Chart Chart::rectangle(double x0, double x1, double y0, double y1)
{
    if (!(x1 > x0 && y1 > y0)) fail(ErrorCode::InvalidArgument, "empty rectangle");
    Chart c;
    c.kind_ = Kind::Rectangle;
    c.p0_ = x0;
    c.p1_ = x1;
    c.p2_ = y0;
    c.p3_ = y1;
    return c;
}

Chart Chart::annulus(Complex center, double inner, double outer)
{
    if (!(inner >= 0.0 && outer > inner)) fail(ErrorCode::InvalidArgument, "empty annulus");
    Chart c;
    c.kind_ = Kind::Annulus;
    c.center_ = center;
    c.p0_ = inner;
    c.p1_ = outer;
    return c;
}

bool Chart::contains(Complex z) const
{
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    switch (kind_) {
    case Kind::Disc:
        return std::abs(z - center_) < p0_;
    case Kind::HalfPlane:
        return z.imag() > 0.0;
    case Kind::Rectangle:
        return z.real() > p0_ && z.real() < p1_ && z.imag() > p2_ && z.imag() < p3_;
    case Kind::Annulus: {
        const double r = std::abs(z - center_);
        return r > p0_ && r < p1_;
    }
    }
    return false;
}

std::vector<Complex> Chart::probe_points() const
{
    constexpr int kAngles = 64;
    constexpr double kInset = 1e-3;
    std::vector<Complex> pts;
    auto circle = [&](Complex c, double r) {
        for (int k = 0; k < kAngles; ++k) {
            pts.push_back(c + std::polar(r, 2.0 * std::numbers::pi * k / kAngles));
        }
    };
    switch (kind_) {
    case Kind::Disc:
        pts.push_back(center_);
        circle(center_, p0_ * (1.0 - kInset));
        circle(center_, 0.5 * p0_);
        break;
    case Kind::HalfPlane:
        for (int k = -8; k <= 8; ++k) {
            pts.emplace_back(k, kInset);
            pts.emplace_back(k, 1.0);
        }
        break;
    case Kind::Rectangle: {
        const double ex = kInset * (p1_ - p0_);
        const double ey = kInset * (p3_ - p2_);
        for (int k = 0; k <= 16; ++k) {
            const double s = k / 16.0;
            const double x = p0_ + ex + s * (p1_ - p0_ - 2 * ex);
            const double y = p2_ + ey + s * (p3_ - p2_ - 2 * ey);
            pts.emplace_back(x, p2_ + ey);
            pts.emplace_back(x, p3_ - ey);
            pts.emplace_back(p0_ + ex, y);
            pts.emplace_back(p1_ - ex, y);
        }
        pts.emplace_back(0.5 * (p0_ + p1_), 0.5 * (p2_ + p3_));
        break;
    }
    case Kind::Annulus:
        circle(center_, p0_ + kInset * (p1_ - p0_));
        circle(center_, p1_ - kInset * (p1_ - p0_));
        break;
    }
    return pts;
}

std::string Chart::describe() const
{
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
    case Kind::Disc:
        os << "disc(center=" << center_ << ", radius=" << p0_ << ")";
        break;
    case Kind::HalfPlane:
        os << "half_plane";
        break;
    case Kind::Rectangle:
        os << "rectangle(" << p0_ << ", " << p1_ << ", " << p2_ << ", " << p3_ << ")";
        break;
    case Kind::Annulus:
        os << "annulus(center=" << center_ << ", " << p0_ << ", " << p1_ << ")";
        break;
    }
    return os.str();
}

// ---------------------------------------------------------------- metrics

ConformalMetric ConformalMetric::analytic(Chart chart, RealJetFn log_density)
{
    ConformalMetric m;
    m.mode_ = Mode::Analytic;
    m.chart_ = std::move(chart);
    m.fn_ = std::move(log_density);
    return m;
}

ConformalMetric ConformalMetric::grid(const GridSpec& spec, std::vector<double> samples,
                                      const ConformalMetric* base)
{
    if (spec.nx < 2 * kGridMargin + 1 || spec.ny < 2 * kGridMargin + 1 || !(spec.h > 0.0)) {
        fail(ErrorCode::InvalidArgument, "grid too small for 4th-order differences");
    }
    if (static_cast<int>(samples.size()) != spec.size()) {
        fail(ErrorCode::SizeMismatch, "grid sample count does not match the grid");
    }
    auto data = std::make_shared<GridData>();
    data->spec = spec;
    data->samples = std::move(samples);
    if (base != nullptr) {
        if (base->mode() != Mode::Analytic) fail(ErrorCode::InvalidArgument, "grid base must be analytic");
        for (int j = 0; j < spec.ny; ++j) {
            for (int i = 0; i < spec.nx; ++i) {
                if (!base->chart().contains(spec.node(i, j))) {
                    fail(ErrorCode::DomainMismatch, "grid leaves the chart of its base metric");
                }
            }
        }
        data->base = std::make_shared<const ConformalMetric>(*base);
    }
    ConformalMetric m;
    m.mode_ = Mode::Grid;
    m.chart_ = Chart::rectangle(spec.x0, spec.x0 + (spec.nx - 1) * spec.h, spec.y0,
                                spec.y0 + (spec.ny - 1) * spec.h);
    m.grid_ = std::move(data);
    return m;
}

Jet ConformalMetric::log_density(Complex z) const
{
    if (mode_ == Mode::Grid) return grid_jet(z);
    if (!chart_.contains(z)) fail(ErrorCode::OutOfDomain, "point outside " + chart_.describe());
    return fn_(z);
}

double ConformalMetric::density(Complex z) const { return std::exp(2.0 * log_density(z).value); }

Jet ConformalMetric::grid_jet(Complex z) const
{
    const GridSpec& g = grid_->spec;
    const double fi = (z.real() - g.x0) / g.h;
    const double fj = (z.imag() - g.y0) / g.h;
    const long i = std::lround(fi);
    const long j = std::lround(fj);
    constexpr double kNodeTol = 1e-8;
    if (std::abs(fi - i) > kNodeTol || std::abs(fj - j) > kNodeTol) {
        fail(ErrorCode::OutOfDomain, "grid metric queried off the grid nodes");
    }
    if (i < kGridMargin || j < kGridMargin || i > g.nx - 1 - kGridMargin || j > g.ny - 1 - kGridMargin) {
        fail(ErrorCode::OutOfDomain, "grid metric queried inside the differencing margin");
    }
    const auto& s = grid_->samples;
    auto at = [&](long di, long dj) { return s[(j + dj) * g.nx + (i + di)]; };
    // 4th-order central weights for the first and second derivative.
    static constexpr double d1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    static constexpr double d2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
    double ex = 0, ey = 0, exx = 0, eyy = 0, exy = 0;
    for (int k = 0; k < 5; ++k) {
        ex += d1[k] * at(k - 2, 0);
        ey += d1[k] * at(0, k - 2);
        exx += d2[k] * at(k - 2, 0);
        eyy += d2[k] * at(0, k - 2);
        for (int l = 0; l < 5; ++l) exy += d1[k] * d1[l] * at(k - 2, l - 2);
    }
    const double h = g.h;
    ex /= h;
    ey /= h;
    exx /= h * h;
    eyy /= h * h;
    exy /= h * h;
    Jet jet;
    jet.value = at(0, 0);
    jet.dz = 0.5 * Complex(ex, -ey);
    jet.dzz = 0.25 * Complex(exx - eyy, -2.0 * exy);
    jet.dzzbar = 0.25 * (exx + eyy);
    if (grid_->base) jet += grid_->base->log_density(g.node(static_cast<int>(i), static_cast<int>(j)));
    return jet;
}

ConformalMetric ConformalMetric::scaled(double t) const
{
    if (mode_ == Mode::Grid) {
        std::vector<double> s = grid_->samples;
        for (double& v : s) v += t;
        return grid(grid_->spec, std::move(s), grid_->base.get());
    }
    return conformal_change(jets::constant(t));
}

ConformalMetric ConformalMetric::conformal_change(RealJetFn u) const
{
    if (mode_ != Mode::Analytic) fail(ErrorCode::InvalidArgument, "conformal_change needs an analytic metric");
    RealJetFn base = fn_;
    return analytic(chart_, [base, u](Complex z) { return base(z) + u(z); });
}

const GridSpec& ConformalMetric::grid_spec() const
{
    if (!grid_) fail(ErrorCode::InvalidArgument, "not a grid metric");
    return grid_->spec;
}

const std::vector<double>& ConformalMetric::grid_samples() const
{
    if (!grid_) fail(ErrorCode::InvalidArgument, "not a grid metric");
    return grid_->samples;
}

const ConformalMetric* ConformalMetric::grid_base() const { return grid_ ? grid_->base.get() : nullptr; }

ConformalMetric flat_metric(const Chart& chart)
{
    return ConformalMetric::analytic(chart, [](Complex) { return Jet{}; });
}

ConformalMetric poincare_disc_metric()
{
    return ConformalMetric::analytic(Chart::disc(), [](Complex z) {
        const double q = 1.0 - std::norm(z);
        Jet j;
        j.value = std::log(2.0 / q);
        j.dz = std::conj(z) / q;
        j.dzz = j.dz * j.dz;
        j.dzzbar = 1.0 / (q * q);
        return j;
    });
}

ConformalMetric poincare_half_plane_metric()
{
    return ConformalMetric::analytic(Chart::half_plane(), [](Complex z) {
        const double y = z.imag();
        Jet j;
        j.value = -std::log(y);
        j.dz = Complex(0.0, 0.5 / y);
        j.dzz = -0.25 / (y * y);
        j.dzzbar = 0.25 / (y * y);
        return j;
    });
}

ConformalMetric spherical_metric(const Chart& chart)
{
    return ConformalMetric::analytic(chart, [](Complex z) {
        const double q = 1.0 + std::norm(z);
        Jet j;
        j.value = std::log(2.0 / q);
        j.dz = -std::conj(z) / q;
        j.dzz = j.dz * j.dz;
        j.dzzbar = -1.0 / (q * q);
        return j;
    });
}

namespace jets {

RealJetFn constant(double c)
{
    return [c](Complex) {
        Jet j;
        j.value = c;
        return j;
    };
}

RealJetFn harmonic(std::vector<Complex> coeffs)
{
    return [coeffs = std::move(coeffs)](Complex z) {
        // Horner for p, p', p''.
        Complex p{}, dp{}, ddp{};
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
            ddp = ddp * z + 2.0 * dp;
            dp = dp * z + p;
            p = p * z + *it;
        }
        Jet j;
        j.value = p.real();
        j.dz = 0.5 * dp;
        j.dzz = 0.5 * ddp;
        return j;
    };
}

RealJetFn gaussian(Complex center, double width, double amplitude)
{
    const double s2 = width * width;
    return [=](Complex z) {
        const Complex w = z - center;
        const double r2 = std::norm(w);
        const double g = amplitude * std::exp(-r2 / s2);
        Jet j;
        j.value = g;
        j.dz = -g * std::conj(w) / s2;
        j.dzz = g * std::conj(w) * std::conj(w) / (s2 * s2);
        j.dzzbar = g * (r2 / (s2 * s2) - 1.0 / s2);
        return j;
    };
}

RealJetFn sum(RealJetFn a, RealJetFn b)
{
    return [a = std::move(a), b = std::move(b)](Complex z) { return a(z) + b(z); };
}

} // namespace jets

// ---------------------------------------------------------------- holomorphic maps

HoloJet HoloMap::eval(Complex z) const
{
    if (!chart_.contains(z)) fail(ErrorCode::OutOfDomain, "holomorphic map evaluated outside " + chart_.describe());
    return fn_(z);
}

HoloMap identity_map(const Chart& chart)
{
    return HoloMap(chart, [](Complex z) { return HoloJet{z, 1.0, 0.0, 0.0}; });
}

HoloMap moebius_holomap(const MoebiusMap& m, const Chart& chart)
{
    return HoloMap(chart, [m](Complex z) {
        const Complex den = m.c() * z + m.d();
        const Complex inv = 1.0 / den;
        const Complex inv2 = inv * inv;
        return HoloJet{(m.a() * z + m.b()) * inv, inv2, -2.0 * m.c() * inv2 * inv,
                       6.0 * m.c() * m.c() * inv2 * inv2};
    });
}

HoloMap cubic_perturbation(double eps, const Chart& chart)
{
    return HoloMap(chart, [eps](Complex z) {
        return HoloJet{z + eps * z * z * z, 1.0 + 3.0 * eps * z * z, 6.0 * eps * z, 6.0 * eps};
    });
}

HoloMap exponential_map(const Chart& chart)
{
    return HoloMap(chart, [](Complex z) {
        const Complex e = std::exp(z);
        return HoloJet{e, e, e, e};
    });
}

HoloMap compose(const HoloMap& g, const HoloMap& f)
{
    return HoloMap(f.chart(), [g, f](Complex z) {
        const HoloJet a = f.eval(z);
        const HoloJet b = g.eval(a.f);
        HoloJet r;
        r.f = b.f;
        r.d1 = b.d1 * a.d1;
        r.d2 = b.d2 * a.d1 * a.d1 + b.d1 * a.d2;
        r.d3 = b.d3 * a.d1 * a.d1 * a.d1 + 3.0 * b.d2 * a.d1 * a.d2 + b.d1 * a.d3;
        return r;
    });
}

// ---------------------------------------------------------------- quadratic differentials

Complex QuadDifferential::coeff(Complex z) const
{
    if (!chart_.contains(z)) fail(ErrorCode::OutOfDomain, "quadratic differential evaluated outside " + chart_.describe());
    return fn_(z);
}

QuadDifferential zero_differential(const Chart& chart)
{
    return QuadDifferential(chart, [](Complex) { return Complex{}; });
}

QuadDifferential constant_differential(Complex c, const Chart& chart)
{
    return QuadDifferential(chart, [c](Complex) { return c; });
}

QuadDifferential schwarzian_differential(const HoloMap& f)
{
    return QuadDifferential(f.chart(), [f](Complex z) { return schwarzian(f, z); });
}

QuadDifferential pullback_differential(const HoloMap& f, const QuadDifferential& phi)
{
    return QuadDifferential(f.chart(), [f, phi](Complex z) {
        const HoloJet j = f.eval(z);
        return phi.coeff(j.f) * j.d1 * j.d1;
    });
}

// ---------------------------------------------------------------- operations

double curvature(const ConformalMetric& sigma, Complex z)
{
    const Jet eta = sigma.log_density(z);
    return -std::exp(-2.0 * eta.value) * 4.0 * eta.dzzbar;
}

Complex schwarzian(const HoloMap& f, Complex z)
{
    const HoloJet j = f.eval(z);
    if (std::abs(j.d1) < 1e-12) fail(ErrorCode::DegenerateDerivative, "f' vanishes");
    const Complex pre = j.d2 / j.d1;
    return j.d3 / j.d1 - 1.5 * pre * pre;
}

Complex b_tensor(const Jet& eta) { return eta.dzz - eta.dz * eta.dz; }

Complex schwarzian_tensor(const ConformalMetric& sigma1, const ConformalMetric& sigma2, Complex z)
{
    return b_tensor(sigma2.log_density(z)) - b_tensor(sigma1.log_density(z));
}

Complex b_tensor(const ConformalMetric& sigma, Complex z) { return b_tensor(sigma.log_density(z)); }

double qd_norm(const QuadDifferential& phi, const ConformalMetric& sigma, Complex z)
{
    const Jet eta = sigma.log_density(z);
    return std::exp(-2.0 * eta.value) * std::abs(phi.coeff(z));
}

Jet pullback_jet(const Jet& eta, const HoloJet& f)
{
    const Complex d1 = f.d1;
    const Complex pre = f.d2 / d1;
    Jet j;
    j.value = eta.value + std::log(std::abs(d1));
    j.dz = eta.dz * d1 + 0.5 * pre;
    j.dzz = eta.dzz * d1 * d1 + eta.dz * f.d2 + 0.5 * (f.d3 / d1 - pre * pre);
    j.dzzbar = eta.dzzbar * std::norm(d1);
    return j;
}

ConformalMetric pullback_metric(const HoloMap& f, const ConformalMetric& sigma)
{
    for (Complex p : f.chart().probe_points()) {
        if (!f.chart().contains(p)) continue;
        if (!sigma.chart().contains(f(p))) {
            fail(ErrorCode::DomainMismatch, "map leaves the chart of the metric being pulled back");
        }
    }
    return ConformalMetric::analytic(f.chart(), [f, sigma](Complex z) {
        const HoloJet j = f.eval(z);
        if (std::abs(j.d1) < 1e-12) fail(ErrorCode::DegenerateDerivative, "f' vanishes");
        if (!sigma.chart().contains(j.f)) fail(ErrorCode::DomainMismatch, "image leaves the metric chart");
        return pullback_jet(sigma.log_density(j.f), j);
    });
}

// ---------------------------------------------------------------- CSV

void write_grid_metric_csv(const std::string& path, const ConformalMetric& sigma)
{
    const GridSpec& g = sigma.grid_spec();
    const auto& s = sigma.grid_samples();
    const ConformalMetric* base = sigma.grid_base();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) fail(ErrorCode::Io, "cannot write " + path);
    std::fprintf(f, "# hypcmc grid metric\n# x0=%.17g y0=%.17g h=%.17g nx=%d ny=%d\nre_z,im_z,eta\n", g.x0,
                 g.y0, g.h, g.nx, g.ny);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Complex z = g.node(i, j);
            double eta = s[g.index(i, j)];
            if (base != nullptr) eta += base->log_density(z).value;
            std::fprintf(f, "%.17g,%.17g,%.17g\n", z.real(), z.imag(), eta);
        }
    }
    std::fclose(f);
}

ConformalMetric read_grid_metric_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read " + path);
    std::string line;
    GridSpec g;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.rfind("# x0=", 0) == 0) {
            if (std::sscanf(line.c_str(), "# x0=%lf y0=%lf h=%lf nx=%d ny=%d", &g.x0, &g.y0, &g.h, &g.nx, &g.ny) != 5) {
                fail(ErrorCode::Io, "malformed grid header in " + path);
            }
            have_header = true;
        } else if (line.rfind("re_z", 0) == 0) {
            break;
        }
    }
    if (!have_header || g.nx <= 0 || g.ny <= 0) fail(ErrorCode::Io, "missing grid header in " + path);
    std::vector<double> samples;
    samples.reserve(g.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double re = 0, im = 0, eta = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &re, &im, &eta) != 3) fail(ErrorCode::Io, "malformed row in " + path);
        const int k = static_cast<int>(samples.size());
        if (k >= g.size()) fail(ErrorCode::Io, "too many rows in " + path);
        const Complex node = g.node(k % g.nx, k / g.nx);
        if (std::abs(node - Complex(re, im)) > 1e-9 * std::max(1.0, std::abs(node))) {
            fail(ErrorCode::Io, "row does not match the declared grid in " + path);
        }
        samples.push_back(eta);
    }
    if (static_cast<int>(samples.size()) != g.size()) fail(ErrorCode::Io, "row count mismatch in " + path);
    return ConformalMetric::grid(g, std::move(samples));
}

} // namespace hypcmc

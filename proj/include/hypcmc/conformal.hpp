// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hypcmc/moebius_h3.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

// Complex-derivative convention used throughout:
//   d/dz = (d/dx - i d/dy) / 2,   d/dzbar = (d/dx + i d/dy) / 2,
// so the flat Laplacian is 4 d^2/dz dzbar.

namespace hypcmc {

/// Second-order jet of a real function: value, d/dz, d^2/dz^2 and d^2/dz dzbar.
/// The zbar derivatives follow by conjugation because the function is real.
struct Jet {
    double value = 0.0;
    Complex dz{};
    Complex dzz{};
    double dzzbar = 0.0;

    Jet& operator+=(const Jet& o)
    {
        value += o.value;
        dz += o.dz;
        dzz += o.dzz;
        dzzbar += o.dzzbar;
        return *this;
    }
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator*(double s, Jet a)
    {
        a.value *= s;
        a.dz *= s;
        a.dzz *= s;
        a.dzzbar *= s;
        return a;
    }
};

using RealJetFn = std::function<Jet(Complex)>;

/// Planar chart: disc, upper half-plane, rectangle or annulus.
class Chart {
public:
    enum class Kind { Disc, HalfPlane, Rectangle, Annulus };

    static Chart disc(Complex center = 0.0, double radius = 1.0);
    static Chart half_plane();
    static Chart rectangle(double x0, double x1, double y0, double y1);
    static Chart annulus(Complex center, double inner, double outer);

    Kind kind() const { return kind_; }
    bool contains(Complex z) const;
    /// Points just inside the chart boundary plus a few interior points
    /// (used to validate that a map sends one chart into another).
    std::vector<Complex> probe_points() const;
    std::string describe() const;

private:
    Kind kind_ = Kind::Disc;
    Complex center_{};
    double p0_ = 0.0, p1_ = 1.0, p2_ = 0.0, p3_ = 0.0;
};

/// Uniform grid geometry: node (i, j) sits at x0 + i h + i (y0 + j h).
struct GridSpec {
    double x0 = 0.0;
    double y0 = 0.0;
    double h = 1.0;
    int nx = 0;
    int ny = 0;

    Complex node(int i, int j) const { return {x0 + i * h, y0 + j * h}; }
    int index(int i, int j) const { return j * nx + i; }
    int size() const { return nx * ny; }
};

/// Nodes within this many cells of the grid edge cannot be differentiated.
inline constexpr int kGridMargin = 2;

/// Conformal metric e^{2 eta}|dz|^2 on a planar chart.
///
/// Analytic mode evaluates a jet callable. Grid mode stores eta samples on a
/// uniform grid, optionally on top of an analytic base metric, and
/// differentiates the samples with 4th-order central differences. Grid
/// queries are only valid at nodes at least kGridMargin cells from the edge.
class ConformalMetric {
public:
    enum class Mode { Analytic, Grid };

    static ConformalMetric analytic(Chart chart, RealJetFn log_density);
    /// Grid metric with log-density base(z) + samples. `base` must be analytic.
    static ConformalMetric grid(const GridSpec& spec, std::vector<double> samples,
                                const ConformalMetric* base = nullptr);

    Mode mode() const { return mode_; }
    const Chart& chart() const { return chart_; }

    /// Log-density jet at z. Throws OutOfDomain outside the chart (or off the
    /// usable nodes in grid mode).
    Jet log_density(Complex z) const;
    double density(Complex z) const;

    /// e^{2t} times this metric.
    ConformalMetric scaled(double t) const;
    /// e^{2u} times this metric (analytic mode only).
    ConformalMetric conformal_change(RealJetFn u) const;

    const GridSpec& grid_spec() const;
    const std::vector<double>& grid_samples() const;
    /// Analytic part of a grid metric, or nullptr.
    const ConformalMetric* grid_base() const;

private:
    struct GridData {
        GridSpec spec;
        std::vector<double> samples;
        std::shared_ptr<const ConformalMetric> base;
    };

    Jet grid_jet(Complex z) const;

    Mode mode_ = Mode::Analytic;
    Chart chart_;
    RealJetFn fn_;
    std::shared_ptr<const GridData> grid_;
};

ConformalMetric flat_metric(const Chart& chart);
/// 4|dz|^2/(1-|z|^2)^2 on the unit disc (curvature -1).
ConformalMetric poincare_disc_metric();
/// |dz|^2/(Im z)^2 on the upper half-plane.
ConformalMetric poincare_half_plane_metric();
/// 4|dz|^2/(1+|z|^2)^2 restricted to `chart` (curvature +1).
ConformalMetric spherical_metric(const Chart& chart);

/// Jet builders for conformal factors u.
namespace jets {
RealJetFn constant(double c);
/// Re(sum_k coeffs[k] z^k); harmonic, so dzzbar = 0.
RealJetFn harmonic(std::vector<Complex> coeffs);
/// amplitude * exp(-|z - center|^2 / width^2)
RealJetFn gaussian(Complex center, double width, double amplitude);
RealJetFn sum(RealJetFn a, RealJetFn b);
} // namespace jets

/// Holomorphic map value with derivatives up to third order.
struct HoloJet {
    Complex f{};
    Complex d1{1.0};
    Complex d2{};
    Complex d3{};
};

/// Locally injective holomorphic map with analytic derivatives.
class HoloMap {
public:
    HoloMap(Chart chart, std::function<HoloJet(Complex)> fn) : chart_(std::move(chart)), fn_(std::move(fn)) {}

    const Chart& chart() const { return chart_; }
    /// Throws OutOfDomain outside the chart.
    HoloJet eval(Complex z) const;
    Complex operator()(Complex z) const { return eval(z).f; }

private:
    Chart chart_;
    std::function<HoloJet(Complex)> fn_;
};

HoloMap identity_map(const Chart& chart);
HoloMap moebius_holomap(const MoebiusMap& m, const Chart& chart);
/// z + eps z^3
HoloMap cubic_perturbation(double eps, const Chart& chart = Chart::disc());
HoloMap exponential_map(const Chart& chart);
/// g o f on f's chart.
HoloMap compose(const HoloMap& g, const HoloMap& f);

/// Quadratic differential lambda(z) dz^2.
class QuadDifferential {
public:
    QuadDifferential(Chart chart, std::function<Complex(Complex)> coeff)
        : chart_(std::move(chart)), fn_(std::move(coeff))
    {
    }

    const Chart& chart() const { return chart_; }
    Complex coeff(Complex z) const;

private:
    Chart chart_;
    std::function<Complex(Complex)> fn_;
};

QuadDifferential zero_differential(const Chart& chart);
QuadDifferential constant_differential(Complex c, const Chart& chart);
/// S(f) as a quadratic differential on f's chart.
QuadDifferential schwarzian_differential(const HoloMap& f);
/// f^* phi = phi(f(z)) f'(z)^2.
QuadDifferential pullback_differential(const HoloMap& f, const QuadDifferential& phi);

/// Gaussian curvature -e^{-2 eta} Delta eta.
double curvature(const ConformalMetric& sigma, Complex z);
/// (f''/f')' - (f''/f')^2 / 2. Throws DegenerateDerivative if |f'| < 1e-12.
Complex schwarzian(const HoloMap& f, Complex z);
/// Schwarzian tensor B(sigma1, sigma2) at z.
Complex schwarzian_tensor(const ConformalMetric& sigma1, const ConformalMetric& sigma2, Complex z);
/// B(sigma) = B(|dz|^2, sigma); the flat metric is the Moebius-flat reference.
Complex b_tensor(const ConformalMetric& sigma, Complex z);
Complex b_tensor(const Jet& eta);
/// e^{-2 eta(z)} |lambda(z)|
double qd_norm(const QuadDifferential& phi, const ConformalMetric& sigma, Complex z);

/// f^* sigma with log-density eta o f + log|f'|. Throws DomainMismatch if f
/// visibly leaves sigma's chart; the same check is repeated at evaluation.
ConformalMetric pullback_metric(const HoloMap& f, const ConformalMetric& sigma);
/// Jet of eta o f + log|f'| from the jet of eta at f(z).
Jet pullback_jet(const Jet& eta_at_image, const HoloJet& f);

/// Grid metric CSV: a header declaring the grid, then rows re(z),im(z),eta.
void write_grid_metric_csv(const std::string& path, const ConformalMetric& sigma);
/// Inverse of write_grid_metric_csv (without any analytic base).
ConformalMetric read_grid_metric_csv(const std::string& path);

} // namespace hypcmc

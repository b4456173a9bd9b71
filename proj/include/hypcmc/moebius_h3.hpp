// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>

namespace hypcmc {

using Complex = std::complex<double>;

/// Point of upper half-space ({x1 + i x2} x {y > 0}).
struct H3Point {
    double x1 = 0.0;
    double x2 = 0.0;
    double y = 1.0;

    Complex horizontal() const { return {x1, x2}; }
};

/// Point of the Riemann sphere: a finite complex value or infinity.
class BoundaryPoint {
public:
    BoundaryPoint(Complex z) : value_(z) {} // NOLINT: implicit by intent
    static BoundaryPoint infinity() { return BoundaryPoint(); }

    bool is_infinity() const { return infinite_; }
    /// Value of a finite point. Calling this on infinity is a logic error.
    Complex value() const;

    friend bool operator==(const BoundaryPoint& a, const BoundaryPoint& b)
    {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }

private:
    BoundaryPoint() : infinite_(true) {}
    Complex value_{};
    bool infinite_ = false;
};

/// Element of PSL(2, C) stored as a representative with ad - bc = 1.
class MoebiusMap {
public:
    MoebiusMap() = default;
    /// Rescales to unit determinant; throws InvalidArgument if the matrix is singular.
    MoebiusMap(Complex a, Complex b, Complex c, Complex d);

    static MoebiusMap identity() { return {}; }
    /// z -> e^{i angle} z
    static MoebiusMap rotation(double angle);
    /// Hyperbolic translation of the unit disc along the real diameter by `distance`.
    static MoebiusMap disc_translation(double distance);
    /// Disc automorphism sending `a` (|a| < 1) to 0, followed by a rotation.
    static MoebiusMap disc_automorphism(Complex a, double angle);

    Complex a() const { return a_; }
    Complex b() const { return b_; }
    Complex c() const { return c_; }
    Complex d() const { return d_; }

    MoebiusMap inverse() const { return {d_, -b_, -c_, a_}; }
    friend MoebiusMap operator*(const MoebiusMap& m, const MoebiusMap& n);

    /// Finite-point action (az + b)/(cz + d); the caller guarantees cz + d != 0.
    Complex operator()(Complex z) const { return (a_ * z + b_) / (c_ * z + d_); }
    /// Complex derivative 1/(cz + d)^2.
    Complex derivative(Complex z) const;

    /// Entrywise distance between projective classes (minimum over the sign).
    double distance_to(const MoebiusMap& other) const;

private:
    Complex a_{1.0}, b_{0.0}, c_{0.0}, d_{1.0};
};

/// Fractional-linear action on the Riemann sphere, including infinity.
BoundaryPoint apply_boundary(const MoebiusMap& m, const BoundaryPoint& z);

/// Isometric extension of m to upper half-space (quaternionic formula).
H3Point apply_h3(const MoebiusMap& m, const H3Point& p);

double hyperbolic_distance(const H3Point& p, const H3Point& q);

/// Density of the visual metric V_p at z with respect to |dz|^2.
double visual_metric_density(const H3Point& p, Complex z);

} // namespace hypcmc

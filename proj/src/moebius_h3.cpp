// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/moebius_h3.hpp"

#include "hypcmc/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace hypcmc {

Complex BoundaryPoint::value() const
{
    assert(!infinite_);
    return value_;
}

MoebiusMap::MoebiusMap(Complex a, Complex b, Complex c, Complex d)
{
    const Complex det = a * d - b * c;
    if (std::abs(det) == 0.0 || !std::isfinite(std::abs(det))) {
        fail(ErrorCode::InvalidArgument, "Moebius matrix is singular");
    }
    const Complex s = std::sqrt(det);
    a_ = a / s;
    b_ = b / s;
    c_ = c / s;
    d_ = d / s;
}

MoebiusMap MoebiusMap::rotation(double angle)
{
    const Complex half = std::polar(1.0, 0.5 * angle);
    return {half, 0.0, 0.0, std::conj(half)};
}

MoebiusMap MoebiusMap::disc_translation(double distance)
{
    const double ch = std::cosh(0.5 * distance);
    const double sh = std::sinh(0.5 * distance);
    return {ch, sh, sh, ch};
}

MoebiusMap MoebiusMap::disc_automorphism(Complex a, double angle)
{
    if (std::abs(a) >= 1.0) fail(ErrorCode::InvalidArgument, "disc automorphism needs |a| < 1");
    // z -> e^{i angle} (z - a)/(1 - conj(a) z)
    return rotation(angle) * MoebiusMap(1.0, -a, -std::conj(a), 1.0);
}

MoebiusMap operator*(const MoebiusMap& m, const MoebiusMap& n)
{
    return {m.a_ * n.a_ + m.b_ * n.c_, m.a_ * n.b_ + m.b_ * n.d_,
            m.c_ * n.a_ + m.d_ * n.c_, m.c_ * n.b_ + m.d_ * n.d_};
}

Complex MoebiusMap::derivative(Complex z) const
{
    const Complex den = c_ * z + d_;
    return 1.0 / (den * den);
}

double MoebiusMap::distance_to(const MoebiusMap& o) const
{
    auto entry_max = [&](double sign) {
        return std::max({std::abs(a_ - sign * o.a_), std::abs(b_ - sign * o.b_),
                         std::abs(c_ - sign * o.c_), std::abs(d_ - sign * o.d_)});
    };
    return std::min(entry_max(1.0), entry_max(-1.0));
}

BoundaryPoint apply_boundary(const MoebiusMap& m, const BoundaryPoint& z)
{
    if (z.is_infinity()) {
        if (m.c() == Complex(0.0)) return BoundaryPoint::infinity();
        return BoundaryPoint(m.a() / m.c());
    }
    const Complex den = m.c() * z.value() + m.d();
    if (den == Complex(0.0)) return BoundaryPoint::infinity();
    return BoundaryPoint((m.a() * z.value() + m.b()) / den);
}

H3Point apply_h3(const MoebiusMap& m, const H3Point& p)
{
    // (a q + b)(c q + d)^{-1} for the quaternion q = w + y j, with det = 1.
    const Complex w = p.horizontal();
    const double y2 = p.y * p.y;
    const Complex cw_d = m.c() * w + m.d();
    const double den = std::norm(cw_d) + std::norm(m.c()) * y2;
    const Complex horiz = ((m.a() * w + m.b()) * std::conj(cw_d) + m.a() * std::conj(m.c()) * y2) / den;
    return {horiz.real(), horiz.imag(), p.y / den};
}

double hyperbolic_distance(const H3Point& p, const H3Point& q)
{
    // 2 asinh(chord / (2 sqrt(y_p y_q))) is the cancellation-free form of
    // cosh d = 1 + chord^2 / (2 y_p y_q).
    const double dx1 = p.x1 - q.x1;
    const double dx2 = p.x2 - q.x2;
    const double dy = p.y - q.y;
    const double chord = std::sqrt(dx1 * dx1 + dx2 * dx2 + dy * dy);
    return 2.0 * std::asinh(chord / (2.0 * std::sqrt(p.y * q.y)));
}

double visual_metric_density(const H3Point& p, Complex z)
{
    const double s = 2.0 * p.y / (std::norm(z - p.horizontal()) + p.y * p.y);
    return s * s;
}

} // namespace hypcmc

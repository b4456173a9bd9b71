// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hypcmc/moebius_h3.hpp"
#include "hypcmc/random.hpp"

#include <array>
#include <cmath>

namespace hypcmc::test {

inline MoebiusMap random_moebius(Rng& rng)
{
    for (;;) {
        const Complex a = rng.complex_in_box(1.0), b = rng.complex_in_box(1.0);
        const Complex c = rng.complex_in_box(1.0), d = rng.complex_in_box(1.0);
        if (std::abs(a * d - b * c) > 0.2) return {a, b, c, d};
    }
}

inline MoebiusMap random_disc_automorphism(Rng& rng, double max_radius = 0.6)
{
    return MoebiusMap::disc_automorphism(rng.complex_in_disc(max_radius), rng.uniform(-3.0, 3.0));
}

/// Quaternion (r, i, j, k) used as an independent model of upper half-space.
using Quat = std::array<double, 4>;

inline Quat qmul(const Quat& p, const Quat& q)
{
    return {p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]};
}

inline Quat qinv(const Quat& q)
{
    const double n = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
    return {q[0] / n, -q[1] / n, -q[2] / n, -q[3] / n};
}

inline Quat qc(Complex z) { return {z.real(), z.imag(), 0.0, 0.0}; }

inline Quat qadd(const Quat& p, const Quat& q) { return {p[0] + q[0], p[1] + q[1], p[2] + q[2], p[3] + q[3]}; }

/// (a q + b)(c q + d)^{-1} with q = x1 + x2 i + y j.
inline H3Point quaternion_action(const MoebiusMap& m, const H3Point& p)
{
    const Quat q{p.x1, p.x2, p.y, 0.0};
    const Quat num = qadd(qmul(qc(m.a()), q), qc(m.b()));
    const Quat den = qadd(qmul(qc(m.c()), q), qc(m.d()));
    const Quat r = qmul(num, qinv(den));
    return {r[0], r[1], r[2]};
}

} // namespace hypcmc::test

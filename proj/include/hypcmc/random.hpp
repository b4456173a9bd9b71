// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace hypcmc {

/// Seeded generator whose outputs are identical on every platform.
/// std::uniform_real_distribution is implementation-defined, so the
/// conversion from raw 64-bit words is done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::complex<double> complex_in_box(double half_width)
    {
        const double re = uniform(-half_width, half_width);
        return {re, uniform(-half_width, half_width)};
    }

    /// Uniform by area in the disc |z| < radius.
    std::complex<double> complex_in_disc(double radius)
    {
        for (;;) {
            const std::complex<double> z = complex_in_box(1.0);
            if (std::norm(z) < 1.0) return radius * z;
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace hypcmc

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/error.hpp"
#include "hypcmc/moebius_h3.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace hypcmc;
using hypcmc::test::quaternion_action;
using hypcmc::test::random_moebius;

namespace {

double dist3(const H3Point& p, const H3Point& q)
{
    return std::hypot(p.x1 - q.x1, p.x2 - q.x2, p.y - q.y);
}

} // namespace

TEST_CASE("construction normalizes the determinant")
{
    Rng rng(1);
    for (int k = 0; k < 50; ++k) {
        const MoebiusMap m(rng.complex_in_box(3), rng.complex_in_box(3), rng.complex_in_box(3), rng.complex_in_box(3));
        CHECK(std::abs(m.a() * m.d() - m.b() * m.c() - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(MoebiusMap(1.0, 2.0, 2.0, 4.0), Error);
}

TEST_CASE("composition is associative on normalized representatives")
{
    Rng rng(2);
    for (int k = 0; k < 50; ++k) {
        const MoebiusMap a = random_moebius(rng), b = random_moebius(rng), c = random_moebius(rng);
        CHECK(((a * b) * c).distance_to(a * (b * c)) < 1e-12);
    }
}

TEST_CASE("apply_boundary examples")
{
    const BoundaryPoint i = apply_boundary(MoebiusMap::identity(), Complex(0, 1));
    CHECK(i == BoundaryPoint(Complex(0, 1)));
    const BoundaryPoint w = apply_boundary(MoebiusMap(0.0, -1.0, 1.0, 0.0), Complex(2.0));
    CHECK(std::abs(w.value() - Complex(-0.5)) < 1e-15);
    CHECK(apply_boundary(MoebiusMap(1.0, 1.0, 0.0, 1.0), BoundaryPoint::infinity()).is_infinity());
    CHECK(apply_boundary(MoebiusMap(0.0, -1.0, 1.0, 0.0), Complex(0.0)).is_infinity());
    const BoundaryPoint a = apply_boundary(MoebiusMap(2.0, 1.0, 1.0, 1.0), BoundaryPoint::infinity());
    CHECK(std::abs(a.value() - Complex(2.0)) < 1e-15);
}

TEST_CASE("apply_boundary respects composition")
{
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        const MoebiusMap m1 = random_moebius(rng), m2 = random_moebius(rng);
        const Complex z = rng.complex_in_box(2.0);
        const BoundaryPoint lhs = apply_boundary(m1 * m2, z);
        const BoundaryPoint rhs = apply_boundary(m1, apply_boundary(m2, z));
        REQUIRE(!lhs.is_infinity());
        REQUIRE(!rhs.is_infinity());
        CHECK(std::abs(lhs.value() - rhs.value()) < 1e-10 * std::max(1.0, std::abs(lhs.value())));
    }
}

TEST_CASE("apply_h3 examples")
{
    const H3Point o{0, 0, 1};
    CHECK(dist3(apply_h3(MoebiusMap::identity(), o), o) < 1e-15);
    const MoebiusMap dil(std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0));
    CHECK(dist3(apply_h3(dil, o), H3Point{0, 0, 2}) < 1e-14);
    CHECK(dist3(apply_h3(MoebiusMap(1.0, 1.0, 0.0, 1.0), o), H3Point{1, 0, 1}) < 1e-14);
}

TEST_CASE("apply_h3 agrees with quaternion arithmetic")
{
    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
        const MoebiusMap m = random_moebius(rng);
        const H3Point p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 2.0)};
        const H3Point a = apply_h3(m, p);
        const H3Point b = quaternion_action(m, p);
        CHECK(dist3(a, b) < 1e-10 * std::max(1.0, std::hypot(b.x1, b.x2, b.y)));
    }
}

TEST_CASE("apply_h3 extends the boundary action")
{
    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
        const MoebiusMap m = random_moebius(rng);
        const Complex w = rng.complex_in_box(1.0);
        const H3Point img = apply_h3(m, H3Point{w.real(), w.imag(), 1e-6});
        const BoundaryPoint bz = apply_boundary(m, w);
        REQUIRE(!bz.is_infinity());
        CHECK(std::abs(img.horizontal() - bz.value()) < 1e-4);
    }
}

TEST_CASE("hyperbolic_distance examples and isometry invariance")
{
    CHECK(std::abs(hyperbolic_distance({0, 0, 1}, {0, 0, std::exp(1.0)}) - 1.0) < 1e-14);
    CHECK(hyperbolic_distance({0.3, -0.2, 0.7}, {0.3, -0.2, 0.7}) == 0.0);
    Rng rng(6);
    for (int k = 0; k < 100; ++k) {
        const MoebiusMap m = random_moebius(rng);
        const H3Point p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 2.0)};
        const H3Point q{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 2.0)};
        const double d = hyperbolic_distance(p, q);
        // Independent form: cosh d = 1 + |p - q|^2 / (2 y_p y_q).
        const double ref = std::acosh(1.0 + std::pow(dist3(p, q), 2) / (2 * p.y * q.y));
        CHECK(std::abs(d - ref) < 1e-10);
        CHECK(std::abs(hyperbolic_distance(q, p) - d) < 1e-15);
        CHECK(std::abs(hyperbolic_distance(apply_h3(m, p), apply_h3(m, q)) - d) < 1e-10 * std::max(1.0, d));
    }
}

TEST_CASE("hyperbolic_distance triangle inequality")
{
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        H3Point p[3];
        for (auto& x : p) x = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.05, 3.0)};
        CHECK(hyperbolic_distance(p[0], p[2]) <= hyperbolic_distance(p[0], p[1]) + hyperbolic_distance(p[1], p[2]) + 1e-12);
    }
}

TEST_CASE("visual_metric_density examples")
{
    CHECK(std::abs(visual_metric_density({0, 0, 2}, 0.0) - 1.0) < 1e-15);
    CHECK(std::abs(visual_metric_density({0, 0, 1}, 0.0) - 4.0) < 1e-15);
    const Complex z0(0.4, -1.3);
    const double y = 0.7;
    CHECK(std::abs(visual_metric_density({z0.real(), z0.imag(), y}, z0) - 4.0 / (y * y)) < 1e-12);
    // Round metric seen from the ball centre.
    const Complex z(0.5, 0.25);
    CHECK(std::abs(visual_metric_density({0, 0, 1}, z) - 4.0 / std::pow(1 + std::norm(z), 2)) < 1e-15);
}

TEST_CASE("visual_metric_density pullback naturality")
{
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
        const MoebiusMap m = random_moebius(rng);
        const H3Point p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 2.0)};
        const Complex z = rng.complex_in_box(1.0);
        const double lhs = visual_metric_density(apply_h3(m, p), m(z)) * std::norm(m.derivative(z));
        const double rhs = visual_metric_density(p, z);
        CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, rhs));
    }
}

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hypcmc/conformal.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hypcmc {

/// Differential geometry of a parametrized surface in upper half-space at one
/// chart point.
struct EpsteinSample {
    Complex z{};
    H3Point point;
    /// Unit normal (hyperbolic length 1) in half-space coordinates (x1, x2, y).
    std::array<double, 3> normal{};
    Eigen::Matrix2d first_ff = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d second_ff = Eigen::Matrix2d::Zero();
    double mean_curv = 0.0;
    /// Principal curvatures, first <= second.
    std::pair<double, double> principal{0.0, 0.0};
};

/// Epstein point (z, 0) + 2/(e^{2 eta} + 4|eta_z|^2) (2 conj(eta_z), e^eta).
H3Point epstein_point(const ConformalMetric& sigma, Complex z);
H3Point epstein_point(const Jet& eta, Complex z);

/// Epstein point of the pushforward f_* sigma at f(z). The pushforward jet
/// is formed pointwise from the jet of sigma at z and the derivatives of f.
H3Point epstein_chart(const HoloMap& f, const ConformalMetric& sigma, Complex z);

using H3Sampler = std::function<H3Point(Complex)>;

enum class FdScheme {
    Central,    ///< second-order central differences, 3x3 stencil
    Richardson, ///< steps h and 2h combined to fourth order, 5x5 stencil
};

/// Tangents, normal, fundamental forms and curvatures of `sampler` at z by
/// finite differences. The normal is y (X_u x X_v)/|X_u x X_v| and
/// II = -g(N, nabla X), so horospheres seen from below have H = -1.
/// Throws NonImmersion if the Gram determinant drops below 1e-10.
EpsteinSample fd_geometry(const H3Sampler& sampler, Complex z, double step = 1e-3,
                          FdScheme scheme = FdScheme::Central);

/// H = (K^2 - 1 - 16 n^2) / ((K - 1)^2 - 16 n^2), n = ||B(sigma) - phi_dev/2||_sigma.
/// Throws NonImmersion if |denominator| < 1e-10.
double mean_curvature_formula(const ConformalMetric& sigma, const QuadDifferential& phi_dev, Complex z);
double mean_curvature_formula(const Jet& eta, Complex phi_dev);

/// |V_{Eps(z)}(z) - e^{2 eta(z)}|
double visual_defining_residual(const ConformalMetric& sigma, Complex z);

/// OBJ of the sampled surface over the nodes of `grid` (two triangles per cell).
void write_epstein_obj(const std::string& path, const H3Sampler& sampler, const GridSpec& grid);
/// CSV with columns re_z,im_z,x1,x2,y,H,lambda1,lambda2.
void write_epstein_samples_csv(const std::string& path, const std::vector<EpsteinSample>& samples);

} // namespace hypcmc

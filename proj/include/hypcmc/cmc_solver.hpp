// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hypcmc/conformal.hpp"
#include "hypcmc/epstein.hpp"
#include "hypcmc/surface_mesh.hpp"

#include <memory>
#include <string>
#include <vector>

// The unknown v is the log-ratio of tau = e^{2v} h to the hyperbolic metric h.
// It is related to the conformal factor u of sigma = e^{2u} h by
//   u = v - log((1 + H)/(1 - H)) / 2.

namespace hypcmc {

struct SolverConfig {
    double newton_tol = 1e-11;
    int max_newton = 25;
    double h_step = 0.05;
    double h_step_min = 1e-4;
    /// March in sqrt(1 + H) below -0.9 and in sqrt(1 - H) above 0.9.
    bool use_t_param = true;
    double damping = 0.5;
    /// Also run the Fuchsian-anchor route and compare.
    bool cross_check = true;

    /// Throws InvalidArgument on non-positive tolerances or h_step_min >= h_step.
    void validate() const;
};

/// Discretized problem data. Both modes reduce to the same algebra: a
/// Laplacian matrix, mass weights, sparse rows for d/dz and d^2/dz^2, the
/// Poincare log-density rho with rho_z, and phi at every unknown.
///
/// Disc mode: h is the Poincare metric on the square [-w, w]^2 sampled by an
/// n x n grid; the outer two rings of nodes carry v = 0 and the rest are
/// unknowns, differentiated by 4th-order central differences. phi is S(f)
/// for the developing map f.
///
/// Closed-surface mode: unknowns are the canonical nodes of a SurfaceMesh
/// and phi is a QDField read at representatives.
class CmcContext {
public:
    enum class Mode { Disc, ClosedSurface };

    /// Throws DomainMismatch if a grid node lies outside f's chart or the unit disc.
    static CmcContext disc(const HoloMap& f, int grid_n = 41, double half_width = 0.5);
    /// Throws SizeMismatch if phi is not sized to the raw nodes and
    /// DomainMismatch if its equivariance residual exceeds `equivariance_tol`.
    static CmcContext closed_surface(std::shared_ptr<const SurfaceMesh> mesh, const QDField& phi,
                                     double equivariance_tol = 1e-6);

    Mode mode() const { return mode_; }
    int size() const { return static_cast<int>(mass_.size()); }

    /// Hyperbolic Laplacian as a matrix on unknowns.
    const SparseMatrixD& laplacian_matrix() const { return lap_; }
    const Eigen::VectorXd& mass() const { return mass_; }
    const SparseMatrixC& dz_operator() const { return dz_; }
    const SparseMatrixC& dzz_operator() const { return dzz_; }
    const Eigen::VectorXd& rho() const { return rho_; }
    const Eigen::VectorXcd& rho_z() const { return rho_z_; }
    const Eigen::VectorXcd& phi() const { return phi_; }
    /// Disc position of unknown i (the representative in closed-surface mode).
    Complex position(int i) const { return positions_[i]; }

    /// Same discretization with phi multiplied by s.
    CmcContext with_phi_scale(double s) const;
    double phi_scale() const { return phi_scale_; }

    /// Disc mode only (InvalidArgument otherwise).
    const HoloMap& developing_map() const;
    const GridSpec& grid() const;
    /// Full-grid samples of an unknown field, with the margin set to `margin`.
    std::vector<double> full_grid(const ScalarField& v, double margin = 0.0) const;
    /// max |phi - phi_scale S(f)| over unknowns.
    double phi_consistency() const;

    /// Closed-surface mode only (InvalidArgument otherwise).
    const SurfaceMesh& mesh() const;
    const std::shared_ptr<const SurfaceMesh>& mesh_ptr() const { return mesh_; }

    /// Mass-weighted L2 norm.
    double norm(const ScalarField& r) const;

    /// Column colouring of the B-term Jacobian pattern: columns of one colour
    /// never share a row of `b_pattern`.
    const std::vector<int>& column_colours() const { return colours_->colour; }
    int colour_count() const { return colours_->count; }
    const SparseMatrixD& b_pattern() const { return colours_->pattern; }

private:
    Mode mode_ = Mode::Disc;
    SparseMatrixD lap_;
    Eigen::VectorXd mass_;
    SparseMatrixC dz_;
    SparseMatrixC dzz_;
    Eigen::VectorXd rho_;
    Eigen::VectorXcd rho_z_;
    Eigen::VectorXcd phi_;
    Eigen::VectorXcd phi_base_;
    std::vector<Complex> positions_;
    double phi_scale_ = 1.0;
    std::shared_ptr<const HoloMap> f_;
    GridSpec grid_;
    std::vector<int> unknown_of_node_;
    std::shared_ptr<const SurfaceMesh> mesh_;

    struct Colouring {
        std::vector<int> colour;
        int count = 0;
        SparseMatrixD pattern;
    };
    void build_colouring();
    std::shared_ptr<const Colouring> colours_;
};

/// Pointwise pieces of the residual at (H, v).
struct ResidualTerms {
    ScalarField curvature;     ///< K(tau)
    ScalarField b_norm2;       ///< |B(tau) - phi/2|^2 in the tau norm
    Eigen::VectorXcd b_tensor; ///< B(tau), disc-chart coefficient
};

ResidualTerms residual_terms(const CmcContext& ctx, const ScalarField& v);

/// G = 1 - H - 2 H K + (-1 - H)(K^2 - 16 |B - phi/2|^2) at every unknown.
/// Throws OutOfRange if |H| > 1 and SizeMismatch on a mis-sized field.
ScalarField residual_G(double H, const CmcContext& ctx, const ScalarField& v);

/// Exact Jacobian of residual_G in v.
SparseMatrixD linearize_G(double H, const CmcContext& ctx, const ScalarField& v);

struct NewtonResult {
    ScalarField v;
    int iterations = 0;
    /// Mass-weighted residual norm before each iteration and at exit.
    std::vector<double> residuals;
    double residual_sup = 0.0;
};

/// Damped Newton iteration.
/// Throws OutOfRange if |H| > 1, SingularLinearization at |H| = 1 or when
/// the Jacobian cannot be factored, NewtonDiverged otherwise.
NewtonResult newton_solve(double H, const CmcContext& ctx, const ScalarField& v_init, const SolverConfig& cfg);

struct ContinuationEntry {
    double H = 0.0;
    ScalarField v;
    double residual_norm = 0.0;
    double residual_sup = 0.0;
    int newton_iters = 0;
    std::vector<double> residual_history;
};

struct ContinuationResult {
    std::vector<ContinuationEntry> entries;
    std::string anchors;
    /// max |v_end - v_fuchsian| over shared entries; NaN without cross-check.
    double cross_check = 0.0;
    int steps = 0;
};

/// Solutions over [H_lo, H_hi] subset (-1, 1), marched from the end anchor
/// (H = -1, v = 0). With `targets` empty the entries are the accepted steps
/// inside the range, otherwise exactly the targets. With cfg.cross_check the
/// family is recomputed from the Fuchsian anchor at the range midpoint
/// (v = 0 at phi = 0, then a four-step phi ramp) and both must agree.
/// Throws OutOfRange for a bad range, ContinuationStalled on step underflow
/// and SolverFailure if the two routes disagree beyond 1e-7.
ContinuationResult continuation(const CmcContext& ctx, double H_lo, double H_hi, const SolverConfig& cfg,
                                const std::vector<double>& targets = {});

/// u = v - log((1+H)/(1-H))/2. Throws OutOfRange if |H| >= 1.
ScalarField u_from_v(double H, const ScalarField& v);
ScalarField v_from_u(double H, const ScalarField& u);

/// Disc mode: e^{2u} h as an analytic metric. Each query uses the degree-6
/// tensor Lagrange interpolant of the full-grid u on the 7 x 7 nodes around
/// the nearest node. The chart excludes the outer three cells.
ConformalMetric solved_metric(const CmcContext& ctx, double H, const ScalarField& u);

struct GeometricCheck {
    double max_deviation = 0.0;
    std::vector<EpsteinSample> samples;
};

/// Disc mode: mean curvature of z -> Eps(f, e^{2u} h) by fd_geometry at
/// nodes of an interior subgrid (every `stride` nodes, at least 6 from the
/// edge), compared with H.
GeometricCheck geometric_mean_curvature_check(const CmcContext& ctx, double H, const ScalarField& u,
                                              double step = 1e-3, int stride = 4);

} // namespace hypcmc

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hypcmc/moebius_h3.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace hypcmc {

/// Regular hyperbolic octagon (vertex angle pi/4) centred at 0 in the unit
/// disc, with side pairings following the word a b a^-1 b^-1 c d c^-1 d^-1.
struct FundamentalDomain {
    /// vertices[j] sits at angle j pi/4 - pi/8; side j runs from vertices[j] to vertices[j+1].
    std::array<Complex, 8> vertices{};
    /// pairings[p] maps side source[p] onto side target[p] (and the octagon
    /// onto its neighbour across the target side).
    std::array<MoebiusMap, 4> pairings{};
    std::array<int, 4> source{};
    std::array<int, 4> target{};
    /// Hyperbolic distance from 0 to each side, which is also half the side length.
    double inradius = 0.0;
    double circumradius = 0.0;

    /// Point of side j at signed arclength s from its midpoint (|s| <= inradius).
    Complex side_point(int side, double s) const;
};

FundamentalDomain regular_octagon();

using ScalarField = Eigen::VectorXd;
using SparseMatrixD = Eigen::SparseMatrix<double>;
using SparseMatrixC = Eigen::SparseMatrix<std::complex<double>>;

/// Quadratic-differential coefficients on the raw (unidentified) mesh nodes.
/// Paired copies of a node must agree up to the (gamma')^2 cocycle.
struct QDField {
    std::vector<Complex> values;
};

/// Triangulated octagon with paired sides identified: a closed genus-2
/// surface with the hyperbolic metric of the disc.
///
/// The octagon is cut into the 16 equilateral triangles (angles pi/4) of the
/// {3,8} tiling spanned by the centre, the side midpoints and the corners.
/// Each is subdivided by a regular lattice of 3 subdiv steps per edge in the
/// Klein model centred on that triangle, so every mesh triangle is geodesic
/// and paired sides receive mirror-image node layouts.
class SurfaceMesh {
public:
    /// Throws InvalidArgument if subdiv < 1 and MeshPairingFailure if paired
    /// boundary nodes do not coincide within 1e-8.
    static SurfaceMesh build(int subdiv);

    int subdiv() const { return subdiv_; }
    const FundamentalDomain& domain() const { return domain_; }

    int raw_node_count() const { return static_cast<int>(raw_nodes_.size()); }
    int node_count() const { return static_cast<int>(canonical_raw_.size()); }
    const std::vector<Complex>& raw_nodes() const { return raw_nodes_; }
    /// Canonical node of each raw node.
    const std::vector<int>& canonical_of() const { return canonical_of_; }
    /// Representative raw node of each canonical node.
    const std::vector<int>& canonical_raw() const { return canonical_raw_; }
    /// Disc position of the representative of each canonical node.
    Complex node_position(int c) const { return raw_nodes_[canonical_raw_[c]]; }
    /// gamma with gamma(raw node) = representative position.
    const MoebiusMap& to_representative(int raw) const { return to_rep_[raw]; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

    /// Paired boundary nodes: (raw node, partner raw node, pairing index),
    /// with partner = pairings[index](raw node).
    struct BoundaryPair {
        int raw;
        int partner;
        int pairing;
    };
    const std::vector<BoundaryPair>& boundary_pairs() const { return boundary_pairs_; }

    /// Euclidean cotangent stiffness on the canonical nodes.
    const SparseMatrixD& stiffness() const { return stiffness_; }
    /// Lumped hyperbolic area per canonical node.
    const Eigen::VectorXd& mass() const { return mass_; }
    /// Sum of hyperbolic triangle areas.
    double total_area() const { return mass_.sum(); }
    /// Sum of hyperbolic triangle angles at the octagon corners.
    double vertex_angle_sum() const { return vertex_angle_sum_; }
    int euler_characteristic() const;
    int edge_count() const { return edge_count_; }

    /// Group elements whose translate of the octagon touches it (identity excluded).
    const std::vector<MoebiusMap>& near_group() const { return near_group_; }

    /// Sparse rows giving v_z and v_zz at each canonical node's representative
    /// position from canonical nodal values, by weighted quadratic least
    /// squares over nearby images of the mesh in the disc.
    const SparseMatrixC& dz_operator() const { return dz_; }
    const SparseMatrixC& dzz_operator() const { return dzz_; }
    /// Log-density of the Poincare metric and its jets at representative positions.
    const Eigen::VectorXd& rho() const { return rho_; }
    const Eigen::VectorXcd& rho_z() const { return rho_z_; }

    /// Evaluates a function of the disc position at every canonical node.
    ScalarField sample(const std::function<double(Complex)>& fn) const;
    /// Values on raw nodes of a canonical field.
    std::vector<double> to_raw(const ScalarField& v) const;

private:
    void assemble_operators();
    void build_near_group();
    void build_derivative_rows();

    int subdiv_ = 0;
    FundamentalDomain domain_;
    std::vector<Complex> raw_nodes_;
    std::vector<int> canonical_of_;
    std::vector<int> canonical_raw_;
    std::vector<MoebiusMap> to_rep_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryPair> boundary_pairs_;
    std::vector<int> corner_raw_;
    int edge_count_ = 0;
    SparseMatrixD stiffness_;
    Eigen::VectorXd mass_;
    double vertex_angle_sum_ = 0.0;
    std::vector<MoebiusMap> near_group_;
    SparseMatrixC dz_;
    SparseMatrixC dzz_;
    Eigen::VectorXd rho_;
    Eigen::VectorXcd rho_z_;
};

/// Discrete Laplace-Beltrami -M^{-1} K v (negative semidefinite).
ScalarField laplacian(const SurfaceMesh& mesh, const ScalarField& v);
/// Curvature e^{-2v}(-Delta v - 1) of e^{2v} h at each node.
ScalarField curvature_of_conformal(const SurfaceMesh& mesh, const ScalarField& v);
/// Solves (f - Delta) u = rhs, i.e. (diag(f) M + K) u = M rhs.
/// Throws NotPositive if min f <= 0 and SolverFailure if the solve stagnates.
ScalarField solve_helmholtz(const SurfaceMesh& mesh, const ScalarField& f, const ScalarField& rhs);
/// (f - Delta) u
ScalarField apply_helmholtz(const SurfaceMesh& mesh, const ScalarField& f, const ScalarField& u);
/// Smallest eigenvalue of f - Delta in the mass inner product.
double helmholtz_min_eigenvalue(const SurfaceMesh& mesh, const ScalarField& f);
/// Smallest nonzero eigenvalue of -Delta in the mass inner product.
double laplacian_spectral_gap(const SurfaceMesh& mesh);

/// Max over paired boundary nodes of |value(partner) - value(raw)| for a field on raw nodes.
double equivariance_residual(const SurfaceMesh& mesh, const std::vector<double>& raw_values);
/// Canonical fields are single-valued, so this is zero by construction.
double equivariance_residual(const SurfaceMesh& mesh, const ScalarField& canonical);
/// Max over paired nodes of |lambda(partner) g'(raw)^2 - lambda(raw)|.
double equivariance_residual(const SurfaceMesh& mesh, const QDField& phi);

/// Equivariant field built from `coeff`, evaluated at representatives and
/// transported to every raw copy by the cocycle.
QDField transported_qd_field(const SurfaceMesh& mesh, const std::function<Complex(Complex)>& coeff);
/// Smooth manufactured datum: sum over the near group of a Gaussian bump
/// coefficient, transported by the cocycle and scaled so that
/// max e^{-2 rho}|lambda| = amplitude.
QDField manufactured_qd_field(const SurfaceMesh& mesh, double amplitude, Complex center = {0.3, 0.1},
                              double width = 0.35);
/// max over canonical nodes of e^{-2 rho}|lambda| at the representative.
double qd_sup_norm(const SurfaceMesh& mesh, const QDField& phi);

void write_mesh_obj(const std::string& path, const SurfaceMesh& mesh);
/// Matrix Market coordinate file (symmetric real).
void write_matrix_market(const std::string& path, const SparseMatrixD& m);
/// CSV node,re_z,im_z,value keyed by canonical node.
void write_scalar_field_csv(const std::string& path, const SurfaceMesh& mesh, const ScalarField& v);
ScalarField read_scalar_field_csv(const std::string& path, const SurfaceMesh& mesh);
/// CSV raw_node,re_z,im_z,re_lambda,im_lambda keyed by raw node.
void write_qd_field_csv(const std::string& path, const SurfaceMesh& mesh, const QDField& phi);
QDField read_qd_field_csv(const std::string& path, const SurfaceMesh& mesh);

} // namespace hypcmc

// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/surface_mesh.hpp"

#include "hypcmc/error.hpp"
#include "hypcmc/random.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

namespace hypcmc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPairTol = 1e-8;

// Pseudo-hyperbolic distance |z - w| / |1 - conj(w) z|; monotone in d(z, w).
double pseudo_distance(Complex z, Complex w) { return std::abs(z - w) / std::abs(1.0 - std::conj(w) * z); }

double disc_distance(Complex z, Complex w) { return 2.0 * std::atanh(std::min(pseudo_distance(z, w), 1.0 - 1e-16)); }

// Interior angle at z1 of the geodesic triangle z1 z2 z3.
double hyperbolic_angle(Complex z1, Complex z2, Complex z3)
{
    auto to_origin = [&](Complex z) { return (z - z1) / (1.0 - std::conj(z1) * z); };
    return std::abs(std::arg(to_origin(z3) / to_origin(z2)));
}

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int a)
    {
        while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
        return a;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<int> parent_;
};

} // namespace

// ---------------------------------------------------------------- octagon

Complex FundamentalDomain::side_point(int side, double s) const
{
    const MoebiusMap m = MoebiusMap::rotation(side * kPi / 4) * MoebiusMap::disc_translation(inradius);
    return m(Complex(0.0, std::tanh(0.5 * s)));
}

FundamentalDomain regular_octagon()
{
    FundamentalDomain d;
    d.inradius = std::acosh(1.0 + std::sqrt(2.0));
    d.circumradius = std::acosh(3.0 + 2.0 * std::sqrt(2.0));
    for (int j = 0; j < 8; ++j) d.vertices[j] = d.side_point(j, -d.inradius);
    const int src[4] = {0, 1, 4, 5};
    for (int p = 0; p < 4; ++p) {
        const int j = src[p];
        const int k = j + 2;
        d.source[p] = j;
        d.target[p] = k;
        d.pairings[p] = MoebiusMap::rotation(k * kPi / 4 + kPi) * MoebiusMap::disc_translation(-2.0 * d.inradius) *
                        MoebiusMap::rotation(-j * kPi / 4);
    }
    return d;
}

// ---------------------------------------------------------------- mesh build

namespace {

Complex klein_to_poincare(Complex k) { return k / (1.0 + std::sqrt(1.0 - std::norm(k))); }
Complex poincare_to_klein(Complex p) { return 2.0 * p / (1.0 + std::norm(p)); }

// Isometry moving the centre of an equilateral geodesic triangle to 0.
MoebiusMap centring_map(const std::array<Complex, 3>& t)
{
    Complex c = 0.0;
    for (int it = 0; it < 100; ++it) {
        const MoebiusMap a = MoebiusMap::disc_automorphism(c, 0.0);
        Complex kc{};
        for (const Complex z : t) kc += poincare_to_klein(a(z)) / 3.0;
        const Complex shift = klein_to_poincare(kc);
        c = a.inverse()(shift);
        if (std::abs(shift) < 1e-15) break;
    }
    return MoebiusMap::disc_automorphism(c, 0.0);
}

// Deduplicating node store keyed on position.
class NodeStore {
public:
    explicit NodeStore(std::vector<Complex>& nodes) : nodes_(nodes) {}

    int find(Complex z) const
    {
        const auto [cx, cy] = cell(z);
        for (long dx = -1; dx <= 1; ++dx) {
            for (long dy = -1; dy <= 1; ++dy) {
                const auto it = cells_.find({cx + dx, cy + dy});
                if (it == cells_.end()) continue;
                for (int i : it->second) {
                    if (std::abs(nodes_[i] - z) < 1e-9) return i;
                }
            }
        }
        return -1;
    }

    int add(Complex z)
    {
        const int found = find(z);
        if (found >= 0) return found;
        const int i = static_cast<int>(nodes_.size());
        nodes_.push_back(z);
        cells_[cell(z)].push_back(i);
        return i;
    }

private:
    static std::pair<long, long> cell(Complex z)
    {
        return {static_cast<long>(std::floor(z.real() * 1e6)), static_cast<long>(std::floor(z.imag() * 1e6))};
    }

    std::vector<Complex>& nodes_;
    std::map<std::pair<long, long>, std::vector<int>> cells_;
};

} // namespace

SurfaceMesh SurfaceMesh::build(int subdiv)
{
    if (subdiv < 1) fail(ErrorCode::InvalidArgument, "subdiv must be at least 1");
    SurfaceMesh m;
    m.subdiv_ = subdiv;
    m.domain_ = regular_octagon();
    const FundamentalDomain& dom = m.domain_;
    const int n = 3 * subdiv;

    // The octagon splits into 16 equilateral geodesic triangles with angles
    // pi/4: (0, M_j, M_{j+1}) and (M_j, V_{j+1}, M_{j+1}) with M_j the side
    // midpoints. Each is centred and cut by a regular lattice in Klein
    // coordinates, where geodesics are straight.
    std::array<Complex, 8> mid{};
    for (int j = 0; j < 8; ++j) mid[j] = dom.side_point(j, 0.0);
    std::vector<std::array<Complex, 3>> coarse;
    for (int j = 0; j < 8; ++j) {
        coarse.push_back({0.0, mid[j], mid[(j + 1) % 8]});
        coarse.push_back({mid[j], dom.vertices[(j + 1) % 8], mid[(j + 1) % 8]});
    }
    NodeStore store(m.raw_nodes_);
    for (const auto& t : coarse) {
        const MoebiusMap a = centring_map(t);
        const MoebiusMap back = a.inverse();
        std::array<Complex, 3> k{};
        for (int e = 0; e < 3; ++e) k[e] = poincare_to_klein(a(t[e]));
        std::vector<std::vector<int>> id(n + 1);
        for (int i = 0; i <= n; ++i) {
            id[i].resize(n + 1 - i);
            for (int j = 0; i + j <= n; ++j) {
                const double u = static_cast<double>(i) / n, w = static_cast<double>(j) / n;
                Complex z = back(klein_to_poincare((1.0 - u - w) * k[0] + u * k[1] + w * k[2]));
                if (i == 0 && j == 0) z = t[0];
                if (i == n) z = t[1];
                if (j == n) z = t[2];
                id[i][j] = store.add(z);
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; i + j < n; ++j) {
                m.triangles_.push_back({id[i][j], id[i + 1][j], id[i][j + 1]});
                if (i + j + 1 < n) m.triangles_.push_back({id[i + 1][j], id[i + 1][j + 1], id[i][j + 1]});
            }
        }
    }
    for (auto& t : m.triangles_) {
        const Complex a = m.raw_nodes_[t[0]], b = m.raw_nodes_[t[1]], c = m.raw_nodes_[t[2]];
        if (std::imag(std::conj(b - a) * (c - a)) < 0) std::swap(t[1], t[2]);
    }
    for (const Complex v : dom.vertices) m.corner_raw_.push_back(store.find(v));

    // Nodes on each side, by distance to the side geodesic.
    const int raw = m.raw_node_count();
    std::array<std::vector<int>, 8> side_nodes;
    const double half = std::tanh(0.5 * dom.inradius);
    for (int j = 0; j < 8; ++j) {
        const MoebiusMap to_axis = (MoebiusMap::rotation(j * kPi / 4) * MoebiusMap::disc_translation(dom.inradius)).inverse();
        for (int r = 0; r < raw; ++r) {
            const Complex w = to_axis(m.raw_nodes_[r]);
            if (std::abs(w.real()) < 1e-10 && std::abs(w.imag()) <= half + 1e-10) side_nodes[j].push_back(r);
        }
    }

    UnionFind uf(raw);
    std::vector<std::vector<std::pair<int, MoebiusMap>>> links(raw);
    for (int p = 0; p < 4; ++p) {
        const MoebiusMap& g = dom.pairings[p];
        if (side_nodes[dom.source[p]].size() != side_nodes[dom.target[p]].size()) {
            fail(ErrorCode::MeshPairingFailure, "paired sides carry different node counts");
        }
        for (int a : side_nodes[dom.source[p]]) {
            const int b = store.find(g(m.raw_nodes_[a]));
            if (b < 0 || std::abs(g(m.raw_nodes_[a]) - m.raw_nodes_[b]) > kPairTol) {
                fail(ErrorCode::MeshPairingFailure, "paired boundary nodes do not coincide");
            }
            m.boundary_pairs_.push_back({a, b, p});
            uf.unite(a, b);
            links[a].push_back({b, g});
            links[b].push_back({a, g.inverse()});
        }
    }

    m.canonical_of_.assign(raw, -1);
    m.to_rep_.assign(raw, MoebiusMap::identity());
    for (int r = 0; r < raw; ++r) {
        if (uf.find(r) != r) continue;
        const int c = static_cast<int>(m.canonical_raw_.size());
        m.canonical_raw_.push_back(r);
        m.canonical_of_[r] = c;
        // Breadth-first transport of the representative's frame through the class.
        std::deque<int> queue{r};
        while (!queue.empty()) {
            const int x = queue.front();
            queue.pop_front();
            for (const auto& [y, h] : links[x]) {
                if (m.canonical_of_[y] >= 0) continue;
                m.canonical_of_[y] = c;
                m.to_rep_[y] = m.to_rep_[x] * h.inverse();
                queue.push_back(y);
            }
        }
    }

    std::vector<std::pair<int, int>> edges;
    for (const auto& t : m.triangles_) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[e], b = t[(e + 1) % 3];
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    // Each of the 4 source sides carries 2n boundary edges identified with the target side.
    m.edge_count_ = static_cast<int>(edges.size()) - 4 * 2 * n;

    m.assemble_operators();
    m.build_near_group();
    m.build_derivative_rows();
    return m;
}

int SurfaceMesh::euler_characteristic() const
{
    return node_count() - edge_count_ + static_cast<int>(triangles_.size());
}

void SurfaceMesh::assemble_operators()
{
    const int nc = node_count();
    std::vector<Eigen::Triplet<double>> trip;
    mass_ = Eigen::VectorXd::Zero(nc);
    vertex_angle_sum_ = 0.0;
    for (const auto& t : triangles_) {
        const Complex z[3] = {raw_nodes_[t[0]], raw_nodes_[t[1]], raw_nodes_[t[2]]};
        double angles[3];
        for (int e = 0; e < 3; ++e) {
            const int a = e, b = (e + 1) % 3, c = (e + 2) % 3;
            // Euclidean cotangent of the corner at c, weighting edge (a, b).
            const Complex u = z[a] - z[c], v = z[b] - z[c];
            const double cot = (std::conj(u) * v).real() / std::imag(std::conj(u) * v);
            const double w = 0.5 * cot;
            const int ca = canonical_of_[t[a]], cb = canonical_of_[t[b]];
            trip.emplace_back(ca, ca, w);
            trip.emplace_back(cb, cb, w);
            trip.emplace_back(ca, cb, -w);
            trip.emplace_back(cb, ca, -w);
            angles[e] = hyperbolic_angle(z[e], z[(e + 1) % 3], z[(e + 2) % 3]);
        }
        const double area = kPi - angles[0] - angles[1] - angles[2];
        for (int e = 0; e < 3; ++e) {
            mass_[canonical_of_[t[e]]] += area / 3.0;
            if (std::find(corner_raw_.begin(), corner_raw_.end(), t[e]) != corner_raw_.end()) {
                vertex_angle_sum_ += angles[e];
            }
        }
    }
    stiffness_.resize(nc, nc);
    stiffness_.setFromTriplets(trip.begin(), trip.end());
    stiffness_.prune(0.0);

    rho_.resize(nc);
    rho_z_.resize(nc);
    for (int c = 0; c < nc; ++c) {
        const Complex z = node_position(c);
        const double q = 1.0 - std::norm(z);
        rho_[c] = std::log(2.0 / q);
        rho_z_[c] = std::conj(z) / q;
    }
}

void SurfaceMesh::build_near_group()
{
    std::vector<MoebiusMap> gens;
    for (const auto& g : domain_.pairings) {
        gens.push_back(g);
        gens.push_back(g.inverse());
    }
    std::vector<MoebiusMap> seen{MoebiusMap::identity()};
    std::vector<MoebiusMap> frontier{MoebiusMap::identity()};
    auto known = [&](const MoebiusMap& g) {
        return std::any_of(seen.begin(), seen.end(), [&](const MoebiusMap& s) { return s.distance_to(g) < 1e-8; });
    };
    for (int len = 1; len <= 4; ++len) {
        std::vector<MoebiusMap> next;
        for (const auto& w : frontier) {
            for (const auto& g : gens) {
                const MoebiusMap e = w * g;
                if (known(e)) continue;
                seen.push_back(e);
                next.push_back(e);
            }
        }
        frontier = std::move(next);
    }
    near_group_.clear();
    for (std::size_t s = 1; s < seen.size(); ++s) {
        bool touches = false;
        for (const Complex a : domain_.vertices) {
            const Complex ga = seen[s](a);
            for (const Complex b : domain_.vertices) touches = touches || std::abs(ga - b) < 1e-8;
        }
        if (touches) near_group_.push_back(seen[s]);
    }
}

void SurfaceMesh::build_derivative_rows()
{
    // Longest hyperbolic edge, to cut the image cloud down to a collar.
    double max_edge = 0.0;
    for (const auto& t : triangles_) {
        for (int e = 0; e < 3; ++e) {
            max_edge = std::max(max_edge, disc_distance(raw_nodes_[t[e]], raw_nodes_[t[(e + 1) % 3]]));
        }
    }
    const double cutoff = std::tanh(0.5 * (domain_.circumradius + 4.0 * max_edge));
    struct Image {
        Complex z;
        int c;
    };
    std::vector<Image> cloud;
    for (int r = 0; r < raw_node_count(); ++r) cloud.push_back({raw_nodes_[r], canonical_of_[r]});
    for (const auto& g : near_group_) {
        for (int r = 0; r < raw_node_count(); ++r) {
            const Complex w = g(raw_nodes_[r]);
            if (std::abs(w) < cutoff) cloud.push_back({w, canonical_of_[r]});
        }
    }

    constexpr int kStencil = 18;
    const int nc = node_count();
    std::vector<Eigen::Triplet<Complex>> t1, t2;
    std::vector<std::pair<double, int>> order(cloud.size());
    for (int c = 0; c < nc; ++c) {
        const Complex z0 = node_position(c);
        for (std::size_t q = 0; q < cloud.size(); ++q) order[q] = {pseudo_distance(cloud[q].z, z0), static_cast<int>(q)};
        std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(4 * kStencil, order.size()), order.end());
        std::vector<int> pick;
        for (std::size_t q = 0; q < order.size() && static_cast<int>(pick.size()) < kStencil; ++q) {
            const Complex w = cloud[order[q].second].z;
            const bool duplicate = std::any_of(pick.begin(), pick.end(),
                                               [&](int p) { return std::abs(cloud[p].z - w) < 1e-10; });
            if (!duplicate) pick.push_back(order[q].second);
        }
        double scale = 0.0;
        for (int p : pick) scale = std::max(scale, std::abs(cloud[p].z - z0));
        const int np = static_cast<int>(pick.size());
        Eigen::MatrixXd phi(np, 6);
        Eigen::VectorXd sw(np);
        for (int a = 0; a < np; ++a) {
            const Complex d = (cloud[pick[a]].z - z0) / scale;
            const double x = d.real(), y = d.imag();
            phi.row(a) << 1.0, x, y, 0.5 * x * x, x * y, 0.5 * y * y;
            sw[a] = 1.0 / (1.0 + 4.0 * std::norm(d));
        }
        const Eigen::MatrixXd A = sw.asDiagonal() * phi;
        // Coefficients = pinv(A) diag(sw) values.
        const Eigen::MatrixXd coef = A.colPivHouseholderQr().solve(Eigen::MatrixXd(sw.asDiagonal()));
        for (int a = 0; a < np; ++a) {
            const int col = cloud[pick[a]].c;
            const double cx = coef(1, a) / scale, cy = coef(2, a) / scale;
            const double cxx = coef(3, a) / (scale * scale), cxy = coef(4, a) / (scale * scale);
            const double cyy = coef(5, a) / (scale * scale);
            t1.emplace_back(c, col, 0.5 * Complex(cx, -cy));
            t2.emplace_back(c, col, 0.25 * Complex(cxx - cyy, -2.0 * cxy));
        }
    }
    dz_.resize(nc, nc);
    dz_.setFromTriplets(t1.begin(), t1.end());
    dzz_.resize(nc, nc);
    dzz_.setFromTriplets(t2.begin(), t2.end());
}

ScalarField SurfaceMesh::sample(const std::function<double(Complex)>& fn) const
{
    ScalarField v(node_count());
    for (int c = 0; c < node_count(); ++c) v[c] = fn(node_position(c));
    return v;
}

std::vector<double> SurfaceMesh::to_raw(const ScalarField& v) const
{
    if (v.size() != node_count()) fail(ErrorCode::SizeMismatch, "field size does not match the mesh");
    std::vector<double> out(raw_node_count());
    for (int r = 0; r < raw_node_count(); ++r) out[r] = v[canonical_of_[r]];
    return out;
}

// ---------------------------------------------------------------- operators

namespace {

void check_size(const SurfaceMesh& mesh, const ScalarField& v)
{
    if (v.size() != mesh.node_count()) fail(ErrorCode::SizeMismatch, "field size does not match the mesh");
}

} // namespace

ScalarField laplacian(const SurfaceMesh& mesh, const ScalarField& v)
{
    check_size(mesh, v);
    // Rows of the stiffness sum to zero, so -K v is a sum of weighted
    // differences; this form annihilates constants exactly.
    const SparseMatrixD& k = mesh.stiffness();
    ScalarField out = ScalarField::Zero(v.size());
    for (int col = 0; col < k.outerSize(); ++col) {
        for (SparseMatrixD::InnerIterator it(k, col); it; ++it) {
            if (it.row() != col) out[it.row()] += it.value() * (v[col] - v[it.row()]);
        }
    }
    return -out.cwiseQuotient(mesh.mass());
}

ScalarField curvature_of_conformal(const SurfaceMesh& mesh, const ScalarField& v)
{
    const ScalarField lap = laplacian(mesh, v);
    return (-2.0 * v).array().exp() * (-lap.array() - 1.0);
}

ScalarField apply_helmholtz(const SurfaceMesh& mesh, const ScalarField& f, const ScalarField& u)
{
    check_size(mesh, f);
    check_size(mesh, u);
    return f.cwiseProduct(u) - laplacian(mesh, u);
}

namespace {

SparseMatrixD helmholtz_matrix(const SurfaceMesh& mesh, const ScalarField& f)
{
    SparseMatrixD a = mesh.stiffness();
    const Eigen::VectorXd d = f.cwiseProduct(mesh.mass());
    for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += d[i];
    a.makeCompressed();
    return a;
}

} // namespace

ScalarField solve_helmholtz(const SurfaceMesh& mesh, const ScalarField& f, const ScalarField& rhs)
{
    check_size(mesh, f);
    check_size(mesh, rhs);
    if (!(f.minCoeff() > 0.0)) fail(ErrorCode::NotPositive, "Helmholtz coefficient must be positive");
    const SparseMatrixD a = helmholtz_matrix(mesh, f);
    const Eigen::VectorXd b = rhs.cwiseProduct(mesh.mass());
    const double tol = 1e-10 * std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
    auto residual = [&](const Eigen::VectorXd& u) { return (apply_helmholtz(mesh, f, u) - rhs).lpNorm<Eigen::Infinity>(); };

    Eigen::SimplicialLDLT<SparseMatrixD> ldlt(a);
    if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd u = ldlt.solve(b);
        u += ldlt.solve(b - a * u);
        if (residual(u) <= tol) return u;
    }
    Eigen::ConjugateGradient<SparseMatrixD, Eigen::Lower | Eigen::Upper> cg(a);
    cg.setTolerance(1e-15);
    cg.setMaxIterations(20 * static_cast<int>(a.rows()));
    const Eigen::VectorXd u = cg.solve(b);
    if (residual(u) > tol) fail(ErrorCode::SolverFailure, "Helmholtz solve did not reach tolerance");
    return u;
}

double helmholtz_min_eigenvalue(const SurfaceMesh& mesh, const ScalarField& f)
{
    check_size(mesh, f);
    if (!(f.minCoeff() > 0.0)) fail(ErrorCode::NotPositive, "Helmholtz coefficient must be positive");
    const SparseMatrixD a = helmholtz_matrix(mesh, f);
    Eigen::SimplicialLDLT<SparseMatrixD> ldlt(a);
    if (ldlt.info() != Eigen::Success) fail(ErrorCode::SolverFailure, "factorization failed");
    const Eigen::VectorXd& m = mesh.mass();
    Rng rng(7);
    Eigen::VectorXd x(a.rows());
    for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(0.5, 1.5);
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        x = ldlt.solve(m.cwiseProduct(x)).eval();
        x /= std::sqrt(x.dot(m.cwiseProduct(x)));
        const double next = x.dot(a * x);
        if (it > 0 && std::abs(next - lambda) < 1e-14 * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

double laplacian_spectral_gap(const SurfaceMesh& mesh)
{
    const Eigen::VectorXd& m = mesh.mass();
    const SparseMatrixD a = helmholtz_matrix(mesh, Eigen::VectorXd::Ones(mesh.node_count()));
    Eigen::SimplicialLDLT<SparseMatrixD> ldlt(a);
    if (ldlt.info() != Eigen::Success) fail(ErrorCode::SolverFailure, "factorization failed");
    const double total = m.sum();
    auto deflate = [&](Eigen::VectorXd& x) { x.array() -= x.dot(m) / total; };
    Rng rng(8);
    Eigen::VectorXd x(a.rows());
    for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 2000; ++it) {
        deflate(x);
        x = ldlt.solve(m.cwiseProduct(x)).eval();
        deflate(x);
        x /= std::sqrt(x.dot(m.cwiseProduct(x)));
        const double next = x.dot(mesh.stiffness() * x);
        if (it > 0 && std::abs(next - lambda) < 1e-13 * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

// ---------------------------------------------------------------- equivariance

double equivariance_residual(const SurfaceMesh& mesh, const std::vector<double>& raw_values)
{
    if (static_cast<int>(raw_values.size()) != mesh.raw_node_count()) {
        fail(ErrorCode::SizeMismatch, "raw field size does not match the mesh");
    }
    double worst = 0.0;
    for (const auto& p : mesh.boundary_pairs()) worst = std::max(worst, std::abs(raw_values[p.partner] - raw_values[p.raw]));
    return worst;
}

double equivariance_residual(const SurfaceMesh& mesh, const ScalarField& canonical)
{
    return equivariance_residual(mesh, mesh.to_raw(canonical));
}

double equivariance_residual(const SurfaceMesh& mesh, const QDField& phi)
{
    if (static_cast<int>(phi.values.size()) != mesh.raw_node_count()) {
        fail(ErrorCode::SizeMismatch, "QD field size does not match the mesh");
    }
    double worst = 0.0;
    for (const auto& p : mesh.boundary_pairs()) {
        const MoebiusMap& g = mesh.domain().pairings[p.pairing];
        const Complex d = g.derivative(mesh.raw_nodes()[p.raw]);
        worst = std::max(worst, std::abs(phi.values[p.partner] * d * d - phi.values[p.raw]));
    }
    return worst;
}

QDField transported_qd_field(const SurfaceMesh& mesh, const std::function<Complex(Complex)>& coeff)
{
    QDField out;
    out.values.resize(mesh.raw_node_count());
    std::vector<Complex> at_rep(mesh.node_count());
    for (int c = 0; c < mesh.node_count(); ++c) at_rep[c] = coeff(mesh.node_position(c));
    for (int r = 0; r < mesh.raw_node_count(); ++r) {
        const Complex d = mesh.to_representative(r).derivative(mesh.raw_nodes()[r]);
        out.values[r] = at_rep[mesh.canonical_of()[r]] * d * d;
    }
    return out;
}

double qd_sup_norm(const SurfaceMesh& mesh, const QDField& phi)
{
    double worst = 0.0;
    for (int c = 0; c < mesh.node_count(); ++c) {
        worst = std::max(worst, std::exp(-2.0 * mesh.rho()[c]) * std::abs(phi.values[mesh.canonical_raw()[c]]));
    }
    return worst;
}

QDField manufactured_qd_field(const SurfaceMesh& mesh, double amplitude, Complex center, double width)
{
    std::vector<MoebiusMap> group{MoebiusMap::identity()};
    group.insert(group.end(), mesh.near_group().begin(), mesh.near_group().end());
    const double s2 = width * width;
    auto series = [&](Complex z) {
        Complex sum{};
        for (const auto& g : group) {
            const Complex d = g.derivative(z);
            sum += std::exp(-std::norm(g(z) - center) / s2) * d * d;
        }
        return sum;
    };
    QDField phi = transported_qd_field(mesh, series);
    const double sup = qd_sup_norm(mesh, phi);
    if (sup > 0.0) {
        for (auto& v : phi.values) v *= amplitude / sup;
    }
    return phi;
}

// ---------------------------------------------------------------- I/O

namespace {

std::FILE* open_or_fail(const std::string& path, const char* mode)
{
    std::FILE* f = std::fopen(path.c_str(), mode);
    if (f == nullptr) fail(ErrorCode::Io, std::string("cannot open ") + path);
    return f;
}

std::vector<std::vector<double>> read_csv_numbers(const std::string& path, std::size_t columns)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t next = line.find(',', pos);
            const std::string cell = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                fail(ErrorCode::Io, "malformed number in " + path);
            }
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (row.size() != columns) fail(ErrorCode::Io, "wrong column count in " + path);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

void write_mesh_obj(const std::string& path, const SurfaceMesh& mesh)
{
    std::FILE* f = open_or_fail(path, "w");
    std::fprintf(f, "# hypcmc genus-2 octagon mesh, subdiv %d\n", mesh.subdiv());
    for (const Complex z : mesh.raw_nodes()) std::fprintf(f, "v %.17g %.17g 0\n", z.real(), z.imag());
    for (const auto& t : mesh.triangles()) std::fprintf(f, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    std::fclose(f);
}

void write_matrix_market(const std::string& path, const SparseMatrixD& m)
{
    std::FILE* f = open_or_fail(path, "w");
    int nnz = 0;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixD::InnerIterator it(m, k); it; ++it) nnz += it.row() >= it.col();
    }
    std::fprintf(f, "%%%%MatrixMarket matrix coordinate real symmetric\n%d %d %d\n", static_cast<int>(m.rows()),
                 static_cast<int>(m.cols()), nnz);
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixD::InnerIterator it(m, k); it; ++it) {
            if (it.row() >= it.col()) {
                std::fprintf(f, "%d %d %.17g\n", static_cast<int>(it.row()) + 1, static_cast<int>(it.col()) + 1,
                             it.value());
            }
        }
    }
    std::fclose(f);
}

void write_scalar_field_csv(const std::string& path, const SurfaceMesh& mesh, const ScalarField& v)
{
    check_size(mesh, v);
    std::FILE* f = open_or_fail(path, "w");
    std::fprintf(f, "node,re_z,im_z,value\n");
    for (int c = 0; c < mesh.node_count(); ++c) {
        const Complex z = mesh.node_position(c);
        std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", c, z.real(), z.imag(), v[c]);
    }
    std::fclose(f);
}

ScalarField read_scalar_field_csv(const std::string& path, const SurfaceMesh& mesh)
{
    const auto rows = read_csv_numbers(path, 4);
    if (static_cast<int>(rows.size()) != mesh.node_count()) fail(ErrorCode::SizeMismatch, "field file does not match the mesh");
    ScalarField v(mesh.node_count());
    for (const auto& r : rows) {
        const int c = static_cast<int>(r[0]);
        if (c < 0 || c >= mesh.node_count()) fail(ErrorCode::Io, "node id out of range in " + path);
        v[c] = r[3];
    }
    return v;
}

void write_qd_field_csv(const std::string& path, const SurfaceMesh& mesh, const QDField& phi)
{
    if (static_cast<int>(phi.values.size()) != mesh.raw_node_count()) fail(ErrorCode::SizeMismatch, "QD field size mismatch");
    std::FILE* f = open_or_fail(path, "w");
    std::fprintf(f, "raw_node,re_z,im_z,re_lambda,im_lambda\n");
    for (int r = 0; r < mesh.raw_node_count(); ++r) {
        const Complex z = mesh.raw_nodes()[r];
        std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", r, z.real(), z.imag(), phi.values[r].real(), phi.values[r].imag());
    }
    std::fclose(f);
}

QDField read_qd_field_csv(const std::string& path, const SurfaceMesh& mesh)
{
    const auto rows = read_csv_numbers(path, 5);
    if (static_cast<int>(rows.size()) != mesh.raw_node_count()) fail(ErrorCode::SizeMismatch, "QD file does not match the mesh");
    QDField phi;
    phi.values.resize(mesh.raw_node_count());
    for (const auto& r : rows) {
        const int k = static_cast<int>(r[0]);
        if (k < 0 || k >= mesh.raw_node_count()) fail(ErrorCode::Io, "node id out of range in " + path);
        phi.values[k] = {r[3], r[4]};
    }
    return phi;
}

} // namespace hypcmc

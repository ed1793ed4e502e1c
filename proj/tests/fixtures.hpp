#pragma once

#include "sphconf/energy.hpp"
#include "sphconf/mesh.hpp"
#include "sphconf/sphere_map.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <random>

namespace fixtures
{

using namespace sphconf;

inline TriMesh tetrahedron()
{
    Points3d p(4, 3);
    p << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1;
    p /= std::sqrt(3.0);
    Faces f(4, 3);
    f << 0, 1, 2, 0, 3, 1, 0, 2, 3, 1, 3, 2;
    return TriMesh::from_arrays(p, f);
}

inline TriMesh octahedron()
{
    Points3d p(6, 3);
    p << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
    Faces f(8, 3);
    f << 0, 2, 4, 2, 1, 4, 1, 3, 4, 3, 0, 4, 2, 0, 5, 1, 2, 5, 3, 1, 5, 0, 3, 5;
    return TriMesh::from_arrays(p, f);
}

/// Regular torus grid, nu x nv quads split in two.
inline void torus_arrays(int nu, int nv, Points3d& p, Faces& f)
{
    p.resize(nu * nv, 3);
    f.resize(2 * nu * nv, 3);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const double a = 2 * M_PI * i / nu, b = 2 * M_PI * j / nv;
            p.row(i * nv + j) << (2 + std::cos(b)) * std::cos(a), (2 + std::cos(b)) * std::sin(a),
                std::sin(b);
            const int v00 = i * nv + j, v10 = ((i + 1) % nu) * nv + j;
            const int v01 = i * nv + (j + 1) % nv, v11 = ((i + 1) % nu) * nv + (j + 1) % nv;
            f.row(2 * (i * nv + j)) << v00, v10, v11;
            f.row(2 * (i * nv + j) + 1) << v00, v11, v01;
        }
}

/// Random unit-sphere image near a rotated copy of the icosphere: pole-safe,
/// non-degenerate, with O(amplitude) angle perturbations.
inline SphericalFieldd random_field(const TriMesh& mesh, std::uint64_t seed, double amplitude = 0.15)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-amplitude, amplitude);
    Points3d f = mesh.positions().rowwise().normalized() * random_rotation(seed + 17);
    SphericalFieldd field = from_cartesian(f);
    for (Eigen::Index i = 0; i < field.size(); ++i) {
        field.theta[i] += U(rng);
        field.phi[i] += U(rng);
    }
    return rotate_away_from_poles(field, 0.05).field;
}

inline double energy_of(const TriMesh& mesh, const SymSparseOperator& L, const Eigen::VectorXd& x)
{
    return build_energy_state(mesh, L, SphericalFieldd::from_stacked(x)).energy;
}

/// Dirichlet energy minus image area via per-triangle P1 gradients; shares no
/// code with the cotangent assembly.
inline double dirichlet_minus_area(const TriMesh& mesh, const Points3d& f)
{
    const Points3d& p = mesh.positions();
    double E = 0.0;
    for (int t = 0; t < mesh.num_faces(); ++t) {
        const int i = mesh.faces()(t, 0), j = mesh.faces()(t, 1), k = mesh.faces()(t, 2);
        const Eigen::Vector3d e1 = p.row(j) - p.row(i), e2 = p.row(k) - p.row(i);
        Eigen::Matrix2d G;
        G << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
        const double area = 0.5 * std::sqrt(G.determinant());
        Eigen::Matrix<double, 3, 2> F;
        F.col(0) = (f.row(j) - f.row(i)).transpose();
        F.col(1) = (f.row(k) - f.row(i)).transpose();
        E += 0.5 * area * (F * G.inverse() * F.transpose()).trace();
        const Eigen::Vector3d a = F.col(0), b = F.col(1);
        E -= 0.5 * a.cross(b).norm();
    }
    return E;
}

inline Eigen::VectorXd gradient_of(const TriMesh& mesh, const SymSparseOperator& L,
                                   const Eigen::VectorXd& x)
{
    return energy_gradient(build_energy_state(mesh, L, SphericalFieldd::from_stacked(x)));
}

/// Central differences of the energy.
inline Eigen::VectorXd fd_gradient(const TriMesh& mesh, const SymSparseOperator& L,
                                   const Eigen::VectorXd& x, double h = 1e-5)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x, b = x;
        a[i] += h;
        b[i] -= h;
        g[i] = (energy_of(mesh, L, a) - energy_of(mesh, L, b)) / (2 * h);
    }
    return g;
}

/// Central differences of the analytic gradient, column by column.
inline Eigen::MatrixXd fd_hessian(const TriMesh& mesh, const SymSparseOperator& L,
                                  const Eigen::VectorXd& x, double h = 1e-5)
{
    Eigen::MatrixXd H(x.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Eigen::VectorXd a = x, b = x;
        a[j] += h;
        b[j] -= h;
        H.col(j) = (gradient_of(mesh, L, a) - gradient_of(mesh, L, b)) / (2 * h);
    }
    return H;
}

inline double max_rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& reference)
{
    return (analytic - reference).cwiseAbs().maxCoeff() / reference.cwiseAbs().maxCoeff();
}

inline Eigen::Vector3d row3(const Points3d& p, int i) { return p.row(i).transpose(); }

}  // namespace fixtures

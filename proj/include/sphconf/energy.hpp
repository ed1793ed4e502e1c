#pragma once

#include "sphconf/mesh.hpp"
#include "sphconf/sphere_map.hpp"

namespace sphconf
{

/**
 * Quantities cached per iterate. With w_ij the source cotangent weights and
 * w_ij(f) those of the image triangles, D(f) = L - L(f) and
 * E_C = 1/2 <D(f) f, f> = 1/2 (x'p + y'q + z'r).
 */
struct EnergyState {
    TrigCached cache;
    Points3d f;
    /// Unsigned image triangle areas |f(T)|.
    Eigen::VectorXd areas;
    /// Image cotangents, column c is the angle at corner c.
    CornerAngles cotangents;
    SymSparseOperator L_f;
    SymSparseOperator D_f;
    Eigen::VectorXd p, q, r;
    double energy = 0.0;

    Eigen::Index size() const noexcept { return f.rows(); }
};

/**
 * Build the state for a spherical field. Throws DegenerateImageError if an
 * image triangle has area below 1e-14 times the mean image area.
 */
EnergyState build_energy_state(const TriMesh& mesh, const SymSparseOperator& L,
                               const SphericalFieldd& field);

/// Same, from unit Cartesian image points (angles recovered by from_cartesian).
EnergyState build_energy_state(const TriMesh& mesh, const SymSparseOperator& L,
                               const Points3d& f);

/// E_C of a Cartesian image.
double conformal_energy(const TriMesh& mesh, const SymSparseOperator& L, const Points3d& f);

/// A(f) as the sum of cross-product areas.
double image_area(const EnergyState& state);

/// A(f) as 1/2 <L(f) f, f>.
double image_area_laplacian(const EnergyState& state);

/// g = [-y.p + x.q ; u.p + v.q - w.r].
Eigen::VectorXd energy_gradient(const EnergyState& state);

/**
 * Per-corner Jacobian projections. For face (i, j, k) and corner c with
 * vertex a, the edge differences are f_jk, f_ki, f_ij (in that order) and
 *   a(f, 3c + e) = <df_a/dtheta_a, f_e>,  b(f, 3c + e) = <df_a/dphi_a, f_e>.
 * dA_dtheta(f, c) and dA_dphi(f, c) are the partials of |f(T)| with respect
 * to the angles of corner c.
 */
struct TrigDifferentials {
    Eigen::Matrix<double, Eigen::Dynamic, 9, Eigen::RowMajor> a;
    Eigen::Matrix<double, Eigen::Dynamic, 9, Eigen::RowMajor> b;
    CornerAngles dA_dtheta;
    CornerAngles dA_dphi;
};

TrigDifferentials trig_differentials(const TriMesh& mesh, const EnergyState& state);

/**
 * Hessian of E_C in (theta, phi), ordered [theta block; phi block], with
 * pattern exactly 1_{2x2} (x) pattern(L). Assembled per triangle and
 * symmetrized as (H + H') / 2.
 */
SymSparseOperator energy_hessian(const TriMesh& mesh, const SymSparseOperator& L,
                                 const EnergyState& state, const TrigDifferentials& diffs);

inline SymSparseOperator energy_hessian(const TriMesh& mesh, const SymSparseOperator& L,
                                        const EnergyState& state)
{
    return energy_hessian(mesh, L, state, trig_differentials(mesh, state));
}

/// Hessian of E_C in Cartesian coordinates (x block, y block, z block).
SymSparseOperator cartesian_hessian(const TriMesh& mesh, const SymSparseOperator& L,
                                    const EnergyState& state);

/// Per-triangle Hessian of the unsigned area of (p0, p1, p2), 9x9 in the
/// order [p0; p1; p2].
Eigen::Matrix<double, 9, 9> triangle_area_hessian(const Eigen::Vector3d& p0,
                                                  const Eigen::Vector3d& p1,
                                                  const Eigen::Vector3d& p2);

/// Gradient of the unsigned area of (p0, p1, p2), ordered [p0; p1; p2].
Eigen::Matrix<double, 9, 1> triangle_area_gradient(const Eigen::Vector3d& p0,
                                                   const Eigen::Vector3d& p1,
                                                   const Eigen::Vector3d& p2);

}  // namespace sphconf

#pragma once

#include "sphconf/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace sphconf
{

/// Per-vertex azimuth theta and colatitude phi; the optimization variables.
template <typename Scalar>
struct SphericalField {
    Vector<Scalar> theta;
    Vector<Scalar> phi;

    Eigen::Index size() const noexcept { return theta.size(); }

    /// Stacked [theta; phi] vector of length 2n.
    Vector<Scalar> stacked() const
    {
        Vector<Scalar> out(2 * size());
        out << theta, phi;
        return out;
    }

    static SphericalField from_stacked(const Vector<Scalar>& v)
    {
        const Eigen::Index n = v.size() / 2;
        return {v.head(n), v.tail(n)};
    }
};

using SphericalFieldd = SphericalField<double>;

/// x, y, z and the phi-derivative companions u, v, w of a spherical field.
template <typename Scalar>
struct TrigCache {
    Vector<Scalar> x, y, z;
    Vector<Scalar> u, v, w;

    Eigen::Index size() const noexcept { return x.size(); }

    Points3<Scalar> points() const
    {
        Points3<Scalar> f(size(), 3);
        f.col(0) = x;
        f.col(1) = y;
        f.col(2) = z;
        return f;
    }

    /// d f_i / d theta_i.
    Eigen::Matrix<Scalar, 3, 1> dtheta(Eigen::Index i) const { return {-y[i], x[i], Scalar(0)}; }
    /// d f_i / d phi_i.
    Eigen::Matrix<Scalar, 3, 1> dphi(Eigen::Index i) const { return {u[i], v[i], -w[i]}; }
};

using TrigCached = TrigCache<double>;

template <typename Scalar>
TrigCache<Scalar> trig_cache(const SphericalField<Scalar>& field)
{
    using std::cos;
    using std::sin;
    const auto ct = field.theta.array().cos();
    const auto st = field.theta.array().sin();
    const auto cp = field.phi.array().cos();
    const auto sp = field.phi.array().sin();
    TrigCache<Scalar> cache;
    cache.x = ct * sp;
    cache.y = st * sp;
    cache.z = cp;
    cache.u = ct * cp;
    cache.v = st * cp;
    cache.w = sp;
    return cache;
}

template <typename Scalar>
Points3<Scalar> to_cartesian(const SphericalField<Scalar>& field)
{
    return trig_cache(field).points();
}

/// phi = acos(z) in [0, pi]; theta = atan2(y, x) wrapped to [0, 2 pi).
template <typename Derived>
auto from_cartesian(const Eigen::MatrixBase<Derived>& f)
{
    using Scalar = typename Derived::Scalar;
    using std::acos;
    using std::atan2;
    SphericalField<Scalar> field;
    field.theta.resize(f.rows());
    field.phi.resize(f.rows());
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const Scalar r = f.row(i).norm();
        Scalar c = f(i, 2) / r;
        c = c > Scalar(1) ? Scalar(1) : (c < Scalar(-1) ? Scalar(-1) : c);
        field.phi[i] = acos(c);
        Scalar t = atan2(f(i, 1), f(i, 0));
        if (t < Scalar(0)) t += two_pi;
        if (t >= two_pi) t -= two_pi;
        field.theta[i] = t;
    }
    return field;
}

template <typename Scalar>
struct RotationFit {
    Rotation3<Scalar> rotation = Rotation3<Scalar>::Identity();
    /// Cross-covariance too degenerate for a unique minimizer.
    bool ambiguous = false;
};

/**
 * R = argmin over SO(3) of ||B - A R||_F for row-point sets A, B (k x 3).
 * Orthogonal Procrustes with the determinant fixed to +1 by flipping the
 * smallest singular direction.
 */
template <typename DerivedA, typename DerivedB>
auto optimal_rotation(const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedB>& B)
{
    using Scalar = typename DerivedA::Scalar;
    const Rotation3<Scalar> M = A.transpose() * B;
    Eigen::JacobiSVD<Rotation3<Scalar>> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& U = svd.matrixU();
    const auto& V = svd.matrixV();
    const auto& s = svd.singularValues();
    Eigen::Matrix<Scalar, 3, 1> d(1, 1, 1);
    const bool reflect = (U * V.transpose()).determinant() < Scalar(0);
    if (reflect) d[2] = Scalar(-1);

    RotationFit<Scalar> fit;
    fit.rotation = U * d.asDiagonal() * V.transpose();
    const Scalar tol = Scalar(1e-12) * (s[0] > Scalar(0) ? s[0] : Scalar(1));
    fit.ambiguous = s[1] <= tol || (reflect && (s[1] - s[2]) <= tol);
    return fit;
}

/// delta = min over SO(3) of ||next - prev R||_F^2.
template <typename DerivedA, typename DerivedB>
auto alignment_error(const Eigen::MatrixBase<DerivedA>& prev, const Eigen::MatrixBase<DerivedB>& next)
{
    const auto fit = optimal_rotation(prev, next);
    return (next - prev * fit.rotation).squaredNorm();
}

/// Smallest |sin phi| over the field.
template <typename Scalar>
Scalar min_abs_sin_phi(const SphericalField<Scalar>& field)
{
    return field.phi.array().sin().abs().minCoeff();
}

struct PoleSafeResult {
    SphericalFieldd field;
    /// Applied to the Cartesian image as f' = f R (identity if untouched).
    Rotation3d rotation = Rotation3d::Identity();
    bool rotated = false;
    /// False when no tried rotation met the bound; the best one is returned.
    bool satisfied = true;
};

/// Default bound on |sin phi| kept away from the coordinate singularity.
inline constexpr double kPoleEpsilon = 1e-3;

/**
 * Rotate the image globally until every vertex has |sin phi| >= eps.
 * Deterministic: candidate rotations come from a fixed-seed generator.
 */
PoleSafeResult rotate_away_from_poles(const SphericalFieldd& field, double eps = kPoleEpsilon);

/// Uniformly distributed rotation drawn from a seeded generator.
Rotation3d random_rotation(std::uint64_t seed);

}  // namespace sphconf

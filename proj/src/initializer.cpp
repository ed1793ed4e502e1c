#include "sphconf/initializer.hpp"

#include "sphconf/postprocess.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>

namespace sphconf
{

void InitConfig::validate() const
{
    if (max_iters < 1) throw InputError("initializer: centering iterations must be >= 1");
    if (!(tolerance > 0.0 && tolerance < 1.0))
        throw InputError("initializer: centering tolerance must lie in (0, 1)");
    if (mobius_iters < 0 || !(mobius_tolerance > 0.0))
        throw InputError("initializer: invalid Mobius recentering settings");
}

int select_anchor_face(const TriMesh& mesh, AnchorRule rule)
{
    switch (rule) {
    case AnchorRule::MaxMinAngle:
    default: {
        const CornerAngles angles = corner_angles(mesh);
        Eigen::Index best = 0;
        angles.rowwise().minCoeff().maxCoeff(&best);
        return static_cast<int>(best);
    }
    }
}

Eigen::VectorXd vertex_areas(const TriMesh& mesh)
{
    const Points3d& p = mesh.positions();
    const Faces& faces = mesh.faces();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        const Eigen::Vector3d p0 = p.row(faces(t, 0)), p1 = p.row(faces(t, 1)),
                              p2 = p.row(faces(t, 2));
        const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
        for (int c = 0; c < 3; ++c) a[faces(t, c)] += area / 3.0;
    }
    return a;
}

namespace
{

Points3d lift(const Points2d& plane, double scale)
{
    return inverse_stereographic(scale * plane, Eigen::Vector3d::UnitZ());
}

double orientation_sum(const TriMesh& mesh, const Points3d& f)
{
    const Faces& faces = mesh.faces();
    double s = 0.0;
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        const Eigen::Vector3d a = f.row(faces(t, 0)), b = f.row(faces(t, 1)),
                              c = f.row(faces(t, 2));
        s += a.dot(b.cross(c));
    }
    return s;
}

}  // namespace

Points3d mobius_recenter(const Points3d& f, const Eigen::Vector3d& a)
{
    const double a2 = a.squaredNorm();
    if (!(a2 < 1.0)) throw InputError("mobius_recenter: centre must lie inside the unit ball");
    Points3d g(f.rows(), 3);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const Eigen::Vector3d x = f.row(i).transpose();
        const Eigen::Vector3d d = x - a;
        const Eigen::Vector3d y =
            ((1.0 - a2) * d - d.squaredNorm() * a) / (1.0 - 2.0 * x.dot(a) + x.squaredNorm() * a2);
        g.row(i) = y.normalized().transpose();
    }
    return g;
}

InitResult initial_map(const TriMesh& mesh, const InitConfig& config)
{
    config.validate();
    const int n = mesh.num_vertices();
    InitResult result;
    result.anchor_face = select_anchor_face(mesh, config.anchor);

    std::vector<int> local(static_cast<std::size_t>(n), -1);
    Points2d plane(n, 2);
    for (int c = 0; c < 3; ++c) {
        const int v = mesh.faces()(result.anchor_face, c);
        const double a = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * c / 3.0;
        plane.row(v) << std::cos(a), std::sin(a);
        local[v] = -2;
    }
    int k = 0;
    for (int v = 0; v < n; ++v)
        if (local[v] == -1) local[v] = k++;

    const SparseRowMatrix L = cotangent_laplacian(mesh).matrix;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, 2);
    for (int v = 0; v < n; ++v) {
        if (local[v] < 0) continue;
        for (SparseRowMatrix::InnerIterator it(L, v); it; ++it) {
            const int w = static_cast<int>(it.col());
            if (local[w] >= 0)
                trip.emplace_back(local[v], local[w], it.value());
            else
                rhs.row(local[v]) -= it.value() * plane.row(w);
        }
    }
    Eigen::SparseMatrix<double> A(k, k);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SolverError("initializer: singular interior Laplacian");
    const Eigen::MatrixXd h = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !h.allFinite())
        throw SolverError("initializer: interior Laplacian solve failed");
    for (int v = 0; v < n; ++v)
        if (local[v] >= 0) plane.row(v) = h.row(local[v]);

    // Balance the area-weighted centroid by bisection on log(scale); the
    // centroid height increases with the scale.
    const Eigen::VectorXd weights = vertex_areas(mesh) / vertex_areas(mesh).sum();
    auto centroid = [&](double t) -> Eigen::Vector3d {
        return lift(plane, std::exp(t)).transpose() * weights;
    };
    double lo = -20.0, hi = 20.0;
    double best_t = 0.0;
    double best_norm = centroid(0.0).norm();
    for (int it = 0; it < config.max_iters && best_norm > config.tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Eigen::Vector3d c = centroid(mid);
        if (c.norm() < best_norm) {
            best_norm = c.norm();
            best_t = mid;
        }
        (c.z() > 0.0 ? hi : lo) = mid;
    }
    result.scale = std::exp(best_t);
    result.centroid_norm = best_norm;
    result.centered = best_norm <= config.tolerance;

    Points3d f = lift(plane, result.scale);
    if (orientation_sum(mesh, f) < 0.0) {
        plane.col(0) = -plane.col(0);
        f = lift(plane, result.scale);
        result.mirrored = true;
    }

    Eigen::Vector3d c = f.transpose() * weights;
    while (result.mobius_steps < config.mobius_iters && c.norm() > config.mobius_tolerance) {
        f = mobius_recenter(f, 0.5 * c);
        c = f.transpose() * weights;
        ++result.mobius_steps;
    }
    result.centroid_norm = c.norm();
    result.centered = result.centroid_norm <= config.tolerance;
    result.folds = static_cast<int>(detect_foldings(mesh, f).count());

    const PoleSafeResult safe = rotate_away_from_poles(from_cartesian(f), config.pole_eps);
    result.field = safe.field;
    result.pole_rotation = safe.rotation;
    return result;
}

}  // namespace sphconf

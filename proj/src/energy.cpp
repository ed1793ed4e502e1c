#include "sphconf/energy.hpp"

#include <cmath>
#include <sstream>

namespace sphconf
{

namespace
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Jac = Eigen::Matrix<double, 3, 2>;

Vec3 row3(const Points3d& p, int i) { return p.row(i).transpose(); }

Jac jacobian(const TrigCached& c, int i)
{
    Jac J;
    J.col(0) = c.dtheta(i);
    J.col(1) = c.dphi(i);
    return J;
}

// Hessian of the squared area Q = (|u|^2 |v|^2 - (u.v)^2) / 4 with
// u = p1 - p0, v = p2 - p0, in the vertex order [p0; p1; p2].
Eigen::Matrix<double, 9, 9> squared_area_hessian(const Vec3& u, const Vec3& v)
{
    const Mat3 I = Mat3::Identity();
    const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
    const Mat3 Quu = 0.5 * (vv * I - v * v.transpose());
    const Mat3 Qvv = 0.5 * (uu * I - u * u.transpose());
    const Mat3 Quv = 0.5 * (2.0 * u * v.transpose() - uv * I - v * u.transpose());

    Eigen::Matrix<double, 9, 9> H;
    // d/dp0 = -(d/du + d/dv), d/dp1 = d/du, d/dp2 = d/dv.
    const Mat3 Qvu = Quv.transpose();
    H.block<3, 3>(3, 3) = Quu;
    H.block<3, 3>(6, 6) = Qvv;
    H.block<3, 3>(3, 6) = Quv;
    H.block<3, 3>(6, 3) = Qvu;
    H.block<3, 3>(0, 3) = -(Quu + Qvu);
    H.block<3, 3>(0, 6) = -(Quv + Qvv);
    H.block<3, 3>(3, 0) = H.block<3, 3>(0, 3).transpose();
    H.block<3, 3>(6, 0) = H.block<3, 3>(0, 6).transpose();
    H.block<3, 3>(0, 0) = Quu + Quv + Qvu + Qvv;
    return H;
}

Eigen::Matrix<double, 9, 1> squared_area_gradient(const Vec3& u, const Vec3& v)
{
    const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
    const Vec3 gu = 0.5 * (vv * u - uv * v);
    const Vec3 gv = 0.5 * (uu * v - uv * u);
    Eigen::Matrix<double, 9, 1> g;
    g << -(gu + gv), gu, gv;
    return g;
}

double area_of(const Vec3& u, const Vec3& v) { return 0.5 * u.cross(v).norm(); }

std::array<Vec3, 3> corners(const Points3d& f, const Faces& faces, Eigen::Index t)
{
    return {row3(f, faces(t, 0)), row3(f, faces(t, 1)), row3(f, faces(t, 2))};
}

EnergyState build_state(const TriMesh& mesh, const SymSparseOperator& L, const Points3d& f,
                        TrigCached cache)
{
    const Faces& faces = mesh.faces();
    const Eigen::Index m = faces.rows();
    EnergyState s;
    s.cache = std::move(cache);
    s.f = f;
    s.areas.resize(m);
    for (Eigen::Index t = 0; t < m; ++t) {
        const auto P = corners(f, faces, t);
        s.areas[t] = area_of(P[1] - P[0], P[2] - P[0]);
    }
    const double threshold = 1e-14 * s.areas.mean();
    for (Eigen::Index t = 0; t < m; ++t) {
        if (!(s.areas[t] >= threshold) || s.areas[t] == 0.0) {
            std::ostringstream msg;
            msg << "degenerate image triangle: face " << t << " has area " << s.areas[t];
            throw DegenerateImageError(msg.str(), static_cast<int>(t));
        }
    }
    s.cotangents.resize(m, 3);
    for (Eigen::Index t = 0; t < m; ++t) {
        const auto P = corners(f, faces, t);
        for (int c = 0; c < 3; ++c) {
            const Vec3 a = P[(c + 1) % 3] - P[c];
            const Vec3 b = P[(c + 2) % 3] - P[c];
            s.cotangents(t, c) = a.dot(b) / (2.0 * s.areas[t]);
        }
    }
    s.L_f = laplacian_from_cotangents(s.cotangents, mesh);
    if (!s.L_f.same_pattern(L)) throw Error("source Laplacian does not match the mesh pattern");
    // Same pattern, so D(f) is a slot-wise difference of the value arrays.
    s.D_f = L;
    const Eigen::Index nnz = L.matrix.nonZeros();
    Eigen::Map<Eigen::VectorXd>(s.D_f.matrix.valuePtr(), nnz) -=
        Eigen::Map<const Eigen::VectorXd>(s.L_f.matrix.valuePtr(), nnz);
    s.p = s.D_f.matrix * s.cache.x;
    s.q = s.D_f.matrix * s.cache.y;
    s.r = s.D_f.matrix * s.cache.z;

    // 1/2 <D f, f> summed per edge: D has zero row sums, so the quadratic
    // form is 1/2 sum over edges of -D_ij |f_i - f_j|^2.
    double e = 0.0;
    const SparseRowMatrix& D = s.D_f.matrix;
    for (int i = 0; i < D.outerSize(); ++i) {
        for (SparseRowMatrix::InnerIterator it(D, i); it; ++it) {
            const int j = static_cast<int>(it.col());
            if (j <= i) continue;
            e -= it.value() * (f.row(i) - f.row(j)).squaredNorm();
        }
    }
    s.energy = 0.5 * e;
    if (!std::isfinite(s.energy)) throw SolverError("non-finite conformal energy");
    return s;
}

}  // namespace

EnergyState build_energy_state(const TriMesh& mesh, const SymSparseOperator& L,
                               const SphericalFieldd& field)
{
    if (field.size() != mesh.num_vertices()) throw InputError("field size does not match mesh");
    if (!field.theta.allFinite() || !field.phi.allFinite())
        throw SolverError("non-finite spherical coordinates");
    TrigCached cache = trig_cache(field);
    const Points3d f = cache.points();
    return build_state(mesh, L, f, std::move(cache));
}

EnergyState build_energy_state(const TriMesh& mesh, const SymSparseOperator& L, const Points3d& f)
{
    if (f.rows() != mesh.num_vertices()) throw InputError("image size does not match mesh");
    return build_state(mesh, L, f, trig_cache(from_cartesian(f)));
}

double conformal_energy(const TriMesh& mesh, const SymSparseOperator& L, const Points3d& f)
{
    return build_energy_state(mesh, L, f).energy;
}

double image_area(const EnergyState& state) { return state.areas.sum(); }

double image_area_laplacian(const EnergyState& state)
{
    const auto& Lf = state.L_f.matrix;
    const auto& c = state.cache;
    return 0.5 * (c.x.dot(Lf * c.x) + c.y.dot(Lf * c.y) + c.z.dot(Lf * c.z));
}

Eigen::VectorXd energy_gradient(const EnergyState& state)
{
    const auto& c = state.cache;
    const Eigen::Index n = state.size();
    Eigen::VectorXd g(2 * n);
    g.head(n) = -c.y.cwiseProduct(state.p) + c.x.cwiseProduct(state.q);
    g.tail(n) = c.u.cwiseProduct(state.p) + c.v.cwiseProduct(state.q) - c.w.cwiseProduct(state.r);
    return g;
}

Eigen::Matrix<double, 9, 1> triangle_area_gradient(const Vec3& p0, const Vec3& p1, const Vec3& p2)
{
    const Vec3 u = p1 - p0, v = p2 - p0;
    return squared_area_gradient(u, v) / (2.0 * area_of(u, v));
}

Eigen::Matrix<double, 9, 9> triangle_area_hessian(const Vec3& p0, const Vec3& p1, const Vec3& p2)
{
    const Vec3 u = p1 - p0, v = p2 - p0;
    const double A = area_of(u, v);
    const Eigen::Matrix<double, 9, 1> gA = squared_area_gradient(u, v) / (2.0 * A);
    return squared_area_hessian(u, v) / (2.0 * A) - gA * gA.transpose() / A;
}

TrigDifferentials trig_differentials(const TriMesh& mesh, const EnergyState& state)
{
    const Faces& faces = mesh.faces();
    const Eigen::Index m = faces.rows();
    TrigDifferentials d;
    d.a.resize(m, 9);
    d.b.resize(m, 9);
    d.dA_dtheta.resize(m, 3);
    d.dA_dphi.resize(m, 3);
    for (Eigen::Index t = 0; t < m; ++t) {
        const auto P = corners(state.f, faces, t);
        // f_jk, f_ki, f_ij
        const std::array<Vec3, 3> e{P[1] - P[2], P[2] - P[0], P[0] - P[1]};
        const Eigen::Matrix<double, 9, 1> gA = triangle_area_gradient(P[0], P[1], P[2]);
        for (int c = 0; c < 3; ++c) {
            const Jac J = jacobian(state.cache, faces(t, c));
            for (int k = 0; k < 3; ++k) {
                d.a(t, 3 * c + k) = J.col(0).dot(e[k]);
                d.b(t, 3 * c + k) = J.col(1).dot(e[k]);
            }
            const Eigen::Vector2d G = J.transpose() * gA.segment<3>(3 * c);
            d.dA_dtheta(t, c) = G[0];
            d.dA_dphi(t, c) = G[1];
        }
    }
    return d;
}

SymSparseOperator energy_hessian(const TriMesh& mesh, const SymSparseOperator& L,
                                 const EnergyState& state, const TrigDifferentials& diffs)
{
    const int n = mesh.num_vertices();
    const Faces& faces = mesh.faces();
    const auto& c = state.cache;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(4 * (L.matrix.nonZeros() + 9 * faces.rows()) + 4 * n));

    auto add_block = [&](int i, int j, const Eigen::Matrix2d& B) {
        trip.emplace_back(i, j, B(0, 0));
        trip.emplace_back(i, n + j, B(0, 1));
        trip.emplace_back(n + i, j, B(1, 0));
        trip.emplace_back(n + i, n + j, B(1, 1));
    };

    // Dirichlet part: J' (L (x) I3) J.
    for (int i = 0; i < n; ++i) {
        const Jac Ji = jacobian(c, i);
        for (SparseRowMatrix::InnerIterator it(L.matrix, i); it; ++it) {
            const int j = static_cast<int>(it.col());
            add_block(i, j, it.value() * Ji.transpose() * jacobian(c, j));
        }
    }

    // Area part: -J' Hess|f(T)| J, with the rank-one term taken from the
    // projected area partials.
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        const auto P = corners(state.f, faces, t);
        const Vec3 u = P[1] - P[0], v = P[2] - P[0];
        const double A = state.areas[t];
        const Eigen::Matrix<double, 9, 9> HQ = squared_area_hessian(u, v) / (2.0 * A);
        std::array<Jac, 3> J;
        std::array<Eigen::Vector2d, 3> G;
        for (int k = 0; k < 3; ++k) {
            J[k] = jacobian(c, faces(t, k));
            G[k] = {diffs.dA_dtheta(t, k), diffs.dA_dphi(t, k)};
        }
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const Eigen::Matrix2d B = -J[a].transpose() * HQ.block<3, 3>(3 * a, 3 * b) * J[b] +
                                          G[a] * G[b].transpose() / A;
                add_block(faces(t, a), faces(t, b), B);
            }
        }
    }

    // Curvature of the parameterization: sum_c (D f)_c d^2 f_c.
    for (int i = 0; i < n; ++i) {
        Eigen::Matrix2d K;
        K(0, 0) = -c.x[i] * state.p[i] - c.y[i] * state.q[i];
        K(0, 1) = K(1, 0) = -c.v[i] * state.p[i] + c.u[i] * state.q[i];
        K(1, 1) = -(c.x[i] * state.p[i] + c.y[i] * state.q[i] + c.z[i] * state.r[i]);
        add_block(i, i, K);
    }

    SparseRowMatrix H(2 * n, 2 * n);
    H.setFromTriplets(trip.begin(), trip.end());
    SparseRowMatrix Ht = H.transpose();
    SparseRowMatrix sym = 0.5 * (H + Ht);
    sym.makeCompressed();
    return {std::move(sym), pattern_hash(sym)};
}

SymSparseOperator cartesian_hessian(const TriMesh& mesh, const SymSparseOperator& L,
                                    const EnergyState& state)
{
    const int n = mesh.num_vertices();
    const Faces& faces = mesh.faces();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(3 * L.matrix.nonZeros() + 81 * faces.rows()));
    for (int i = 0; i < n; ++i)
        for (SparseRowMatrix::InnerIterator it(L.matrix, i); it; ++it)
            for (int s = 0; s < 3; ++s)
                trip.emplace_back(s * n + i, s * n + static_cast<int>(it.col()), it.value());
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        const auto P = corners(state.f, faces, t);
        const Eigen::Matrix<double, 9, 9> HA = triangle_area_hessian(P[0], P[1], P[2]);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int s = 0; s < 3; ++s)
                    for (int r = 0; r < 3; ++r)
                        trip.emplace_back(s * n + faces(t, a), r * n + faces(t, b),
                                          -HA(3 * a + s, 3 * b + r));
    }
    SparseRowMatrix H(3 * n, 3 * n);
    H.setFromTriplets(trip.begin(), trip.end());
    SparseRowMatrix Ht = H.transpose();
    SparseRowMatrix sym = 0.5 * (H + Ht);
    sym.makeCompressed();
    return {std::move(sym), pattern_hash(sym)};
}

}  // namespace sphconf

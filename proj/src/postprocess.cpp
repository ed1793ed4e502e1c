#include "sphconf/postprocess.hpp"

#include <Eigen/Geometry>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sphconf
{

namespace
{

Eigen::Vector3d row3(const Points3d& p, int i) { return p.row(i).transpose(); }

std::vector<int> complement(const std::vector<char>& mask, char value)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] == value) out.push_back(static_cast<int>(i));
    return out;
}

Eigen::Vector3d face_center(const Points3d& f, const Faces& faces, Eigen::Index t)
{
    return (row3(f, faces(t, 0)) + row3(f, faces(t, 1)) + row3(f, faces(t, 2))).normalized();
}

}  // namespace

FoldReport detect_foldings(const TriMesh& mesh, const Points3d& f)
{
    const Faces& faces = mesh.faces();
    std::vector<char> in(static_cast<std::size_t>(mesh.num_vertices()), 0);
    FoldReport report;
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        Eigen::Matrix3d M;
        M << row3(f, faces(t, 0)), row3(f, faces(t, 1)), row3(f, faces(t, 2));
        if (M.determinant() <= 0.0) {
            report.folded_faces.push_back(static_cast<int>(t));
            for (int c = 0; c < 3; ++c) in[faces(t, c)] = 1;
        }
    }
    report.inner = complement(in, 1);
    report.outer = complement(in, 0);
    return report;
}

Rotation3d north_to_pole(const Eigen::Vector3d& north)
{
    const Eigen::Matrix3d Q =
        Eigen::Quaterniond::FromTwoVectors(north.normalized(), Eigen::Vector3d::UnitZ())
            .toRotationMatrix();
    // Row points: p R = (Q p')'.
    return Q.transpose();
}

Points2d stereographic(const Points3d& f, const Eigen::Vector3d& north)
{
    const Eigen::Vector3d nhat = north.normalized();
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        if ((f.row(i).transpose() - nhat).norm() < 1e-9) {
            std::ostringstream msg;
            msg << "stereographic projection undefined: vertex " << i << " lies at the pole";
            throw InputError(msg.str());
        }
    }
    const Points3d g = f * north_to_pole(nhat);
    Points2d h(f.rows(), 2);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double s = 1.0 - g(i, 2);
        h(i, 0) = g(i, 0) / s;
        h(i, 1) = g(i, 1) / s;
    }
    return h;
}

Points3d inverse_stereographic(const Points2d& h, const Eigen::Vector3d& north)
{
    Points3d g(h.rows(), 3);
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const double r2 = h.row(i).squaredNorm();
        const double s = 1.0 / (r2 + 1.0);
        g(i, 0) = 2.0 * h(i, 0) * s;
        g(i, 1) = 2.0 * h(i, 1) * s;
        g(i, 2) = (r2 - 1.0) * s;
    }
    return g * north_to_pole(north).transpose();
}

RepairResult mvc_fix(const TriMesh& mesh, const Points3d& f, int max_rounds)
{
    const int n = mesh.num_vertices();
    const Faces& faces = mesh.faces();
    RepairResult result;
    result.f = f;
    result.remaining = detect_foldings(mesh, f);
    if (result.remaining.empty()) {
        result.success = true;
        return result;
    }

    const SparseRowMatrix LMV = mean_value_laplacian(mesh.positions(), mesh).matrix;
    std::vector<char> solved(static_cast<std::size_t>(n), 0);

    while (!result.remaining.empty() && result.rounds < max_rounds) {
        // Solved set: fold vertices, plus the previous set and its one ring.
        std::vector<char> in(solved);
        if (result.rounds > 0) {
            for (int v = 0; v < n; ++v)
                if (solved[v])
                    for (int w : mesh.neighbors(v)) in[w] = 1;
        }
        for (int v : result.remaining.inner) in[v] = 1;
        const std::vector<int> I = complement(in, 1);
        if (static_cast<int>(I.size()) == n)
            throw SolverError("folding repair failed: every vertex is involved in a fold");

        // Pole: centre of the face outside I farthest from every folded face.
        std::vector<Eigen::Vector3d> fold_centers;
        for (int t : result.remaining.folded_faces)
            fold_centers.push_back(face_center(result.f, faces, t));
        double best = -1.0;
        Eigen::Vector3d north = Eigen::Vector3d::UnitZ();
        for (Eigen::Index t = 0; t < faces.rows(); ++t) {
            if (in[faces(t, 0)] || in[faces(t, 1)] || in[faces(t, 2)]) continue;
            const Eigen::Vector3d c = face_center(result.f, faces, t);
            double d = std::numeric_limits<double>::infinity();
            for (const auto& fc : fold_centers)
                d = std::min(d, std::acos(std::clamp(c.dot(fc), -1.0, 1.0)));
            if (d > best) {
                best = d;
                north = c;
            }
        }
        if (best < 0.0)
            throw SolverError("folding repair failed: no unfolded face outside the solved set");

        const Points2d h = stereographic(result.f, north);
        std::vector<int> local(static_cast<std::size_t>(n), -1);
        for (std::size_t a = 0; a < I.size(); ++a) local[I[a]] = static_cast<int>(a);

        const auto k = static_cast<Eigen::Index>(I.size());
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, 2);
        for (Eigen::Index a = 0; a < k; ++a) {
            for (SparseRowMatrix::InnerIterator it(LMV, I[a]); it; ++it) {
                const int j = static_cast<int>(it.col());
                if (local[j] >= 0)
                    trip.emplace_back(a, local[j], it.value());
                else
                    rhs.row(a) -= it.value() * h.row(j);
            }
        }
        Eigen::SparseMatrix<double> A(k, k);
        A.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw SolverError("folding repair: singular mean-value system");
        const Eigen::MatrixXd hI = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !hI.allFinite())
            throw SolverError("folding repair: mean-value solve failed");

        Points2d hs(k, 2);
        hs = hI;
        const Points3d lifted = inverse_stereographic(hs, north);
        for (Eigen::Index a = 0; a < k; ++a) result.f.row(I[a]) = lifted.row(a);

        solved = in;
        ++result.rounds;
        result.remaining = detect_foldings(mesh, result.f);
    }
    result.touched = complement(solved, 1);
    result.success = result.remaining.empty();
    return result;
}

}  // namespace sphconf

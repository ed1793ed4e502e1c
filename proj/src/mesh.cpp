#include "sphconf/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace sphconf
{

namespace
{

std::uint64_t edge_key(int i, int j)
{
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

Eigen::Vector3d row3(const Points3d& p, int i) { return p.row(i).transpose(); }

double triangle_area(const Points3d& p, int a, int b, int c)
{
    return 0.5 * (row3(p, b) - row3(p, a)).cross(row3(p, c) - row3(p, a)).norm();
}

void check_nondegenerate(const Points3d& positions, const Faces& faces)
{
    const auto m = faces.rows();
    if (m == 0) return;
    Eigen::VectorXd areas(m);
    for (Eigen::Index f = 0; f < m; ++f)
        areas[f] = triangle_area(positions, faces(f, 0), faces(f, 1), faces(f, 2));
    const double threshold = 1e-14 * areas.mean();
    for (Eigen::Index f = 0; f < m; ++f) {
        if (!(areas[f] >= threshold) || areas[f] == 0.0) {
            std::ostringstream msg;
            msg << "degenerate triangle: face " << f << " has area " << areas[f];
            throw DegenerateTriangleError(msg.str(), static_cast<int>(f));
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// LaplacianPattern
// ---------------------------------------------------------------------------

std::uint64_t pattern_hash(const SparseRowMatrix& m)
{
    // FNV-1a over dimensions, row offsets and column indices.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(m.rows()));
    mix(static_cast<std::uint64_t>(m.cols()));
    const int* outer = m.outerIndexPtr();
    for (Eigen::Index r = 0; r <= m.outerSize(); ++r) mix(static_cast<std::uint64_t>(outer[r]));
    const int* inner = m.innerIndexPtr();
    for (Eigen::Index k = 0; k < m.nonZeros(); ++k) mix(static_cast<std::uint64_t>(inner[k]));
    return h;
}

LaplacianPattern::LaplacianPattern(int num_vertices, std::span<const Edge> edges)
{
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(num_vertices + 2 * edges.size());
    for (int i = 0; i < num_vertices; ++i) triplets.emplace_back(i, i, 0.0);
    for (const Edge& e : edges) {
        triplets.emplace_back(e.v0, e.v1, 0.0);
        triplets.emplace_back(e.v1, e.v0, 0.0);
    }
    skeleton_.resize(num_vertices, num_vertices);
    skeleton_.setFromTriplets(triplets.begin(), triplets.end());
    skeleton_.makeCompressed();
    tag_ = pattern_hash(skeleton_);

    diagonal_slots_.resize(num_vertices);
    for (int i = 0; i < num_vertices; ++i) diagonal_slots_[i] = slot(i, i);
    edge_slots_.reserve(edges.size());
    for (const Edge& e : edges) edge_slots_.push_back({slot(e.v0, e.v1), slot(e.v1, e.v0)});
}

int LaplacianPattern::slot(int i, int j) const
{
    const int* outer = skeleton_.outerIndexPtr();
    const int* inner = skeleton_.innerIndexPtr();
    const int* begin = inner + outer[i];
    const int* end = inner + outer[i + 1];
    const int* it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return -1;
    return static_cast<int>(it - inner);
}

// ---------------------------------------------------------------------------
// TriMesh
// ---------------------------------------------------------------------------

std::optional<int> TriMesh::edge_index(int i, int j) const
{
    auto it = edge_lookup_.find(edge_key(i, j));
    if (it == edge_lookup_.end()) return std::nullopt;
    return it->second;
}

double signed_volume(const Points3d& positions, const Faces& faces)
{
    double vol = 0.0;
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        const Eigen::Vector3d a = row3(positions, faces(f, 0));
        const Eigen::Vector3d b = row3(positions, faces(f, 1));
        const Eigen::Vector3d c = row3(positions, faces(f, 2));
        vol += a.dot(b.cross(c));
    }
    return vol / 6.0;
}

TriMesh TriMesh::from_arrays(Points3d positions, Faces faces)
{
    const int n = static_cast<int>(positions.rows());
    const int m = static_cast<int>(faces.rows());
    if (n == 0 || m == 0) throw InputError("empty mesh");
    if (!positions.allFinite()) throw InputError("non-finite vertex coordinates");

    std::vector<int> use_count(n, 0);
    for (int f = 0; f < m; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int v = faces(f, c);
            if (v < 0 || v >= n) {
                std::ostringstream msg;
                msg << "face " << f << " references invalid vertex " << v;
                throw InputError(msg.str());
            }
            ++use_count[v];
        }
        if (faces(f, 0) == faces(f, 1) || faces(f, 1) == faces(f, 2) ||
            faces(f, 0) == faces(f, 2)) {
            std::ostringstream msg;
            msg << "face " << f << " repeats a vertex";
            throw InputError(msg.str());
        }
    }
    for (int v = 0; v < n; ++v) {
        if (use_count[v] == 0) {
            std::ostringstream msg;
            msg << "vertex " << v << " is not referenced by any face";
            throw InputError(msg.str());
        }
    }

    // Undirected edges and their incident faces.
    TriMesh mesh;
    std::vector<std::array<int, 3>> face_edges(m);
    for (int f = 0; f < m; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int a = faces(f, (c + 1) % 3);
            const int b = faces(f, (c + 2) % 3);
            const auto key = edge_key(a, b);
            auto [it, inserted] = mesh.edge_lookup_.try_emplace(key, static_cast<int>(mesh.edges_.size()));
            if (inserted) {
                mesh.edges_.push_back({std::min(a, b), std::max(a, b), f, -1});
            } else {
                Edge& e = mesh.edges_[it->second];
                if (e.f1 != -1) {
                    std::ostringstream msg;
                    msg << "non-manifold edge (" << e.v0 << ", " << e.v1
                        << ") shared by more than two faces";
                    throw InputError(msg.str());
                }
                e.f1 = f;
            }
            face_edges[f][c] = it->second;
        }
    }
    for (const Edge& e : mesh.edges_) {
        if (e.f1 == -1) {
            std::ostringstream msg;
            msg << "boundary edge (" << e.v0 << ", " << e.v1 << "): surface is not closed";
            throw InputError(msg.str());
        }
    }

    // Make orientation consistent across each edge by breadth-first propagation.
    auto has_directed = [&faces](int f, int a, int b) {
        for (int c = 0; c < 3; ++c)
            if (faces(f, c) == a && faces(f, (c + 1) % 3) == b) return true;
        return false;
    };
    std::vector<char> visited(m, 0);
    int components = 0;
    for (int seed = 0; seed < m; ++seed) {
        if (visited[seed]) continue;
        ++components;
        std::queue<int> queue;
        queue.push(seed);
        visited[seed] = 1;
        while (!queue.empty()) {
            const int f = queue.front();
            queue.pop();
            for (int c = 0; c < 3; ++c) {
                const Edge& e = mesh.edges_[face_edges[f][c]];
                const int g = e.f0 == f ? e.f1 : e.f0;
                const int a = faces(f, (c + 1) % 3);
                const int b = faces(f, (c + 2) % 3);
                const bool agrees = has_directed(g, b, a);
                if (!visited[g]) {
                    if (!agrees) {
                        std::swap(faces(g, 1), faces(g, 2));
                        auto& fe = face_edges[g];
                        std::swap(fe[1], fe[2]);
                    }
                    visited[g] = 1;
                    queue.push(g);
                } else if (!agrees) {
                    std::ostringstream msg;
                    msg << "non-orientable surface near edge (" << e.v0 << ", " << e.v1 << ")";
                    throw InputError(msg.str());
                }
            }
        }
    }
    if (components != 1) {
        std::ostringstream msg;
        msg << "genus check failed: mesh has " << components << " connected components";
        throw InputError(msg.str());
    }

    const int chi = n - static_cast<int>(mesh.edges_.size()) + m;
    if (chi != 2) {
        std::ostringstream msg;
        msg << "genus check failed: Euler characteristic " << chi << " (expected 2)";
        throw InputError(msg.str());
    }

    check_nondegenerate(positions, faces);

    if (signed_volume(positions, faces) < 0.0) {
        faces.col(1).swap(faces.col(2));
        for (auto& fe : face_edges) std::swap(fe[1], fe[2]);
    }

    // Vertex rings, ordered by face index.
    mesh.ring_offsets_.assign(n + 1, 0);
    for (int f = 0; f < m; ++f)
        for (int c = 0; c < 3; ++c) ++mesh.ring_offsets_[faces(f, c) + 1];
    for (int v = 0; v < n; ++v) mesh.ring_offsets_[v + 1] += mesh.ring_offsets_[v];
    const int total = mesh.ring_offsets_[n];
    mesh.wheel_data_.resize(total);
    mesh.vertex_face_data_.resize(total);
    mesh.neighbor_data_.resize(total);
    std::vector<int> cursor(mesh.ring_offsets_.begin(), mesh.ring_offsets_.end() - 1);
    for (int f = 0; f < m; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int v = faces(f, c);
            const int k = cursor[v]++;
            mesh.wheel_data_[k] = {faces(f, (c + 1) % 3), faces(f, (c + 2) % 3)};
            mesh.vertex_face_data_[k] = f;
        }
    }
    for (int v = 0; v < n; ++v) {
        const int lo = mesh.ring_offsets_[v];
        const int hi = mesh.ring_offsets_[v + 1];
        // Closed manifold vertex: the wheel forms a single cycle.
        std::unordered_map<int, int> next;
        for (int k = lo; k < hi; ++k) next[mesh.wheel_data_[k][0]] = mesh.wheel_data_[k][1];
        int steps = 0;
        const int start = mesh.wheel_data_[lo][0];
        int cur = start;
        do {
            auto it = next.find(cur);
            if (it == next.end()) break;
            cur = it->second;
            ++steps;
        } while (cur != start && steps <= hi - lo);
        if (cur != start || steps != hi - lo || static_cast<int>(next.size()) != hi - lo) {
            std::ostringstream msg;
            msg << "non-manifold vertex " << v;
            throw InputError(msg.str());
        }
        for (int k = lo; k < hi; ++k) mesh.neighbor_data_[k] = mesh.wheel_data_[k][0];
        std::sort(mesh.neighbor_data_.begin() + lo, mesh.neighbor_data_.begin() + hi);
    }

    mesh.positions_ = std::move(positions);
    mesh.faces_ = std::move(faces);
    mesh.face_edges_ = std::move(face_edges);
    mesh.pattern_ = std::make_shared<const LaplacianPattern>(n, mesh.edges_);
    return mesh;
}

// ---------------------------------------------------------------------------
// Angles and Laplacians
// ---------------------------------------------------------------------------

CornerAngles corner_angles(const Points3d& positions, const TriMesh& mesh)
{
    const Faces& faces = mesh.faces();
    CornerAngles angles(faces.rows(), 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const Eigen::Vector3d p = row3(positions, faces(f, c));
            const Eigen::Vector3d u = row3(positions, faces(f, (c + 1) % 3)) - p;
            const Eigen::Vector3d v = row3(positions, faces(f, (c + 2) % 3)) - p;
            const double denom = u.norm() * v.norm();
            if (denom == 0.0) {
                std::ostringstream msg;
                msg << "degenerate triangle: face " << f << " has a zero-length edge";
                throw DegenerateTriangleError(msg.str(), static_cast<int>(f));
            }
            angles(f, c) = std::acos(std::clamp(u.dot(v) / denom, -1.0, 1.0));
        }
    }
    return angles;
}

CornerAngles corner_cotangents(const Points3d& positions, const TriMesh& mesh)
{
    const Faces& faces = mesh.faces();
    check_nondegenerate(positions, faces);
    CornerAngles cot(faces.rows(), 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const Eigen::Vector3d p = row3(positions, faces(f, c));
            const Eigen::Vector3d u = row3(positions, faces(f, (c + 1) % 3)) - p;
            const Eigen::Vector3d v = row3(positions, faces(f, (c + 2) % 3)) - p;
            cot(f, c) = u.dot(v) / u.cross(v).norm();
        }
    }
    return cot;
}

SymSparseOperator laplacian_from_cotangents(const CornerAngles& cotangents, const TriMesh& mesh)
{
    const LaplacianPattern& pattern = mesh.pattern();
    SymSparseOperator op{pattern.skeleton(), pattern.tag()};
    double* values = op.matrix.valuePtr();
    std::fill(values, values + op.matrix.nonZeros(), 0.0);
    const Faces& faces = mesh.faces();
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        const auto fe = mesh.face_edges(static_cast<int>(f));
        for (int c = 0; c < 3; ++c) {
            const double w = 0.5 * cotangents(f, c);
            const auto [s01, s10] = pattern.edge_slots(fe[c]);
            values[s01] -= w;
            values[s10] -= w;
            values[pattern.diagonal_slot(faces(f, (c + 1) % 3))] += w;
            values[pattern.diagonal_slot(faces(f, (c + 2) % 3))] += w;
        }
    }
    return op;
}

SymSparseOperator cotangent_laplacian(const Points3d& positions, const TriMesh& mesh)
{
    return laplacian_from_cotangents(corner_cotangents(positions, mesh), mesh);
}

SymSparseOperator mean_value_laplacian(const Points3d& positions, const TriMesh& mesh)
{
    const CornerAngles angles = corner_angles(positions, mesh);
    const LaplacianPattern& pattern = mesh.pattern();
    SymSparseOperator op{pattern.skeleton(), pattern.tag()};
    double* values = op.matrix.valuePtr();
    std::fill(values, values + op.matrix.nonZeros(), 0.0);
    const Faces& faces = mesh.faces();
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const double alpha = angles(f, c);
            if (!(alpha > 0.0 && alpha < std::numbers::pi)) {
                std::ostringstream msg;
                msg << "mean-value weight undefined: face " << f << " has angle " << alpha;
                throw DegenerateTriangleError(msg.str(), static_cast<int>(f));
            }
            const double t = std::tan(0.5 * alpha);
            const int i = faces(f, c);
            for (int d : {1, 2}) {
                const int j = faces(f, (c + d) % 3);
                const double w = t / (row3(positions, i) - row3(positions, j)).norm();
                values[pattern.slot(i, j)] -= w;
                values[pattern.diagonal_slot(i)] += w;
            }
        }
    }
    return op;
}

Eigen::VectorXd gauss_curvature(const TriMesh& mesh)
{
    const CornerAngles angles = corner_angles(mesh);
    Eigen::VectorXd kappa = Eigen::VectorXd::Constant(mesh.num_vertices(), 2.0 * std::numbers::pi);
    const Faces& faces = mesh.faces();
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int c = 0; c < 3; ++c) kappa[faces(f, c)] -= angles(f, c);
    return kappa;
}

double mesh_size_h(const TriMesh& mesh)
{
    double h = 0.0;
    for (const Edge& e : mesh.edges())
        h = std::max(h, (mesh.positions().row(e.v0) - mesh.positions().row(e.v1)).norm());
    return h;
}

// ---------------------------------------------------------------------------
// Ellipsoid generator
// ---------------------------------------------------------------------------

TriMesh gen_ellipsoid(const Eigen::Vector3d& semiaxes, int level)
{
    if (!(semiaxes.array() > 0.0).all()) throw InputError("ellipsoid semiaxes must be positive");
    if (level < 0) throw InputError("subdivision level must be non-negative");

    const double t = 0.5 * (1.0 + std::sqrt(5.0));
    std::vector<Eigen::Vector3d> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };

    for (int l = 0; l < level; ++l) {
        std::unordered_map<std::uint64_t, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = edge_key(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back((0.5 * (verts[a] + verts[b])).normalized());
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(4 * tris.size());
        for (const auto& [a, b, c] : tris) {
            const int ab = mid(a, b);
            const int bc = mid(b, c);
            const int ca = mid(c, a);
            next.push_back({a, ab, ca});
            next.push_back({b, bc, ab});
            next.push_back({c, ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }

    Points3d positions(verts.size(), 3);
    for (std::size_t i = 0; i < verts.size(); ++i)
        positions.row(i) = verts[i].cwiseProduct(semiaxes).transpose();
    Faces faces(tris.size(), 3);
    for (std::size_t f = 0; f < tris.size(); ++f)
        faces.row(f) << tris[f][0], tris[f][1], tris[f][2];
    return TriMesh::from_arrays(std::move(positions), std::move(faces));
}

}  // namespace sphconf

#pragma once

#include "sphconf/types.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace sphconf
{

/// Undirected edge with its two incident faces. `v0 < v1`.
struct Edge {
    int v0;
    int v1;
    int f0;
    int f1;
};

/**
 * CSR skeleton of a Laplacian-patterned matrix: entry (i, j) exists iff
 * i == j or [v_i, v_j] is an edge. Value slots for each edge direction and
 * each diagonal are precomputed so operators can be filled in O(nnz).
 */
class LaplacianPattern
{
public:
    LaplacianPattern() = default;
    LaplacianPattern(int num_vertices, std::span<const Edge> edges);

    const SparseRowMatrix& skeleton() const noexcept { return skeleton_; }
    std::uint64_t tag() const noexcept { return tag_; }
    Eigen::Index nnz() const noexcept { return skeleton_.nonZeros(); }

    /// Value slot of (i, j); -1 when (i, j) is outside the pattern.
    int slot(int i, int j) const;
    int diagonal_slot(int i) const { return diagonal_slots_[i]; }
    /// Slots of (v0, v1) and (v1, v0) for edge `e`.
    std::array<int, 2> edge_slots(int e) const { return edge_slots_[e]; }

private:
    SparseRowMatrix skeleton_;
    std::uint64_t tag_ = 0;
    std::vector<int> diagonal_slots_;
    std::vector<std::array<int, 2>> edge_slots_;
};

/// Hash of the structural part (row offsets + column indices) of a matrix.
std::uint64_t pattern_hash(const SparseRowMatrix& m);

/**
 * Symmetric-pattern sparse operator (L, L(f), D(f), H, ...). The tag
 * identifies the structure so pattern equality can be checked cheaply.
 */
struct SymSparseOperator {
    SparseRowMatrix matrix;
    std::uint64_t pattern_tag = 0;

    Eigen::Index rows() const noexcept { return matrix.rows(); }
    Eigen::Index cols() const noexcept { return matrix.cols(); }
    bool same_pattern(const SymSparseOperator& other) const noexcept
    {
        return pattern_tag == other.pattern_tag;
    }
};

/// Interior angles per face: column c is the angle at corner c, i.e. the angle
/// opposite the edge that does not touch that corner.
using CornerAngles = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/**
 * Closed, consistently outward-oriented genus-0 triangulation. Immutable after
 * construction; every accepted instance satisfies the closed-manifold and
 * Euler-characteristic invariants.
 */
class TriMesh
{
public:
    /// Validate and build adjacency. Faces are reoriented so that they agree
    /// with each other and enclose positive signed volume.
    static TriMesh from_arrays(Points3d positions, Faces faces);

    const Points3d& positions() const noexcept { return positions_; }
    const Faces& faces() const noexcept { return faces_; }
    int num_vertices() const noexcept { return static_cast<int>(positions_.rows()); }
    int num_faces() const noexcept { return static_cast<int>(faces_.rows()); }
    int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
    int euler_characteristic() const noexcept
    {
        return num_vertices() - num_edges() + num_faces();
    }

    std::span<const Edge> edges() const noexcept { return edges_; }
    std::optional<int> edge_index(int i, int j) const;
    /// Edge opposite each corner of face `f`.
    std::array<int, 3> face_edges(int f) const { return face_edges_[f]; }

    /// Sorted one-ring N(i).
    std::span<const int> neighbors(int i) const
    {
        return {neighbor_data_.data() + ring_offsets_[i],
                neighbor_data_.data() + ring_offsets_[i + 1]};
    }
    /// Pairs (j, k) such that (i, j, k) is a face in orientation order.
    std::span<const std::array<int, 2>> wheel_pairs(int i) const
    {
        return {wheel_data_.data() + ring_offsets_[i],
                wheel_data_.data() + ring_offsets_[i + 1]};
    }
    /// Faces incident to vertex i, parallel to wheel_pairs(i).
    std::span<const int> vertex_faces(int i) const
    {
        return {vertex_face_data_.data() + ring_offsets_[i],
                vertex_face_data_.data() + ring_offsets_[i + 1]};
    }

    const LaplacianPattern& pattern() const noexcept { return *pattern_; }

private:
    TriMesh() = default;

    Points3d positions_;
    Faces faces_;
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, int> edge_lookup_;
    std::vector<std::array<int, 3>> face_edges_;
    std::vector<int> ring_offsets_;
    std::vector<int> neighbor_data_;
    std::vector<std::array<int, 2>> wheel_data_;
    std::vector<int> vertex_face_data_;
    std::shared_ptr<const LaplacianPattern> pattern_;
};

// ---------------------------------------------------------------------------
// Geometry on the mesh
// ---------------------------------------------------------------------------

CornerAngles corner_angles(const Points3d& positions, const TriMesh& mesh);
inline CornerAngles corner_angles(const TriMesh& mesh)
{
    return corner_angles(mesh.positions(), mesh);
}

/// Per-face cotangents of the corner angles, computed from positions.
CornerAngles corner_cotangents(const Points3d& positions, const TriMesh& mesh);

/// Cotangent Laplacian with w_ij = (cot a_ij + cot a_ji) / 2.
SymSparseOperator cotangent_laplacian(const Points3d& positions, const TriMesh& mesh);
inline SymSparseOperator cotangent_laplacian(const TriMesh& mesh)
{
    return cotangent_laplacian(mesh.positions(), mesh);
}

/// Same pattern as the cotangent Laplacian, built from per-face cotangents.
SymSparseOperator laplacian_from_cotangents(const CornerAngles& cotangents,
                                            const TriMesh& mesh);

/// Mean-value Laplacian: structurally symmetric, row i holds the weights
/// (tan(a/2) + tan(b/2)) / |v_i - v_j| with a, b the angles at v_i next to
/// edge ij. Values are not symmetric.
SymSparseOperator mean_value_laplacian(const Points3d& positions, const TriMesh& mesh);

/// Angle defect 2*pi - (sum of interior angles at v_i).
Eigen::VectorXd gauss_curvature(const TriMesh& mesh);

/// Longest edge length.
double mesh_size_h(const TriMesh& mesh);

/// Icosahedron subdivided `level` times (midpoint, re-projected to the unit
/// sphere each level) and scaled componentwise by `semiaxes`.
TriMesh gen_ellipsoid(const Eigen::Vector3d& semiaxes, int level);

/// Unscaled unit icosphere.
inline TriMesh gen_icosphere(int level)
{
    return gen_ellipsoid(Eigen::Vector3d::Ones(), level);
}

/// Signed volume enclosed by the faces.
double signed_volume(const Points3d& positions, const Faces& faces);

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

struct RawMesh {
    Points3d positions;
    Faces faces;
};

/// Parse an OFF or OBJ triangle mesh without topological validation.
RawMesh read_mesh_file(const std::filesystem::path& path);

/// Read and validate; dispatches on extension (.off / .obj).
TriMesh load_mesh(const std::filesystem::path& path);

void save_obj(const std::filesystem::path& path, const Points3d& positions,
              const Faces& faces);
void save_off(const std::filesystem::path& path, const Points3d& positions,
              const Faces& faces);

}  // namespace sphconf

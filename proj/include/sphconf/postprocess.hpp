#pragma once

#include "sphconf/mesh.hpp"

#include <vector>

namespace sphconf
{

/// Folded faces of a spherical image and the vertex split they induce.
struct FoldReport {
    std::vector<int> folded_faces;
    /// Vertices of folded faces (the set I), sorted.
    std::vector<int> inner;
    /// All other vertices (the set O), sorted.
    std::vector<int> outer;

    std::size_t count() const noexcept { return folded_faces.size(); }
    bool empty() const noexcept { return folded_faces.empty(); }
};

/// Face (i, j, k) is folded iff det[f_i | f_j | f_k] <= 0.
FoldReport detect_foldings(const TriMesh& mesh, const Points3d& f);

/// Rotation taking `north` to (0, 0, 1), acting on row points as p R.
Rotation3d north_to_pole(const Eigen::Vector3d& north);

/// Rotate `north` to (0, 0, 1), then (x, y, z) -> (x, y) / (1 - z).
/// Throws InputError if a point lies within 1e-9 of `north`.
Points2d stereographic(const Points3d& f, const Eigen::Vector3d& north);

/// (u, v) -> (2u, 2v, r^2 - 1) / (r^2 + 1), then (0, 0, 1) back to `north`.
Points3d inverse_stereographic(const Points2d& h, const Eigen::Vector3d& north);

struct RepairResult {
    Points3d f;
    /// Folds left after the last round.
    FoldReport remaining;
    /// Union of every solved set I, sorted. Vertices not listed keep their
    /// input coordinates bit for bit.
    std::vector<int> touched;
    int rounds = 0;
    bool success = false;
};

/**
 * Mean-value repair of folded faces. Each round projects from the centre of
 * the unfolded face farthest from the folds and re-solves the mean-value
 * system for the fold vertices. When folds survive a round, the solved set is
 * grown by one ring around the previous one.
 */
RepairResult mvc_fix(const TriMesh& mesh, const Points3d& f, int max_rounds = 10);

}  // namespace sphconf

#pragma once

#include "sphconf/energy.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sphconf
{

/// Moving-mesh vertex indices paired with target points on the unit sphere.
struct LandmarkSet {
    std::vector<int> indices;
    Points3d targets;
    /// Optional curve-group label per landmark (-1 when ungrouped).
    std::vector<int> groups;

    std::size_t size() const noexcept { return indices.size(); }
};

/// Check the set against a mesh of `num_vertices`: at least 3 pairs,
/// distinct valid indices, unit targets (1e-9).
void validate_landmarks(const LandmarkSet& lm, int num_vertices);

/// E_reg = 1/(2|S|) sum |f_i - p_i|^2.
double registration_loss(const Points3d& f, const LandmarkSet& lm);

/// Additive landmark terms in (theta, phi): gradient and 2x2 diagonal blocks.
struct RegDerivatives {
    Eigen::VectorXd gradient;
    SparseRowMatrix hessian;
};

/**
 * Derivatives of lambda * E_reg at the state's image, landmark targets given
 * in the same frame as state.f. The Hessian keeps the exact second
 * derivatives of the sines and cosines, not only the Gauss-Newton part.
 */
RegDerivatives reg_gradient_hessian(const EnergyState& state, const LandmarkSet& lm,
                                    double lambda);

/// Landmark-only Procrustes fit: R minimizing sum |f_i R - p_i|^2.
RotationFit<double> landmark_fit(const Points3d& f, const LandmarkSet& lm);

/// f R for the landmark fit; returns f unchanged when the fit is ambiguous.
Points3d landmark_rotation(const Points3d& f, const LandmarkSet& lm, bool* skipped = nullptr);

/// Landmark rows as read from a file: each pairs a moving vertex with either
/// a fixed-mesh vertex (`fixed[i] >= 0`) or a sphere point (`points.row(i)`).
struct LandmarkSpec {
    std::vector<int> moving;
    std::vector<int> fixed;
    Points3d points;

    std::size_t size() const noexcept { return moving.size(); }
};

/**
 * Landmark CSV: one header line, `#` comments, rows `moving_idx,fixed_idx` or
 * `moving_idx,px,py,pz` (0-based indices).
 */
LandmarkSpec read_landmarks(const std::filesystem::path& path);
LandmarkSpec parse_landmarks(const std::string& text, const std::string& source = "<string>");

/// Resolve fixed-vertex rows through the fixed mesh's sphere image.
LandmarkSet resolve_landmarks(const LandmarkSpec& spec, const Points3d& fixed_sphere);

}  // namespace sphconf

#pragma once

#include "sphconf/hbtr.hpp"
#include "sphconf/initializer.hpp"
#include "sphconf/landmarks.hpp"

#include <vector>

namespace sphconf
{

struct RegConfig {
    double lambda = 5.0;
    TrustRegionConfig solver;
    InitConfig init;

    void validate() const;
};

/// Location of moving sphere points on the fixed sphere triangulation.
struct PullbackResult {
    std::vector<int> faces;
    /// Barycentric weights per point, in the corner order of the face.
    Points3d weights;
    /// Interpolated positions on the fixed surface.
    Points3d positions;
    /// Points that needed the nearest-face fallback.
    int fallbacks = 0;
};

/**
 * Locate each query point of the unit sphere in the triangulation
 * (fixed_mesh faces, fixed_sphere vertices) and interpolate fixed-surface
 * positions. Weights come from central projection onto the chordal triangle.
 */
PullbackResult barycentric_pullback(const TriMesh& fixed_mesh, const Points3d& fixed_sphere,
                                    const Points3d& query);

struct RegistrationResult {
    SolveResult fixed;
    SolveResult moving;
    LandmarkSet landmarks;
    PullbackResult pullback;
    double lambda = 0.0;
};

/**
 * Parameterize the fixed surface, resolve the landmarks on its sphere,
 * minimize E_C + lambda E_reg on the moving surface and pull the result back
 * to the fixed surface.
 */
RegistrationResult hbtr_register(const TriMesh& fixed, const TriMesh& moving,
                                 const LandmarkSpec& landmarks, const RegConfig& config = {});

}  // namespace sphconf

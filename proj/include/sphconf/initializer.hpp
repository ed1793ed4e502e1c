#pragma once

#include "sphconf/mesh.hpp"
#include "sphconf/sphere_map.hpp"

namespace sphconf
{

enum class AnchorRule {
    /// Face whose smallest interior angle is largest.
    MaxMinAngle,
};

struct InitConfig {
    /// Bisection steps on the planar log-scale.
    int max_iters = 30;
    /// Target norm of the area-weighted spherical centroid.
    double tolerance = 0.1;
    /// Sphere Mobius recentering after the scale search; 0 disables it.
    int mobius_iters = 100;
    double mobius_tolerance = 1e-8;
    AnchorRule anchor = AnchorRule::MaxMinAngle;
    double pole_eps = kPoleEpsilon;

    void validate() const;
};

struct InitResult {
    SphericalFieldd field;
    int anchor_face = -1;
    /// Planar scale applied before lifting.
    double scale = 1.0;
    /// Centroid norm of the returned map (before the pole rotation).
    double centroid_norm = 0.0;
    int mobius_steps = 0;
    /// False when the centroid tolerance was not reached (best iterate kept).
    bool centered = true;
    bool mirrored = false;
    /// Folded image faces in the returned map.
    int folds = 0;
    /// Rotation applied by the pole-safety guard (world = field points * pole_rotation').
    Rotation3d pole_rotation = Rotation3d::Identity();
};

/**
 * Punctured harmonic map onto an equilateral triangle, lifted by inverse
 * stereographic projection and balanced so the image centroid sits near the
 * origin.
 */
InitResult initial_map(const TriMesh& mesh, const InitConfig& config = {});

/**
 * Conformal automorphism of the unit sphere taking `a` (|a| < 1) to the
 * origin of the ball, applied row-wise.
 */
Points3d mobius_recenter(const Points3d& f, const Eigen::Vector3d& a);

/// Anchor face chosen by `rule`.
int select_anchor_face(const TriMesh& mesh, AnchorRule rule = AnchorRule::MaxMinAngle);

/// Barycentric vertex areas of the source mesh.
Eigen::VectorXd vertex_areas(const TriMesh& mesh);

}  // namespace sphconf

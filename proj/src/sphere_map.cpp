#include "sphconf/sphere_map.hpp"

#include <Eigen/Geometry>

#include <random>

namespace sphconf
{

Rotation3d random_rotation(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
    q.normalize();
    return q.toRotationMatrix();
}

PoleSafeResult rotate_away_from_poles(const SphericalFieldd& field, double eps)
{
    PoleSafeResult result{field};
    if (field.size() == 0 || min_abs_sin_phi(field) >= eps) return result;

    const Points3d f = to_cartesian(field);
    auto min_sin = [](const Points3d& p) {
        return p.leftCols<2>().rowwise().norm().minCoeff();
    };

    std::mt19937_64 rng(0x5f3759dfULL);
    double best = -1.0;
    Rotation3d best_rotation = Rotation3d::Identity();
    for (int attempt = 0; attempt < 50; ++attempt) {
        const Rotation3d R = random_rotation(rng());
        const double s = min_sin(f * R);
        if (s > best) {
            best = s;
            best_rotation = R;
        }
        if (s >= eps) break;
    }
    result.rotation = best_rotation;
    result.rotated = true;
    result.satisfied = best >= eps;
    result.field = from_cartesian(f * best_rotation);
    return result;
}

}  // namespace sphconf

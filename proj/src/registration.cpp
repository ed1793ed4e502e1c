#include "sphconf/registration.hpp"

#include <cmath>
#include <limits>

namespace sphconf
{

void RegConfig::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InputError("registration weight must be finite and >= 0");
    solver.validate();
    init.validate();
}

namespace
{

Eigen::Vector3d row3(const Points3d& p, int i) { return p.row(i).transpose(); }

// Signed volumes q.(b x c), q.(c x a), q.(a x b): proportional to the
// barycentric weights of the central projection of q onto plane(a, b, c).
Eigen::Vector3d spherical_weights(const Eigen::Vector3d& q, const Eigen::Vector3d& a,
                                  const Eigen::Vector3d& b, const Eigen::Vector3d& c)
{
    return {q.dot(b.cross(c)), q.dot(c.cross(a)), q.dot(a.cross(b))};
}

}  // namespace

PullbackResult barycentric_pullback(const TriMesh& fixed_mesh, const Points3d& fixed_sphere,
                                    const Points3d& query)
{
    const Faces& faces = fixed_mesh.faces();
    const Eigen::Index m = faces.rows();
    const Eigen::Index nq = query.rows();

    // Across-edge neighbor of face t opposite corner c.
    std::vector<std::array<int, 3>> across(static_cast<std::size_t>(m));
    for (Eigen::Index t = 0; t < m; ++t) {
        const auto fe = fixed_mesh.face_edges(static_cast<int>(t));
        for (int c = 0; c < 3; ++c) {
            const Edge& e = fixed_mesh.edges()[fe[c]];
            across[t][c] = e.f0 == t ? e.f1 : e.f0;
        }
    }

    auto weights_in = [&](Eigen::Index t, const Eigen::Vector3d& q) {
        return spherical_weights(q, row3(fixed_sphere, faces(t, 0)), row3(fixed_sphere, faces(t, 1)),
                                 row3(fixed_sphere, faces(t, 2)));
    };

    PullbackResult out;
    out.faces.assign(static_cast<std::size_t>(nq), -1);
    out.weights.resize(nq, 3);
    out.positions.resize(nq, 3);
    int start = 0;
    for (Eigen::Index k = 0; k < nq; ++k) {
        const Eigen::Vector3d q = query.row(k).transpose().normalized();
        int t = start;
        int found = -1;
        for (Eigen::Index steps = 0; steps <= m; ++steps) {
            const Eigen::Vector3d w = weights_in(t, q);
            Eigen::Index worst = 0;
            if (w.minCoeff(&worst) >= 0.0) {
                found = t;
                break;
            }
            t = across[t][worst];
        }
        if (found < 0) {
            for (Eigen::Index s = 0; s < m; ++s) {
                if (weights_in(s, q).minCoeff() >= 0.0) {
                    found = static_cast<int>(s);
                    break;
                }
            }
        }
        Eigen::Vector3d w;
        if (found >= 0) {
            w = weights_in(found, q);
        } else {
            // Nearest face centre; weights clamped into the triangle.
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index s = 0; s < m; ++s) {
                const Eigen::Vector3d c = row3(fixed_sphere, faces(s, 0)) +
                                          row3(fixed_sphere, faces(s, 1)) +
                                          row3(fixed_sphere, faces(s, 2));
                const double d = c.normalized().dot(q);
                if (d > best) {
                    best = d;
                    found = static_cast<int>(s);
                }
            }
            w = weights_in(found, q).cwiseMax(0.0);
            if (w.sum() == 0.0) w.setOnes();
            ++out.fallbacks;
        }
        w /= w.sum();
        out.faces[k] = found;
        out.weights.row(k) = w.transpose();
        out.positions.row(k).setZero();
        for (int c = 0; c < 3; ++c)
            out.positions.row(k) += w[c] * fixed_mesh.positions().row(faces(found, c));
        start = found;
    }
    return out;
}

RegistrationResult hbtr_register(const TriMesh& fixed, const TriMesh& moving,
                                 const LandmarkSpec& landmarks, const RegConfig& config)
{
    config.validate();
    RegistrationResult out;
    out.lambda = config.lambda;

    const InitResult fixed_init = initial_map(fixed, config.init);
    out.fixed = hbtr_solve(fixed, fixed_init.field, config.solver);

    out.landmarks = resolve_landmarks(landmarks, out.fixed.f);
    validate_landmarks(out.landmarks, moving.num_vertices());

    const InitResult moving_init = initial_map(moving, config.init);
    out.moving = hbtr_solve(moving, moving_init.field, config.solver,
                            LandmarkTerm{&out.landmarks, config.lambda, true});

    out.pullback = barycentric_pullback(fixed, out.fixed.f, out.moving.f);
    return out;
}

}  // namespace sphconf

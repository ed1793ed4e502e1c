#include "fixtures.hpp"

#include "sphconf/registration.hpp"

#include <doctest.h>

using namespace sphconf;

namespace
{

LandmarkSpec vertex_pairs(int n, int count)
{
    LandmarkSpec spec;
    for (int k = 0; k < count; ++k) {
        const int i = (k * (n - 1)) / (count - 1);
        spec.moving.push_back(i);
        spec.fixed.push_back(i);
    }
    spec.points = Points3d::Zero(count, 3);
    return spec;
}

}  // namespace

TEST_CASE("barycentric pullback on the identity sphere")
{
    const TriMesh m = gen_ellipsoid({1.5, 1.0, 0.8}, 2);
    const Points3d sphere = m.positions().rowwise().normalized();

    // Query the sphere vertices themselves and face centres.
    Points3d q(m.num_vertices() + m.num_faces(), 3);
    q.topRows(m.num_vertices()) = sphere;
    for (int t = 0; t < m.num_faces(); ++t) {
        Eigen::RowVector3d c = Eigen::RowVector3d::Zero();
        for (int k = 0; k < 3; ++k) c += sphere.row(m.faces()(t, k));
        q.row(m.num_vertices() + t) = c.normalized();
    }
    const PullbackResult p = barycentric_pullback(m, sphere, q);
    CHECK(p.fallbacks == 0);
    for (Eigen::Index k = 0; k < q.rows(); ++k) {
        CHECK(p.weights.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.weights.row(k).minCoeff() >= -1e-12);
        // Oracle: the located point, recombined on the sphere, projects back to q.
        Eigen::RowVector3d r = Eigen::RowVector3d::Zero();
        for (int k2 = 0; k2 < 3; ++k2) r += p.weights(k, k2) * sphere.row(m.faces()(p.faces[k], k2));
        CHECK((r.normalized() - q.row(k)).norm() < 1e-12);
    }
    CHECK((p.positions.topRows(m.num_vertices()) - m.positions()).cwiseAbs().maxCoeff() < 1e-12);
    for (int t = 0; t < m.num_faces(); ++t) {
        CHECK(p.faces[m.num_vertices() + t] == t);
        CHECK((p.weights.row(m.num_vertices() + t).array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("registration config validation")
{
    RegConfig c;
    c.lambda = -1;
    CHECK_THROWS_AS(c.validate(), InputError);
    c.lambda = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("self-registration recovers the fixed map")
{
    const TriMesh m = gen_ellipsoid({1.1, 1.0, 0.9}, 3);
    const RegistrationResult r = hbtr_register(m, m, vertex_pairs(m.num_vertices(), 12));
    CHECK(r.fixed.converged);
    CHECK(r.moving.converged);
    CHECK(r.landmarks.size() == 12);
    CHECK(r.moving.registration_loss < 1e-6);
    CHECK(r.pullback.fallbacks == 0);
    const double h = mesh_size_h(m);
    const double worst = (r.pullback.positions - m.positions()).rowwise().norm().maxCoeff();
    CHECK(worst < 1e-3 * h);
    const std::vector<double> e = r.moving.trace.accepted_energies();
    for (std::size_t k = 1; k < e.size(); ++k) CHECK(e[k] < e[k - 1]);
}

TEST_CASE("zero weight reproduces the plain solve")
{
    const TriMesh fixed = gen_ellipsoid({1.1, 1.0, 0.9}, 2);
    const TriMesh moving = gen_ellipsoid({2.0, 1.0, 0.3}, 2);
    RegConfig cfg;
    cfg.lambda = 0.0;
    const RegistrationResult r = hbtr_register(fixed, moving, vertex_pairs(moving.num_vertices(), 12), cfg);
    const SolveResult plain = hbtr_solve(moving, initial_map(moving).field);
    CHECK(std::abs(r.moving.conformal_energy - plain.energy) < 1e-8);
    CHECK(r.moving.trace.accepted_energies() == plain.trace.accepted_energies());
}

TEST_CASE("weight sweep trades conformality for landmark fit")
{
    const TriMesh fixed = gen_ellipsoid({1.1, 1.0, 0.9}, 3);
    const TriMesh moving = gen_ellipsoid({2.0, 1.0, 0.3}, 3);
    const LandmarkSpec spec = vertex_pairs(moving.num_vertices(), 12);
    double last_reg = std::numeric_limits<double>::infinity();
    double last_ec = 0.0;
    for (double lambda : {1.0, 5.0, 10.0}) {
        RegConfig cfg;
        cfg.lambda = lambda;
        const RegistrationResult r = hbtr_register(fixed, moving, spec, cfg);
        CHECK(r.moving.converged);
        CHECK(r.moving.registration_loss <= last_reg);
        CHECK(r.moving.conformal_energy >= last_ec);
        last_reg = r.moving.registration_loss;
        last_ec = r.moving.conformal_energy;
    }
}

TEST_CASE("registration input errors")
{
    const TriMesh m = gen_icosphere(1);
    LandmarkSpec spec = vertex_pairs(m.num_vertices(), 3);
    spec.fixed[1] = 500;
    CHECK_THROWS_AS(hbtr_register(m, m, spec), InputError);
    LandmarkSpec few = vertex_pairs(m.num_vertices(), 2);
    CHECK_THROWS_AS(hbtr_register(m, m, few), InputError);
}

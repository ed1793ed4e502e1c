#include "fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

using namespace sphconf;
using fixtures::row3;

namespace
{

double law_of_cosines(double opposite, double b, double c)
{
    return std::acos((b * b + c * c - opposite * opposite) / (2 * b * c));
}

TriMesh jittered(int level, std::uint64_t seed, double amount = 0.05)
{
    const TriMesh base = gen_icosphere(level);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-amount, amount);
    Points3d p = base.positions();
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        p.row(i) *= 1.0 + U(rng);
    return TriMesh::from_arrays(p, base.faces());
}

std::filesystem::path temp_file(const std::string& name, const std::string& text)
{
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_CASE("tetrahedron and octahedron topology")
{
    const TriMesh t = fixtures::tetrahedron();
    CHECK(t.num_edges() == 6);
    CHECK(t.euler_characteristic() == 2);
    const TriMesh o = fixtures::octahedron();
    CHECK(o.num_vertices() == 6);
    CHECK(o.num_faces() == 8);
    CHECK(o.num_edges() == 12);
    CHECK(o.neighbors(4).size() == 4);
    CHECK(o.wheel_pairs(4).size() == 4);
}

TEST_CASE("faces are reoriented to enclose positive volume")
{
    const TriMesh t = fixtures::tetrahedron();
    Faces flipped = t.faces();
    flipped.col(1).swap(flipped.col(2));
    const TriMesh u = TriMesh::from_arrays(t.positions(), flipped);
    CHECK(signed_volume(u.positions(), u.faces()) > 0.0);

    Faces mixed = t.faces();
    std::swap(mixed(0, 1), mixed(0, 2));
    const TriMesh w = TriMesh::from_arrays(t.positions(), mixed);
    CHECK(signed_volume(w.positions(), w.faces()) > 0.0);
}

TEST_CASE("invalid meshes are rejected with the offending element")
{
    Points3d p;
    Faces f;
    fixtures::torus_arrays(8, 6, p, f);
    CHECK_THROWS_WITH_AS(TriMesh::from_arrays(p, f), doctest::Contains("genus check failed"),
                         InputError);

    const TriMesh t = fixtures::tetrahedron();
    Faces open = t.faces().topRows(3);
    CHECK_THROWS_WITH_AS(TriMesh::from_arrays(t.positions(), open), doctest::Contains("boundary edge"),
                         InputError);

    Faces bad = t.faces();
    bad(0, 0) = 9;
    CHECK_THROWS_WITH_AS(TriMesh::from_arrays(t.positions(), bad), doctest::Contains("invalid vertex"),
                         InputError);

    // Two tetrahedra sharing an edge: four faces on edge (0, 1).
    Points3d q(6, 3);
    q << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1;
    Faces nm(8, 3);
    nm << 0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3, 0, 1, 4, 0, 5, 1, 0, 4, 5, 1, 5, 4;
    CHECK_THROWS_WITH_AS(TriMesh::from_arrays(q, nm), doctest::Contains("non-manifold"), InputError);

    Points3d flat = t.positions();
    flat.row(3) = flat.row(0);
    CHECK_THROWS(TriMesh::from_arrays(flat, t.faces()));
}

TEST_CASE("OFF and OBJ round trip")
{
    const TriMesh e = gen_ellipsoid({1.1, 1.0, 0.9}, 1);
    const auto dir = std::filesystem::temp_directory_path();
    save_off(dir / "sphconf_rt.off", e.positions(), e.faces());
    save_obj(dir / "sphconf_rt.obj", e.positions(), e.faces());
    for (const char* name : {"sphconf_rt.off", "sphconf_rt.obj"}) {
        const TriMesh back = load_mesh(dir / name);
        CHECK(back.positions() == e.positions());
        CHECK(back.faces() == e.faces());
    }

    const auto obj = temp_file("sphconf_attr.obj",
                               "# octahedron\nv 1 0 0\nv -1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nv 0 0 -1\n"
                               "vn 0 0 1\nf 1//1 3//1 5//1\nf 3/1/1 2/1/1 5/1/1\nf 2 4 5\nf 4 1 5\n"
                               "f 3 1 6\nf 2 3 6\nf 4 2 6\nf 1 4 6\n");
    const TriMesh oct = load_mesh(obj);
    CHECK(oct.num_edges() == 12);

    CHECK_THROWS_WITH_AS(load_mesh(dir / "sphconf_missing.off"), doctest::Contains("cannot open"),
                         InputError);
    const auto junk = temp_file("sphconf_junk.off", "OFF\n4 4 0\n0 0 zero\n");
    CHECK_THROWS_WITH_AS(load_mesh(junk), doctest::Contains("parse failure"), InputError);
    const auto torus = dir / "sphconf_torus.off";
    Points3d p;
    Faces f;
    fixtures::torus_arrays(10, 7, p, f);
    save_off(torus, p, f);
    CHECK_THROWS_WITH_AS(load_mesh(torus), doctest::Contains("genus check failed"), InputError);
}

TEST_CASE("corner angles")
{
    Points3d p(4, 3);
    p << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0.2, 0.3, 1;
    Faces f(4, 3);
    f << 0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3;
    const TriMesh m = TriMesh::from_arrays(p, f);
    const CornerAngles a = corner_angles(m);
    for (int t = 0; t < 4; ++t) {
        CHECK(a.row(t).sum() == doctest::Approx(std::numbers::pi).epsilon(1e-12));
        const Eigen::Vector3d v0 = row3(p, m.faces()(t, 0)), v1 = row3(p, m.faces()(t, 1)),
                              v2 = row3(p, m.faces()(t, 2));
        const double l0 = (v1 - v2).norm(), l1 = (v2 - v0).norm(), l2 = (v0 - v1).norm();
        CHECK(std::abs(a(t, 0) - law_of_cosines(l0, l1, l2)) < 1e-12);
        CHECK(std::abs(a(t, 1) - law_of_cosines(l1, l2, l0)) < 1e-12);
        CHECK(std::abs(a(t, 2) - law_of_cosines(l2, l0, l1)) < 1e-12);
    }
    // Right isosceles face (0, 1, 2) up to orientation.
    for (int t = 0; t < 4; ++t) {
        const auto row = m.faces().row(t);
        if ((row.array() == 3).any()) continue;
        for (int c = 0; c < 3; ++c) {
            const double expect = row[c] == 0 ? std::numbers::pi / 2 : std::numbers::pi / 4;
            CHECK(a(t, c) == doctest::Approx(expect).epsilon(1e-14));
        }
    }
    const CornerAngles ico = corner_angles(gen_icosphere(0));
    CHECK((ico.array() - std::numbers::pi / 3).abs().maxCoeff() < 1e-12);
}

TEST_CASE("cotangent Laplacian")
{
    const TriMesh t = fixtures::tetrahedron();
    const Eigen::MatrixXd L = Eigen::MatrixXd(cotangent_laplacian(t).matrix);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(L(i, j) == doctest::Approx(i == j ? std::sqrt(3.0) : -1.0 / std::sqrt(3.0)).epsilon(1e-12));

    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const TriMesh m = jittered(1, seed, 0.2);
        const SymSparseOperator op = cotangent_laplacian(m);
        const Eigen::MatrixXd D = Eigen::MatrixXd(op.matrix);
        const double scale = D.cwiseAbs().maxCoeff();
        CHECK((D.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-12 * scale);
        CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);

        // Per-triangle accumulation with law-of-cosines cotangents.
        Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(m.num_vertices(), m.num_vertices());
        const Points3d& p = m.positions();
        for (int f = 0; f < m.num_faces(); ++f) {
            for (int c = 0; c < 3; ++c) {
                const int i = m.faces()(f, c), j = m.faces()(f, (c + 1) % 3), k = m.faces()(f, (c + 2) % 3);
                const double a = law_of_cosines((row3(p, j) - row3(p, k)).norm(),
                                                (row3(p, i) - row3(p, j)).norm(),
                                                (row3(p, i) - row3(p, k)).norm());
                const double w = 0.5 / std::tan(a);
                oracle(j, k) -= w;
                oracle(k, j) -= w;
                oracle(j, j) += w;
                oracle(k, k) += w;
            }
        }
        CHECK((D - oracle).cwiseAbs().maxCoeff() < 1e-12 * scale);

        // Pattern is exactly diagonal plus edges.
        int entries = 0;
        for (int i = 0; i < op.matrix.outerSize(); ++i)
            for (SparseRowMatrix::InnerIterator it(op.matrix, i); it; ++it) {
                ++entries;
                const int j = static_cast<int>(it.col());
                CHECK((i == j || m.edge_index(i, j).has_value()));
            }
        CHECK(entries == m.num_vertices() + 2 * m.num_edges());
    }
}

TEST_CASE("mean value Laplacian")
{
    const TriMesh ico = gen_icosphere(0);
    const SymSparseOperator mv = mean_value_laplacian(ico.positions(), ico);
    const double l = (ico.positions().row(ico.faces()(0, 0)) - ico.positions().row(ico.faces()(0, 1))).norm();
    for (int i = 0; i < mv.matrix.outerSize(); ++i)
        for (SparseRowMatrix::InnerIterator it(mv.matrix, i); it; ++it)
            if (it.col() != i) CHECK(-it.value() == doctest::Approx(2.0 / (std::sqrt(3.0) * l)).epsilon(1e-12));

    const TriMesh m = jittered(2, 11, 0.2);
    const SymSparseOperator op = mean_value_laplacian(m.positions(), m);
    CHECK(op.pattern_tag == cotangent_laplacian(m).pattern_tag);
    const Points3d& p = m.positions();
    for (int i = 0; i < m.num_vertices(); ++i) {
        double sum = 0.0;
        for (SparseRowMatrix::InnerIterator it(op.matrix, i); it; ++it) {
            sum += it.value();
            const int j = static_cast<int>(it.col());
            if (j == i) continue;
            CHECK(it.value() < 0.0);
            // Oracle: the two faces on edge ij, angle at i in each.
            const Edge& e = m.edges()[*m.edge_index(i, j)];
            double w = 0.0;
            for (int f : {e.f0, e.f1}) {
                int k = -1;
                for (int c = 0; c < 3; ++c)
                    if (m.faces()(f, c) != i && m.faces()(f, c) != j) k = m.faces()(f, c);
                const Eigen::Vector3d a = row3(p, j) - row3(p, i), b = row3(p, k) - row3(p, i);
                const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
                w += std::tan(angle / 2);
            }
            w /= (row3(p, j) - row3(p, i)).norm();
            CHECK(std::abs(-it.value() - w) < 1e-12 * w);
        }
        CHECK(std::abs(sum) < 1e-12 * op.matrix.coeff(i, i));
    }
}

TEST_CASE("Gauss curvature")
{
    const Eigen::VectorXd kt = gauss_curvature(fixtures::tetrahedron());
    CHECK((kt.array() - std::numbers::pi).abs().maxCoeff() < 1e-12);
    const Eigen::VectorXd ki = gauss_curvature(gen_icosphere(0));
    CHECK((ki.array() - std::numbers::pi / 3).abs().maxCoeff() < 1e-12);
    for (std::uint64_t seed : {5u, 6u})
        CHECK(gauss_curvature(jittered(2, seed, 0.3)).sum() == doctest::Approx(4 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("ellipsoid generator and mesh size")
{
    for (int k = 0; k <= 4; ++k) {
        const TriMesh m = gen_ellipsoid({2.0, 1.0, 0.3}, k);
        const int pow4 = 1 << (2 * k);
        CHECK(m.num_vertices() == 10 * pow4 + 2);
        CHECK(m.num_faces() == 20 * pow4);
        CHECK(m.euler_characteristic() == 2);
    }
    const TriMesh e3 = gen_ellipsoid({1.1, 1.0, 0.9}, 3);
    CHECK(e3.num_vertices() == 642);
    CHECK(e3.num_faces() == 1280);
    CHECK(std::abs(mesh_size_h(e3) - 0.1796) < 0.1 * 0.1796);
    for (int i = 0; i < e3.num_vertices(); ++i) {
        const Eigen::Vector3d q = row3(e3.positions(), i).cwiseQuotient(Eigen::Vector3d(1.1, 1.0, 0.9));
        CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-14));
    }

    CHECK(mesh_size_h(fixtures::tetrahedron()) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-14));
    // Icosahedron edge, then the golden-ratio chord of the first subdivision.
    CHECK(mesh_size_h(gen_icosphere(0)) == doctest::Approx(4.0 / std::sqrt(10.0 + 2.0 * std::sqrt(5.0))).epsilon(1e-14));
    CHECK(mesh_size_h(gen_icosphere(1)) == doctest::Approx(2.0 / (1.0 + std::sqrt(5.0))).epsilon(1e-14));
    for (int k = 2; k <= 4; ++k) {
        const double r = mesh_size_h(gen_icosphere(k)) / mesh_size_h(gen_icosphere(k - 1));
        CHECK(r >= 0.45);
        CHECK(r <= 0.55);
    }
    CHECK_THROWS_AS(gen_ellipsoid({1.0, 0.0, 1.0}, 1), InputError);
}

TEST_CASE("wheel pairs traverse incident faces in orientation order")
{
    const TriMesh m = gen_icosphere(1);
    for (int i = 0; i < m.num_vertices(); ++i) {
        const auto wheel = m.wheel_pairs(i);
        const auto faces = m.vertex_faces(i);
        REQUIRE(wheel.size() == faces.size());
        for (std::size_t a = 0; a < wheel.size(); ++a) {
            const auto row = m.faces().row(faces[a]);
            int c = 0;
            while (row[c] != i) ++c;
            CHECK(row[(c + 1) % 3] == wheel[a][0]);
            CHECK(row[(c + 2) % 3] == wheel[a][1]);
        }
    }
}

// Acceptance run: one PASS/FAIL line per criterion.

#include "fixtures.hpp"

#include "sphconf/hbtr.hpp"
#include "sphconf/initializer.hpp"
#include "sphconf/metrics.hpp"
#include "sphconf/postprocess.hpp"
#include "sphconf/registration.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>

using namespace sphconf;
using Clock = std::chrono::steady_clock;

namespace
{

int failures = 0;

void report(int id, bool ok, const std::string& detail)
{
    std::printf("%s %2d  %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double inf_norm(const SparseRowMatrix& H)
{
    double best = 0.0;
    for (int i = 0; i < H.outerSize(); ++i) {
        double row = 0.0;
        for (SparseRowMatrix::InnerIterator it(H, i); it; ++it) row += std::abs(it.value());
        best = std::max(best, row);
    }
    return best;
}

TriMesh random_mesh(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> axis(0.4, 2.0), jitter(-0.04, 0.04);
    const TriMesh base = gen_ellipsoid({axis(rng), axis(rng), axis(rng)}, 1 + static_cast<int>(seed % 2));
    Points3d p = base.positions();
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) *= 1.0 + jitter(rng);
    return TriMesh::from_arrays(p, base.faces());
}

void criterion1()
{
    const auto t0 = Clock::now();
    const TriMesh m = gen_icosphere(1);
    const SymSparseOperator L = cotangent_laplacian(m);
    const Eigen::VectorXd x = fixtures::random_field(m, 2024).stacked();
    const EnergyState s = build_energy_state(m, L, SphericalFieldd::from_stacked(x));
    const double ge = fixtures::max_rel_error(energy_gradient(s), fixtures::fd_gradient(m, L, x, 1e-5));

    const SparseRowMatrix H = energy_hessian(m, L, s).matrix;
    const Eigen::MatrixXd Hfd = fixtures::fd_hessian(m, L, x, 1e-5);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < H.outerSize(); ++i)
        for (SparseRowMatrix::InnerIterator it(H, i); it; ++it) {
            num = std::max(num, std::abs(it.value() - Hfd(i, it.col())));
            den = std::max(den, std::abs(Hfd(i, it.col())));
        }
    const double he = num / den;
    const double t = seconds_since(t0);
    report(1, m.num_vertices() == 42 && ge < 1e-6 && he < 1e-5 && t < 5.0,
           fmt("derivatives on 42-vertex icosphere: gradient rel err %.2e (<1e-6), Hessian rel err %.2e "
               "(<1e-5), %.2f s (<5 s)",
               ge, he, t));
}

void criterion2()
{
    const TriMesh m = gen_ellipsoid({1.1, 1.0, 0.9}, 2);
    const SymSparseOperator L = cotangent_laplacian(m);
    const int n = m.num_vertices();
    double worst_s = 0.0, worst_c = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const EnergyState s = build_energy_state(m, L, fixtures::random_field(m, 300 + seed, 0.3));
        const SparseRowMatrix H = energy_hessian(m, L, s).matrix;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
        v.head(n).setOnes();
        worst_s = std::max(worst_s, (H * v).lpNorm<Eigen::Infinity>() / inf_norm(H));
        const SparseRowMatrix C = cartesian_hessian(m, L, s).matrix;
        for (int b = 0; b < 3; ++b) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(3 * n);
            e.segment(b * n, n).setOnes();
            worst_c = std::max(worst_c, (C * e).lpNorm<Eigen::Infinity>() / inf_norm(C));
        }
    }
    report(2, worst_s < 1e-10 && worst_c < 1e-10,
           fmt("null spaces over 10 states: |H[1;0]|/|H| = %.2e, Cartesian block-constant %.2e (<1e-10)",
               worst_s, worst_c));
}

void criterion3()
{
    int outside = 0;
    long checked = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TriMesh m = random_mesh(seed);
        const int n = m.num_vertices();
        const SymSparseOperator L = cotangent_laplacian(m);
        const EnergyState s = build_energy_state(m, L, fixtures::random_field(m, 400 + seed, 0.3));
        const SparseRowMatrix H = energy_hessian(m, L, s).matrix;
        for (int i = 0; i < H.outerSize(); ++i)
            for (SparseRowMatrix::InnerIterator it(H, i); it; ++it) {
                ++checked;
                const int a = i % n, b = static_cast<int>(it.col()) % n;
                if (a != b && !m.edge_index(a, b)) ++outside;
            }
    }
    report(3, outside == 0,
           fmt("Hessian pattern on 5 random meshes: %d of %ld structural entries outside 1_2x2 (x) pattern(L)",
               outside, checked));
}

void criterion4()
{
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TriMesh m = random_mesh(50 + seed);
        const SymSparseOperator L = cotangent_laplacian(m);
        const EnergyState s = build_energy_state(m, L, fixtures::random_field(m, 500 + seed, 0.35));
        double cross = 0.0;
        for (int t = 0; t < m.num_faces(); ++t) {
            const Eigen::Vector3d a = fixtures::row3(s.f, m.faces()(t, 0)), b = fixtures::row3(s.f, m.faces()(t, 1)),
                                  c = fixtures::row3(s.f, m.faces()(t, 2));
            cross += 0.5 * (b - a).cross(c - a).norm();
        }
        const Eigen::SparseMatrix<double> Lf = s.L_f.matrix;
        double quad = 0.0;
        for (int d = 0; d < 3; ++d) quad += s.f.col(d).dot(Lf * s.f.col(d));
        worst = std::max(worst, std::abs(cross - 0.5 * quad) / cross);
    }
    report(4, worst < 1e-10, fmt("area identity on 10 random configurations: max rel diff %.2e (<1e-10)", worst));
}

void criterion5()
{
    double e_max = 0.0, g_max = 0.0;
    for (const TriMesh& m : {fixtures::tetrahedron(), fixtures::octahedron(), gen_icosphere(3)}) {
        const SymSparseOperator L = cotangent_laplacian(m);
        const EnergyState s = build_energy_state(m, L, m.positions());
        e_max = std::max(e_max, std::abs(s.energy));
        g_max = std::max(g_max, energy_gradient(s).lpNorm<Eigen::Infinity>());
    }
    report(5, e_max < 1e-12 && g_max < 1e-10,
           fmt("identity maps (tetra, octa, icosphere): max E_C %.2e (<1e-12), max |g| %.2e (<1e-10)", e_max, g_max));
}

struct Run {
    SolveResult result;
    DistortionReport distortion;
    double seconds = 0.0;
};

std::map<std::pair<int, int>, Run> runs;  // (ellipsoid, level)

const Eigen::Vector3d kAxes[2] = {{1.1, 1.0, 0.9}, {2.0, 1.0, 0.3}};

const Run& solve(int e, int level)
{
    auto it = runs.find({e, level});
    if (it != runs.end()) return it->second;
    const TriMesh m = gen_ellipsoid(kAxes[e], level);
    const auto t0 = Clock::now();
    Run r;
    r.result = hbtr_solve(m, initial_map(m).field);
    r.seconds = seconds_since(t0);
    r.distortion = angle_distortion(m, r.result.f);
    return runs.emplace(std::make_pair(e, level), std::move(r)).first->second;
}

void criterion6()
{
    bool ok = true;
    std::string detail = "ellipsoid (1.1,1,0.9):";
    for (int level : {2, 3, 4}) {
        const Run& r = solve(0, level);
        const SolveResult& s = r.result;
        bool dec = true;
        const auto e = s.trace.accepted_energies();
        for (std::size_t k = 1; k < e.size(); ++k) dec = dec && e[k] < e[k - 1];
        const bool pass = s.converged && s.delta <= 1e-9 && s.iterations <= 500 && s.folds == 0 && dec &&
                          s.grad_inf <= 1e-8 && r.seconds < 60.0;
        ok = ok && pass;
        detail += fmt(" L%d[%s it=%d delta=%.1e |g|=%.1e folds=%d mono=%d %.1fs]", level,
                      s.converged ? "conv" : "NOT conv", s.iterations, s.delta, s.grad_inf, s.folds,
                      dec ? 1 : 0, r.seconds);
    }
    report(6, ok, detail);
}

void criterion7()
{
    bool ok = true;
    std::string detail;
    for (int e = 0; e < 2; ++e) {
        detail += fmt("(%.1f,%.0f,%.1f):", kAxes[e][0], kAxes[e][1], kAxes[e][2]);
        for (int level : {2, 3}) {
            const Run& a = solve(e, level);
            const Run& b = solve(e, level + 1);
            const double re = a.result.energy / b.result.energy;
            const double ra = a.distortion.angle.mean / b.distortion.angle.mean;
            const bool pass = a.result.converged && b.result.converged && re >= 3.0 && re <= 5.0 &&
                              ra >= 1.6 && ra <= 2.4;
            ok = ok && pass;
            detail += fmt(" L%d->%d E %.2f angle %.2f;", level, level + 1, re, ra);
        }
        detail += " ";
    }
    report(7, ok, detail + "(E in [3,5], angle in [1.6,2.4])");
}

void criterion8()
{
    bool ok = true;
    std::string detail;
    for (int e = 0; e < 2; ++e)
        for (int level : {2, 3, 4}) {
            const Run& r = solve(e, level);
            if (!r.result.converged) {
                ok = false;
                detail += fmt(" e%d L%d not converged;", e, level);
                continue;
            }
            const auto d = r.result.trace.accepted_deltas();
            const std::size_t K = d.size();
            bool pass = K >= 3;
            detail += fmt(" e%d L%d", e, level);
            for (std::size_t k = K >= 3 ? K - 2 : K; k < K; ++k) {
                const double C = d[k] / std::pow(d[k - 1], 1.5);
                pass = pass && C <= 1e3;
                detail += fmt(" %.1e->%.1e (C=%.1e)", d[k - 1], d[k], C);
            }
            ok = ok && pass;
            detail += ";";
        }
    report(8, ok, "superlinear tail, last two ratios delta_k+1 <= 1e3 delta_k^1.5:" + detail);
}

struct RepairCheck {
    std::size_t injected = 0, left = 0, touched = 0;
    int changed_outside = 0;
    double rel = 0.0;
};

RepairCheck repair_check(const TriMesh& m, const Points3d& converged)
{
    const SymSparseOperator L = cotangent_laplacian(m);
    const double before = conformal_energy(m, L, converged);
    Points3d f = converged;
    const int n = m.num_vertices();
    for (int k : {n / 5, n / 2, 4 * n / 5}) {
        const int j = m.neighbors(k)[0];
        f.row(k) = (f.row(k) + 2.5 * (f.row(j) - f.row(k))).normalized();
    }
    RepairCheck c;
    c.injected = detect_foldings(m, f).count();
    const RepairResult fix = mvc_fix(m, f);
    std::vector<char> in(n, 0);
    for (int v : fix.touched) in[v] = 1;
    for (int v = 0; v < n; ++v)
        if (!in[v] && fix.f.row(v) != f.row(v)) ++c.changed_outside;
    c.left = detect_foldings(m, fix.f).count();
    c.touched = fix.touched.size();
    c.rel = std::abs(conformal_energy(m, L, fix.f) - before) / before;
    return c;
}

void criterion9()
{
    const TriMesh ico = gen_icosphere(3);
    const SolveResult round = hbtr_solve(ico, initial_map(ico).field);
    const RepairCheck a = repair_check(ico, round.f);
    const RepairCheck b = repair_check(gen_ellipsoid(kAxes[0], 3), solve(0, 3).result.f);
    const bool ok = round.converged && a.injected > 0 && a.left == 0 && a.changed_outside == 0 &&
                    b.injected > 0 && b.left == 0 && b.changed_outside == 0 && b.rel < 0.05;
    report(9, ok,
           fmt("fold repair: icosphere %zu folds -> %zu, %zu re-solved, %d changed outside I; "
               "ellipsoid (1.1,1,0.9) L3 %zu folds -> %zu, %zu re-solved, %d changed outside I, "
               "E_C change %.2f%% (<5%%)",
               a.injected, a.left, a.touched, a.changed_outside, b.injected, b.left, b.touched,
               b.changed_outside, 100 * b.rel));
}

LandmarkSpec identity_pairs(int n, int count)
{
    LandmarkSpec spec;
    for (int k = 0; k < count; ++k) {
        spec.moving.push_back((k * (n - 1)) / (count - 1));
        spec.fixed.push_back((k * (n - 1)) / (count - 1));
    }
    spec.points = Points3d::Zero(count, 3);
    return spec;
}

void criterion10()
{
    const TriMesh e3 = gen_ellipsoid(kAxes[0], 3);
    const RegistrationResult self = hbtr_register(e3, e3, identity_pairs(e3.num_vertices(), 12));
    const bool self_ok = self.moving.converged && self.moving.registration_loss < 1e-6;

    const TriMesh flat = gen_ellipsoid(kAxes[1], 3);
    const LandmarkSpec spec = identity_pairs(flat.num_vertices(), 12);
    std::string sweep;
    bool sweep_ok = true;
    double last_reg = std::numeric_limits<double>::infinity(), last_ec = -1.0;
    for (double lambda : {1.0, 5.0, 10.0}) {
        RegConfig cfg;
        cfg.lambda = lambda;
        const RegistrationResult r = hbtr_register(e3, flat, spec, cfg);
        sweep_ok = sweep_ok && r.moving.converged && r.moving.registration_loss <= last_reg &&
                   r.moving.conformal_energy >= last_ec;
        last_reg = r.moving.registration_loss;
        last_ec = r.moving.conformal_energy;
        sweep += fmt(" l=%g E_reg %.3e E_C %.3e;", lambda, last_reg, last_ec);
    }

    RegConfig zero;
    zero.lambda = 0.0;
    const RegistrationResult r0 = hbtr_register(e3, flat, spec, zero);
    const double plain = solve(1, 3).result.energy;
    const double diff = std::abs(r0.moving.conformal_energy - plain);
    report(10, self_ok && sweep_ok && diff < 1e-8,
           fmt("registration: self E_reg %.2e (<1e-6);", self.moving.registration_loss) + sweep +
               fmt(" lambda=0 |E_C - plain| %.1e (<1e-8)", diff));
}

}  // namespace

int main()
{
    const std::function<void()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                              criterion6, criterion7, criterion8, criterion9, criterion10};
    for (const auto& c : criteria) {
        try {
            c();
        } catch (const std::exception& e) {
            std::printf("FAIL     exception: %s\n", e.what());
            ++failures;
        }
    }
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

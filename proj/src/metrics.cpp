#include "sphconf/metrics.hpp"

#include "sphconf/energy.hpp"
#include "sphconf/hbtr.hpp"
#include "sphconf/initializer.hpp"
#include "sphconf/postprocess.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace sphconf
{

namespace
{

constexpr double kDeg = 180.0 / std::numbers::pi;

Eigen::Vector3d row3(const Points3d& p, int i) { return p.row(i).transpose(); }

void check_image(const TriMesh& mesh, const Points3d& f)
{
    if (f.rows() != mesh.num_vertices()) throw InputError("image size does not match mesh");
    if (!f.allFinite()) throw InputError("image has non-finite coordinates");
    const Faces& faces = mesh.faces();
    Eigen::VectorXd areas(faces.rows());
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        const Eigen::Vector3d a = row3(f, faces(t, 0));
        areas[t] = 0.5 * (row3(f, faces(t, 1)) - a).cross(row3(f, faces(t, 2)) - a).norm();
    }
    const double threshold = 1e-14 * areas.mean();
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        if (!(areas[t] >= threshold) || areas[t] == 0.0) {
            std::ostringstream msg;
            msg << "degenerate image triangle: face " << t << " has area " << areas[t];
            throw DegenerateImageError(msg.str(), static_cast<int>(t));
        }
    }
}

// Isometric planar coordinates of corners 1 and 2 (corner 0 at the origin,
// corner 1 on the positive x axis), with the frame normal along `normal`.
Eigen::Matrix2d flatten(const Eigen::Matrix3d& tri, const Eigen::Vector3d& normal)
{
    const Eigen::Vector3d a = tri.row(1) - tri.row(0);
    const Eigen::Vector3d b = tri.row(2) - tri.row(0);
    const Eigen::Vector3d e1 = a.normalized();
    const Eigen::Vector3d e2 = normal.normalized().cross(e1);
    Eigen::Matrix2d P;
    P << a.dot(e1), b.dot(e1), a.dot(e2), b.dot(e2);
    return P;
}

}  // namespace

double nearest_rank(std::vector<double> values, double percent)
{
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto N = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * N));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

SummaryStats summarize(const Eigen::VectorXd& values)
{
    SummaryStats s;
    if (values.size() == 0) return s;
    s.mean = values.mean();
    s.sd = std::sqrt((values.array() - s.mean).square().mean());
    const std::vector<double> v(values.data(), values.data() + values.size());
    s.p50 = nearest_rank(v, 50.0);
    s.p75 = nearest_rank(v, 75.0);
    return s;
}

DistortionReport angle_distortion(const TriMesh& mesh, const Points3d& f)
{
    check_image(mesh, f);
    const CornerAngles src = corner_angles(mesh);
    const CornerAngles img = corner_angles(f, mesh);
    DistortionReport report;
    report.corner_deg = ((src - img).array().abs() * kDeg).matrix();
    const Eigen::Map<const Eigen::VectorXd> flat(report.corner_deg.data(), report.corner_deg.size());
    report.angle = summarize(flat);

    const int n = mesh.num_vertices();
    const Faces& faces = mesh.faces();
    report.vertex_angle_deg = Eigen::VectorXd::Zero(n);
    for (Eigen::Index t = 0; t < faces.rows(); ++t)
        for (int c = 0; c < 3; ++c) report.vertex_angle_deg[faces(t, c)] += report.corner_deg(t, c);
    for (int v = 0; v < n; ++v)
        report.vertex_angle_deg[v] /= static_cast<double>(mesh.neighbors(v).size());
    return report;
}

std::complex<double> beltrami_coefficient(const Eigen::Matrix3d& src, const Eigen::Matrix3d& img,
                                          const Eigen::Vector3d& outward, bool* flagged)
{
    const Eigen::Vector3d ns = (src.row(1) - src.row(0)).cross(src.row(2) - src.row(0));
    Eigen::Vector3d ni = (img.row(1) - img.row(0)).cross(img.row(2) - img.row(0));
    if (ni.dot(outward) < 0.0) ni = -ni;
    const Eigen::Matrix2d P = flatten(src, ns);
    const Eigen::Matrix2d Q = flatten(img, ni);
    const Eigen::Matrix2d A = Q * P.inverse();
    const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
    const std::complex<double> fz(0.5 * (a + d), 0.5 * (c - b));
    const std::complex<double> fzbar(0.5 * (a - d), 0.5 * (c + b));
    if (flagged) *flagged = false;
    if (std::abs(fz) <= 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(fz) + std::abs(fzbar))) {
        if (flagged) *flagged = true;
        return {1.0, 0.0};
    }
    return fzbar / fz;
}

BeltramiField beltrami_coefficients(const TriMesh& mesh, const Points3d& f)
{
    check_image(mesh, f);
    const Faces& faces = mesh.faces();
    const Points3d& p = mesh.positions();
    BeltramiField out;
    out.mu.resize(faces.rows());
    out.mu_abs.resize(faces.rows());
    for (Eigen::Index t = 0; t < faces.rows(); ++t) {
        Eigen::Matrix3d S, I;
        for (int c = 0; c < 3; ++c) {
            S.row(c) = p.row(faces(t, c));
            I.row(c) = f.row(faces(t, c));
        }
        const Eigen::Vector3d outward = I.colwise().sum().transpose();
        bool flag = false;
        out.mu[t] = beltrami_coefficient(S, I, outward, &flag);
        out.mu_abs[t] = std::abs(out.mu[t]);
        if (flag) out.flagged.push_back(static_cast<int>(t));
    }
    return out;
}

DistortionReport full_report(const TriMesh& mesh, const Points3d& f)
{
    DistortionReport report = angle_distortion(mesh, f);
    const BeltramiField mu = beltrami_coefficients(mesh, f);
    report.mu_abs = mu.mu_abs;
    report.mu_flagged = mu.flagged;
    report.mu_mean = mu.mu_abs.size() ? mu.mu_abs.mean() : 0.0;

    const int n = mesh.num_vertices();
    report.vertex_mu = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v) {
        for (int t : mesh.vertex_faces(v)) report.vertex_mu[v] += mu.mu_abs[t];
        report.vertex_mu[v] /= static_cast<double>(mesh.neighbors(v).size());
    }
    report.gauss_curvature = gauss_curvature(mesh);
    report.energy = conformal_energy(mesh, cotangent_laplacian(mesh), f);
    report.folds = static_cast<int>(detect_foldings(mesh, f).count());
    return report;
}

std::string report_json(const DistortionReport& report, bool per_vertex)
{
    nlohmann::ordered_json j;
    j["energy"] = report.energy;
    j["angle_mean_deg"] = report.angle.mean;
    j["angle_sd_deg"] = report.angle.sd;
    j["angle_p50_deg"] = report.angle.p50;
    j["angle_p75_deg"] = report.angle.p75;
    j["mu_mean"] = report.mu_mean;
    j["folds"] = report.folds;
    if (per_vertex) {
        auto arr = [](const Eigen::VectorXd& v) {
            return std::vector<double>(v.data(), v.data() + v.size());
        };
        j["per_vertex"] = {{"angle_mean_deg", arr(report.vertex_angle_deg)},
                           {"mu_mean", arr(report.vertex_mu)},
                           {"gauss_curvature", arr(report.gauss_curvature)}};
    }
    return j.dump(2);
}

std::vector<ConvergenceRow> convergence_study(const Eigen::Vector3d& semiaxes,
                                              const std::vector<int>& levels,
                                              const TrustRegionConfig& solver,
                                              const InitConfig& init)
{
    if (!std::is_sorted(levels.begin(), levels.end()))
        throw InputError("convergence study: levels must be ascending");
    std::vector<ConvergenceRow> rows;
    for (int level : levels) {
        ConvergenceRow row;
        row.level = level;
        try {
            const TriMesh mesh = gen_ellipsoid(semiaxes, level);
            row.vertices = mesh.num_vertices();
            row.h = mesh_size_h(mesh);
            const InitResult start = initial_map(mesh, init);
            const SolveResult res = hbtr_solve(mesh, start.field, solver);
            row.energy = res.energy;
            row.converged = res.converged;
            row.iterations = res.iterations;
            const DistortionReport report = angle_distortion(mesh, res.f);
            row.angle_mean_deg = report.angle.mean;
            row.angle_sd_deg = report.angle.sd;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ConvergenceRow> convergence_study(const Eigen::Vector3d& semiaxes,
                                              const std::vector<int>& levels)
{
    return convergence_study(semiaxes, levels, TrustRegionConfig{}, InitConfig{});
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows)
{
    out << "level,n,h,energy,angle_mean_deg,angle_sd_deg,converged,iterations,error\n";
    char buf[512];
    for (const auto& r : rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%d,%d,", r.level, r.vertices,
                      r.h, r.energy, r.angle_mean_deg, r.angle_sd_deg, r.converged ? 1 : 0,
                      r.iterations);
        out << buf << err << '\n';
    }
}

}  // namespace sphconf

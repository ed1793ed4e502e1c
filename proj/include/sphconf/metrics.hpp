#pragma once

#include "sphconf/mesh.hpp"

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace sphconf
{

struct TrustRegionConfig;
struct InitConfig;

/// Mean, population standard deviation and nearest-rank percentiles.
struct SummaryStats {
    double mean = 0.0;
    double sd = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
};

SummaryStats summarize(const Eigen::VectorXd& values);

/// Nearest-rank percentile: the ceil(p/100 * N)-th smallest value.
double nearest_rank(std::vector<double> values, double percent);

struct DistortionReport {
    /// |alpha - alpha(f)| per corner, degrees.
    CornerAngles corner_deg;
    SummaryStats angle;
    /// |mu| per face.
    Eigen::VectorXd mu_abs;
    /// Faces with f_z = 0, reported with |mu| = 1.
    std::vector<int> mu_flagged;
    double mu_mean = 0.0;
    /// Mean corner distortion around each vertex.
    Eigen::VectorXd vertex_angle_deg;
    /// Mean |mu| over the faces around each vertex.
    Eigen::VectorXd vertex_mu;
    /// Angle defect of the source mesh.
    Eigen::VectorXd gauss_curvature;
    double energy = 0.0;
    int folds = 0;
};

/// Corner distortions and their statistics (the angle part of a report).
DistortionReport angle_distortion(const TriMesh& mesh, const Points3d& f);

/// Beltrami coefficient of the linear map from `src` to `img` (rows are the
/// three corners). The image frame normal is taken on the side of `outward`.
std::complex<double> beltrami_coefficient(const Eigen::Matrix3d& src, const Eigen::Matrix3d& img,
                                          const Eigen::Vector3d& outward, bool* flagged = nullptr);

struct BeltramiField {
    Eigen::VectorXcd mu;
    Eigen::VectorXd mu_abs;
    std::vector<int> flagged;
};

/// Per-face mu between each source triangle and its chordal image triangle.
BeltramiField beltrami_coefficients(const TriMesh& mesh, const Points3d& f);

/// Energy, angle and Beltrami statistics, per-vertex aggregates, curvature, folds.
DistortionReport full_report(const TriMesh& mesh, const Points3d& f);

/// JSON object with energy, angle_mean_deg, angle_sd_deg, angle_p50_deg,
/// angle_p75_deg, mu_mean, folds and, if requested, per-vertex arrays.
std::string report_json(const DistortionReport& report, bool per_vertex = false);

struct ConvergenceRow {
    int level = 0;
    int vertices = 0;
    double h = 0.0;
    double energy = 0.0;
    double angle_mean_deg = 0.0;
    double angle_sd_deg = 0.0;
    bool converged = false;
    int iterations = 0;
    /// Empty on success; otherwise the failure reason for this level.
    std::string error;
};

/// gen_ellipsoid + initial_map + hbtr_solve for each level.
std::vector<ConvergenceRow> convergence_study(const Eigen::Vector3d& semiaxes,
                                              const std::vector<int>& levels,
                                              const TrustRegionConfig& solver,
                                              const InitConfig& init);

std::vector<ConvergenceRow> convergence_study(const Eigen::Vector3d& semiaxes,
                                              const std::vector<int>& levels);

/// Columns: level, n, h, energy, angle_mean_deg, angle_sd_deg, converged, iterations, error.
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);

}  // namespace sphconf

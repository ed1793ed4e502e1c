#pragma once

#include "sphconf/energy.hpp"
#include "sphconf/landmarks.hpp"
#include "sphconf/metrics.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sphconf
{

struct TrustRegionConfig {
    /// Stop when the rotation-aligned step delta falls to this value.
    double tolerance = 1e-9;
    int max_iterations = 500;
    double radius0 = 1.0;
    double radius_max = 100.0;
    double rho_low = 0.25;
    double rho_high = 0.75;
    double shrink = 0.25;
    double grow = 2.0;
    /// Consecutive rejected trials before the solve is declared stagnant.
    int max_rejections = 20;
    double pole_eps = kPoleEpsilon;

    void validate() const;
};

enum class StepType { Initial, Interior, Boundary };

const char* to_string(StepType type) noexcept;

struct TraceEntry {
    int iteration = 0;
    double energy = 0.0;
    double grad_inf = 0.0;
    /// NaN for the initial row and for rejected trials.
    double delta = 0.0;
    /// Radius after the update that followed this trial.
    double radius = 0.0;
    StepType step = StepType::Initial;
    bool accepted = false;
};

struct SolveTrace {
    std::vector<TraceEntry> entries;

    /// Energies of the initial row and every accepted step, in order.
    std::vector<double> accepted_energies() const;
    /// Deltas of the accepted steps, in order.
    std::vector<double> accepted_deltas() const;
};

/// Columns: iter, energy, grad_inf, delta, radius, step_type, accepted.
void write_trace_csv(std::ostream& out, const SolveTrace& trace);

struct SolveResult {
    /// Optimization variables in the solver frame (pole-safe).
    SphericalFieldd field;
    /// Final image in the caller's frame: f = points(field) * frame.
    Points3d f;
    Rotation3d frame = Rotation3d::Identity();
    SolveTrace trace;
    bool converged = false;
    /// Accepted iterations.
    int iterations = 0;
    double energy = 0.0;
    /// E_C part of the objective (equal to `energy` without landmarks).
    double conformal_energy = 0.0;
    double registration_loss = 0.0;
    double grad_inf = 0.0;
    double delta = 0.0;
    int folds = 0;
    std::string message;
    std::optional<DistortionReport> distortion;
};

// ---------------------------------------------------------------------------
// Step machinery
// ---------------------------------------------------------------------------

struct NewtonStep {
    Eigen::VectorXd s;
    bool available = false;
    /// |H s + g|_inf / |g|_inf.
    double relative_residual = 0.0;
};

/**
 * Pinned Newton solver. The pinned theta row and column are replaced by the
 * identity (no pinning when `pin` < 0), keeping the sparsity pattern fixed so the symbolic analysis is
 * reused across iterations with the same pattern.
 */
class NewtonSolver
{
public:
    NewtonSolver();
    ~NewtonSolver();
    NewtonSolver(NewtonSolver&&) noexcept;
    NewtonSolver& operator=(NewtonSolver&&) noexcept;

    NewtonStep solve(const SymSparseOperator& H, const Eigen::VectorXd& g, int pin);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot pinned Newton direction; `available` is false on breakdown.
NewtonStep newton_direction(const SymSparseOperator& H, const Eigen::VectorXd& g, int pin);

/// Theta index with largest |sin phi|.
int select_pin(const SphericalFieldd& field);

struct SubspaceStep {
    Eigen::VectorXd d;
    /// m(d) = g'd + d'Hd / 2.
    double model = 0.0;
    bool interior = false;
    bool hit_boundary = false;
    /// Dimension of the subspace actually used (0, 1 or 2).
    int dimension = 0;
};

/// Minimize g'y + y'By/2 over |y| <= radius for a k x k (k <= 2) problem.
struct ReducedStep {
    Eigen::VectorXd y;
    bool interior = false;
};
ReducedStep solve_reduced_tr(const Eigen::MatrixXd& B, const Eigen::VectorXd& b, double radius);

/**
 * Trust-region step restricted to span{s, -g}. `s` may be empty (gradient
 * only). The result never has a larger model value than the Cauchy point or
 * the clipped Newton point.
 */
SubspaceStep tr_subspace_step(const SparseRowMatrix& H, const Eigen::VectorXd& g,
                              const Eigen::VectorXd& s, double radius);

double radius_update(double rho, double radius, bool hit_boundary, const TrustRegionConfig& config);

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

/// Landmark term added to E_C: lambda * E_reg with targets in the caller's frame.
struct LandmarkTerm {
    const LandmarkSet* landmarks = nullptr;
    double lambda = 0.0;
    /// Re-fit the frame to the landmarks after every accepted step.
    bool rotate = true;
};

/**
 * Trust-region minimization of E_C (plus an optional landmark term) from
 * `init`. `frame` places the initial field in the caller's frame.
 */
SolveResult hbtr_solve(const TriMesh& mesh, const SphericalFieldd& init,
                       const TrustRegionConfig& config = {},
                       const LandmarkTerm& landmarks = {},
                       const Rotation3d& frame = Rotation3d::Identity());

}  // namespace sphconf

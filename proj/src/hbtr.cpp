#include "sphconf/hbtr.hpp"

#include "sphconf/postprocess.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace sphconf
{

void TrustRegionConfig::validate() const
{
    if (!(tolerance > 0.0)) throw InputError("trust region: tolerance must be positive");
    if (max_iterations < 1) throw InputError("trust region: max iterations must be >= 1");
    if (!(radius0 > 0.0 && radius0 <= radius_max))
        throw InputError("trust region: need 0 < initial radius <= max radius");
    if (!(rho_low > 0.0 && rho_low < rho_high && rho_high < 1.0))
        throw InputError("trust region: need 0 < rho_low < rho_high < 1");
    if (!(shrink > 0.0 && shrink < 1.0 && grow > 1.0))
        throw InputError("trust region: need shrink in (0, 1) and grow > 1");
    if (max_rejections < 1) throw InputError("trust region: max rejections must be >= 1");
}

const char* to_string(StepType type) noexcept
{
    switch (type) {
    case StepType::Initial: return "initial";
    case StepType::Interior: return "interior";
    case StepType::Boundary: return "boundary";
    }
    return "unknown";
}

std::vector<double> SolveTrace::accepted_energies() const
{
    std::vector<double> out;
    for (const auto& e : entries)
        if (e.accepted) out.push_back(e.energy);
    return out;
}

std::vector<double> SolveTrace::accepted_deltas() const
{
    std::vector<double> out;
    for (const auto& e : entries)
        if (e.accepted && e.step != StepType::Initial) out.push_back(e.delta);
    return out;
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace)
{
    out << "iter,energy,grad_inf,delta,radius,step_type,accepted\n";
    char buf[256];
    for (const auto& e : trace.entries) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%s,%d\n", e.iteration, e.energy,
                      e.grad_inf, e.delta, e.radius, to_string(e.step), e.accepted ? 1 : 0);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Pinned Newton
// ---------------------------------------------------------------------------

struct NewtonSolver::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    std::uint64_t tag = 0;
    bool analyzed = false;
};

NewtonSolver::NewtonSolver() : impl_(std::make_unique<Impl>()) {}
NewtonSolver::~NewtonSolver() = default;
NewtonSolver::NewtonSolver(NewtonSolver&&) noexcept = default;
NewtonSolver& NewtonSolver::operator=(NewtonSolver&&) noexcept = default;

NewtonStep NewtonSolver::solve(const SymSparseOperator& H, const Eigen::VectorXd& g, int pin)
{
    NewtonStep step;
    step.s = Eigen::VectorXd::Zero(g.size());
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm == 0.0) {
        step.available = true;
        return step;
    }

    Eigen::SparseMatrix<double> A = H.matrix;
    for (Eigen::Index col = 0; col < A.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
            if (it.row() == pin || it.col() == pin)
                it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
        }
    }
    if (!impl_->analyzed || impl_->tag != H.pattern_tag) {
        impl_->lu.analyzePattern(A);
        impl_->tag = H.pattern_tag;
        impl_->analyzed = true;
    }
    impl_->lu.factorize(A);
    if (impl_->lu.info() != Eigen::Success) return step;

    Eigen::VectorXd rhs = -g;
    if (pin >= 0) rhs[pin] = 0.0;
    Eigen::VectorXd s = impl_->lu.solve(rhs);
    if (impl_->lu.info() != Eigen::Success || !s.allFinite()) return step;
    if (pin >= 0) s[pin] = 0.0;
    step.relative_residual = (H.matrix * s + g).lpNorm<Eigen::Infinity>() / gnorm;
    step.s = std::move(s);
    step.available = step.relative_residual <= 1e-6;
    return step;
}

NewtonStep newton_direction(const SymSparseOperator& H, const Eigen::VectorXd& g, int pin)
{
    NewtonSolver solver;
    return solver.solve(H, g, pin);
}

int select_pin(const SphericalFieldd& field)
{
    Eigen::Index pin = 0;
    field.phi.array().sin().abs().maxCoeff(&pin);
    return static_cast<int>(pin);
}

// ---------------------------------------------------------------------------
// Subspace trust region
// ---------------------------------------------------------------------------

namespace
{

double model_value(const Eigen::MatrixXd& B, const Eigen::VectorXd& b, const Eigen::VectorXd& y)
{
    return b.dot(y) + 0.5 * y.dot(B * y);
}

}  // namespace

ReducedStep solve_reduced_tr(const Eigen::MatrixXd& B, const Eigen::VectorXd& b, double radius)
{
    const Eigen::Index k = b.size();
    ReducedStep out;
    out.y = Eigen::VectorXd::Zero(k);
    if (k == 0) return out;

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()));
    const Eigen::VectorXd lam = es.eigenvalues();
    const Eigen::MatrixXd V = es.eigenvectors();
    const Eigen::VectorXd c = V.transpose() * b;

    if (lam[0] > 0.0) {
        const Eigen::VectorXd y = -V * c.cwiseQuotient(lam);
        if (y.norm() <= radius) {
            out.y = y;
            out.interior = true;
            return out;
        }
    }

    const double cnorm = c.norm();
    const double sigma_lo = std::max(0.0, -lam[0]);
    auto y_at = [&](double sigma, Eigen::Index skip) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < k; ++i)
            if (i != skip) z[i] = -c[i] / (lam[i] + sigma);
        return z;
    };

    // Hard case: no gradient component along the lowest curvature direction.
    if (lam[0] <= 0.0 && std::abs(c[0]) <= 1e-14 * std::max(cnorm, 1.0)) {
        Eigen::VectorXd z(k);
        bool finite = true;
        for (Eigen::Index i = 1; i < k; ++i) {
            const double den = lam[i] + sigma_lo;
            if (den <= 0.0) finite = false;
            z[i] = finite ? -c[i] / den : 0.0;
        }
        z[0] = 0.0;
        if (finite && z.norm() <= radius) {
            const double t = std::sqrt(std::max(0.0, radius * radius - z.squaredNorm()));
            z[0] = c[0] > 0.0 ? -t : t;
            out.y = V * z;
            return out;
        }
    }

    // Boundary: find sigma > sigma_lo with |y(sigma)| = radius.
    double lo = sigma_lo;
    double hi = sigma_lo + cnorm / radius + 1e-300;
    while (y_at(hi, -1).norm() > radius) hi = 2.0 * hi + 1e-300;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (y_at(mid, -1).norm() > radius ? lo : hi) = mid;
    }
    Eigen::VectorXd z = y_at(hi, -1);
    const double zn = z.norm();
    if (zn > 0.0) z *= radius / zn;
    out.y = V * z;
    return out;
}

SubspaceStep tr_subspace_step(const SparseRowMatrix& H, const Eigen::VectorXd& g,
                              const Eigen::VectorXd& s, double radius)
{
    const Eigen::Index N = g.size();
    SubspaceStep step;
    step.d = Eigen::VectorXd::Zero(N);

    std::vector<Eigen::VectorXd> basis;
    const bool have_s = s.size() == N && s.allFinite() && s.norm() > 0.0;
    if (have_s) basis.push_back(s / s.norm());
    const double gn = g.norm();
    if (gn > 0.0) {
        Eigen::VectorXd w = -g;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& v : basis) w -= v.dot(w) * v;
        if (w.norm() > 1e-8 * gn) basis.push_back(w / w.norm());
    }
    if (basis.empty()) return step;

    const auto k = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd Q(N, k);
    for (Eigen::Index i = 0; i < k; ++i) Q.col(i) = basis[i];
    const Eigen::MatrixXd HQ = H * Q;
    Eigen::MatrixXd B = Q.transpose() * HQ;
    B = 0.5 * (B + B.transpose()).eval();
    const Eigen::VectorXd b = Q.transpose() * g;

    const ReducedStep red = solve_reduced_tr(B, b, radius);
    Eigen::VectorXd y = red.y;
    double m = model_value(B, b, y);
    bool interior = red.interior;

    // Safeguards: Cauchy point along -g and the clipped Newton point.
    const double bn = b.norm();
    if (bn > 0.0) {
        const Eigen::VectorXd dir = -b / bn;
        const double curv = dir.dot(B * dir);
        double t = radius;
        if (curv > 0.0) t = std::min(bn / curv, radius);
        const Eigen::VectorXd yc = t * dir;
        const double mc = model_value(B, b, yc);
        if (mc < m) {
            y = yc;
            m = mc;
            interior = t < radius;
        }
    }
    if (have_s) {
        const Eigen::VectorXd sr = Q.transpose() * s;
        const double scale = std::min(1.0, radius / sr.norm());
        const Eigen::VectorXd yn = scale * sr;
        const double mn = model_value(B, b, yn);
        if (mn < m) {
            y = yn;
            m = mn;
            interior = scale == 1.0;
        }
    }

    step.d = Q * y;
    step.model = m;
    step.dimension = static_cast<int>(k);
    step.hit_boundary = step.d.norm() >= (1.0 - 1e-8) * radius;
    step.interior = interior && !step.hit_boundary;
    return step;
}

double radius_update(double rho, double radius, bool hit_boundary, const TrustRegionConfig& config)
{
    if (!(rho >= config.rho_low)) return config.shrink * radius;
    if (rho > config.rho_high && hit_boundary) return std::min(config.grow * radius, config.radius_max);
    return radius;
}

// ---------------------------------------------------------------------------
// Solver loop
// ---------------------------------------------------------------------------

namespace
{

struct Objective {
    const TriMesh& mesh;
    SymSparseOperator L;
    const LandmarkTerm& term;
    bool landmarks = false;
    LandmarkSet local_lm;

    Objective(const TriMesh& m, const LandmarkTerm& t)
        : mesh(m), L(cotangent_laplacian(m)), term(t), landmarks(t.landmarks != nullptr)
    {
    }

    void set_frame(const Rotation3d& F)
    {
        if (!landmarks) return;
        local_lm = *term.landmarks;
        local_lm.targets = term.landmarks->targets * F.transpose();
    }

    struct Point {
        SphericalFieldd field;
        EnergyState state;
        double conformal = 0.0;
        double reg = 0.0;
        double value = 0.0;
    };

    Point evaluate(const SphericalFieldd& field) const
    {
        Point p{field, build_energy_state(mesh, L, field)};
        p.conformal = p.state.energy;
        if (landmarks) p.reg = registration_loss(p.state.f, local_lm);
        p.value = p.conformal + term.lambda * p.reg;
        if (!std::isfinite(p.value)) throw SolverError("non-finite objective value");
        return p;
    }

    Eigen::VectorXd gradient(const Point& p, SparseRowMatrix* hess_extra) const
    {
        Eigen::VectorXd g = energy_gradient(p.state);
        if (landmarks) {
            RegDerivatives rd = reg_gradient_hessian(p.state, local_lm, term.lambda);
            g += rd.gradient;
            if (hess_extra) *hess_extra = std::move(rd.hessian);
        }
        if (!g.allFinite()) throw SolverError("non-finite gradient");
        return g;
    }

    // Magnitude below which energy differences are indistinguishable from
    // rounding in the per-edge sum.
    double resolution(const Point& p) const
    {
        double scale = 0.0;
        const SparseRowMatrix& Lf = p.state.L_f.matrix;
        for (int i = 0; i < L.matrix.outerSize(); ++i) {
            SparseRowMatrix::InnerIterator a(L.matrix, i), b(Lf, i);
            for (; a; ++a, ++b) {
                if (a.col() <= i) continue;
                scale += (std::abs(a.value()) + std::abs(b.value())) *
                         (p.state.f.row(i) - p.state.f.row(a.col())).squaredNorm();
            }
        }
        return 64.0 * std::numeric_limits<double>::epsilon() *
               (scale + std::abs(term.lambda * p.reg) + std::abs(p.value));
    }
};

}  // namespace

SolveResult hbtr_solve(const TriMesh& mesh, const SphericalFieldd& init,
                       const TrustRegionConfig& config, const LandmarkTerm& term,
                       const Rotation3d& frame)
{
    config.validate();
    if (init.size() != mesh.num_vertices()) throw InputError("initial field size does not match mesh");
    if (term.landmarks) {
        validate_landmarks(*term.landmarks, mesh.num_vertices());
        if (!(term.lambda >= 0.0) || !std::isfinite(term.lambda))
            throw InputError("registration weight must be finite and >= 0");
    }

    Objective obj(mesh, term);
    Rotation3d F = frame;

    const PoleSafeResult safe0 = rotate_away_from_poles(init, config.pole_eps);
    SphericalFieldd field = safe0.field;
    if (safe0.rotated) F = safe0.rotation.transpose() * F;

    auto landmark_align = [&](const SphericalFieldd& fld) {
        if (!obj.landmarks || !term.rotate) return;
        const RotationFit<double> fit = landmark_fit(to_cartesian(fld) * F, *term.landmarks);
        if (!fit.ambiguous) F = F * fit.rotation;
    };
    landmark_align(field);
    obj.set_frame(F);

    SolveResult result;
    Objective::Point cur = obj.evaluate(field);
    SparseRowMatrix reg_hess;
    Eigen::VectorXd g = obj.gradient(cur, &reg_hess);
    double radius = config.radius0;
    result.trace.entries.push_back({0, cur.value, g.lpNorm<Eigen::Infinity>(),
                                    std::numeric_limits<double>::quiet_NaN(), radius,
                                    StepType::Initial, true});

    NewtonSolver newton;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    int k = 0;
    double delta = nan;
    bool converged = false;
    std::string message;

    while (k < config.max_iterations) {
        if (g.lpNorm<Eigen::Infinity>() == 0.0) {
            converged = true;
            delta = 0.0;
            message = "gradient vanished";
            break;
        }
        SymSparseOperator H = energy_hessian(mesh, obj.L, cur.state);
        if (obj.landmarks && reg_hess.nonZeros() > 0) {
            H.matrix = H.matrix + reg_hess;
            H.pattern_tag = pattern_hash(H.matrix);
        }
        // The landmark term removes the rotational null direction, so the
        // full system is solved first.
        NewtonStep ns;
        if (obj.landmarks && term.lambda > 0.0) ns = newton.solve(H, g, -1);
        if (!ns.available) ns = newton.solve(H, g, select_pin(cur.field));
        const Eigen::VectorXd s = ns.available ? ns.s : Eigen::VectorXd();
        const double resolution = obj.resolution(cur);

        int rejections = 0;
        bool accepted = false;
        bool stop = false;
        while (!accepted) {
            const SubspaceStep step = tr_subspace_step(H.matrix, g, s, radius);
            const double pred = -step.model;
            const StepType type = step.interior ? StepType::Interior : StepType::Boundary;
            const SphericalFieldd trial_field =
                SphericalFieldd::from_stacked(cur.field.stacked() + step.d);

            double trial_value = std::numeric_limits<double>::infinity();
            std::optional<Objective::Point> trial;
            try {
                trial = obj.evaluate(trial_field);
                trial_value = trial->value;
            } catch (const DegenerateImageError&) {
            }
            const double ared = cur.value - trial_value;
            const double rho = pred > 0.0 ? ared / pred : -std::numeric_limits<double>::infinity();
            accepted = trial && trial_value < cur.value;
            const bool hit = step.hit_boundary;
            radius = radius_update(rho, radius, hit, config);

            if (accepted) {
                delta = alignment_error(cur.state.f, trial->state.f);
                cur = std::move(*trial);
                ++k;
                // Keep the iterate away from the poles, then refit the frame.
                const PoleSafeResult safe = rotate_away_from_poles(cur.field, config.pole_eps);
                bool refresh = false;
                if (safe.rotated) {
                    F = safe.rotation.transpose() * F;
                    cur.field = safe.field;
                    refresh = true;
                }
                if (obj.landmarks && term.rotate) {
                    landmark_align(cur.field);
                    refresh = true;
                }
                if (refresh) {
                    obj.set_frame(F);
                    cur = obj.evaluate(cur.field);
                }
                g = obj.gradient(cur, &reg_hess);
                result.trace.entries.push_back({k, cur.value, g.lpNorm<Eigen::Infinity>(), delta,
                                                radius, type, true});
                break;
            }

            result.trace.entries.push_back({k + 1, trial_value, nan, nan, radius, type, false});
            // A step too small to register in the energy, and already within
            // tolerance in the rotation-aligned metric, ends the solve.
            if (pred <= resolution) {
                const double trial_delta =
                    trial ? alignment_error(cur.state.f, trial->state.f) : nan;
                if (trial_delta <= config.tolerance) {
                    converged = true;
                    delta = trial_delta;
                    message = "converged at energy resolution";
                    stop = true;
                    break;
                }
            }
            if (++rejections >= config.max_rejections) {
                message = "stagnated: too many consecutive rejected steps";
                stop = true;
                break;
            }
        }
        if (stop) break;
        if (delta <= config.tolerance) {
            converged = true;
            message = "converged";
            break;
        }
    }
    if (!converged && message.empty()) message = "maximum iterations reached";

    result.field = cur.field;
    result.frame = F;
    result.f = cur.state.f * F;
    result.converged = converged;
    result.iterations = k;
    result.energy = cur.value;
    result.conformal_energy = cur.conformal;
    result.registration_loss = cur.reg;
    result.grad_inf = g.lpNorm<Eigen::Infinity>();
    result.delta = delta;
    result.message = message;
    result.folds = static_cast<int>(detect_foldings(mesh, result.f).count());
    try {
        result.distortion = full_report(mesh, result.f);
    } catch (const DegenerateImageError&) {
    }
    return result;
}

}  // namespace sphconf

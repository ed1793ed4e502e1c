#include "sphconf/landmarks.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sphconf
{

void validate_landmarks(const LandmarkSet& lm, int num_vertices)
{
    if (lm.size() < 3) throw InputError("landmarks: at least 3 landmarks are required");
    if (lm.targets.rows() != static_cast<Eigen::Index>(lm.size()))
        throw InputError("landmarks: target count does not match index count");
    std::set<int> seen;
    for (std::size_t a = 0; a < lm.size(); ++a) {
        const int i = lm.indices[a];
        if (i < 0 || i >= num_vertices) {
            std::ostringstream msg;
            msg << "landmarks: vertex index " << i << " out of range";
            throw InputError(msg.str());
        }
        if (!seen.insert(i).second) {
            std::ostringstream msg;
            msg << "landmarks: vertex index " << i << " listed twice";
            throw InputError(msg.str());
        }
        const double r = lm.targets.row(static_cast<Eigen::Index>(a)).norm();
        if (!(std::abs(r - 1.0) <= 1e-9)) {
            std::ostringstream msg;
            msg << "landmarks: target " << a << " is not a unit vector (norm " << r << ")";
            throw InputError(msg.str());
        }
    }
}

double registration_loss(const Points3d& f, const LandmarkSet& lm)
{
    if (lm.size() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t a = 0; a < lm.size(); ++a)
        sum += (f.row(lm.indices[a]) - lm.targets.row(static_cast<Eigen::Index>(a))).squaredNorm();
    return sum / (2.0 * static_cast<double>(lm.size()));
}

RegDerivatives reg_gradient_hessian(const EnergyState& state, const LandmarkSet& lm, double lambda)
{
    const Eigen::Index n = state.size();
    RegDerivatives out;
    out.gradient = Eigen::VectorXd::Zero(2 * n);
    out.hessian.resize(2 * n, 2 * n);
    if (lm.size() == 0 || lambda == 0.0) return out;

    const double w = lambda / static_cast<double>(lm.size());
    const auto& c = state.cache;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * lm.size());
    for (std::size_t a = 0; a < lm.size(); ++a) {
        const int i = lm.indices[a];
        const Eigen::Vector3d res =
            state.f.row(i).transpose() - lm.targets.row(static_cast<Eigen::Index>(a)).transpose();
        Eigen::Matrix<double, 3, 2> J;
        J.col(0) = c.dtheta(i);
        J.col(1) = c.dphi(i);
        const Eigen::Vector2d g = w * J.transpose() * res;
        out.gradient[i] += g[0];
        out.gradient[n + i] += g[1];

        Eigen::Matrix2d H = J.transpose() * J;
        H(0, 0) += -c.x[i] * res[0] - c.y[i] * res[1];
        H(0, 1) += -c.v[i] * res[0] + c.u[i] * res[1];
        H(1, 0) = H(0, 1);
        H(1, 1) += -c.x[i] * res[0] - c.y[i] * res[1] - c.z[i] * res[2];
        H *= w;
        trip.emplace_back(i, i, H(0, 0));
        trip.emplace_back(i, n + i, H(0, 1));
        trip.emplace_back(n + i, i, H(1, 0));
        trip.emplace_back(n + i, n + i, H(1, 1));
    }
    out.hessian.setFromTriplets(trip.begin(), trip.end());
    return out;
}

RotationFit<double> landmark_fit(const Points3d& f, const LandmarkSet& lm)
{
    Points3d A(static_cast<Eigen::Index>(lm.size()), 3);
    for (std::size_t a = 0; a < lm.size(); ++a) A.row(static_cast<Eigen::Index>(a)) = f.row(lm.indices[a]);
    return optimal_rotation(A, lm.targets);
}

Points3d landmark_rotation(const Points3d& f, const LandmarkSet& lm, bool* skipped)
{
    const RotationFit<double> fit = landmark_fit(f, lm);
    if (skipped) *skipped = fit.ambiguous;
    if (fit.ambiguous) return f;
    return f * fit.rotation;
}

namespace
{

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_row(const std::string& source, std::size_t line, const std::string& what)
{
    std::ostringstream msg;
    msg << "landmarks: " << source << " line " << line << ": " << what;
    throw InputError(msg.str());
}

}  // namespace

LandmarkSpec parse_landmarks(const std::string& text, const std::string& source)
{
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    LandmarkSpec spec;
    std::vector<Eigen::Vector3d> points;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(t);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        try {
            std::size_t used = 0;
            auto as_int = [&](const std::string& s) {
                const int v = std::stoi(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            };
            auto as_double = [&](const std::string& s) {
                const double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            };
            if (fields.size() == 2) {
                spec.moving.push_back(as_int(fields[0]));
                spec.fixed.push_back(as_int(fields[1]));
                points.emplace_back(0.0, 0.0, 0.0);
            } else if (fields.size() == 4) {
                spec.moving.push_back(as_int(fields[0]));
                spec.fixed.push_back(-1);
                const Eigen::Vector3d p(as_double(fields[1]), as_double(fields[2]),
                                        as_double(fields[3]));
                if (!p.allFinite() || std::abs(p.norm() - 1.0) > 1e-6)
                    bad_row(source, lineno, "target point is not on the unit sphere");
                points.push_back(p.normalized());
            } else {
                bad_row(source, lineno, "expected 2 or 4 comma-separated fields");
            }
        } catch (const std::logic_error&) {
            bad_row(source, lineno, "malformed number");
        }
        if (spec.moving.back() < 0 || (fields.size() == 2 && spec.fixed.back() < 0))
            bad_row(source, lineno, "negative index");
    }
    spec.points.resize(static_cast<Eigen::Index>(points.size()), 3);
    for (std::size_t a = 0; a < points.size(); ++a)
        spec.points.row(static_cast<Eigen::Index>(a)) = points[a].transpose();
    return spec;
}

LandmarkSpec read_landmarks(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open landmark file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_landmarks(buf.str(), path.string());
}

LandmarkSet resolve_landmarks(const LandmarkSpec& spec, const Points3d& fixed_sphere)
{
    LandmarkSet lm;
    lm.indices = spec.moving;
    lm.groups.assign(spec.size(), -1);
    lm.targets.resize(static_cast<Eigen::Index>(spec.size()), 3);
    for (std::size_t a = 0; a < spec.size(); ++a) {
        const auto r = static_cast<Eigen::Index>(a);
        if (spec.fixed[a] >= 0) {
            if (spec.fixed[a] >= fixed_sphere.rows()) {
                std::ostringstream msg;
                msg << "landmarks: fixed vertex index " << spec.fixed[a] << " out of range";
                throw InputError(msg.str());
            }
            lm.targets.row(r) = fixed_sphere.row(spec.fixed[a]).normalized();
        } else {
            lm.targets.row(r) = spec.points.row(r);
        }
    }
    return lm;
}

}  // namespace sphconf

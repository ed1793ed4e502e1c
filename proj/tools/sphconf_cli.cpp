#include "sphconf/hbtr.hpp"
#include "sphconf/initializer.hpp"
#include "sphconf/landmarks.hpp"
#include "sphconf/metrics.hpp"
#include "sphconf/postprocess.hpp"
#include "sphconf/registration.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace sphconf;
using json = nlohmann::ordered_json;

namespace
{

constexpr int kConverged = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

struct Options {
    std::string mesh;
    std::string second;
    std::string landmarks;
    std::string out;
    std::string report;
    std::string trace;
    double tol = 1e-9;
    int max_iter = 500;
    double lambda = 5.0;
    bool fix_folds = false;
    bool per_vertex = false;
    std::vector<double> semiaxes{1.1, 1.0, 0.9};
    int level = 3;
    std::vector<int> levels{2, 3, 4};
};

TrustRegionConfig solver_config(const Options& o)
{
    TrustRegionConfig c;
    c.tolerance = o.tol;
    c.max_iterations = o.max_iter;
    c.validate();
    return c;
}

Eigen::Vector3d semiaxes(const Options& o)
{
    return {o.semiaxes[0], o.semiaxes[1], o.semiaxes[2]};
}

std::string default_path(const std::string& input, const std::string& suffix)
{
    return fs::path(input).stem().string() + suffix;
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

void write_trace(const std::string& path, const SolveTrace& trace)
{
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    write_trace_csv(out, trace);
}

Points3d load_sphere(const std::string& path, const TriMesh& mesh)
{
    const RawMesh raw = read_mesh_file(path);
    if (raw.positions.rows() != mesh.num_vertices())
        throw InputError("sphere " + path + " has " + std::to_string(raw.positions.rows()) +
                         " vertices, mesh has " + std::to_string(mesh.num_vertices()));
    return raw.positions;
}

void add_solve(json& j, const SolveResult& r)
{
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["grad_inf"] = r.grad_inf;
    j["delta"] = r.delta;
    j["message"] = r.message;
}

int cmd_param(const Options& o)
{
    const TrustRegionConfig config = solver_config(o);
    const TriMesh mesh = load_mesh(o.mesh);
    const InitResult init = initial_map(mesh);
    const SolveResult res = hbtr_solve(mesh, init.field, config);
    write_trace(o.trace, res.trace);

    Points3d f = res.f;
    int repaired_rounds = 0;
    if (o.fix_folds && res.folds > 0) {
        const RepairResult fix = mvc_fix(mesh, f);
        f = fix.f;
        repaired_rounds = fix.rounds;
    }
    save_obj(o.out.empty() ? default_path(o.mesh, "_sphere.obj") : o.out, f, mesh.faces());

    const DistortionReport report = full_report(mesh, f);
    json j = json::parse(report_json(report, o.per_vertex));
    add_solve(j, res);
    if (o.fix_folds) j["repair_rounds"] = repaired_rounds;
    write_text(o.report, j.dump(2) + "\n");

    if (!res.converged) {
        std::fprintf(stderr, "not converged: %s after %d iterations\n", res.message.c_str(),
                     res.iterations);
        return kNotConverged;
    }
    return kConverged;
}

int cmd_register(const Options& o)
{
    RegConfig config;
    config.lambda = o.lambda;
    config.solver = solver_config(o);
    config.validate();
    const TriMesh fixed = load_mesh(o.mesh);
    const TriMesh moving = load_mesh(o.second);
    if (o.landmarks.empty()) throw InputError("register: --landmarks is required");
    const LandmarkSpec spec = read_landmarks(o.landmarks);

    const RegistrationResult reg = hbtr_register(fixed, moving, spec, config);
    write_trace(o.trace, reg.moving.trace);

    const std::string out = o.out.empty() ? default_path(o.second, "_registered.obj") : o.out;
    save_obj(out, reg.moving.f, moving.faces());
    const std::string pullback = fs::path(out).replace_extension().string() + "_pullback.obj";
    save_obj(pullback, reg.pullback.positions, moving.faces());

    json j;
    j["energy"] = reg.moving.conformal_energy;
    j["registration_loss"] = reg.moving.registration_loss;
    j["lambda"] = reg.lambda;
    j["objective"] = reg.moving.energy;
    j["folds"] = reg.moving.folds;
    add_solve(j, reg.moving);
    j["fixed_energy"] = reg.fixed.energy;
    j["fixed_converged"] = reg.fixed.converged;
    j["landmarks"] = reg.landmarks.size();
    j["pullback_fallbacks"] = reg.pullback.fallbacks;
    j["sphere"] = out;
    j["pullback"] = pullback;
    write_text(o.report, j.dump(2) + "\n");

    if (!reg.fixed.converged || !reg.moving.converged) {
        const SolveResult& bad = reg.fixed.converged ? reg.moving : reg.fixed;
        std::fprintf(stderr, "not converged: %s solve, %s after %d iterations\n",
                     reg.fixed.converged ? "moving" : "fixed", bad.message.c_str(), bad.iterations);
        return kNotConverged;
    }
    return kConverged;
}

int cmd_gen(const Options& o)
{
    const TriMesh mesh = gen_ellipsoid(semiaxes(o), o.level);
    const std::string out =
        o.out.empty() ? "ellipsoid_L" + std::to_string(o.level) + ".off" : o.out;
    if (fs::path(out).extension() == ".obj")
        save_obj(out, mesh.positions(), mesh.faces());
    else
        save_off(out, mesh.positions(), mesh.faces());
    return kConverged;
}

int cmd_metrics(const Options& o)
{
    const TriMesh mesh = load_mesh(o.mesh);
    const Points3d f = load_sphere(o.second, mesh);
    const DistortionReport report = full_report(mesh, f);
    write_text(o.report.empty() ? o.out : o.report, report_json(report, o.per_vertex) + "\n");
    return kConverged;
}

int cmd_convergence(const Options& o)
{
    InitConfig init;
    const std::vector<ConvergenceRow> rows =
        convergence_study(semiaxes(o), o.levels, solver_config(o), init);
    std::ostringstream csv;
    write_convergence_csv(csv, rows);
    write_text(o.out, csv.str());
    for (const auto& r : rows) {
        if (!r.error.empty() || !r.converged) {
            std::fprintf(stderr, "not converged: level %d%s%s\n", r.level,
                         r.error.empty() ? "" : ": ", r.error.c_str());
            return kNotConverged;
        }
    }
    return kConverged;
}

int cmd_repair(const Options& o)
{
    const TriMesh mesh = load_mesh(o.mesh);
    const Points3d f = load_sphere(o.second, mesh);
    const std::size_t before = detect_foldings(mesh, f).count();
    const RepairResult fix = mvc_fix(mesh, f);
    save_obj(o.out.empty() ? default_path(o.second, "_repaired.obj") : o.out, fix.f, mesh.faces());
    std::printf("folds %zu -> %zu (rounds %d, vertices moved %zu)\n", before,
                fix.remaining.count(), fix.rounds, fix.touched.size());
    if (!fix.success) {
        std::fprintf(stderr, "repair incomplete: %zu folds remain\n", fix.remaining.count());
        return kNotConverged;
    }
    return kConverged;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spherical conformal parameterization of genus-0 triangle meshes"};
    app.require_subcommand(1);
    Options o;

    auto solver_flags = [&](CLI::App* cmd) {
        cmd->add_option("--tol", o.tol, "Stopping tolerance on the alignment error")->capture_default_str();
        cmd->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
        cmd->add_option("--trace", o.trace, "Iteration trace CSV");
    };

    CLI::App* param = app.add_subcommand("param", "Map a mesh to the unit sphere");
    param->add_option("mesh", o.mesh, "Input mesh (OFF/OBJ)")->required();
    solver_flags(param);
    param->add_flag("--fix-folds", o.fix_folds, "Repair folded triangles after the solve");
    param->add_option("--out", o.out, "Sphere OBJ");
    param->add_option("--report", o.report, "JSON report (default stdout)");
    param->add_flag("--per-vertex", o.per_vertex, "Include per-vertex arrays in the report");

    CLI::App* reg = app.add_subcommand("register", "Landmark-driven registration");
    reg->add_option("fixed", o.mesh, "Fixed mesh")->required();
    reg->add_option("moving", o.second, "Moving mesh")->required();
    reg->add_option("--landmarks", o.landmarks, "Landmark CSV")->required();
    reg->add_option("--lambda", o.lambda, "Landmark weight")->capture_default_str();
    solver_flags(reg);
    reg->add_option("--out", o.out, "Registered sphere OBJ");
    reg->add_option("--report", o.report, "JSON report (default stdout)");

    CLI::App* gen = app.add_subcommand("gen", "Generate an ellipsoid mesh");
    gen->add_option("--semiaxes", o.semiaxes, "a,b,c")->delimiter(',')->expected(3);
    gen->add_option("--level", o.level, "Subdivision level")->capture_default_str();
    gen->add_option("--out", o.out, "Output OFF/OBJ");

    CLI::App* metrics = app.add_subcommand("metrics", "Distortion report for a mesh/sphere pair");
    metrics->add_option("mesh", o.mesh, "Source mesh")->required();
    metrics->add_option("sphere", o.second, "Sphere mesh with the same vertex order")->required();
    metrics->add_option("--report,--out", o.report, "JSON report (default stdout)");
    metrics->add_flag("--per-vertex", o.per_vertex, "Include per-vertex arrays");

    CLI::App* conv = app.add_subcommand("convergence", "Subdivision convergence study");
    conv->add_option("--semiaxes", o.semiaxes, "a,b,c")->delimiter(',')->expected(3);
    conv->add_option("--levels", o.levels, "k1,k2,...")->delimiter(',');
    solver_flags(conv);
    conv->add_option("--out", o.out, "CSV table (default stdout)");

    CLI::App* repair = app.add_subcommand("repair", "Remove folded triangles from a sphere map");
    repair->add_option("mesh", o.mesh, "Source mesh")->required();
    repair->add_option("sphere", o.second, "Sphere mesh with the same vertex order")->required();
    repair->add_option("--out", o.out, "Repaired sphere OBJ");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (char& ch : msg)
            if (ch == '\n') ch = ' ';
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return kInputError;
    }

    try {
        if (*param) return cmd_param(o);
        if (*reg) return cmd_register(o);
        if (*gen) return cmd_gen(o);
        if (*metrics) return cmd_metrics(o);
        if (*conv) return cmd_convergence(o);
        if (*repair) return cmd_repair(o);
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kNotConverged;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    }
    return kInputError;
}

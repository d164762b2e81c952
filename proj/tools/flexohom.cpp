#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <flexohom/config.hpp>
#include <flexohom/io.hpp>
#include <flexohom/sweep.hpp>
#include <flexohom/two_scale.hpp>
#include <flexohom/verification.hpp>

namespace fs = std::filesystem;
using namespace flexohom;

namespace {

struct Globals {
    std::string config;
    std::string out;
    int threads = 0;
    std::optional<unsigned> seed;
};

RunConfig load(const Globals& g, bool required = true) {
    RunConfig c;
    if (!g.config.empty())
        c = load_config(g.config);
    else if (required)
        throw ConfigError("this command needs --config");
    if (!g.out.empty()) c.outputDirectory = g.out;
    if (g.threads > 0) {
        c.threads = g.threads;
        c.rve.assembly.threads = g.threads;
    }
    return c;
}

std::string out_path(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.outputDirectory);
    return (fs::path(c.outputDirectory) / name).string();
}

bool wants_tecplot(FieldFormat f) { return f == FieldFormat::Tecplot || f == FieldFormat::Both; }
bool wants_csv(FieldFormat f) { return f == FieldFormat::Csv || f == FieldFormat::Both; }

void write_zones(const RunConfig& c, const std::vector<FieldZone>& zones, const std::vector<std::string>& csvNames,
                 const std::string& tecplotName) {
    if (wants_tecplot(c.fields)) {
        const auto p = out_path(c, tecplotName);
        write_tecplot(zones, p);
        std::cout << "wrote " << p << '\n';
    }
    if (wants_csv(c.fields))
        for (std::size_t i = 0; i < zones.size(); ++i) {
            const auto p = out_path(c, csvNames[i]);
            write_fields_csv(zones[i], p);
            std::cout << "wrote " << p << '\n';
        }
}

Eigen::VectorXd reference_of(const RunConfig& c) {
    const auto it = c.rve.materials.find(c.rve.geometry.matrixMaterial);
    if (it == c.rve.materials.end())
        throw ConfigError("no material defined for region '" + c.rve.geometry.matrixMaterial + "'");
    return reference_coefficients(build_material_matrices(it->second));
}

int cmd_verify(const Globals& g, const std::vector<int>& ids) {
    VerificationOptions o;
    if (g.threads > 0) o.threads = g.threads;
    const auto results = run_verification(o, ids, [](const CheckResult& r) {
        std::cout << format_result(r) << std::endl;
    });
    const auto failed = std::count_if(results.begin(), results.end(), [](const CheckResult& r) { return !r.passed; });
    std::cout << results.size() << " checks, " << results.size() - failed << " passed, " << failed << " failed\n";
    if (!g.out.empty()) {
        fs::create_directories(g.out);
        const auto p = (fs::path(g.out) / "verify.txt").string();
        std::ofstream f(p);
        for (const auto& r : results) f << format_result(r) << '\n';
        if (!f) throw Error("write to '" + p + "' failed");
    }
    return failed == 0 ? 0 : 1;
}

int cmd_homogenize(const Globals& g) {
    const RunConfig c = load(g);
    const RveProblem rve = make_rve_problem(c.rve);
    std::cout << "RVE: " << rve.mesh().num_nodes() << " nodes, " << rve.mesh().num_triangles() << " elements\n";
    const EffectiveTangents t = rve.tangents();
    std::cout << "residual " << rve.unit_residual() << ", symmetry defect " << t.symmetry_defect() << '\n';
    write_effective(t, out_path(c, "effective.csv"));
    const Eigen::VectorXd values = reported_coefficients(t);
    const Eigen::VectorXd norm = normalized_coefficients(values, reference_of(c));
    write_coefficients(values, &norm, out_path(c, "coefficients.csv"));
    for (std::size_t i = 0; i < coefficient_labels().size(); ++i)
        std::printf("  %-4s % .10e  (%.6f)\n", coefficient_labels()[i].c_str(), values[i], norm[i]);

    if (!c.macroState.isZero(0.0)) {
        const RveResult r = rve.run(MacroState::from_stacked(c.macroState));
        {
            const auto p = out_path(c, "response.csv");
            auto out = open_output(p);
            out << "component,strain,stress\n";
            const Vec11 s = r.generalized_stress();
            for (int i = 0; i < 11; ++i)
                out << generalized_stress_names()[i] << ',' << fmt17(c.macroState[i]) << ',' << fmt17(s[i]) << '\n';
            out << "energy,," << fmt17(r.microEnergy) << '\n';
            check_written(out, p);
        }
        std::cout << "Hill-Mandel gap " << RveProblem::hill_mandel_gap(r) << '\n';
        if (c.fields != FieldFormat::None)
            write_zones(c, {{"micro", rve.vertex_fields(r.solution)}}, {"fields_micro.csv"}, "fields.dat");
    }
    return 0;
}

int cmd_sweep(const Globals& g) {
    const RunConfig c = load(g);
    if (!c.sweep) throw ConfigError("sweep: section missing");
    const SweepTable t = run_sweep(c.rve, *c.sweep, [](const SweepRow& r) {
        if (r.ok)
            std::cout << "  " << r.value << ": " << r.elements << " elements, symmetry defect " << r.symmetryDefect << std::endl;
        else
            std::cout << "  " << r.value << ": failed: " << r.error << std::endl;
    });
    const auto p = out_path(c, "sweep_" + to_string(t.variable) + ".csv");
    write_sweep(t, p);
    std::cout << "wrote " << p << '\n';
    const bool anyFailed = std::any_of(t.rows.begin(), t.rows.end(), [](const SweepRow& r) { return !r.ok; });
    return anyFailed ? 1 : 0;
}

int cmd_two_scale(const Globals& g) {
    const RunConfig c = load(g);
    TwoScaleModel model;
    model.problem = tension_plate_problem(c.macro.plate);
    TangentCache cache;
    std::map<int, std::pair<std::string, std::function<RveProblem()>>> rves;
    for (const auto& [tag, name] : model.problem.mesh.regions)
        rves[tag] = {"rve", [&] { return make_rve_problem(c.rve); }};
    solve_two_scale(model, cache, rves);
    std::cout << "macro: " << model.problem.mesh.num_triangles() << " elements, residual " << model.solution.residual << '\n';

    std::vector<FieldZone> zones = {{"macro", macro_vertex_fields(model.problem, model.solution)}};
    std::vector<std::string> csv = {"fields_macro.csv"};
    const auto p = out_path(c, "localization.csv");
    auto out = open_output(p);
    out << "element,point,x1,x2";
    for (const auto& n : generalized_strain_names()) out << ',' << n;
    for (const auto& n : generalized_stress_names()) out << ',' << n;
    out << ",consistency_error,recovery_error\n";
    for (const auto& lp : c.macro.localize) {
        const LocalizationResult r = localize(model, lp.element, lp.point);
        const Vec11 s = r.macro.stacked(), st = r.rve.generalized_stress();
        out << r.element << ',' << r.point << ',' << fmt17(r.x.x()) << ',' << fmt17(r.x.y());
        for (int i = 0; i < 11; ++i) out << ',' << fmt17(s[i]);
        for (int i = 0; i < 11; ++i) out << ',' << fmt17(st[i]);
        out << ',' << fmt17(r.consistencyError) << ',' << fmt17(r.recoveryError) << '\n';
        std::cout << "  element " << r.element << " point " << r.point << ": consistency " << r.consistencyError
                  << ", recovery " << r.recoveryError << '\n';
        const std::string tag = "e" + std::to_string(r.element) + "_q" + std::to_string(r.point);
        zones.push_back({"micro element " + std::to_string(r.element) + " point " + std::to_string(r.point),
                         model.rveOfRegion.at(model.problem.mesh.regionOf[r.element])->vertex_fields(r.rve.solution)});
        csv.push_back("fields_micro_" + tag + ".csv");
    }
    check_written(out, p);
    if (c.fields != FieldFormat::None) write_zones(c, zones, csv, "fields.dat");
    return 0;
}

/// Nodes on the outer boundary, on hole edges or on region interfaces.
std::vector<bool> pinned_nodes(const Mesh& m) {
    std::map<std::pair<int, int>, std::vector<int>> edges;
    for (std::size_t e = 0; e < m.num_triangles(); ++e)
        for (int k = 0; k < 3; ++k) {
            int a = m.triangles[e][k], b = m.triangles[e][(k + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(e));
        }
    std::vector<bool> pinned(m.num_nodes(), false);
    for (const auto& [ab, tris] : edges)
        if (tris.size() == 1 || m.regionOf[tris[0]] != m.regionOf[tris[1]]) pinned[ab.first] = pinned[ab.second] = true;
    return pinned;
}

/// Random interior node moves of up to 15% of the shortest incident edge.
/// Moves that would fold or flatten a triangle are undone.
Mesh perturb(Mesh m, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto pinned = pinned_nodes(m);
    std::vector<std::vector<int>> around(m.num_nodes());
    for (std::size_t e = 0; e < m.num_triangles(); ++e)
        for (int v : m.triangles[e]) around[v].push_back(static_cast<int>(e));
    for (std::size_t n = 0; n < m.num_nodes(); ++n) {
        if (pinned[n]) continue;
        double hmin = std::numeric_limits<double>::infinity();
        for (int e : around[n])
            for (int v : m.triangles[e])
                if (v != static_cast<int>(n)) hmin = std::min(hmin, (m.nodes[v] - m.nodes[n]).norm());
        const Vec2 old = m.nodes[n];
        m.nodes[n] += 0.15 * hmin * Vec2(u(rng), u(rng));
        for (int e : around[n])
            if (m.triangle(e).signed_area() <= 0.05 * hmin * hmin) {
                m.nodes[n] = old;
                break;
            }
    }
    return m;
}

int cmd_mesh_generate(const Globals& g, std::string file) {
    const RunConfig c = load(g);
    Mesh m = build_rve_mesh(c.rve);
    if (g.seed) m = perturb(std::move(m), *g.seed);
    validate_mesh(m);
    if (file.empty()) file = out_path(c, "rve.mesh");
    write_mesh(m, file);
    std::cout << "wrote " << file << ": " << m.num_nodes() << " nodes, " << m.num_triangles() << " elements\n";
    return 0;
}

int cmd_mesh_inspect(const Globals& g, const std::string& file) {
    Mesh m = read_mesh(file);
    if (g.seed) m = perturb(std::move(m), *g.seed);
    validate_mesh(m);
    const BBox b = m.bbox();
    std::printf("nodes       %zu\n", m.num_nodes());
    std::printf("elements    %zu\n", m.num_triangles());
    std::printf("bbox        [%.17g, %.17g] x [%.17g, %.17g]\n", b.lo.x(), b.hi.x(), b.lo.y(), b.hi.y());
    std::printf("area        %.17g (porosity %.6g)\n", m.area(), 1.0 - m.area() / (b.width() * b.height()));
    const Vec2 cen = m.centroid();
    std::printf("centroid    (%.6g, %.6g)\n", cen.x(), cen.y());
    std::printf("min angle   %.4f deg\n", min_angle(m) * 180.0 / M_PI);
    for (const auto& [tag, name] : m.regions) {
        const auto count = std::count(m.regionOf.begin(), m.regionOf.end(), tag);
        std::printf("region %d    %-12s %ld elements, area %.17g\n", tag, name.c_str(), static_cast<long>(count),
                    m.region_area(tag));
    }
    try {
        const auto sets = classify_boundary(m);
        const auto pairs = pair_periodic_nodes(m, sets);
        (void)pairs;
        std::printf("periodic    yes\n");
    } catch (const Error& e) {
        std::printf("periodic    no (%s)\n", e.what());
    }
    if (!g.out.empty()) {
        fs::create_directories(g.out);
        const auto p = (fs::path(g.out) / fs::path(file).filename()).string();
        write_mesh(m, p);
        std::printf("wrote %s\n", p.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Second-order flexoelectric homogenization"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory (overrides output.directory)");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "perturb interior mesh nodes with this seed (fuzzing)");

    std::vector<int> ids;
    auto* verify = app.add_subcommand("verify", "run the element and property checks");
    verify->add_option("ids", ids, "check ids (default: all)");
    auto* homogenize = app.add_subcommand("homogenize", "effective tangents of one RVE");
    auto* sweep = app.add_subcommand("sweep", "effective coefficients over a parameter sweep");
    auto* twoScale = app.add_subcommand("two-scale", "macro tension plate with RVE localization");
    auto* mesh = app.add_subcommand("mesh", "generate or inspect meshes");
    mesh->require_subcommand(1);
    std::string meshFile;
    auto* generate = mesh->add_subcommand("generate", "mesh the RVE of the config");
    generate->add_option("file", meshFile, "output mesh file (default: <out>/rve.mesh)");
    auto* inspect = mesh->add_subcommand("inspect", "print mesh statistics");
    inspect->add_option("file", meshFile, "mesh file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    if (g.seed && !mesh->parsed()) {
        std::cerr << "error: --seed only applies to the mesh commands\n";
        return 2;
    }
    try {
        if (verify->parsed()) return cmd_verify(g, ids);
        if (homogenize->parsed()) return cmd_homogenize(g);
        if (sweep->parsed()) return cmd_sweep(g);
        if (twoScale->parsed()) return cmd_two_scale(g);
        if (generate->parsed()) return cmd_mesh_generate(g, meshFile);
        if (inspect->parsed()) return cmd_mesh_inspect(g, meshFile);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

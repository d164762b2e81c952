#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <flexohom/config.hpp>
#include <flexohom/io.hpp>
#include <flexohom/mesh_generation.hpp>
#include <flexohom/sweep.hpp>

using namespace flexohom;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "flexohom_test_cli_io";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

/// Three vertex points of one element with a random local solution.
std::vector<FieldPoint> random_element_points(unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    ElementVector ue;
    for (int i = 0; i < kElementDofs; ++i) ue[i] = d(rng);
    const BellElement el(Triangle{{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}});
    const auto mat = build_material_matrices(reference_material());
    std::vector<FieldPoint> pts;
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d bary = Eigen::Vector3d::Zero();
        bary[i] = 1.0;
        pts.push_back(element_fields(el, ue, bary, mat));
    }
    return pts;
}

RveSetup plain_setup(double h = 0.25) {
    RveSetup s;
    s.geometry.sideLength = 1.0;
    s.geometry.targetElementSize = h;
    s.materials["matrix"] = reference_material();
    return s;
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
    const auto c = parse_config_text(R"({"materials": {"matrix": {"preset": "reference"}}})");
    EXPECT_EQ(c.rve.assembly.quadratureDegree, 8);
    EXPECT_EQ(c.rve.bc, BoundaryCondition::Periodic);
    EXPECT_EQ(c.rve.solver.residualTolerance, 1e-10);
    EXPECT_EQ(c.rve.solver.pivotTolerance, 1e-14);
    EXPECT_EQ(c.rve.pairingTolerance, kDefaultPairingTolerance);
    EXPECT_EQ(c.rve.materials.at("matrix"), reference_material());
    EXPECT_FALSE(c.sweep.has_value());
    EXPECT_EQ(c.threads, 1);
}

TEST(Config, FullConfigIsRead) {
    const auto c = parse_config_text(R"({
        // comments are allowed
        "materials": {"matrix": {"preset": "reference", "l": 0.5},
                      "inclusion": {"preset": "reference", "G": 108, "lambda": 358}},
        "rve": {"sideLength": 2, "elementSize": 0.1,
                "holes": [{"shape": "triangle", "inradius": 0.3, "apexAngle": 90}],
                "inclusions": [{"shape": "rectangle", "center": [0.5, 0.5], "halfWidth": 0.1, "halfHeight": 0.2}]},
        "bc": "DBC",
        "solver": {"quadratureDegree": 6},
        "sweep": {"variable": "porosity", "values": [0, 0.1], "normalize": false},
        "homogenize": {"macroState": [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]},
        "macro": {"nx": 3, "traction": [0.2, 0], "localize": [{"element": 2, "point": 1}]},
        "output": {"directory": "x", "fields": "both"},
        "threads": 2
    })");
    EXPECT_EQ(c.rve.materials.at("matrix").l, 0.5);
    EXPECT_EQ(c.rve.materials.at("inclusion").G, 108.0);
    EXPECT_EQ(c.rve.geometry.sideLength, 2.0);
    ASSERT_EQ(c.rve.geometry.holes.size(), 1u);
    EXPECT_EQ(c.rve.geometry.holes[0].kind, ShapeKind::Triangle);
    EXPECT_NEAR(c.rve.geometry.holes[0].angle, std::numbers::pi / 2, 1e-15);
    EXPECT_EQ(c.rve.geometry.inclusions[0].size2, 0.2);
    EXPECT_EQ(c.rve.bc, BoundaryCondition::Dirichlet);
    EXPECT_EQ(c.rve.assembly.quadratureDegree, 6);
    EXPECT_EQ(c.rve.assembly.threads, 2);
    ASSERT_TRUE(c.sweep.has_value());
    EXPECT_EQ(c.sweep->variable, SweepVariable::Porosity);
    EXPECT_EQ(c.sweep->values.size(), 2u);
    EXPECT_FALSE(c.sweep->normalize);
    EXPECT_EQ(c.macroState[0], 1.0);
    EXPECT_EQ(c.macro.plate.nx, 3);
    EXPECT_EQ(c.macro.plate.traction.x(), 0.2);
    ASSERT_EQ(c.macro.localize.size(), 1u);
    EXPECT_EQ(c.macro.localize[0].element, 2);
    EXPECT_EQ(c.fields, FieldFormat::Both);
    EXPECT_EQ(c.outputDirectory, "x");
}

TEST(Config, UnknownKeysAreReportedWithTheirPath) {
    EXPECT_NE(config_error(R"({"materials": {"matrix": {"preset": "reference"}}, "rve": {"sidelength": 1}})")
                  .find("rve.sidelength"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"materials": {"matrix": {"preset": "reference", "mu": 3}}})").find("materials.matrix.mu"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"materials": {"matrix": {"preset": "reference"}},
                                "rve": {"holes": [{"radius": 0.1, "centre": [0, 0]}]}})")
                  .find("rve.holes[0].centre"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"materials": {"matrix": {"preset": "reference"}}, "verbose": true})").find("verbose"),
              std::string::npos);
}

TEST(Config, MissingRegionMaterialNamesTheRegion) {
    const auto msg = config_error(R"({"materials": {"matrix": {"preset": "reference"}},
                                      "rve": {"inclusions": [{"radius": 0.2}]}})");
    EXPECT_NE(msg.find("'inclusion'"), std::string::npos) << msg;
}

TEST(Config, RejectsBadValues) {
    EXPECT_NE(config_error(R"({"materials": {"matrix": {"preset": "reference", "l": -0.1}}})").find("intrinsic length"),
              std::string::npos);
    EXPECT_FALSE(config_error(R"({"materials": {"matrix": {"preset": "reference"}}, "bc": "XBC"})").empty());
    EXPECT_FALSE(config_error(R"({"materials": {"matrix": {"preset": "reference"}}, "solver": {"residualTolerance": 0}})").empty());
    EXPECT_FALSE(config_error(R"({"materials": {"matrix": {"preset": "reference"}}, "sweep": {"variable": "size"}})").empty());
    EXPECT_FALSE(config_error(R"({"materials": {"matrix": {"preset": "reference"}}, "threads": 0})").empty());
    EXPECT_FALSE(config_error(R"({"materials": {"matrix": {"lambda": "big"}}})").empty());
    EXPECT_FALSE(config_error(R"({"materials": )").empty());
    EXPECT_THROW(load_config(scratch("does_not_exist.json").string()), ConfigError);
}

TEST(Io, EffectiveCsvOfHomogeneousCellHoldsTheMaterialMatrix) {
    const auto mat = build_material_matrices(reference_material());
    const RveProblem p(structured_rectangle({-0.5, -0.5}, {0.5, 0.5}, 4, 4, kMatrixRegion, "matrix"),
                       {{kMatrixRegion, mat}});
    const auto t = p.tangents();
    const auto path = scratch("effective.csv");
    write_effective(t, path.string());
    const auto back = read_effective(path.string());
    EXPECT_EQ(back.Cbig, t.Cbig);  // 17 digits round-trip exactly
    EXPECT_LE((back.CsigEps() - mat.C).norm(), 1e-8 * mat.C.norm());
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "row,eps11,eps22,eps12,g111,g112,g122,g211,g212,g222,-E1,-E2");
}

TEST(Io, TecplotZoneForOneElement) {
    const auto path = scratch("one.dat");
    write_tecplot({{"micro", random_element_points(1)}}, path.string());
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0].rfind("TITLE", 0), 0u);
    EXPECT_EQ(lines[1].rfind("VARIABLES", 0), 0u);
    EXPECT_NE(lines[2].find("N=3, E=1, F=FEPOINT, ET=TRIANGLE"), std::string::npos);
    for (int i = 3; i < 6; ++i) {
        std::stringstream ss(lines[i]);
        int n = 0;
        for (double v; ss >> v;) ++n;
        EXPECT_EQ(n, static_cast<int>(field_columns().size()));
    }
    EXPECT_EQ(lines[6], "1 2 3");
}

TEST(Io, TecplotRejectsPartialTriangles) {
    auto pts = random_element_points(2);
    pts.pop_back();
    EXPECT_THROW(write_tecplot({{"bad", pts}}, scratch("bad.dat").string()), Error);
}

TEST(Io, FieldCsvRoundTripsExactly) {
    const auto pts = random_element_points(3);
    const auto path = scratch("fields.csv");
    write_fields_csv({"micro", pts}, path.string());
    const Eigen::MatrixXd M = read_fields_csv(path.string());
    ASSERT_EQ(M.rows(), 3);
    for (int i = 0; i < 3; ++i) {
        const auto row = field_row(pts[i]);
        for (std::size_t j = 0; j < row.size(); ++j) EXPECT_EQ(M(i, j), row[j]);
    }
}

TEST(Io, PolarizationColumnsEqualDMinusVacuumField) {
    const auto pts = random_element_points(4);
    const auto path = scratch("fields_p.csv");
    write_fields_csv({"micro", pts}, path.string());
    const Eigen::MatrixXd M = read_fields_csv(path.string());
    const auto col = [](const std::string& n) {
        const auto& c = field_columns();
        return static_cast<int>(std::find(c.begin(), c.end(), n) - c.begin());
    };
    for (int i = 0; i < M.rows(); ++i)
        for (int k = 0; k < 2; ++k) {
            const int P = col(k ? "P2" : "P1"), D = col(k ? "D2" : "D1"), E = col(k ? "E2" : "E1");
            EXPECT_LE(std::abs(M(i, P) - (M(i, D) - units::vacuum_permittivity * M(i, E))), 1e-14 * std::max(1.0, std::abs(M(i, D))));
        }
}

TEST(Sweep, EmptySweepWritesHeaderOnly) {
    SweepSpec spec;
    spec.variable = SweepVariable::Porosity;
    const auto t = run_sweep(plain_setup(), spec);
    const auto path = scratch("empty_sweep.csv");
    write_sweep(t, path.string());
    EXPECT_EQ(slurp(path), sweep_header(t) + "\n");
}

TEST(Sweep, ZeroPorosityNormalizesToOne) {
    SweepSpec spec;
    spec.variable = SweepVariable::Porosity;
    spec.values = {0.0};
    const auto t = run_sweep(plain_setup(), spec);
    ASSERT_EQ(t.rows.size(), 1u);
    ASSERT_TRUE(t.rows[0].ok) << t.rows[0].error;
    const auto& n = t.rows[0].normalized;
    const auto ref = reference_coefficients(build_material_matrices(reference_material()));
    for (int i = 0; i < n.size(); ++i) {
        if (ref[i] == 0.0)
            EXPECT_TRUE(std::isnan(n[i])) << coefficient_labels()[i];
        else
            EXPECT_NEAR(n[i], 1.0, 1e-6) << coefficient_labels()[i];
    }
}

TEST(Sweep, FailedRowsAreMarkedAndTheSweepContinues) {
    SweepSpec spec;
    spec.variable = SweepVariable::IntrinsicLength;
    spec.values = {-1.0, 1.0};
    std::vector<double> seen;
    const auto t = run_sweep(plain_setup(0.5), spec, [&](const SweepRow& r) { seen.push_back(r.value); });
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_FALSE(t.rows[0].ok);
    EXPECT_NE(t.rows[0].error.find("intrinsic length"), std::string::npos);
    EXPECT_TRUE(t.rows[1].ok);
    EXPECT_EQ(seen, spec.values);
    const auto line = sweep_row(t, t.rows[0]);
    EXPECT_EQ(line.rfind("-1,failed,", 0), 0u) << line;
}

TEST(Sweep, OutputIsByteIdenticalAcrossRuns) {
    SweepSpec spec;
    spec.variable = SweepVariable::Porosity;
    spec.values = {0.0, 0.1};
    auto base = plain_setup(0.3);
    const auto a = scratch("sweep_a.csv"), b = scratch("sweep_b.csv");
    write_sweep(run_sweep(base, spec), a.string());
    write_sweep(run_sweep(base, spec), b.string());
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_FALSE(slurp(a).empty());
}

TEST(Sweep, ApplyValueEditsTheRightParameter) {
    RveSetup base = plain_setup();
    base.materials["inclusion"] = reference_material();
    base.geometry.holes = {Shape::circle({0, 0}, 0.2)};
    SweepSpec spec;

    spec.variable = SweepVariable::StiffnessFactor;
    auto s = apply_sweep_value(base, spec, 0.5);
    EXPECT_EQ(s.materials.at("matrix").G, 27.0);
    EXPECT_EQ(s.materials.at("inclusion").G, 54.0);

    spec.variable = SweepVariable::FlexoFactor;
    s = apply_sweep_value(base, spec, 3.0);
    EXPECT_EQ(s.materials.at("inclusion").f1, 3.0);
    EXPECT_EQ(s.materials.at("matrix").f1, 1.0);

    spec.variable = SweepVariable::Layout;
    s = apply_sweep_value(base, spec, 2.0);
    ASSERT_EQ(s.geometry.holes.size(), 4u);
    EXPECT_NEAR(hole_porosity(s.geometry), hole_porosity(base.geometry), 1e-14);
    EXPECT_THROW(apply_sweep_value(base, spec, 1.5), ConfigError);

    spec.variable = SweepVariable::ModelSize;
    s = apply_sweep_value(base, spec, 0.25);
    EXPECT_DOUBLE_EQ(s.meshScale, 0.25);

    spec.variable = SweepVariable::HoleSize;
    s = apply_sweep_value(base, spec, 0.3);
    EXPECT_EQ(s.geometry.holes[0].size, 0.3);
}

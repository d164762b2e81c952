#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "constitutive.hpp"
#include "error.hpp"
#include "homogenization.hpp"
#include "mesh.hpp"
#include "mesh_generation.hpp"

namespace flexohom {

/// Everything needed to build one RVE problem.
struct RveSetup {
    RveGeometry geometry;
    /// material parameters per region name
    std::map<std::string, MaterialParams> materials;
    BoundaryCondition bc = BoundaryCondition::Periodic;
    AssemblyOptions assembly;
    SolverOptions solver;
    double pairingTolerance = kDefaultPairingTolerance;
    /// read this mesh instead of generating one from `geometry`
    std::string meshFile;
    /// uniform scaling applied to the mesh after generation or loading
    double meshScale = 1.0;
};

inline Mesh scale_mesh(Mesh m, double factor) {
    if (!(factor > 0.0)) throw MeshError("mesh scale factor must be positive");
    for (auto& p : m.nodes) p *= factor;
    return m;
}

inline Mesh build_rve_mesh(const RveSetup& s) {
    Mesh m = s.meshFile.empty() ? generate_rve_mesh(s.geometry) : read_mesh(s.meshFile);
    if (s.meshScale != 1.0) m = scale_mesh(std::move(m), s.meshScale);
    return m;
}

/// Region tag -> material matrices, matching region names to the material table.
inline std::map<int, MaterialMatrices> region_materials(const Mesh& m,
                                                        const std::map<std::string, MaterialParams>& table) {
    std::map<int, MaterialMatrices> out;
    for (const auto& [tag, name] : m.regions) {
        const auto it = table.find(name);
        if (it == table.end()) throw MaterialError("no material defined for region '" + name + "'");
        out[tag] = build_material_matrices(it->second);
    }
    return out;
}

inline RveOptions rve_options(const RveSetup& s) {
    RveOptions o;
    o.bc = s.bc;
    o.assembly = s.assembly;
    o.solver = s.solver;
    o.pairingTolerance = s.pairingTolerance;
    return o;
}

inline RveProblem make_rve_problem(const RveSetup& s) {
    Mesh m = build_rve_mesh(s);
    auto mats = region_materials(m, s.materials);
    return RveProblem(std::move(m), std::move(mats), rve_options(s));
}

enum class SweepVariable { IntrinsicLength, ModelSize, Porosity, Layout, StiffnessFactor, FlexoFactor, HoleSize };

inline const std::map<std::string, SweepVariable>& sweep_variable_names() {
    static const std::map<std::string, SweepVariable> names = {
        {"intrinsicLength", SweepVariable::IntrinsicLength}, {"modelSize", SweepVariable::ModelSize},
        {"porosity", SweepVariable::Porosity},               {"layout", SweepVariable::Layout},
        {"stiffnessFactor", SweepVariable::StiffnessFactor}, {"flexoFactor", SweepVariable::FlexoFactor},
        {"holeSize", SweepVariable::HoleSize}};
    return names;
}

inline SweepVariable parse_sweep_variable(const std::string& s) {
    const auto& n = sweep_variable_names();
    const auto it = n.find(s);
    if (it == n.end()) throw ConfigError("unknown sweep variable '" + s + "'");
    return it->second;
}

inline std::string to_string(SweepVariable v) {
    for (const auto& [name, var] : sweep_variable_names())
        if (var == v) return name;
    return "?";
}

struct SweepSpec {
    SweepVariable variable = SweepVariable::IntrinsicLength;
    std::vector<double> values;
    bool normalize = true;
    /// region scaled by stiffnessFactor / flexoFactor; empty picks the matrix
    /// (stiffness) or inclusion (flexo) material of the geometry
    std::string factorRegion;
    /// material used for normalization; empty picks the geometry's matrix material
    std::string referenceMaterial;
};

/// n x n regular array of circular holes with the given total porosity.
inline std::vector<Shape> hole_array(double sideLength, int n, double porosity) {
    if (n < 1) throw ConfigError("hole layout needs n >= 1");
    const double cell = sideLength / n;
    const double r = porosity_radius(porosity, cell);
    std::vector<Shape> out;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            out.push_back(Shape::circle({-0.5 * sideLength + (i + 0.5) * cell, -0.5 * sideLength + (j + 0.5) * cell}, r));
    return out;
}

inline double hole_porosity(const RveGeometry& g) {
    double a = 0.0;
    for (const auto& h : g.holes) a += h.area();
    return a / (g.sideLength * g.sideLength);
}

/// The base setup with the sweep variable set to `value`.
inline RveSetup apply_sweep_value(const RveSetup& base, const SweepSpec& spec, double value) {
    RveSetup s = base;
    auto region = [&](const std::string& fallback) {
        const std::string name = spec.factorRegion.empty() ? fallback : spec.factorRegion;
        auto it = s.materials.find(name);
        if (it == s.materials.end()) throw ConfigError("sweep region '" + name + "' has no material");
        return it;
    };
    switch (spec.variable) {
        case SweepVariable::IntrinsicLength:
            if (!(value >= 0.0)) throw MaterialError("intrinsic length must be non-negative");
            for (auto& [name, p] : s.materials) p.l = value;
            break;
        case SweepVariable::ModelSize:
            // exact geometric scaling of the base mesh keeps the topology fixed
            if (!(value > 0.0)) throw MeshError("model size must be positive");
            s.meshScale = base.meshScale * value / base.geometry.sideLength;
            break;
        case SweepVariable::Porosity:
            s.geometry.holes.clear();
            if (value > 0.0) s.geometry.holes.push_back(Shape::circle({0, 0}, porosity_radius(value, s.geometry.sideLength)));
            break;
        case SweepVariable::Layout: {
            const double n = std::round(value);
            if (n != value || n < 1) throw ConfigError("layout values are hole counts per side (positive integers)");
            const double phi = hole_porosity(base.geometry);
            if (!(phi > 0.0)) throw ConfigError("layout sweep needs holes in the base geometry to fix the porosity");
            s.geometry.holes = hole_array(s.geometry.sideLength, static_cast<int>(n), phi);
            break;
        }
        case SweepVariable::StiffnessFactor: {
            if (!(value > 0.0)) throw MaterialError("stiffness factor must be positive");
            auto it = region(s.geometry.matrixMaterial);
            it->second.lambda *= value;
            it->second.G *= value;
            break;
        }
        case SweepVariable::FlexoFactor: {
            auto it = region(s.geometry.inclusionMaterial);
            it->second.f1 *= value;
            it->second.f2 *= value;
            break;
        }
        case SweepVariable::HoleSize:
            if (s.geometry.holes.size() != 1) throw ConfigError("holeSize sweep needs exactly one hole in the base geometry");
            s.geometry.holes[0].size = value;
            break;
    }
    return s;
}

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    std::string error;
    int elements = 0;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd normalized;
    double symmetryDefect = 0.0;
};

struct SweepTable {
    SweepVariable variable = SweepVariable::IntrinsicLength;
    BoundaryCondition bc = BoundaryCondition::Periodic;
    bool normalized = false;
    std::vector<SweepRow> rows;
};

/// One effective-tangent computation per value. Failures are recorded in the
/// row and the sweep continues; `onRow` sees every row as soon as it exists.
inline SweepTable run_sweep(const RveSetup& base, const SweepSpec& spec,
                            const std::function<void(const SweepRow&)>& onRow = {}) {
    SweepTable t;
    t.variable = spec.variable;
    t.bc = base.bc;
    t.normalized = spec.normalize;
    // modelSize rescales one base mesh instead of regenerating it
    std::optional<Mesh> baseMesh;
    if (spec.variable == SweepVariable::ModelSize && !spec.values.empty()) baseMesh = build_rve_mesh(base);
    for (double v : spec.values) {
        SweepRow row;
        row.value = v;
        try {
            const RveSetup s = apply_sweep_value(base, spec, v);
            Mesh m = baseMesh ? scale_mesh(*baseMesh, s.meshScale / base.meshScale) : build_rve_mesh(s);
            row.elements = static_cast<int>(m.num_triangles());
            auto mats = region_materials(m, s.materials);
            const RveProblem p(std::move(m), std::move(mats), rve_options(s));
            const EffectiveTangents tan = p.tangents();
            row.coefficients = reported_coefficients(tan);
            row.symmetryDefect = tan.symmetry_defect();
            if (spec.normalize) {
                const std::string refName = spec.referenceMaterial.empty() ? base.geometry.matrixMaterial : spec.referenceMaterial;
                const auto it = base.materials.find(refName);
                if (it == base.materials.end()) throw ConfigError("reference material '" + refName + "' is not defined");
                MaterialParams ref = it->second;
                if (spec.variable == SweepVariable::IntrinsicLength) ref.l = v;
                row.normalized = normalized_coefficients(row.coefficients, reference_coefficients(build_material_matrices(ref)));
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        if (onRow) onRow(row);
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace flexohom

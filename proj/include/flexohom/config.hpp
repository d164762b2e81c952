#pragma once

#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "constitutive.hpp"
#include "error.hpp"
#include "homogenization.hpp"
#include "mesh_generation.hpp"
#include "sweep.hpp"
#include "two_scale.hpp"

namespace flexohom {

enum class FieldFormat { None, Tecplot, Csv, Both };

struct LocalizationPoint {
    int element = 0;
    int point = 0;
};

struct MacroConfig {
    TensionPlate plate;
    std::vector<LocalizationPoint> localize;
};

struct RunConfig {
    RveSetup rve;
    std::optional<SweepSpec> sweep;
    /// macro state of the homogenize run (stacked eps, g, -E); zero means tangents only
    Vec11 macroState = Vec11::Zero();
    MacroConfig macro;
    std::string outputDirectory = "out";
    FieldFormat fields = FieldFormat::Tecplot;
    int threads = 1;
};

namespace detail {

/// JSON object reader that remembers which keys were consumed, so leftovers
/// can be reported as unknown with their full path.
class Section {
public:
    Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const nlohmann::json* get(const std::string& key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(key_path(key) + ": expected a number");
        return v->get<double>();
    }

    double positive(const std::string& key, double fallback) {
        const double v = number(key, fallback);
        if (!(v > 0.0)) throw ConfigError(key_path(key) + ": must be positive");
        return v;
    }

    int integer(const std::string& key, int fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ConfigError(key_path(key) + ": expected an integer");
        return v->get<int>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(key_path(key) + ": expected a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::size_t size = 0) {
        const auto* v = get(key);
        if (!v) return {};
        if (!v->is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : *v) {
            if (!x.is_number()) throw ConfigError(key_path(key) + ": expected an array of numbers");
            out.push_back(x.get<double>());
        }
        if (size && out.size() != size)
            throw ConfigError(key_path(key) + ": expected " + std::to_string(size) + " numbers");
        return out;
    }

    Vec2 vec2(const std::string& key, const Vec2& fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const auto v = numbers(key, 2);
        return {v[0], v[1]};
    }

    Section child(const std::string& key) {
        const auto* v = get(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return Section(v ? *v : empty, key_path(key));
    }

    /// Throws on the first key that was never asked for.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(key_path(it.key()) + ": unknown key");
    }

    const std::string& path() const { return path_; }

private:
    std::string where() const { return path_.empty() ? "" : path_ + ": "; }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline MaterialParams parse_material(Section s) {
    MaterialParams p;
    const std::string preset = s.string("preset", "");
    if (preset == "reference")
        p = reference_material();
    else if (!preset.empty())
        throw ConfigError(s.key_path("preset") + ": unknown preset '" + preset + "'");
    p.lambda = s.number("lambda", p.lambda);
    p.G = s.number("G", p.G);
    p.l = s.number("l", p.l);
    p.e31 = s.number("e31", p.e31);
    p.e33 = s.number("e33", p.e33);
    p.e15 = s.number("e15", p.e15);
    p.kappa11 = s.number("kappa11", p.kappa11);
    p.kappa33 = s.number("kappa33", p.kappa33);
    p.f1 = s.number("f1", p.f1);
    p.f2 = s.number("f2", p.f2);
    s.finish();
    try {
        validate(p);
    } catch (const MaterialError& e) {
        throw ConfigError(s.path() + ": " + e.what());
    }
    return p;
}

inline Shape parse_shape(Section s) {
    const std::string kind = s.string("shape", "circle");
    const Vec2 c = s.vec2("center", Vec2::Zero());
    Shape out;
    if (kind == "circle") {
        out = Shape::circle(c, s.positive("radius", 0.0));
    } else if (kind == "triangle") {
        // apex angle in degrees from the x1 axis
        out = Shape::triangle(c, s.positive("inradius", 0.0), s.number("apexAngle", 0.0) * std::numbers::pi / 180.0);
    } else if (kind == "rectangle") {
        out = Shape::rectangle(c, s.positive("halfWidth", 0.0), s.positive("halfHeight", 0.0));
    } else {
        throw ConfigError(s.key_path("shape") + ": unknown shape '" + kind + "'");
    }
    s.finish();
    return out;
}

inline std::vector<Shape> parse_shapes(Section& parent, const std::string& key) {
    const auto* v = parent.get(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(parent.key_path(key) + ": expected an array");
    std::vector<Shape> out;
    for (std::size_t i = 0; i < v->size(); ++i)
        out.push_back(parse_shape(Section((*v)[i], parent.key_path(key) + "[" + std::to_string(i) + "]")));
    return out;
}

inline FieldFormat parse_field_format(const std::string& s, const std::string& path) {
    if (s == "none") return FieldFormat::None;
    if (s == "tecplot") return FieldFormat::Tecplot;
    if (s == "csv") return FieldFormat::Csv;
    if (s == "both") return FieldFormat::Both;
    throw ConfigError(path + ": expected none, tecplot, csv or both");
}

/// Region names that a generated geometry will produce.
inline std::vector<std::string> geometry_regions(const RveGeometry& g) {
    std::vector<std::string> r;
    if (!g.fullInclusion) r.push_back(g.matrixMaterial);
    if (g.fullInclusion || !g.inclusions.empty()) r.push_back(g.inclusionMaterial);
    return r;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
    using detail::Section;
    RunConfig c;
    Section top(root, "");

    {
        Section mats = top.child("materials");
        const auto* raw = top.get("materials");
        if (raw)
            for (auto it = raw->begin(); it != raw->end(); ++it)
                c.rve.materials[it.key()] = detail::parse_material(mats.child(it.key()));
        mats.finish();
    }

    {
        Section r = top.child("rve");
        auto& g = c.rve.geometry;
        g.sideLength = r.positive("sideLength", g.sideLength);
        g.targetElementSize = r.positive("elementSize", g.targetElementSize);
        g.seed = static_cast<unsigned>(r.integer("seed", static_cast<int>(g.seed)));
        g.holes = detail::parse_shapes(r, "holes");
        g.inclusions = detail::parse_shapes(r, "inclusions");
        g.fullInclusion = r.boolean("fullInclusion", g.fullInclusion);
        g.matrixMaterial = r.string("matrixMaterial", g.matrixMaterial);
        g.inclusionMaterial = r.string("inclusionMaterial", g.inclusionMaterial);
        c.rve.meshFile = r.string("meshFile", "");
        c.rve.meshScale = r.positive("meshScale", 1.0);
        r.finish();
    }

    c.rve.bc = parse_boundary_condition(top.string("bc", "PBC"));

    {
        Section s = top.child("solver");
        c.rve.assembly.quadratureDegree = s.integer("quadratureDegree", c.rve.assembly.quadratureDegree);
        c.rve.solver.residualTolerance = s.positive("residualTolerance", c.rve.solver.residualTolerance);
        c.rve.solver.pivotTolerance = s.positive("pivotTolerance", c.rve.solver.pivotTolerance);
        c.rve.pairingTolerance = s.positive("pairingTolerance", c.rve.pairingTolerance);
        s.finish();
        try {
            triangle_quadrature(c.rve.assembly.quadratureDegree);
        } catch (const QuadratureError& e) {
            throw ConfigError(s.key_path("quadratureDegree") + ": " + e.what());
        }
    }

    if (top.has("sweep")) {
        Section s = top.child("sweep");
        SweepSpec sp;
        sp.variable = parse_sweep_variable(s.string("variable", "intrinsicLength"));
        sp.values = s.numbers("values");
        sp.normalize = s.boolean("normalize", sp.normalize);
        sp.factorRegion = s.string("factorRegion", "");
        sp.referenceMaterial = s.string("referenceMaterial", "");
        s.finish();
        if (!sp.referenceMaterial.empty() && !c.rve.materials.count(sp.referenceMaterial))
            throw ConfigError(s.key_path("referenceMaterial") + ": material '" + sp.referenceMaterial + "' is not defined");
        c.sweep = sp;
    }

    {
        Section h = top.child("homogenize");
        const auto m = h.numbers("macroState");
        if (!m.empty()) {
            if (m.size() != 11) throw ConfigError(h.key_path("macroState") + ": expected 11 numbers (eps, g, -E)");
            for (int i = 0; i < 11; ++i) c.macroState[i] = m[i];
        }
        h.finish();
    }

    {
        Section m = top.child("macro");
        auto& p = c.macro.plate;
        p.width = m.positive("width", p.width);
        p.height = m.positive("height", p.height);
        p.nx = m.integer("nx", p.nx);
        p.ny = m.integer("ny", p.ny);
        if (p.nx < 1 || p.ny < 1) throw ConfigError(m.key_path("nx") + ": element counts must be positive");
        p.traction = m.vec2("traction", p.traction);
        p.surfaceCharge = m.number("surfaceCharge", p.surfaceCharge);
        p.groundLeftEdge = m.boolean("groundLeftEdge", p.groundLeftEdge);
        if (const auto* loc = m.get("localize")) {
            if (!loc->is_array()) throw ConfigError(m.key_path("localize") + ": expected an array");
            for (std::size_t i = 0; i < loc->size(); ++i) {
                Section l((*loc)[i], m.key_path("localize") + "[" + std::to_string(i) + "]");
                LocalizationPoint lp{l.integer("element", 0), l.integer("point", 0)};
                l.finish();
                c.macro.localize.push_back(lp);
            }
        }
        m.finish();
    }

    {
        Section o = top.child("output");
        c.outputDirectory = o.string("directory", c.outputDirectory);
        c.fields = detail::parse_field_format(o.string("fields", "tecplot"), o.key_path("fields"));
        o.finish();
    }

    c.threads = top.integer("threads", c.threads);
    if (c.threads < 1) throw ConfigError("threads: must be at least 1");
    c.rve.assembly.threads = c.threads;
    top.finish();

    // every region the RVE will contain needs a material
    if (c.rve.meshFile.empty()) {
        for (const auto& name : detail::geometry_regions(c.rve.geometry))
            if (!c.rve.materials.count(name)) throw ConfigError("materials: no material defined for region '" + name + "'");
    } else {
        const Mesh m = read_mesh(c.rve.meshFile);
        for (const auto& [tag, name] : m.regions)
            if (!c.rve.materials.count(name)) throw ConfigError("materials: no material defined for region '" + name + "'");
    }
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace flexohom

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "assembly.hpp"
#include "bell.hpp"
#include "error.hpp"
#include "homogenization.hpp"
#include "mesh.hpp"
#include "rve_bc.hpp"
#include "units.hpp"

namespace flexohom {

/// Prescribed constant value of one field on a node set. For nodes along an
/// axis-parallel edge the derivatives along that edge (first and second) are
/// fixed to zero as well, which is what a constant trace means for C1 dofs.
struct EssentialBC {
    std::vector<int> nodes;
    Field field = Field::U1;
    double value = 0.0;
    /// 0: edge along x1, 1: edge along x2, empty: isolated nodes (value only)
    std::optional<int> tangentAxis;
};

/// Edge set with uniform traction t and surface charge density omega.
struct EdgeLoad {
    /// (element, local edge) with the edge running from vertex k to k+1
    std::vector<std::pair<int, int>> edges;
    Vec2 traction = Vec2::Zero();
    double surfaceCharge = 0.0;
};

struct MacroProblem {
    Mesh mesh;
    /// generalized 11x11 law per region tag
    RegionLaws laws;
    std::vector<EssentialBC> essentials;
    std::vector<EdgeLoad> loads;
    AssemblyOptions assembly;
    SolverOptions solver;
};

struct MacroSolution {
    Eigen::VectorXd u;
    double residual = 0.0;
};

inline std::vector<int> nodes_where(const Mesh& m, const std::function<bool(const Vec2&)>& pred) {
    std::vector<int> out;
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
        if (pred(m.nodes[i])) out.push_back(static_cast<int>(i));
    return out;
}

/// Element edges whose two end points both satisfy the predicate.
inline std::vector<std::pair<int, int>> edges_where(const Mesh& m, const std::function<bool(const Vec2&)>& pred) {
    std::vector<std::pair<int, int>> out;
    for (std::size_t e = 0; e < m.num_triangles(); ++e)
        for (int k = 0; k < 3; ++k)
            if (pred(m.nodes[m.triangles[e][k]]) && pred(m.nodes[m.triangles[e][(k + 1) % 3]]))
                out.emplace_back(static_cast<int>(e), k);
    return out;
}

inline ConstraintSet macro_constraints(const MacroProblem& p) {
    ConstraintSet cs;
    cs.numParams = 1;
    std::map<int, double> fixed;
    auto fix = [&](int dof, double v) {
        const auto it = fixed.find(dof);
        if (it != fixed.end() && it->second != v)
            throw ConstraintError("conflicting essential values at dof " + std::to_string(dof));
        fixed[dof] = v;
    };
    for (const auto& bc : p.essentials)
        for (int n : bc.nodes) {
            if (n < 0 || n >= static_cast<int>(p.mesh.num_nodes())) throw ConstraintError("essential node out of range");
            fix(global_dof(n, bc.field, 0), bc.value);
            if (bc.tangentAxis) {
                const int axis = *bc.tangentAxis;
                fix(global_dof(n, bc.field, 1 + axis), 0.0);          // d1 or d2
                fix(global_dof(n, bc.field, axis == 0 ? 3 : 5), 0.0);  // d11 or d22
            }
        }
    for (const auto& [dof, v] : fixed) cs.prescribed.push_back({dof, Eigen::RowVectorXd::Constant(1, v)});
    return cs;
}

/// Nodal load vector of the edge tractions and surface charges:
/// int t . du ds - int omega dphi ds.
inline Eigen::VectorXd macro_load_vector(const MacroProblem& p) {
    Eigen::VectorXd F = Eigen::VectorXd::Zero(p.mesh.num_nodes() * kDofsPerNode);
    std::vector<double> gx, gw;
    gauss_legendre_01(5, gx, gw);
    for (const auto& load : p.loads)
        for (const auto& [e, k] : load.edges) {
            if (e < 0 || e >= static_cast<int>(p.mesh.num_triangles()) || k < 0 || k > 2)
                throw ConstraintError("load edge out of range");
            const BellElement el(p.mesh.triangle(e));
            const auto g = element_dofs(p.mesh.triangles[e]);
            const Vec2 a = p.mesh.nodes[p.mesh.triangles[e][k]];
            const Vec2 b = p.mesh.nodes[p.mesh.triangles[e][(k + 1) % 3]];
            const double len = (b - a).norm();
            for (std::size_t q = 0; q < gx.size(); ++q) {
                Eigen::Vector3d bary = Eigen::Vector3d::Zero();
                bary[k] = 1.0 - gx[q];
                bary[(k + 1) % 3] = gx[q];
                const auto km = kinematic_matrices(el.eval(bary));
                ElementVector fe = ElementVector::Zero();
                fe.head<36>() = km.Nu.transpose() * load.traction;
                fe.tail<18>() = -load.surfaceCharge * km.Nphi.transpose();
                fe *= gw[q] * len;
                for (int i = 0; i < kElementDofs; ++i) F[g[i]] += fe[i];
            }
        }
    return F;
}

inline MacroSolution solve_macro(const MacroProblem& p) {
    validate_mesh(p.mesh);
    bool grounded = false;
    int mechanical = 0;
    for (const auto& bc : p.essentials) {
        if (bc.field == Field::Phi && !bc.nodes.empty()) grounded = true;
        if (bc.field != Field::Phi) mechanical += static_cast<int>(bc.nodes.size());
    }
    if (!grounded) throw ConstraintError("under-constrained macro problem: the potential is not grounded");
    if (mechanical < 2) throw ConstraintError("under-constrained macro problem: rigid motions are not removed");
    GlobalSystem sys = assemble(p.mesh, p.laws, p.assembly);
    sys.F = macro_load_vector(p);
    const AffineReduction red = eliminate(macro_constraints(p), sys.num_dofs());
    const ReducedSolver solver(sys, red, p.solver);
    auto sol = solver.solve(sys);
    return {sol.U.col(0), sol.residual};
}

/// Generalized macro state at quadrature point q of element e (degree of the problem's rule).
inline MacroState macro_state_at(const MacroProblem& p, const MacroSolution& s, int e, int q, Vec2* where = nullptr) {
    if (e < 0 || e >= static_cast<int>(p.mesh.num_triangles())) throw ConfigError("macro element " + std::to_string(e) + " does not exist");
    const QuadratureRule rule = triangle_quadrature(p.assembly.quadratureDegree);
    if (q < 0 || q >= static_cast<int>(rule.size()))
        throw ConfigError("quadrature point " + std::to_string(q) + " does not exist (rule has " +
                          std::to_string(rule.size()) + ")");
    const BellElement el(p.mesh.triangle(e));
    const auto g = element_dofs(p.mesh.triangles[e]);
    ElementVector ue;
    for (int i = 0; i < kElementDofs; ++i) ue[i] = s.u[g[i]];
    const Vec2 x = el.triangle().point(rule.points[q]);
    if (where) *where = x;
    return MacroState::from_stacked(kinematic_matrices(el.eval_at(x)).generalized() * ue);
}

/// Field values at all element vertices, with stresses from the generalized law.
inline std::vector<FieldPoint> macro_vertex_fields(const MacroProblem& p, const MacroSolution& s) {
    std::vector<FieldPoint> out;
    out.reserve(3 * p.mesh.num_triangles());
    for (std::size_t e = 0; e < p.mesh.num_triangles(); ++e) {
        const BellElement el(p.mesh.triangle(e));
        const auto g = element_dofs(p.mesh.triangles[e]);
        ElementVector ue;
        for (int i = 0; i < kElementDofs; ++i) ue[i] = s.u[g[i]];
        for (int i = 0; i < 3; ++i) {
            Eigen::Vector3d bary = Eigen::Vector3d::Zero();
            bary[i] = 1.0;
            out.push_back(generalized_fields(el, ue, bary, p.laws.at(p.mesh.regionOf[e])));
        }
    }
    return out;
}

/// Computes each distinct RVE once and keeps its factorization for localization.
class TangentCache {
public:
    struct Entry {
        std::shared_ptr<const RveProblem> rve;
        EffectiveTangents tangents;
    };

    const Entry& get(const std::string& key, const std::function<RveProblem()>& build) {
        const auto it = entries_.find(key);
        if (it != entries_.end()) {
            ++hits_;
            return it->second;
        }
        Entry e;
        e.rve = std::make_shared<const RveProblem>(build());
        e.tangents = e.rve->tangents();
        ++computations_;
        return entries_.emplace(key, std::move(e)).first->second;
    }

    int computations() const { return computations_; }
    int hits() const { return hits_; }

private:
    std::map<std::string, Entry> entries_;
    int computations_ = 0;
    int hits_ = 0;
};

struct LocalizationResult {
    int element = 0;
    int point = 0;
    Vec2 x = Vec2::Zero();
    MacroState macro;
    RveResult rve;
    /// Cbig * macro state
    Vec11 expectedStress = Vec11::Zero();
    /// |averaged micro stresses - Cbig s| / |Cbig s| (0 when both vanish)
    double consistencyError = 0.0;
    /// |macro state recovered from the RVE boundary - s| / |s|
    double recoveryError = 0.0;
};

/// Macro problem whose regions are served by cached RVEs.
struct TwoScaleModel {
    MacroProblem problem;
    std::map<int, std::shared_ptr<const RveProblem>> rveOfRegion;
    std::map<int, EffectiveTangents> tangentsOfRegion;
    MacroSolution solution;
};

/// Fills the macro laws from the RVE of every region and solves the macro problem.
inline void solve_two_scale(TwoScaleModel& model, TangentCache& cache,
                            const std::map<int, std::pair<std::string, std::function<RveProblem()>>>& rveOfRegion) {
    model.problem.laws.clear();
    for (const auto& [tag, name] : model.problem.mesh.regions) {
        const auto it = rveOfRegion.find(tag);
        if (it == rveOfRegion.end()) throw MaterialError("no RVE assigned to macro region '" + name + "'");
        const auto& entry = cache.get(it->second.first, it->second.second);
        model.rveOfRegion[tag] = entry.rve;
        model.tangentsOfRegion[tag] = entry.tangents;
        model.problem.laws[tag] = entry.tangents.Cbig;
    }
    model.solution = solve_macro(model.problem);
}

inline LocalizationResult localize(const TwoScaleModel& model, int element, int point) {
    LocalizationResult r;
    r.element = element;
    r.point = point;
    r.macro = macro_state_at(model.problem, model.solution, element, point, &r.x);
    const int tag = model.problem.mesh.regionOf[element];
    const auto& rve = *model.rveOfRegion.at(tag);
    r.rve = rve.run_averaged(r.macro);
    const Vec11 s = r.macro.stacked();
    r.expectedStress = model.tangentsOfRegion.at(tag).Cbig * s;
    const double scale = r.expectedStress.norm();
    const double diff = (r.rve.generalized_stress() - r.expectedStress).norm();
    r.consistencyError = scale > 0.0 ? diff / scale : diff;
    const double sn = s.norm();
    const double rec = (rve.recovered_macro_state(r.rve.solution).stacked() - s).norm();
    r.recoveryError = sn > 0.0 ? rec / sn : rec;
    return r;
}

/// Rectangular plate [0, W] x [0, H] under uniform edge traction on x1 = W.
/// Supports: u1 = 0 on x1 = 0; u2 = 0 at the origin; the potential is grounded
/// on the whole left edge or only at the origin.
struct TensionPlate {
    double width = 20.0;
    double height = 20.0;
    int nx = 8;
    int ny = 8;
    Vec2 traction = Vec2(0.1, 0.0);
    double surfaceCharge = 0.0;
    bool groundLeftEdge = true;
};

inline MacroProblem tension_plate_problem(const TensionPlate& t, const std::string& regionName = "macro") {
    MacroProblem p;
    p.mesh = structured_rectangle({0.0, 0.0}, {t.width, t.height}, t.nx, t.ny, 0, regionName);
    const double tol = 1e-9 * std::max(t.width, t.height);
    auto onLeft = [&](const Vec2& x) { return std::abs(x.x()) <= tol; };
    auto onRight = [&](const Vec2& x) { return std::abs(x.x() - t.width) <= tol; };
    auto atOrigin = [&](const Vec2& x) { return x.norm() <= tol; };
    p.essentials.push_back({nodes_where(p.mesh, onLeft), Field::U1, 0.0, 1});
    p.essentials.push_back({nodes_where(p.mesh, atOrigin), Field::U2, 0.0, std::nullopt});
    if (t.groundLeftEdge)
        p.essentials.push_back({nodes_where(p.mesh, onLeft), Field::Phi, 0.0, 1});
    else
        p.essentials.push_back({nodes_where(p.mesh, atOrigin), Field::Phi, 0.0, std::nullopt});
    EdgeLoad load;
    load.edges = edges_where(p.mesh, onRight);
    load.traction = t.traction;
    load.surfaceCharge = t.surfaceCharge;
    p.loads.push_back(load);
    return p;
}

}  // namespace flexohom

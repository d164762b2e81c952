#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Sparse>

#include "bell.hpp"
#include "block_ldlt.hpp"
#include "error.hpp"
#include "mesh.hpp"
#include "rve_bc.hpp"

namespace flexohom {

/// Generalized 11x11 law per region tag.
using RegionLaws = std::map<int, Mat11>;

inline RegionLaws region_laws(const std::map<int, MaterialMatrices>& materials) {
    RegionLaws out;
    for (const auto& [tag, m] : materials) out[tag] = constitutive_matrix(m);
    return out;
}

struct AssemblyOptions {
    int quadratureDegree = kDefaultQuadratureDegree;
    int threads = 1;
};

/// Global system over all 18 dofs per node (dof = node * 18 + field * 6 + k).
struct GlobalSystem {
    Eigen::SparseMatrix<double> K;
    /// load columns, one per constraint parameter; empty means zero load
    Eigen::MatrixXd F;

    int num_dofs() const { return static_cast<int>(K.rows()); }
};

/// Element dof -> global dof map in the local_u_dof / local_phi_dof layout.
inline std::array<int, kElementDofs> element_dofs(const std::array<int, 3>& tri) {
    std::array<int, kElementDofs> g{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < kDofsPerField; ++k) {
            g[local_u_dof(i, 0, k)] = global_dof(tri[i], Field::U1, k);
            g[local_u_dof(i, 1, k)] = global_dof(tri[i], Field::U2, k);
            g[local_phi_dof(i, k)] = global_dof(tri[i], Field::Phi, k);
        }
    return g;
}

namespace detail {

/// Runs f(i) for i in [begin, end) on up to `threads` workers; results land in
/// caller-owned slots so the outcome does not depend on scheduling.
template <typename F>
void parallel_for(std::size_t begin, std::size_t end, int threads, F&& f) {
    const std::size_t n = end - begin;
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = begin; i < end; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = begin + w; i < end; i += workers) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline GlobalSystem assemble(const Mesh& mesh, const RegionLaws& laws, const AssemblyOptions& opt = {}) {
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e)
        if (!laws.count(mesh.regionOf[e])) {
            const auto it = mesh.regions.find(mesh.regionOf[e]);
            throw MaterialError("no material for region " +
                                (it != mesh.regions.end() ? "'" + it->second + "'" : std::to_string(mesh.regionOf[e])));
        }
    const int nn = static_cast<int>(mesh.num_nodes());
    const int ndof = nn * kDofsPerNode;

    // Node adjacency defines the 18x18 block pattern.
    std::vector<std::vector<int>> nbr(nn);
    for (int i = 0; i < nn; ++i) nbr[i].push_back(i);
    for (const auto& t : mesh.triangles)
        for (int a : t)
            for (int b : t)
                if (a != b) nbr[a].push_back(b);
    for (auto& v : nbr) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    std::vector<int> outer(ndof + 1, 0);
    for (int b = 0; b < nn; ++b)
        for (int k = 0; k < kDofsPerNode; ++k)
            outer[b * kDofsPerNode + k + 1] = outer[b * kDofsPerNode + k] + static_cast<int>(nbr[b].size()) * kDofsPerNode;
    const int nnz = outer[ndof];
    std::vector<int> inner(nnz);
    std::vector<double> values(nnz, 0.0);
    for (int b = 0; b < nn; ++b)
        for (int k = 0; k < kDofsPerNode; ++k) {
            int p = outer[b * kDofsPerNode + k];
            for (int a : nbr[b])
                for (int ka = 0; ka < kDofsPerNode; ++ka) inner[p++] = a * kDofsPerNode + ka;
        }
    auto slot = [&](int rowDof, int colDof) {
        const int a = rowDof / kDofsPerNode, ka = rowDof % kDofsPerNode;
        const int b = colDof / kDofsPerNode;
        const auto& list = nbr[b];
        const auto pos = std::lower_bound(list.begin(), list.end(), a) - list.begin();
        return outer[colDof] + static_cast<int>(pos) * kDofsPerNode + ka;
    };

    const QuadratureRule rule = triangle_quadrature(opt.quadratureDegree);
    const std::size_t ne = mesh.num_triangles();
    const std::size_t chunk = 512;
    std::vector<ElementMatrix> Ke(std::min(chunk, ne));
    for (std::size_t start = 0; start < ne; start += chunk) {
        const std::size_t stop = std::min(ne, start + chunk);
        detail::parallel_for(start, stop, opt.threads, [&](std::size_t e) {
            const BellElement el(mesh.triangle(e));
            Ke[e - start] = element_matrix(el, laws.at(mesh.regionOf[e]), rule);
        });
        // scatter in element order: deterministic sums
        for (std::size_t e = start; e < stop; ++e) {
            const auto g = element_dofs(mesh.triangles[e]);
            const ElementMatrix& k = Ke[e - start];
            for (int j = 0; j < kElementDofs; ++j)
                for (int i = 0; i < kElementDofs; ++i) values[slot(g[i], g[j])] += k(i, j);
        }
    }
    GlobalSystem sys;
    sys.K = Eigen::Map<const Eigen::SparseMatrix<double, Eigen::ColMajor, int>>(ndof, ndof, nnz, outer.data(),
                                                                                inner.data(), values.data());
    return sys;
}

/// Solution of a constrained system for every parameter column:
/// full = T * Z + R, one column per constraint parameter.
struct ConstrainedSolution {
    Eigen::MatrixXd U;
    double residual = 0.0;
};

struct SolverOptions {
    /// pivots below this fraction of the largest pivot flag a singular system
    double pivotTolerance = 1e-14;
    /// accepted relative residual
    double residualTolerance = 1e-10;
};

/// Relative residual ||T^T (K u - F)|| / max(||T^T F||, ||T^T K r||, || |T|^T |K| |u| ||),
/// column-wise maximum. The last term is the magnitude of the summed nodal
/// forces; it keeps the ratio meaningful when the imposed field already is the
/// exact solution and T^T K r is itself at rounding level.
inline double residual_check(const GlobalSystem& sys, const AffineReduction& red, const Eigen::MatrixXd& U) {
    const Eigen::MatrixXd KU = sys.K * U;
    const Eigen::MatrixXd KR = sys.K * red.R;
    const Eigen::SparseMatrix<double> absK = sys.K.cwiseAbs();
    const Eigen::SparseMatrix<double> absTt = Eigen::SparseMatrix<double>(red.T.transpose()).cwiseAbs();
    const Eigen::MatrixXd forceScale = absTt * (absK * U.cwiseAbs());
    double worst = 0.0;
    for (Eigen::Index c = 0; c < U.cols(); ++c) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(sys.num_dofs());
        if (sys.F.size() > 0) f = sys.F.col(c);
        const double num = (red.T.transpose() * (KU.col(c) - f)).norm();
        const double den = std::max({(red.T.transpose() * f).norm(), (red.T.transpose() * KR.col(c)).norm(),
                                     forceScale.col(c).norm()});
        if (den == 0.0) continue;  // zero system
        worst = std::max(worst, num / den);
    }
    return worst;
}

/// Reduced system T^T K T with symmetric diagonal scaling, factorized once.
/// The free dofs of one node form a dense group of the block factorization.
class ReducedSolver {
public:
    ReducedSolver(const GlobalSystem& sys, const AffineReduction& red, const SolverOptions& opt = {})
        : red_(red), opt_(opt) {
        if (sys.K.rows() != red.T.rows()) throw SolverError("reduction does not match the system size");
        Eigen::SparseMatrix<double> Kr = red.T.transpose() * sys.K * red.T;
        Kr = 0.5 * (Kr + Eigen::SparseMatrix<double>(Kr.transpose()));
        const int n = static_cast<int>(Kr.rows());
        scale_.resize(n);
        for (int i = 0; i < n; ++i) {
            const double d = std::abs(Kr.coeff(i, i));
            if (!(d > 0.0)) throw SolverError("singular reduced system: zero diagonal at free dof " + std::to_string(i));
            scale_[i] = 1.0 / std::sqrt(d);
        }
        Kr = scale_.asDiagonal() * Kr * scale_.asDiagonal();
        std::vector<int> groups{0};
        int lastNode = -1;
        for (std::size_t d = 0; d < red.freeIndex.size(); ++d) {
            if (red.freeIndex[d] < 0) continue;
            const int node = static_cast<int>(d) / kDofsPerNode;
            if (lastNode != -1 && node != lastNode) groups.push_back(red.freeIndex[d]);
            lastNode = node;
        }
        groups.push_back(n);
        if (n > 0) {
            factor_.compute(Kr, groups);
            if (!(factor_.pivot_ratio() > opt.pivotTolerance))
                throw SolverError("singular reduced system (pivot ratio " + std::to_string(factor_.pivot_ratio()) + ")");
        }
        reduced_ = std::move(Kr);
    }

    /// Solves for all parameter columns (loads from sys.F). `lifting` is any
    /// full-space field satisfying the constraints for each parameter column;
    /// by default the offsets R. A lifting close to the solution (e.g. the
    /// macro polynomial) leaves only the small correction to the solver.
    ConstrainedSolution solve(const GlobalSystem& sys, const Eigen::MatrixXd* lifting = nullptr) const {
        const int P = red_.num_params();
        const Eigen::MatrixXd& L = lifting ? *lifting : red_.R;
        if (L.rows() != sys.K.rows() || L.cols() != P) throw SolverError("lifting has the wrong shape");
        Eigen::MatrixXd rhs = -(red_.T.transpose() * (sys.K * L));
        if (sys.F.size() > 0) {
            if (sys.F.cols() != P) throw SolverError("load columns do not match the constraint parameters");
            rhs += red_.T.transpose() * sys.F;
        }
        ConstrainedSolution out;
        if (red_.num_free() > 0) {
            Eigen::MatrixXd Z = factor_.solve(scale_.asDiagonal() * rhs);
            Z = scale_.asDiagonal() * Z;
            out.U = red_.T * Z + L;
        } else {
            out.U = L;
        }
        out.residual = residual_check(sys, red_, out.U);
        if (!(out.residual <= opt_.residualTolerance))
            throw SolverError("residual check failed: " + std::to_string(out.residual));
        return out;
    }

    const Eigen::SparseMatrix<double>& scaled_reduced_matrix() const { return reduced_; }
    const Eigen::VectorXd& scaling() const { return scale_; }
    double pivot_ratio() const { return factor_.pivot_ratio(); }
    const BlockLDLT& factorization() const { return factor_; }

private:
    const AffineReduction& red_;
    SolverOptions opt_;
    Eigen::VectorXd scale_;
    Eigen::SparseMatrix<double> reduced_;
    BlockLDLT factor_;
};

inline ConstrainedSolution solve(const GlobalSystem& sys, const AffineReduction& red, const SolverOptions& opt = {}) {
    return ReducedSolver(sys, red, opt).solve(sys);
}

}  // namespace flexohom

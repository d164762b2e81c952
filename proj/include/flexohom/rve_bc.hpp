#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bell.hpp"
#include "constitutive.hpp"
#include "error.hpp"
#include "mesh.hpp"

namespace flexohom {

/// Macroscopic generalized strain driving an RVE: (eps_M, g_M, -E_M).
using MacroState = GeneralizedStrainState;

/// Unit macro state number j in the [eps; g; -E] ordering.
inline MacroState unit_macro_state(int j) {
    Vec11 v = Vec11::Zero();
    v[j] = 1.0;
    return MacroState::from_stacked(v);
}

/// Nodal values of the macro polynomial fields
///   u_i = eps_ij x_j + 1/2 g_ijk x_j x_k,   phi = (-E)_j x_j
/// and their first and second derivatives, as linear maps of the macro state.
struct MacroRowBlocks {
    Eigen::Matrix<double, 12, 3> W;
    Eigen::Matrix<double, 12, 6> S;
    Eigen::Matrix<double, 6, 2> L;
};

inline MacroRowBlocks macro_row_blocks(double x1, double x2) {
    MacroRowBlocks b;
    b.W.setZero();
    b.S.setZero();
    b.L.setZero();
    // u1 rows: value, d1, d2, d11, d12, d22
    b.W.row(0) << x1, 0, x2;
    b.W.row(1) << 1, 0, 0;
    b.W.row(2) << 0, 0, 1;
    b.S.row(0) << 0.5 * x1 * x1, x1 * x2, 0.5 * x2 * x2, 0, 0, 0;
    b.S.row(1) << x1, x2, 0, 0, 0, 0;
    b.S.row(2) << 0, x1, x2, 0, 0, 0;
    b.S.row(3) << 1, 0, 0, 0, 0, 0;
    b.S.row(4) << 0, 1, 0, 0, 0, 0;
    b.S.row(5) << 0, 0, 1, 0, 0, 0;
    // u2 rows
    b.W.row(6) << 0, x2, x1;
    b.W.row(7) << 0, 0, 1;
    b.W.row(8) << 0, 1, 0;
    b.S.row(6) << 0, 0, 0, 0.5 * x1 * x1, x1 * x2, 0.5 * x2 * x2;
    b.S.row(7) << 0, 0, 0, x1, x2, 0;
    b.S.row(8) << 0, 0, 0, 0, x1, x2;
    b.S.row(9) << 0, 0, 0, 1, 0, 0;
    b.S.row(10) << 0, 0, 0, 0, 1, 0;
    b.S.row(11) << 0, 0, 0, 0, 0, 1;
    // phi rows
    b.L.row(0) << x1, x2;
    b.L.row(1) << 1, 0;
    b.L.row(2) << 0, 1;
    return b;
}

/// All 18 nodal dofs of the macro polynomial as an 18 x 11 map of the stacked macro state.
inline Eigen::Matrix<double, kDofsPerNode, kGeneralizedSize> macro_node_matrix(const Vec2& x) {
    const auto b = macro_row_blocks(x.x(), x.y());
    Eigen::Matrix<double, kDofsPerNode, kGeneralizedSize> N = Eigen::Matrix<double, kDofsPerNode, kGeneralizedSize>::Zero();
    N.block<12, 3>(0, 0) = b.W;
    N.block<12, 6>(0, 3) = b.S;
    N.block<6, 2>(12, 9) = b.L;
    return N;
}

/// Global nodal vector of the macro polynomial for each unit macro component (ndof x 11).
inline Eigen::MatrixXd macro_polynomial_dofs(const Mesh& m) {
    Eigen::MatrixXd U(m.num_nodes() * kDofsPerNode, kGeneralizedSize);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) U.middleRows<kDofsPerNode>(i * kDofsPerNode) = macro_node_matrix(m.nodes[i]);
    return U;
}

/// slave = sum c_i master_i + offset . p, with p the parameter vector
/// (the 11 macro components for RVEs, a single load factor for macro problems).
struct AffineRelation {
    int slave = -1;
    std::vector<std::pair<int, double>> masters;
    Eigen::RowVectorXd offset;
};

struct PrescribedDof {
    int dof = -1;
    Eigen::RowVectorXd value;
};

struct ConstraintSet {
    int numParams = kGeneralizedSize;
    std::vector<AffineRelation> relations;
    std::vector<PrescribedDof> prescribed;
};

/// Gradient generalized periodic conditions: right/top nodes follow their
/// left/bottom partners up to the jump of the macro polynomial; the four
/// corners are fully prescribed with zero fluctuation.
inline ConstraintSet build_pbc(const Mesh& m, const BoundarySets& b, const PeriodicPairs& pairs) {
    ConstraintSet cs;
    cs.numParams = kGeneralizedSize;
    auto addPair = [&](int master, int slave) {
        const Eigen::Matrix<double, kDofsPerNode, kGeneralizedSize> jump =
            macro_node_matrix(m.nodes[slave]) - macro_node_matrix(m.nodes[master]);
        for (int k = 0; k < kDofsPerNode; ++k) {
            AffineRelation r;
            r.slave = slave * kDofsPerNode + k;
            r.masters = {{master * kDofsPerNode + k, 1.0}};
            r.offset = jump.row(k);
            cs.relations.push_back(std::move(r));
        }
    };
    for (const auto& [l, r] : pairs.leftRight) addPair(l, r);
    for (const auto& [bt, tp] : pairs.bottomTop) addPair(bt, tp);
    for (int c : b.corners) {
        const auto N = macro_node_matrix(m.nodes[c]);
        for (int k = 0; k < kDofsPerNode; ++k) cs.prescribed.push_back({c * kDofsPerNode + k, N.row(k)});
    }
    return cs;
}

/// Gradient displacement conditions: every outer-boundary dof follows the macro polynomial.
inline ConstraintSet build_dbc(const Mesh& m, const BoundarySets& b) {
    ConstraintSet cs;
    cs.numParams = kGeneralizedSize;
    for (int n : b.all()) {
        const auto N = macro_node_matrix(m.nodes[n]);
        for (int k = 0; k < kDofsPerNode; ++k) cs.prescribed.push_back({n * kDofsPerNode + k, N.row(k)});
    }
    return cs;
}

/// full = T * free + R * p.
struct AffineReduction {
    Eigen::SparseMatrix<double> T;
    Eigen::MatrixXd R;
    /// free index of each full dof, -1 for constrained dofs
    std::vector<int> freeIndex;

    int num_free() const { return static_cast<int>(T.cols()); }
    int num_params() const { return static_cast<int>(R.cols()); }
    Eigen::VectorXd offset(const Eigen::VectorXd& p) const { return R * p; }
};

inline AffineReduction eliminate(const ConstraintSet& cs, int ndof) {
    const int P = cs.numParams;
    enum Kind : char { Free, Slave, Fixed };
    std::vector<char> kind(ndof, Free);
    std::vector<int> relOf(ndof, -1), fixOf(ndof, -1);
    for (std::size_t i = 0; i < cs.prescribed.size(); ++i) {
        const auto& p = cs.prescribed[i];
        if (p.dof < 0 || p.dof >= ndof) throw ConstraintError("prescribed dof out of range");
        if (p.value.size() != P) throw ConstraintError("prescribed value has the wrong parameter count");
        if (kind[p.dof] != Free) throw ConstraintError("dof " + std::to_string(p.dof) + " prescribed twice");
        kind[p.dof] = Fixed;
        fixOf[p.dof] = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < cs.relations.size(); ++i) {
        const auto& r = cs.relations[i];
        if (r.slave < 0 || r.slave >= ndof) throw ConstraintError("slave dof out of range");
        if (r.offset.size() != P) throw ConstraintError("relation offset has the wrong parameter count");
        if (kind[r.slave] == Fixed)
            throw ConstraintError("dof " + std::to_string(r.slave) + " is both prescribed and a slave");
        if (kind[r.slave] == Slave) throw ConstraintError("dof " + std::to_string(r.slave) + " is a slave twice");
        kind[r.slave] = Slave;
        relOf[r.slave] = static_cast<int>(i);
    }
    for (const auto& r : cs.relations)
        for (const auto& [mst, c] : r.masters)
            if (mst < 0 || mst >= ndof) throw ConstraintError("master dof out of range");

    AffineReduction red;
    red.freeIndex.assign(ndof, -1);
    int nfree = 0;
    for (int d = 0; d < ndof; ++d)
        if (kind[d] == Free) red.freeIndex[d] = nfree++;

    // Resolve slave rows recursively (masters may themselves be constrained).
    std::vector<std::map<int, double>> rowT(ndof);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(ndof, P);
    std::vector<char> state(ndof, 0);  // 0 todo, 1 in progress, 2 done
    auto resolve = [&](auto&& self, int d) -> void {
        if (state[d] == 2) return;
        if (state[d] == 1) throw ConstraintError("cyclic constraint relations at dof " + std::to_string(d));
        state[d] = 1;
        if (kind[d] == Free) {
            rowT[d][red.freeIndex[d]] = 1.0;
        } else if (kind[d] == Fixed) {
            R.row(d) = cs.prescribed[fixOf[d]].value;
        } else {
            const auto& r = cs.relations[relOf[d]];
            R.row(d) = r.offset;
            for (const auto& [mst, c] : r.masters) {
                if (mst == d) throw ConstraintError("dof " + std::to_string(d) + " is its own master");
                self(self, mst);
                for (const auto& [j, v] : rowT[mst]) rowT[d][j] += c * v;
                R.row(d) += c * R.row(mst);
            }
        }
        state[d] = 2;
    };
    for (int d = 0; d < ndof; ++d) resolve(resolve, d);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ndof);
    for (int d = 0; d < ndof; ++d)
        for (const auto& [j, v] : rowT[d])
            if (v != 0.0) trip.emplace_back(d, j, v);
    red.T.resize(ndof, nfree);
    red.T.setFromTriplets(trip.begin(), trip.end());
    red.R = std::move(R);
    return red;
}

}  // namespace flexohom

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

#include "error.hpp"

namespace flexohom {

/// Supernodal multifrontal block factorization for symmetric quasi-definite
/// matrices whose unknowns come in small dense groups (the free dofs of one
/// node). Groups are ordered by approximate minimum degree on the group graph;
/// pivot blocks are factorized with partial-pivoting LU so no symmetric
/// pivoting across groups is needed.
class BlockLDLT {
public:
    BlockLDLT() = default;

    /// `groupStart` holds nb+1 increasing offsets partitioning the rows of A.
    void compute(const Eigen::SparseMatrix<double>& A, const std::vector<int>& groupStart) {
        const int n = static_cast<int>(A.rows());
        if (A.cols() != n) throw SolverError("matrix is not square");
        if (groupStart.empty() || groupStart.front() != 0 || groupStart.back() != n)
            throw SolverError("group partition does not cover the matrix");
        n_ = n;
        const int nb = static_cast<int>(groupStart.size()) - 1;
        std::vector<int> groupOf(n);
        for (int b = 0; b < nb; ++b) {
            if (groupStart[b + 1] <= groupStart[b]) throw SolverError("empty dof group");
            for (int d = groupStart[b]; d < groupStart[b + 1]; ++d) groupOf[d] = b;
        }

        // Group adjacency (symmetric pattern).
        std::vector<std::vector<int>> adj(nb);
        for (int c = 0; c < n; ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it) {
                const int a = groupOf[it.row()], b = groupOf[c];
                if (a != b) {
                    adj[a].push_back(b);
                    adj[b].push_back(a);
                }
            }
        for (auto& v : adj) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }

        // AMD on the group graph.
        std::vector<int> amdNew(nb);
        {
            std::vector<Eigen::Triplet<double>> trip;
            for (int a = 0; a < nb; ++a) {
                trip.emplace_back(a, a, 1.0);
                for (int b : adj[a]) trip.emplace_back(a, b, 1.0);
            }
            Eigen::SparseMatrix<double> P(nb, nb);
            P.setFromTriplets(trip.begin(), trip.end());
            Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
            Eigen::AMDOrdering<int> amd;
            amd(P, perm);
            // the ordering lists, for each new position, the original group
            for (int k = 0; k < nb; ++k) amdNew[perm.indices()[k]] = k;
        }

        // Elimination tree in AMD numbering, then a postorder.
        std::vector<std::vector<int>> adjNew(nb);
        for (int a = 0; a < nb; ++a)
            for (int b : adj[a]) adjNew[amdNew[a]].push_back(amdNew[b]);
        std::vector<int> parent(nb, -1), ancestor(nb, -1);
        for (int i = 0; i < nb; ++i)
            for (int k : adjNew[i]) {
                if (k >= i) continue;
                int r = k;
                while (ancestor[r] != -1 && ancestor[r] != i) {
                    const int next = ancestor[r];
                    ancestor[r] = i;
                    r = next;
                }
                if (ancestor[r] == -1) {
                    ancestor[r] = i;
                    parent[r] = i;
                }
            }
        std::vector<std::vector<int>> kids(nb);
        for (int i = 0; i < nb; ++i)
            if (parent[i] != -1) kids[parent[i]].push_back(i);
        std::vector<int> post;
        post.reserve(nb);
        {
            std::vector<std::pair<int, std::size_t>> stack;
            for (int root = 0; root < nb; ++root) {
                if (parent[root] != -1) continue;
                stack.push_back({root, 0});
                while (!stack.empty()) {
                    auto& [v, next] = stack.back();
                    if (next < kids[v].size()) {
                        const int c = kids[v][next++];
                        stack.push_back({c, 0});
                    } else {
                        post.push_back(v);
                        stack.pop_back();
                    }
                }
            }
        }
        std::vector<int> postNew(nb);
        for (int i = 0; i < nb; ++i) postNew[post[i]] = i;
        std::vector<int> newOf(nb);  // original group -> final position
        for (int a = 0; a < nb; ++a) newOf[a] = postNew[amdNew[a]];
        std::vector<int> oldOf(nb);
        for (int a = 0; a < nb; ++a) oldOf[newOf[a]] = a;
        std::vector<int> par(nb, -1);
        for (int i = 0; i < nb; ++i)
            if (parent[i] != -1) par[postNew[i]] = postNew[parent[i]];

        // Dof permutation: groups laid out in final order.
        size_.resize(nb);
        start_.assign(nb + 1, 0);
        for (int j = 0; j < nb; ++j) {
            size_[j] = groupStart[oldOf[j] + 1] - groupStart[oldOf[j]];
            start_[j + 1] = start_[j] + size_[j];
        }
        newDof_.resize(n);
        for (int a = 0; a < nb; ++a)
            for (int k = 0; k < groupStart[a + 1] - groupStart[a]; ++k) newDof_[groupStart[a] + k] = start_[newOf[a]] + k;

        // Symbolic structure: rows below each group column.
        std::vector<std::vector<int>> below(nb);
        {
            std::vector<std::vector<int>> children(nb);
            for (int j = 0; j < nb; ++j)
                if (par[j] != -1) children[par[j]].push_back(j);
            for (int j = 0; j < nb; ++j) {
                std::vector<int> s;
                for (int b : adj[oldOf[j]])
                    if (newOf[b] > j) s.push_back(newOf[b]);
                for (int c : children[j])
                    for (int r : below[c])
                        if (r > j) s.push_back(r);
                std::sort(s.begin(), s.end());
                s.erase(std::unique(s.begin(), s.end()), s.end());
                below[j] = std::move(s);
            }
        }

        // Fundamental supernodes: chains with nested structure.
        supers_.clear();
        {
            std::vector<int> nkids(nb, 0);
            for (int j = 0; j < nb; ++j)
                if (par[j] != -1) ++nkids[par[j]];
            int j = 0;
            while (j < nb) {
                Supernode s;
                s.first = j;
                int last = j;
                while (last + 1 < nb && par[last] == last + 1 && nkids[last + 1] == 1 &&
                       below[last].size() == below[last + 1].size() + 1)
                    ++last;
                s.last = last;
                s.rows = below[last];
                supers_.push_back(std::move(s));
                j = last + 1;
            }
        }
        std::vector<int> superOf(nb);
        for (std::size_t s = 0; s < supers_.size(); ++s)
            for (int j = supers_[s].first; j <= supers_[s].last; ++j) superOf[j] = static_cast<int>(s);
        std::vector<std::vector<int>> superKids(supers_.size());
        for (std::size_t s = 0; s < supers_.size(); ++s) {
            const int p = par[supers_[s].last];
            if (p != -1) superKids[superOf[p]].push_back(static_cast<int>(s));
        }

        // Numeric multifrontal factorization.
        std::vector<int> pos(n, -1);  // dof (new) -> position in current front
        std::vector<Eigen::MatrixXd> update(supers_.size());
        std::vector<std::vector<int>> updateDofs(supers_.size());
        maxPivot_ = 0.0;
        minPivot_ = std::numeric_limits<double>::infinity();
        fill_ = 0;
        // new dof -> original dof, to read A's columns
        std::vector<int> oldDof(n);
        for (int d = 0; d < n; ++d) oldDof[newDof_[d]] = d;
        for (std::size_t si = 0; si < supers_.size(); ++si) {
            Supernode& s = supers_[si];
            const int c0 = start_[s.first], c1 = start_[s.last + 1];
            const int n1 = c1 - c0;
            s.rowDofs.clear();
            for (int b : s.rows)
                for (int k = 0; k < size_[b]; ++k) s.rowDofs.push_back(start_[b] + k);
            const int n2 = static_cast<int>(s.rowDofs.size());
            const int m = n1 + n2;
            for (int k = 0; k < n1; ++k) pos[c0 + k] = k;
            for (int k = 0; k < n2; ++k) pos[s.rowDofs[k]] = n1 + k;

            Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, m);
            for (int c = c0; c < c1; ++c)
                for (Eigen::SparseMatrix<double>::InnerIterator it(A, oldDof[c]); it; ++it) {
                    const int r = newDof_[it.row()];
                    if (r < c0) continue;
                    const int pr = pos[r];
                    if (pr < 0) throw SolverError("symbolic structure misses an entry");
                    F(pr, c - c0) = it.value();
                    F(c - c0, pr) = it.value();
                }
            for (int kid : superKids[si]) {
                const auto& dofs = updateDofs[kid];
                const Eigen::MatrixXd& U = update[kid];
                std::vector<int> idx(dofs.size());
                for (std::size_t k = 0; k < dofs.size(); ++k) {
                    idx[k] = pos[dofs[k]];
                    if (idx[k] < 0) throw SolverError("child update outside the parent front");
                }
                for (std::size_t b = 0; b < dofs.size(); ++b)
                    for (std::size_t a = 0; a < dofs.size(); ++a) F(idx[a], idx[b]) += U(a, b);
                update[kid] = Eigen::MatrixXd();
                updateDofs[kid].clear();
                updateDofs[kid].shrink_to_fit();
            }

            s.lu.compute(F.topLeftCorner(n1, n1));
            const auto& LU = s.lu.matrixLU();
            for (int k = 0; k < n1; ++k) {
                const double p = std::abs(LU(k, k));
                maxPivot_ = std::max(maxPivot_, p);
                minPivot_ = std::min(minPivot_, p);
            }
            s.F21 = F.bottomLeftCorner(n2, n1);
            if (n2 > 0) {
                const Eigen::MatrixXd X = s.lu.solve(Eigen::MatrixXd(s.F21.transpose()));
                // the Schur complement is symmetric: form the lower half, mirror it
                Eigen::MatrixXd S = F.bottomRightCorner(n2, n2);
                S.triangularView<Eigen::Lower>() -= s.F21 * X;
                S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
                update[si] = std::move(S);
                updateDofs[si] = s.rowDofs;
            }
            fill_ += static_cast<long long>(n1) * (n1 + 1) / 2 + static_cast<long long>(n1) * n2;
            for (int k = 0; k < n1; ++k) pos[c0 + k] = -1;
            for (int d : s.rowDofs) pos[d] = -1;
        }
        computed_ = true;
    }

    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const {
        if (!computed_) throw SolverError("factorization not computed");
        if (B.rows() != n_) throw SolverError("right-hand side has the wrong size");
        Eigen::MatrixXd X(n_, B.cols());
        for (int d = 0; d < n_; ++d) X.row(newDof_[d]) = B.row(d);
        for (const auto& s : supers_) {
            const int c0 = start_[s.first], n1 = start_[s.last + 1] - c0;
            if (s.rowDofs.empty()) continue;
            const Eigen::MatrixXd w = s.lu.solve(X.middleRows(c0, n1));
            const Eigen::MatrixXd upd = s.F21 * w;
            for (std::size_t k = 0; k < s.rowDofs.size(); ++k) X.row(s.rowDofs[k]) -= upd.row(k);
        }
        for (auto it = supers_.rbegin(); it != supers_.rend(); ++it) {
            const auto& s = *it;
            const int c0 = start_[s.first], n1 = start_[s.last + 1] - c0;
            Eigen::MatrixXd rhs = X.middleRows(c0, n1);
            if (!s.rowDofs.empty()) {
                Eigen::MatrixXd x2(s.rowDofs.size(), X.cols());
                for (std::size_t k = 0; k < s.rowDofs.size(); ++k) x2.row(k) = X.row(s.rowDofs[k]);
                rhs.noalias() -= s.F21.transpose() * x2;
            }
            X.middleRows(c0, n1) = s.lu.solve(rhs);
        }
        Eigen::MatrixXd out(n_, B.cols());
        for (int d = 0; d < n_; ++d) out.row(d) = X.row(newDof_[d]);
        return out;
    }

    /// Smallest over largest pivot magnitude of the block LU factors.
    double pivot_ratio() const { return maxPivot_ > 0.0 ? minPivot_ / maxPivot_ : 0.0; }
    /// Stored factor entries (lower triangle plus off-diagonal blocks).
    long long fill() const { return fill_; }
    std::size_t num_supernodes() const { return supers_.size(); }

private:
    struct Supernode {
        int first = 0, last = 0;
        std::vector<int> rows;     // groups below the supernode
        std::vector<int> rowDofs;  // their dofs in the permuted numbering
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        Eigen::MatrixXd F21;
    };

    int n_ = 0;
    bool computed_ = false;
    std::vector<int> size_, start_, newDof_;
    std::vector<Supernode> supers_;
    double maxPivot_ = 0.0, minPivot_ = 0.0;
    long long fill_ = 0;
};

}  // namespace flexohom

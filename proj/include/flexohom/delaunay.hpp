#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace flexohom {

namespace detail {

inline long double orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    const long double abx = static_cast<long double>(b.x()) - a.x();
    const long double aby = static_cast<long double>(b.y()) - a.y();
    const long double acx = static_cast<long double>(c.x()) - a.x();
    const long double acy = static_cast<long double>(c.y()) - a.y();
    return abx * acy - aby * acx;
}

/// > 0 when d lies strictly inside the circumcircle of the CCW triangle abc.
inline long double incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                            const Eigen::Vector2d& d) {
    const long double adx = static_cast<long double>(a.x()) - d.x(), ady = static_cast<long double>(a.y()) - d.y();
    const long double bdx = static_cast<long double>(b.x()) - d.x(), bdy = static_cast<long double>(b.y()) - d.y();
    const long double cdx = static_cast<long double>(c.x()) - d.x(), cdy = static_cast<long double>(c.y()) - d.y();
    const long double ad = adx * adx + ady * ady;
    const long double bd = bdx * bdx + bdy * bdy;
    const long double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace detail

/// Incremental Delaunay triangulation (Bowyer-Watson) of points inside an
/// axis-aligned rectangle. The four rectangle corners are the first four
/// points; every later point must lie in the closed rectangle. Points on the
/// rectangle sides split hull edges without producing flat triangles.
class RectDelaunay {
public:
    RectDelaunay(Eigen::Vector2d lo, Eigen::Vector2d hi) : lo_(lo), hi_(hi) {
        if (!(hi.x() > lo.x() && hi.y() > lo.y())) throw MeshError("triangulation box is empty");
        pts_ = {lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}};
        add_triangle(0, 1, 2);
        add_triangle(0, 2, 3);
    }

    const std::vector<Eigen::Vector2d>& points() const { return pts_; }
    std::size_t num_points() const { return pts_.size(); }

    /// Inserts a point and returns its index.
    int insert(Eigen::Vector2d p) {
        const double tol = 1e-12 * std::max(hi_.x() - lo_.x(), hi_.y() - lo_.y());
        if (p.x() < lo_.x() - tol || p.x() > hi_.x() + tol || p.y() < lo_.y() - tol || p.y() > hi_.y() + tol)
            throw MeshError("point outside the triangulation box");
        // snap onto the box so side membership is exact
        if (std::abs(p.x() - lo_.x()) <= tol) p.x() = lo_.x();
        if (std::abs(p.x() - hi_.x()) <= tol) p.x() = hi_.x();
        if (std::abs(p.y() - lo_.y()) <= tol) p.y() = lo_.y();
        if (std::abs(p.y() - hi_.y()) <= tol) p.y() = hi_.y();

        const int pid = static_cast<int>(pts_.size());
        pts_.push_back(p);

        std::vector<char> bad(tris_.size(), 0);
        int seed = -1;
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            const Circ& c = circ_[t];
            const double dx = p.x() - c.cx, dy = p.y() - c.cy;
            if (dx * dx + dy * dy > c.r2 * (1.0 + 1e-9) + 1e-300) continue;
            const auto& v = tris_[t];
            if (detail::incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], p) > 0) bad[t] = 1;
            if (seed < 0 && contains(t, p)) seed = static_cast<int>(t);
        }
        if (seed < 0) {
            // fall back to a full scan (circumcircle cache rejected the host)
            for (std::size_t t = 0; t < tris_.size() && seed < 0; ++t)
                if (contains(t, p)) seed = static_cast<int>(t);
        }
        if (seed < 0) throw MeshError("point location failed during triangulation");
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            const auto& v = tris_[t];
            for (int k = 0; k < 3; ++k)
                if (pts_[v[k]] == p) throw MeshError("duplicate point in triangulation");
        }
        bad[seed] = 1;

        // Shrink the cavity until it is star-shaped with respect to p.
        std::vector<std::pair<int, int>> boundary;
        for (int guard = 0;; ++guard) {
            if (guard > 1000) throw MeshError("cavity repair did not converge");
            boundary.clear();
            restrict_to_component(bad, seed);
            std::map<std::pair<int, int>, int> owner;
            for (std::size_t t = 0; t < tris_.size(); ++t) {
                if (!bad[t]) continue;
                const auto& v = tris_[t];
                for (int k = 0; k < 3; ++k) {
                    const int a = v[k], b = v[(k + 1) % 3];
                    auto it = owner.find({b, a});
                    if (it != owner.end()) {
                        owner.erase(it);
                    } else {
                        owner[{a, b}] = static_cast<int>(t);
                    }
                }
            }
            bool changed = false;
            for (const auto& [e, t] : owner) {
                const long double o = detail::orient2d(pts_[e.first], pts_[e.second], p);
                if (o > 0) continue;
                if (o == 0 && on_same_side(e.first, e.second, pid)) continue;  // hull edge being split
                if (t != seed) {
                    bad[t] = 0;
                    changed = true;
                }
            }
            if (!changed) {
                for (const auto& [e, t] : owner) {
                    const long double o = detail::orient2d(pts_[e.first], pts_[e.second], p);
                    if (o > 0) {
                        boundary.push_back(e);
                    } else if (!(o == 0 && on_same_side(e.first, e.second, pid))) {
                        throw MeshError("degenerate cavity during triangulation");
                    }
                }
                break;
            }
        }

        std::vector<std::array<int, 3>> keep;
        std::vector<Circ> keepCirc;
        keep.reserve(tris_.size() + 2);
        keepCirc.reserve(tris_.size() + 2);
        for (std::size_t t = 0; t < tris_.size(); ++t)
            if (!bad[t]) {
                keep.push_back(tris_[t]);
                keepCirc.push_back(circ_[t]);
            }
        tris_ = std::move(keep);
        circ_ = std::move(keepCirc);
        for (const auto& e : boundary) add_triangle(e.first, e.second, pid);
        return pid;
    }

    const std::vector<std::array<int, 3>>& triangles() const { return tris_; }

    bool has_edge(int a, int b) const {
        for (const auto& v : tris_)
            for (int k = 0; k < 3; ++k) {
                const int p = v[k], q = v[(k + 1) % 3];
                if ((p == a && q == b) || (p == b && q == a)) return true;
            }
        return false;
    }

    /// Replaces point i by p (used by smoothing); the caller guarantees validity.
    void move_point(int i, const Eigen::Vector2d& p) { pts_[i] = p; }

    /// Removes triangles for which drop(t) is true. The object must not be
    /// used for further insertion afterwards.
    template <typename Pred>
    void erase_triangles(Pred drop) {
        std::vector<std::array<int, 3>> keep;
        std::vector<Circ> keepCirc;
        for (std::size_t t = 0; t < tris_.size(); ++t)
            if (!drop(tris_[t])) {
                keep.push_back(tris_[t]);
                keepCirc.push_back(circ_[t]);
            }
        tris_ = std::move(keep);
        circ_ = std::move(keepCirc);
    }

private:
    struct Circ {
        double cx, cy, r2;
    };

    int side_mask(int i) const {
        const auto& p = pts_[i];
        return (p.x() == lo_.x() ? 1 : 0) | (p.x() == hi_.x() ? 2 : 0) | (p.y() == lo_.y() ? 4 : 0) |
               (p.y() == hi_.y() ? 8 : 0);
    }
    bool on_same_side(int a, int b, int c) const { return (side_mask(a) & side_mask(b) & side_mask(c)) != 0; }

    // Keeps only the edge-connected part of the cavity that contains the seed.
    void restrict_to_component(std::vector<char>& bad, int seed) const {
        std::map<std::pair<int, int>, int> edgeTri;
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (!bad[t]) continue;
            const auto& v = tris_[t];
            for (int k = 0; k < 3; ++k) edgeTri[{v[k], v[(k + 1) % 3]}] = static_cast<int>(t);
        }
        std::vector<char> seen(tris_.size(), 0);
        std::vector<int> stack{seed};
        seen[seed] = 1;
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            const auto& v = tris_[t];
            for (int k = 0; k < 3; ++k) {
                auto it = edgeTri.find({v[(k + 1) % 3], v[k]});
                if (it != edgeTri.end() && !seen[it->second]) {
                    seen[it->second] = 1;
                    stack.push_back(it->second);
                }
            }
        }
        for (std::size_t t = 0; t < tris_.size(); ++t) bad[t] = bad[t] && seen[t];
    }

    bool contains(std::size_t t, const Eigen::Vector2d& p) const {
        const auto& v = tris_[t];
        return detail::orient2d(pts_[v[0]], pts_[v[1]], p) >= 0 && detail::orient2d(pts_[v[1]], pts_[v[2]], p) >= 0 &&
               detail::orient2d(pts_[v[2]], pts_[v[0]], p) >= 0;
    }

    void add_triangle(int a, int b, int c) {
        tris_.push_back({a, b, c});
        const auto& A = pts_[a];
        const auto& B = pts_[b];
        const auto& C = pts_[c];
        const double bx = B.x() - A.x(), by = B.y() - A.y();
        const double cx = C.x() - A.x(), cy = C.y() - A.y();
        const double d = 2.0 * (bx * cy - by * cx);
        const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
        const double ux = (cy * b2 - by * c2) / d;
        const double uy = (bx * c2 - cx * b2) / d;
        circ_.push_back({A.x() + ux, A.y() + uy, ux * ux + uy * uy});
    }

    Eigen::Vector2d lo_, hi_;
    std::vector<Eigen::Vector2d> pts_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<Circ> circ_;
};

}  // namespace flexohom

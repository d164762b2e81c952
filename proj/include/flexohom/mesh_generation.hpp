#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "delaunay.hpp"
#include "error.hpp"
#include "mesh.hpp"

namespace flexohom {

enum class ShapeKind { Circle, Triangle, Rectangle };

/// Closed shape used for holes and inclusions.
///   Circle:    size = radius.
///   Triangle:  equilateral, size = inscribed-circle radius, angle = direction
///              of one apex measured from the x1 axis (0 puts an apex on +x1).
///   Rectangle: size = half-width along x1, size2 = half-height along x2.
struct Shape {
    ShapeKind kind = ShapeKind::Circle;
    Vec2 center = Vec2::Zero();
    double size = 0.0;
    double size2 = 0.0;
    double angle = 0.0;

    static Shape circle(Vec2 c, double r) { return {ShapeKind::Circle, c, r, 0.0, 0.0}; }
    static Shape triangle(Vec2 c, double inradius, double apexAngle = 0.0) {
        return {ShapeKind::Triangle, c, inradius, 0.0, apexAngle};
    }
    static Shape rectangle(Vec2 c, double halfWidth, double halfHeight) {
        return {ShapeKind::Rectangle, c, halfWidth, halfHeight, 0.0};
    }

    double area() const {
        switch (kind) {
            case ShapeKind::Circle: return std::numbers::pi * size * size;
            case ShapeKind::Triangle: return 3.0 * std::sqrt(3.0) * size * size;
            case ShapeKind::Rectangle: return 4.0 * size * size2;
        }
        return 0.0;
    }
};

/// Square RVE [-L/2, L/2]^2 with optional holes and inclusions.
struct RveGeometry {
    double sideLength = 1.0;
    std::vector<Shape> holes;
    std::vector<Shape> inclusions;
    /// Tag every triangle as inclusion material (the inclusion fills the cell).
    bool fullInclusion = false;
    double targetElementSize = 0.05;
    unsigned seed = 20231;
    std::string matrixMaterial = "matrix";
    std::string inclusionMaterial = "inclusion";
};

inline constexpr int kMatrixRegion = 0;
inline constexpr int kInclusionRegion = 1;

/// Radius of a centered circular hole giving the requested porosity.
inline double porosity_radius(double porosity, double sideLength) {
    if (!(porosity >= 0.0) || !(porosity < std::numbers::pi / 4.0))
        throw MeshError("porosity must lie in [0, pi/4) for a single centered hole");
    return sideLength * std::sqrt(porosity / std::numbers::pi);
}

/// Checkerboard of n x n cells with square inclusions on the cells with even
/// i + j; each inclusion covers the fraction fill^2 of its cell (fill < 1 keeps
/// neighbouring inclusions apart).
inline std::vector<Shape> checkerboard_layout(double sideLength, int n, double fill) {
    if (n < 1 || !(fill > 0.0 && fill < 1.0)) throw MeshError("checkerboard needs n >= 1 and 0 < fill < 1");
    std::vector<Shape> out;
    const double cell = sideLength / n;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if ((i + j) % 2 == 0) {
                const Vec2 c(-0.5 * sideLength + (i + 0.5) * cell, -0.5 * sideLength + (j + 0.5) * cell);
                out.push_back(Shape::rectangle(c, 0.5 * fill * cell, 0.5 * fill * cell));
            }
    return out;
}

namespace detail {

inline int even_count(double length, double h, int minimum) {
    int n = static_cast<int>(std::ceil(length / h - 1e-9));
    n += n % 2;
    return std::max(n, minimum);
}

/// Counterclockwise polygon approximating a shape. Circles use a multiple of
/// four segments with vertices on the axes through the center, so the loop is
/// mirror-symmetric bit for bit.
inline std::vector<Vec2> shape_loop(const Shape& s, double h) {
    std::vector<Vec2> loop;
    if (!(s.size > 0.0)) throw MeshError("shape size must be positive");
    switch (s.kind) {
        case ShapeKind::Circle: {
            int n = std::max(32, 4 * static_cast<int>(std::ceil(2.0 * std::numbers::pi * s.size / (4.0 * h))));
            const int q = n / 4;
            for (int k = 0; k < n; ++k) {
                const int quadrant = k / q, j = k % q;
                const double a = 0.5 * std::numbers::pi * j / q;
                double c = j == 0 ? 1.0 : std::cos(a), sn = j == 0 ? 0.0 : std::sin(a);
                Vec2 d;
                switch (quadrant) {
                    case 0: d = {c, sn}; break;
                    case 1: d = {-sn, c}; break;
                    case 2: d = {-c, -sn}; break;
                    default: d = {sn, -c}; break;
                }
                loop.push_back(s.center + s.size * d);
            }
            break;
        }
        case ShapeKind::Triangle: {
            const double R = 2.0 * s.size;
            std::array<Vec2, 3> v;
            for (int k = 0; k < 3; ++k) {
                const double a = s.angle + 2.0 * std::numbers::pi * k / 3.0;
                double c = std::cos(a), sn = std::sin(a);
                if (std::abs(c) < 1e-15) c = 0.0;
                if (std::abs(sn) < 1e-15) sn = 0.0;
                v[k] = s.center + R * Vec2(c, sn);
            }
            const int m = even_count(2.0 * std::sqrt(3.0) * s.size, h, 12);
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < m; ++j) {
                    const double t = static_cast<double>(j) / m;
                    loop.push_back((1.0 - t) * v[k] + t * v[(k + 1) % 3]);
                }
            break;
        }
        case ShapeKind::Rectangle: {
            if (!(s.size2 > 0.0)) throw MeshError("rectangle half-height must be positive");
            const Vec2 c = s.center;
            const std::array<Vec2, 4> v = {c + Vec2(-s.size, -s.size2), c + Vec2(s.size, -s.size2),
                                           c + Vec2(s.size, s.size2), c + Vec2(-s.size, s.size2)};
            for (int k = 0; k < 4; ++k) {
                const double len = (v[(k + 1) % 4] - v[k]).norm();
                const int m = even_count(len, h, 4);
                for (int j = 0; j < m; ++j) {
                    // midpoint kept exact so axis-centered rectangles mirror cleanly
                    const Vec2 p = (j * 2 == m) ? Vec2(0.5 * (v[k] + v[(k + 1) % 4]))
                                                : Vec2(v[k] + (v[(k + 1) % 4] - v[k]) * (static_cast<double>(j) / m));
                    loop.push_back(p);
                }
            }
            break;
        }
    }
    return loop;
}

inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < x) inside = !inside;
        }
    }
    return inside;
}

inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * d)).norm();
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto o = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    };
    const double d1 = o(c, d, a), d2 = o(c, d, b), d3 = o(a, b, c), d4 = o(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    auto on = [&](const Vec2& p, const Vec2& q, const Vec2& r, double v) {
        return v == 0.0 && std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
               std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
    };
    return on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4);
}

struct Loop {
    std::vector<Vec2> pts;
    bool hole = false;
};

/// True when reflecting every loop across the axis (0: x1 -> -x1, 1: x2 -> -x2)
/// maps the loop set onto itself and no loop segment crosses the axis between vertices.
inline bool mirror_symmetric(const std::vector<Loop>& loops, int axis, double tol) {
    auto key = [&](std::vector<Vec2> v) {
        std::sort(v.begin(), v.end(), [](const Vec2& a, const Vec2& b) {
            return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
        });
        return v;
    };
    auto same = [&](const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
        if (a.size() != b.size()) return false;
        // sorted order can differ by rounding near ties; compare as sets
        std::vector<char> used(b.size(), 0);
        for (const auto& p : a) {
            bool found = false;
            for (std::size_t k = 0; k < b.size(); ++k)
                if (!used[k] && (p - b[k]).norm() <= tol) {
                    used[k] = 1;
                    found = true;
                    break;
                }
            if (!found) return false;
        }
        return true;
    };
    for (const auto& L : loops) {
        std::vector<Vec2> r = L.pts;
        for (auto& p : r) p[axis] = -p[axis];
        bool match = false;
        for (const auto& M : loops)
            if (M.hole == L.hole && same(key(r), key(M.pts))) {
                match = true;
                break;
            }
        if (!match) return false;
        for (std::size_t k = 0; k < L.pts.size(); ++k) {
            const double a = L.pts[k][axis], b = L.pts[(k + 1) % L.pts.size()][axis];
            if ((a > tol && b < -tol) || (a < -tol && b > tol)) return false;
        }
    }
    return true;
}

class PointGrid {
public:
    explicit PointGrid(double cell) : cell_(cell) {}
    void add(const Vec2& p) { cells_[key(cell_of(p.x()), cell_of(p.y()))].push_back(p); }
    double nearest(const Vec2& p, double radius) const {
        double best = std::numeric_limits<double>::infinity();
        const int r = static_cast<int>(std::ceil(radius / cell_));
        const long long cx = cell_of(p.x()), cy = cell_of(p.y());
        for (long long i = cx - r; i <= cx + r; ++i)
            for (long long j = cy - r; j <= cy + r; ++j) {
                auto it = cells_.find(key(i, j));
                if (it == cells_.end()) continue;
                for (const auto& q : it->second) best = std::min(best, (p - q).norm());
            }
        return best;
    }

private:
    long long cell_of(double v) const { return static_cast<long long>(std::floor(v / cell_)); }
    static long long key(long long i, long long j) { return i * 1000003LL + j; }
    double cell_;
    std::unordered_map<long long, std::vector<Vec2>> cells_;
};

}  // namespace detail

/// Periodic-conforming triangulation of a square RVE. Geometry mirror
/// symmetries (about x1 = 0 and/or x2 = 0) are detected and the mesh is built
/// on the fundamental part and reflected, so the mesh has the same symmetry
/// exactly. Opposite outer edges carry identical node distributions.
inline Mesh generate_rve_mesh(const RveGeometry& g) {
    const double L = g.sideLength;
    const double h = g.targetElementSize;
    if (!(L > 0.0)) throw MeshError("side length must be positive");
    if (!(h > 0.0) || h > L) throw MeshError("target element size must lie in (0, sideLength]");
    const double half = 0.5 * L;
    const double tol = 1e-10 * L;

    std::vector<detail::Loop> loops;
    for (const auto& s : g.holes) loops.push_back({detail::shape_loop(s, h), true});
    for (const auto& s : g.inclusions) loops.push_back({detail::shape_loop(s, h), false});

    // Feasibility: strictly inside the square, pairwise disjoint.
    for (std::size_t i = 0; i < loops.size(); ++i) {
        for (const auto& p : loops[i].pts)
            if (!(std::abs(p.x()) < half - tol && std::abs(p.y()) < half - tol))
                throw MeshError("infeasible geometry: shape " + std::to_string(i) + " leaves the square");
        for (std::size_t j = i + 1; j < loops.size(); ++j) {
            const auto& A = loops[i].pts;
            const auto& B = loops[j].pts;
            bool bad = detail::point_in_polygon(A[0], B) || detail::point_in_polygon(B[0], A);
            for (std::size_t a = 0; a < A.size() && !bad; ++a)
                for (std::size_t b = 0; b < B.size() && !bad; ++b)
                    bad = detail::segments_intersect(A[a], A[(a + 1) % A.size()], B[b], B[(b + 1) % B.size()]);
            if (bad)
                throw MeshError("infeasible geometry: shapes " + std::to_string(i) + " and " + std::to_string(j) +
                                " overlap");
        }
    }
    for (auto& L_ : loops)
        for (auto& p : L_.pts) {
            if (std::abs(p.x()) <= tol) p.x() = 0.0;
            if (std::abs(p.y()) <= tol) p.y() = 0.0;
        }

    const bool mx = detail::mirror_symmetric(loops, 0, 1e-9 * L);
    const bool my = detail::mirror_symmetric(loops, 1, 1e-9 * L);
    const Vec2 lo(mx ? 0.0 : -half, my ? 0.0 : -half);
    const Vec2 hi(half, half);
    auto inFundamental = [&](const Vec2& p) {
        return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
    };
    auto inHole = [&](const Vec2& p) {
        for (const auto& l : loops)
            if (l.hole && detail::point_in_polygon(p, l.pts)) return true;
        return false;
    };

    // Constraint segments restricted to the fundamental part.
    struct Seg {
        Vec2 a, b;
    };
    std::vector<Seg> segs;
    std::vector<Vec2> fixedPts;
    for (const auto& l : loops) {
        const std::size_t n = l.pts.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Vec2& a = l.pts[k];
            const Vec2& b = l.pts[(k + 1) % n];
            if (inFundamental(a)) fixedPts.push_back(a);
            if (inFundamental(a) && inFundamental(b)) {
                const bool onCut = (mx && a.x() == 0.0 && b.x() == 0.0) || (my && a.y() == 0.0 && b.y() == 0.0);
                if (!onCut) segs.push_back({a, b});
            }
        }
    }
    auto segClearance = [&](const Vec2& p) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& s : segs) d = std::min(d, detail::segment_distance(p, s.a, s.b));
        return d;
    };

    // Outer edges: one uniform distribution reused on every side.
    const int nOuter = detail::even_count(L, h, 2);
    std::vector<double> ticks(nOuter + 1);
    for (int k = 0; k <= nOuter / 2; ++k) {
        const double t = (k == nOuter / 2) ? 0.0 : -half + L * k / nOuter;
        ticks[k] = t;
        ticks[nOuter - k] = -t;
    }
    ticks[0] = -half;
    ticks[nOuter] = half;
    auto addBoundary = [&](const Vec2& p) {
        if (inFundamental(p)) fixedPts.push_back(p);
    };
    for (int k = 1; k < nOuter; ++k) {
        addBoundary({half, ticks[k]});
        addBoundary({ticks[k], half});
        if (!mx) addBoundary({-half, ticks[k]});
        if (!my) addBoundary({ticks[k], -half});
    }
    // Cut lines of the fundamental part: spacing h, kept off the loops.
    std::vector<Vec2> cutCandidates;
    const double bSpacing = L / nOuter;
    if (mx)
        for (int k = 1; lo.y() + k * bSpacing < hi.y() - 0.5 * bSpacing; ++k)
            cutCandidates.emplace_back(0.0, lo.y() + k * bSpacing);
    if (my)
        for (int k = 1; lo.x() + k * bSpacing < hi.x() - 0.5 * bSpacing; ++k)
            cutCandidates.emplace_back(lo.x() + k * bSpacing, 0.0);

    detail::PointGrid grid(h);
    for (const auto& p : fixedPts) grid.add(p);
    std::vector<Vec2> cutPts;
    for (const auto& p : cutCandidates) {
        if (inHole(p)) continue;
        if (segClearance(p) < 0.5 * bSpacing || grid.nearest(p, bSpacing) < 0.6 * bSpacing) continue;
        cutPts.push_back(p);
        grid.add(p);
    }

    // Free interior points: a graded layer next to each loop, concentric rings
    // around circles, then a jittered equilateral lattice.
    struct Candidate {
        Vec2 p;
        double spacing;
    };
    std::vector<Candidate> cands;
    for (const auto& l : loops) {
        const std::size_t n = l.pts.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Vec2& a = l.pts[k];
            const Vec2& b = l.pts[(k + 1) % n];
            const double s = (b - a).norm();
            const Vec2 nrm = Vec2(b.y() - a.y(), a.x() - b.x()) / s;  // outward for CCW loops
            const Vec2 mid = 0.5 * (a + b);
            cands.push_back({mid + 0.866 * s * nrm, s});
            cands.push_back({mid - 0.866 * s * nrm, s});
        }
    }
    for (std::size_t i = 0; i < loops.size(); ++i) {
        const Shape& s = i < g.holes.size() ? g.holes[i] : g.inclusions[i - g.holes.size()];
        if (s.kind != ShapeKind::Circle) continue;
        const int n0 = static_cast<int>(loops[i].pts.size());
        double spacing = 2.0 * std::numbers::pi * s.size / n0;
        for (int side : {1, -1}) {
            double d = 0.0, sp = spacing;
            while (sp < h) {
                d += 0.866 * sp;
                sp *= 1.35;
                const double rr = s.size + side * d;
                if (rr <= 0.0) break;
                const int n = 4 * static_cast<int>(std::ceil(2.0 * std::numbers::pi * rr / (4.0 * sp)));
                for (int k = 0; k < n; ++k) {
                    const double a = 2.0 * std::numbers::pi * (k + 0.5) / n;
                    cands.push_back({s.center + rr * Vec2(std::cos(a), std::sin(a)), std::min(sp, h)});
                }
            }
        }
    }
    {
        std::mt19937 rng(g.seed);
        std::uniform_real_distribution<double> jitter(-0.08 * h, 0.08 * h);
        const double dy = h * std::sqrt(3.0) / 2.0;
        int row = 0;
        for (double y = lo.y() + 0.5 * dy; y < hi.y(); y += dy, ++row) {
            for (double x = lo.x() + (row % 2 ? 0.5 * h : 0.0); x < hi.x(); x += h) {
                const double jx = jitter(rng), jy = jitter(rng);
                cands.push_back({Vec2(x + jx, y + jy), h});
            }
        }
    }
    std::vector<Vec2> freePts;
    for (const auto& c : cands) {
        const Vec2& p = c.p;
        if (!inFundamental(p)) continue;
        const double edgeDist = std::min({p.x() - lo.x(), hi.x() - p.x(), p.y() - lo.y(), hi.y() - p.y()});
        if (edgeDist < 0.5 * std::max(c.spacing, bSpacing)) continue;
        if (inHole(p)) continue;
        if (segClearance(p) < 0.5 * c.spacing) continue;
        if (grid.nearest(p, c.spacing) < 0.7 * c.spacing) continue;
        freePts.push_back(p);
        grid.add(p);
    }

    // Triangulate the fundamental part.
    RectDelaunay dt(lo, hi);
    auto indexOf = [&](const std::vector<Vec2>& pts) {
        std::vector<int> ids;
        for (const auto& p : pts) ids.push_back(dt.insert(p));
        return ids;
    };
    // Loop vertices may coincide with outer/cut points only if a loop touches
    // a side, which the feasibility check excludes.
    std::vector<Vec2> uniqueFixed;
    {
        detail::PointGrid seen(h);
        for (const auto& p : fixedPts) {
            if (seen.nearest(p, h) <= tol) continue;
            if (p == lo || p == hi || p == Vec2(lo.x(), hi.y()) || p == Vec2(hi.x(), lo.y())) continue;
            seen.add(p);
            uniqueFixed.push_back(p);
        }
    }
    indexOf(uniqueFixed);
    indexOf(cutPts);
    const std::size_t firstFree = dt.num_points();
    indexOf(freePts);

    auto findPoint = [&](const Vec2& p) {
        const auto& pts = dt.points();
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (pts[i] == p) return static_cast<int>(i);
        throw MeshError("constraint vertex missing from triangulation");
    };
    std::vector<std::array<int, 2>> cons;
    for (const auto& s : segs) cons.push_back({findPoint(s.a), findPoint(s.b)});
    for (int pass = 0;; ++pass) {
        if (pass > 60) throw MeshError("mesher failure: constraint recovery did not converge");
        std::vector<std::array<int, 2>> next;
        bool split = false;
        for (const auto& c : cons) {
            if (dt.has_edge(c[0], c[1])) {
                next.push_back(c);
                continue;
            }
            const Vec2 mid = 0.5 * (dt.points()[c[0]] + dt.points()[c[1]]);
            const int m = dt.insert(mid);
            next.push_back({c[0], m});
            next.push_back({m, c[1]});
            split = true;
        }
        cons = std::move(next);
        if (!split) break;
    }
    // Midpoints added during recovery lie on loops and must stay there.
    std::vector<char> movable(dt.num_points(), 0);
    for (std::size_t i = firstFree; i < firstFree + freePts.size(); ++i) movable[i] = 1;

    dt.erase_triangles([&](const std::array<int, 3>& t) {
        const Vec2 c = (dt.points()[t[0]] + dt.points()[t[1]] + dt.points()[t[2]]) / 3.0;
        return inHole(c);
    });

    // Laplacian smoothing of the free points, rejecting moves that fold or
    // flatten an incident triangle.
    {
        const auto& tris = dt.triangles();
        std::vector<std::vector<int>> nbr(dt.num_points()), inc(dt.num_points());
        for (std::size_t t = 0; t < tris.size(); ++t)
            for (int k = 0; k < 3; ++k) {
                inc[tris[t][k]].push_back(static_cast<int>(t));
                nbr[tris[t][k]].push_back(tris[t][(k + 1) % 3]);
                nbr[tris[t][k]].push_back(tris[t][(k + 2) % 3]);
            }
        auto area = [&](int t) {
            const auto& v = tris[t];
            return static_cast<double>(detail::orient2d(dt.points()[v[0]], dt.points()[v[1]], dt.points()[v[2]]));
        };
        for (int it = 0; it < 4; ++it) {
            for (std::size_t i = 0; i < dt.num_points(); ++i) {
                if (!movable[i] || nbr[i].empty()) continue;
                Vec2 avg = Vec2::Zero();
                for (int j : nbr[i]) avg += dt.points()[j];
                avg /= static_cast<double>(nbr[i].size());
                const Vec2 old = dt.points()[i];
                double minOld = std::numeric_limits<double>::infinity();
                for (int t : inc[i]) minOld = std::min(minOld, area(t));
                dt.move_point(static_cast<int>(i), avg);
                double minNew = std::numeric_limits<double>::infinity();
                for (int t : inc[i]) minNew = std::min(minNew, area(t));
                if (!(minNew > 0.5 * minOld) || inHole(avg)) dt.move_point(static_cast<int>(i), old);
            }
        }
    }

    // Assemble the fundamental mesh, then reflect.
    Mesh m;
    m.nodes = dt.points();
    for (const auto& t : dt.triangles()) {
        m.triangles.push_back(t);
        const Vec2 c = (m.nodes[t[0]] + m.nodes[t[1]] + m.nodes[t[2]]) / 3.0;
        int tag = g.fullInclusion ? kInclusionRegion : kMatrixRegion;
        for (const auto& l : loops)
            if (!l.hole && detail::point_in_polygon(c, l.pts)) tag = kInclusionRegion;
        m.regionOf.push_back(tag);
    }
    auto reflect = [&](Mesh& mesh, int axis) {
        const std::size_t n = mesh.nodes.size();
        std::vector<int> image(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (mesh.nodes[i][axis] == 0.0) {
                image[i] = static_cast<int>(i);
            } else {
                Vec2 p = mesh.nodes[i];
                p[axis] = -p[axis];
                image[i] = static_cast<int>(mesh.nodes.size());
                mesh.nodes.push_back(p);
            }
        }
        const std::size_t nt = mesh.triangles.size();
        for (std::size_t e = 0; e < nt; ++e) {
            const auto& t = mesh.triangles[e];
            mesh.triangles.push_back({image[t[0]], image[t[2]], image[t[1]]});
            mesh.regionOf.push_back(mesh.regionOf[e]);
        }
    };
    if (mx) reflect(m, 0);
    if (my) reflect(m, 1);

    // Drop nodes left without triangles (inside holes).
    std::vector<int> remap(m.nodes.size(), -1);
    std::vector<Vec2> kept;
    for (auto& t : m.triangles)
        for (int& v : t) {
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(kept.size());
                kept.push_back(m.nodes[v]);
            }
            v = remap[v];
        }
    m.nodes = std::move(kept);

    m.regions[kMatrixRegion] = g.matrixMaterial;
    const bool anyInclusion = std::find(m.regionOf.begin(), m.regionOf.end(), kInclusionRegion) != m.regionOf.end();
    const bool anyMatrix = std::find(m.regionOf.begin(), m.regionOf.end(), kMatrixRegion) != m.regionOf.end();
    if (anyInclusion) m.regions[kInclusionRegion] = g.inclusionMaterial;
    if (!anyMatrix) m.regions.erase(kMatrixRegion);
    validate_mesh(m);
    return m;
}

/// Square RVE with holes only.
inline Mesh generate_square_rve(double sideLength, const std::vector<Shape>& holes, double targetElementSize,
                                const std::string& material = "matrix") {
    RveGeometry g;
    g.sideLength = sideLength;
    g.holes = holes;
    g.targetElementSize = targetElementSize;
    g.matrixMaterial = material;
    return generate_rve_mesh(g);
}

/// Two-phase RVE: inclusions (region kInclusionRegion) in a matrix (kMatrixRegion).
inline Mesh generate_inclusion_rve(double sideLength, const std::vector<Shape>& inclusions, double targetElementSize,
                                   bool fullInclusion = false) {
    RveGeometry g;
    g.sideLength = sideLength;
    g.inclusions = inclusions;
    g.fullInclusion = fullInclusion;
    g.targetElementSize = targetElementSize;
    return generate_rve_mesh(g);
}

/// Smallest interior angle over all triangles, in radians.
inline double min_angle(const Mesh& m) {
    double best = std::numbers::pi;
    for (std::size_t e = 0; e < m.num_triangles(); ++e) {
        const Triangle t = m.triangle(e);
        for (int k = 0; k < 3; ++k) {
            const Vec2 a = t.v[(k + 1) % 3] - t.v[k], b = t.v[(k + 2) % 3] - t.v[k];
            best = std::min(best, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
        }
    }
    return best;
}

}  // namespace flexohom

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bell.hpp"
#include "error.hpp"

namespace flexohom {

struct BBox {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Zero();

    double width() const { return hi.x() - lo.x(); }
    double height() const { return hi.y() - lo.y(); }
    double diagonal() const { return (hi - lo).norm(); }
};

/// Triangulation with one region tag per triangle. Node and triangle ids are
/// their positions in the vectors.
struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> regionOf;
    std::map<int, std::string> regions;

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    Triangle triangle(std::size_t e) const {
        const auto& t = triangles[e];
        return Triangle{{nodes[t[0]], nodes[t[1]], nodes[t[2]]}};
    }

    BBox bbox() const {
        BBox b;
        if (nodes.empty()) return b;
        b.lo = b.hi = nodes.front();
        for (const auto& p : nodes) {
            b.lo = b.lo.cwiseMin(p);
            b.hi = b.hi.cwiseMax(p);
        }
        return b;
    }

    double area() const {
        double a = 0.0;
        for (std::size_t e = 0; e < triangles.size(); ++e) a += triangle(e).signed_area();
        return a;
    }

    double region_area(int tag) const {
        double a = 0.0;
        for (std::size_t e = 0; e < triangles.size(); ++e)
            if (regionOf[e] == tag) a += triangle(e).signed_area();
        return a;
    }

    /// Area-weighted centroid of the meshed domain.
    Vec2 centroid() const {
        Vec2 c = Vec2::Zero();
        double a = 0.0;
        for (std::size_t e = 0; e < triangles.size(); ++e) {
            const Triangle t = triangle(e);
            c += t.signed_area() * t.centroid();
            a += t.signed_area();
        }
        return a > 0.0 ? Vec2(c / a) : Vec2::Zero();
    }

    bool operator==(const Mesh&) const = default;
};

/// Structured triangulation of a rectangle with nx x ny cells, each split along
/// its rising diagonal. Handy for tests and small macro models.
inline Mesh structured_rectangle(Vec2 lo, Vec2 hi, int nx, int ny, int region = 0,
                                 const std::string& material = "default") {
    if (nx < 1 || ny < 1) throw MeshError("structured mesh needs at least one cell per direction");
    Mesh m;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            // exact end points so opposite sides mirror bit-for-bit
            const double x = i == nx ? hi.x() : lo.x() + (hi.x() - lo.x()) * i / nx;
            const double y = j == ny ? hi.y() : lo.y() + (hi.y() - lo.y()) * j / ny;
            m.nodes.emplace_back(x, y);
        }
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    m.regionOf.assign(m.triangles.size(), region);
    m.regions[region] = material;
    return m;
}

/// Checks the structural invariants: CCW non-degenerate triangles, distinct
/// nodes, every node used, conforming edges (no hanging nodes), known region tags.
inline void validate_mesh(const Mesh& m) {
    if (m.nodes.empty()) throw MeshError("mesh has no nodes");
    if (m.triangles.empty()) throw MeshError("mesh has no triangles");
    if (m.regionOf.size() != m.triangles.size()) throw MeshError("region tag count does not match triangle count");
    const int n = static_cast<int>(m.nodes.size());
    std::vector<char> used(n, 0);
    for (std::size_t e = 0; e < m.triangles.size(); ++e) {
        for (int k : m.triangles[e]) {
            if (k < 0 || k >= n) throw MeshError("triangle " + std::to_string(e) + " references unknown node");
            used[k] = 1;
        }
        const Triangle t = m.triangle(e);
        if (is_degenerate(t)) throw MeshError("triangle " + std::to_string(e) + " is degenerate");
        if (t.signed_area() <= 0.0) throw MeshError("triangle " + std::to_string(e) + " is not counterclockwise");
        if (!m.regions.count(m.regionOf[e]))
            throw MeshError("triangle " + std::to_string(e) + " has undefined region tag " +
                            std::to_string(m.regionOf[e]));
    }
    for (int i = 0; i < n; ++i)
        if (!used[i]) throw MeshError("node " + std::to_string(i) + " is not used by any triangle");

    const double tol = 1e-9 * m.bbox().diagonal();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return m.nodes[a].x() < m.nodes[b].x(); });
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n && m.nodes[order[b]].x() - m.nodes[order[a]].x() <= tol; ++b)
            if ((m.nodes[order[a]] - m.nodes[order[b]]).norm() <= tol)
                throw MeshError("duplicate nodes " + std::to_string(order[a]) + " and " + std::to_string(order[b]));

    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : m.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            if (edges.count({a, b})) throw MeshError("edge used twice with the same orientation");
            edges[{a, b}] = 1;
        }
    // A hanging node shows up as a node lying inside a boundary edge.
    for (const auto& [e, _] : edges) {
        if (edges.count({e.second, e.first})) continue;
        const Vec2& p = m.nodes[e.first];
        const Vec2& q = m.nodes[e.second];
        const double len = (q - p).norm();
        for (int i = 0; i < n; ++i) {
            if (i == e.first || i == e.second) continue;
            const Vec2& x = m.nodes[i];
            const double s = (x - p).dot(q - p) / (len * len);
            if (s <= 0.0 || s >= 1.0) continue;
            const double dist = std::abs((q - p).x() * (x - p).y() - (q - p).y() * (x - p).x()) / len;
            if (dist <= 1e-9 * len) throw MeshError("hanging node " + std::to_string(i) + " on a boundary edge");
        }
    }
}

/// Boundary node sets of a rectangular domain; edge lists are ordered along
/// the edge and include the corners.
struct BoundarySets {
    std::vector<int> left, right, bottom, top;
    /// bottom-left, bottom-right, top-right, top-left
    std::array<int, 4> corners{-1, -1, -1, -1};

    std::vector<int> all() const {
        std::set<int> s(left.begin(), left.end());
        s.insert(right.begin(), right.end());
        s.insert(bottom.begin(), bottom.end());
        s.insert(top.begin(), top.end());
        return {s.begin(), s.end()};
    }
};

inline constexpr double kDefaultPairingTolerance = 1e-8;

/// Classifies the nodes on the bounding rectangle. tol is relative to the
/// larger side length. Opposite edges must carry mirrored node distributions.
inline BoundarySets classify_boundary(const Mesh& m, double relTol = kDefaultPairingTolerance) {
    const BBox b = m.bbox();
    const double tol = relTol * std::max(b.width(), b.height());
    BoundarySets s;
    for (int i = 0; i < static_cast<int>(m.nodes.size()); ++i) {
        const Vec2& p = m.nodes[i];
        if (std::abs(p.x() - b.lo.x()) <= tol) s.left.push_back(i);
        if (std::abs(p.x() - b.hi.x()) <= tol) s.right.push_back(i);
        if (std::abs(p.y() - b.lo.y()) <= tol) s.bottom.push_back(i);
        if (std::abs(p.y() - b.hi.y()) <= tol) s.top.push_back(i);
    }
    auto byY = [&](int a, int c) { return m.nodes[a].y() < m.nodes[c].y(); };
    auto byX = [&](int a, int c) { return m.nodes[a].x() < m.nodes[c].x(); };
    std::sort(s.left.begin(), s.left.end(), byY);
    std::sort(s.right.begin(), s.right.end(), byY);
    std::sort(s.bottom.begin(), s.bottom.end(), byX);
    std::sort(s.top.begin(), s.top.end(), byX);
    if (s.left.size() < 2 || s.right.size() < 2 || s.bottom.size() < 2 || s.top.size() < 2)
        throw MeshError("boundary edge with fewer than two nodes");

    auto corner = [&](const std::vector<int>& a, const std::vector<int>& c) {
        for (int i : a)
            if (std::find(c.begin(), c.end(), i) != c.end()) return i;
        throw MeshError("missing corner node");
    };
    s.corners = {corner(s.left, s.bottom), corner(s.right, s.bottom), corner(s.right, s.top), corner(s.left, s.top)};
    if (s.left.front() != s.corners[0] || s.left.back() != s.corners[3] || s.right.front() != s.corners[1] ||
        s.right.back() != s.corners[2] || s.bottom.front() != s.corners[0] || s.bottom.back() != s.corners[1] ||
        s.top.front() != s.corners[3] || s.top.back() != s.corners[2])
        throw MeshError("corner nodes are not at the ends of the edge lists");

    auto mirrored = [&](const std::vector<int>& a, const std::vector<int>& c, int axis) {
        if (a.size() != c.size()) return false;
        for (std::size_t k = 0; k < a.size(); ++k)
            if (std::abs(m.nodes[a[k]][axis] - m.nodes[c[k]][axis]) > tol) return false;
        return true;
    };
    if (!mirrored(s.left, s.right, 1))
        throw MeshError("left and right boundary discretizations do not mirror; periodic conditions impossible");
    if (!mirrored(s.bottom, s.top, 0))
        throw MeshError("bottom and top boundary discretizations do not mirror; periodic conditions impossible");
    return s;
}

/// Periodic node pairs, corners excluded: (left, right) and (bottom, top).
struct PeriodicPairs {
    std::vector<std::pair<int, int>> leftRight;
    std::vector<std::pair<int, int>> bottomTop;
};

inline PeriodicPairs pair_periodic_nodes(const Mesh& m, const BoundarySets& s,
                                         double relTol = kDefaultPairingTolerance) {
    const BBox b = m.bbox();
    const double tol = relTol * std::max(b.width(), b.height());
    PeriodicPairs out;
    auto pair = [&](const std::vector<int>& masters, const std::vector<int>& slaves, int axis, auto& dest) {
        std::vector<char> taken(slaves.size(), 0);
        for (std::size_t k = 1; k + 1 < masters.size(); ++k) {
            const int i = masters[k];
            int found = -1;
            for (std::size_t j = 1; j + 1 < slaves.size(); ++j) {
                if (taken[j]) continue;
                if (std::abs(m.nodes[slaves[j]][axis] - m.nodes[i][axis]) <= tol) {
                    found = static_cast<int>(j);
                    break;
                }
            }
            if (found < 0) throw MeshError("no periodic partner for boundary node " + std::to_string(i));
            taken[found] = 1;
            dest.emplace_back(i, slaves[found]);
        }
        for (std::size_t j = 1; j + 1 < slaves.size(); ++j)
            if (!taken[j]) throw MeshError("unmatched boundary node " + std::to_string(slaves[j]));
    };
    pair(s.left, s.right, 1, out.leftRight);
    pair(s.bottom, s.top, 0, out.bottomTop);
    return out;
}

/// Shifts the mesh so that the area centroid of the meshed domain is at the origin.
inline Mesh center_at_centroid(const Mesh& m) {
    Mesh out = m;
    const Vec2 c = m.centroid();
    for (auto& p : out.nodes) p -= c;
    // a second, tiny correction absorbs the rounding of the first shift
    const Vec2 c2 = out.centroid();
    for (auto& p : out.nodes) p -= c2;
    return out;
}

inline void write_mesh(const Mesh& m, std::ostream& os) {
    char buf[128];
    os << "flexohom-mesh 1\n";
    os << "nodes " << m.nodes.size() << "\n";
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, m.nodes[i].x(), m.nodes[i].y());
        os << buf;
    }
    os << "triangles " << m.triangles.size() << "\n";
    for (std::size_t e = 0; e < m.triangles.size(); ++e)
        os << e << ' ' << m.triangles[e][0] << ' ' << m.triangles[e][1] << ' ' << m.triangles[e][2] << ' '
           << m.regionOf[e] << "\n";
    os << "regions " << m.regions.size() << "\n";
    for (const auto& [tag, name] : m.regions) os << tag << ' ' << name << "\n";
}

inline void write_mesh(const Mesh& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    write_mesh(m, f);
    if (!f) throw Error("failed writing " + path);
}

inline Mesh read_mesh(std::istream& is) {
    std::string line;
    int lineNo = 0;
    auto next = [&]() -> std::istringstream {
        while (std::getline(is, line)) {
            ++lineNo;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return std::istringstream(line);
        }
        throw ParseError("unexpected end of file", lineNo + 1);
    };
    auto expectEnd = [&](std::istringstream& ss) {
        std::string extra;
        if (ss >> extra) throw ParseError("unexpected trailing token '" + extra + "'", lineNo);
    };
    auto section = [&](const std::string& key) {
        auto ss = next();
        std::string k;
        long long count = -1;
        if (!(ss >> k) || k != key || !(ss >> count) || count < 0)
            throw ParseError("expected '" + key + " <count>'", lineNo);
        expectEnd(ss);
        return static_cast<std::size_t>(count);
    };

    {
        auto ss = next();
        std::string magic;
        int version = 0;
        if (!(ss >> magic >> version) || magic != "flexohom-mesh" || version != 1)
            throw ParseError("expected header 'flexohom-mesh 1'", lineNo);
        expectEnd(ss);
    }
    Mesh m;
    const std::size_t nn = section("nodes");
    m.nodes.assign(nn, Vec2::Zero());
    std::vector<char> seen(nn, 0);
    for (std::size_t k = 0; k < nn; ++k) {
        auto ss = next();
        long long id;
        double x, y;
        if (!(ss >> id >> x >> y)) throw ParseError("malformed node line", lineNo);
        expectEnd(ss);
        if (id < 0 || static_cast<std::size_t>(id) >= nn) throw ParseError("node id out of range", lineNo);
        if (seen[id]) throw ParseError("duplicate node id " + std::to_string(id), lineNo);
        seen[id] = 1;
        m.nodes[id] = Vec2(x, y);
    }
    const std::size_t nt = section("triangles");
    m.triangles.assign(nt, {0, 0, 0});
    m.regionOf.assign(nt, 0);
    std::vector<char> seenT(nt, 0);
    std::vector<int> tagLine(nt, 0);
    for (std::size_t k = 0; k < nt; ++k) {
        auto ss = next();
        long long id;
        long long a, b, c;
        int tag;
        if (!(ss >> id >> a >> b >> c >> tag)) throw ParseError("malformed triangle line", lineNo);
        expectEnd(ss);
        if (id < 0 || static_cast<std::size_t>(id) >= nt) throw ParseError("triangle id out of range", lineNo);
        if (seenT[id]) throw ParseError("duplicate triangle id " + std::to_string(id), lineNo);
        for (long long v : {a, b, c})
            if (v < 0 || static_cast<std::size_t>(v) >= nn)
                throw ParseError("triangle references unknown node " + std::to_string(v), lineNo);
        seenT[id] = 1;
        m.triangles[id] = {static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)};
        m.regionOf[id] = tag;
        tagLine[id] = lineNo;
    }
    const std::size_t nr = section("regions");
    for (std::size_t k = 0; k < nr; ++k) {
        auto ss = next();
        int tag;
        std::string name;
        if (!(ss >> tag >> name)) throw ParseError("malformed region line", lineNo);
        expectEnd(ss);
        if (m.regions.count(tag)) throw ParseError("duplicate region tag " + std::to_string(tag), lineNo);
        m.regions[tag] = name;
    }
    for (std::size_t e = 0; e < nt; ++e)
        if (!m.regions.count(m.regionOf[e]))
            throw ParseError("undefined region tag " + std::to_string(m.regionOf[e]), tagLine[e]);
    while (std::getline(is, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("unexpected content", lineNo);
    }
    validate_mesh(m);
    return m;
}

inline Mesh read_mesh(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    return read_mesh(f);
}

}  // namespace flexohom

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace flexohom {

/// Quadrature on the reference triangle {(x, y): x, y >= 0, x + y <= 1}.
/// Points are barycentric (l0, l1, l2) with x = l1, y = l2; weights sum to
/// the reference area 1/2. Scale by 2|T| for a physical triangle.
struct QuadratureRule {
    std::vector<Eigen::Vector3d> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre nodes/weights on [0, 1].
inline void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at converged node
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

namespace detail {

inline void push_orbit(QuadratureRule& r, double w, double a, double b, double c) {
    r.points.emplace_back(a, b, c);
    r.weights.push_back(w);
}

inline void push_orbit3(QuadratureRule& r, double w, double a) {
    const double b = 0.5 * (1.0 - a);
    push_orbit(r, w, a, b, b);
    push_orbit(r, w, b, a, b);
    push_orbit(r, w, b, b, a);
}

inline void push_orbit6(QuadratureRule& r, double w, double a, double b) {
    const double c = 1.0 - a - b;
    push_orbit(r, w, a, b, c);
    push_orbit(r, w, a, c, b);
    push_orbit(r, w, b, a, c);
    push_orbit(r, w, b, c, a);
    push_orbit(r, w, c, a, b);
    push_orbit(r, w, c, b, a);
}

/// Symmetric 16-point rule of degree 8 (positive weights, interior points).
/// Nodes refined to full double precision against the degree-8 moment equations.
inline QuadratureRule symmetric_degree8() {
    QuadratureRule r;
    r.degree = 8;
    push_orbit(r, 0.14431560767778716825, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
    push_orbit3(r, 0.095091634267284624794, 0.081414823414553687942);
    push_orbit3(r, 0.10321737053471825028, 0.65886138449647958676);
    push_orbit3(r, 0.032458497623198080311, 0.89890554336593804908);
    push_orbit6(r, 0.027230314174434994265, 0.0083947774099576053372, 0.26311282963463811342);
    for (double& w : r.weights) w *= 0.5;
    return r;
}

/// Collapsed (conical product) Gauss rule exact to the requested degree.
inline QuadratureRule collapsed_gauss(int degree) {
    const int n = (degree + 3) / 2;
    std::vector<double> x, w;
    gauss_legendre_01(n, x, w);
    QuadratureRule r;
    r.degree = 2 * n - 2;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = x[i];
            const double v = x[j] * (1.0 - u);
            r.points.emplace_back(1.0 - u - v, u, v);
            r.weights.push_back(w[i] * w[j] * (1.0 - u));
        }
    }
    return r;
}

}  // namespace detail

inline constexpr int kMaxQuadratureDegree = 30;

/// Rule exact for every bivariate polynomial of total degree <= minDegree.
inline QuadratureRule triangle_quadrature(int minDegree) {
    if (minDegree < 0 || minDegree > kMaxQuadratureDegree)
        throw QuadratureError("unsupported quadrature degree " + std::to_string(minDegree));
    if (minDegree <= 1) {
        QuadratureRule r;
        r.degree = 1;
        detail::push_orbit(r, 0.5, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        return r;
    }
    if (minDegree == 2) {
        QuadratureRule r;
        r.degree = 2;
        detail::push_orbit3(r, 1.0 / 6.0, 2.0 / 3.0);
        return r;
    }
    if (minDegree <= 8) return detail::symmetric_degree8();
    return detail::collapsed_gauss(minDegree);
}

}  // namespace flexohom

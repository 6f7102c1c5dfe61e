#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "geometry.hpp"

namespace lrfmp {

struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    double a = -1.0;
    double b = 1.0;

    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (Eigen::Index i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

// Shared n-point rule on [-1, 1]; computed once per n and cached.
std::shared_ptr<const QuadratureRule> gauss_legendre_reference(int n);

QuadratureRule gauss_legendre(int n, double a, double b);

// Roughly `total` nodes as equal panels of an `order`-point Gauss–Legendre rule.
QuadratureRule composite_gauss_legendre(int total, double a, double b, int order = 20);

struct GkResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
    int intervals = 0;
};

inline constexpr double kGkTolAbs = 1e-12;
inline constexpr int kGkMaxSubdivisions = 2000;

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1], abscissae descending to 0.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkPiece {
    double a, b, value, error;
    bool operator<(const GkPiece& o) const { return error < o.error; }
};

template <typename F>
GkPiece gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double k = kWgk[7] * fc, g = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double x = h * kXgk[i];
        const double s = f(c - x) + f(c + x);
        k += kWgk[i] * s;
        if (i % 2 == 1) g += kWg[i / 2] * s;
    }
    return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace detail

/** Globally adaptive 7/15 Gauss–Kronrod quadrature. Stops once the summed error estimate
    is below max(tol·|value|, tol_abs); interior breakpoints seed the initial partition. */
template <typename F>
GkResult adaptive_gk(F&& f, double a, double b, double tol, std::span<const double> breakpoints = {},
                     double tol_abs = kGkTolAbs, int max_subdivisions = kGkMaxSubdivisions) {
    GkResult res;
    if (!(b > a)) return res;
    std::vector<double> cuts{a};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::GkPiece> heap;
    double value = 0.0, error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = detail::gk15(f, cuts[i], cuts[i + 1]);
        value += p.value;
        error += p.error;
        heap.push(p);
    }
    int splits = 0;
    while (error > std::max(tol * std::abs(value), tol_abs)) {
        if (splits >= max_subdivisions) {
            res.converged = false;
            break;
        }
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            res.converged = false;
            heap.push(worst);
            break;
        }
        const auto l = detail::gk15(f, worst.a, mid);
        const auto r = detail::gk15(f, mid, worst.b);
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++splits;
    }
    // Re-sum to shed the drift of the running updates.
    res.value = 0.0;
    res.error = 0.0;
    res.intervals = static_cast<int>(heap.size());
    while (!heap.empty()) {
        res.value += heap.top().value;
        res.error += heap.top().error;
        heap.pop();
    }
    return res;
}

struct BallQuadrature {
    std::vector<SphericalPoint> points;
    Eigen::VectorXd weights;
};

// Gauss–Legendre in r (with r² weight) and t, trapezoid in φ.
BallQuadrature ball_quadrature(int n_r, int n_t, int n_phi);

}  // namespace lrfmp

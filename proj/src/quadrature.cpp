#include "lrfmp/quadrature.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace lrfmp {

namespace {

std::shared_ptr<const QuadratureRule> compute_reference(int n) {
    auto rule = std::make_shared<QuadratureRule>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
        }
        // Final derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule->nodes[n - 1 - i] = x;
        rule->weights[n - 1 - i] = w;
        rule->nodes[i] = -x;
        rule->weights[i] = w;
    }
    if (n % 2 == 1) rule->nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

std::shared_ptr<const QuadratureRule> gauss_legendre_reference(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: npoints must be >= 1");
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const QuadratureRule>> cache;
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(n); it != cache.end()) return it->second;
    }
    auto rule = compute_reference(n);
    std::lock_guard lock(mu);
    return cache.emplace(n, rule).first->second;
}

QuadratureRule gauss_legendre(int n, double a, double b) {
    const auto& ref = *gauss_legendre_reference(n);
    QuadratureRule r;
    r.a = a;
    r.b = b;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    r.nodes = (c + h * ref.nodes.array()).matrix();
    r.weights = h * ref.weights;
    return r;
}

QuadratureRule composite_gauss_legendre(int total, double a, double b, int order) {
    order = std::max(1, std::min(order, total));
    const int panels = std::max(1, total / order);
    const auto& ref = *gauss_legendre_reference(order);
    QuadratureRule r;
    r.a = a;
    r.b = b;
    r.nodes.resize(panels * order);
    r.weights.resize(panels * order);
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double c = lo + 0.5 * width, h = 0.5 * width;
        for (int i = 0; i < order; ++i) {
            r.nodes[p * order + i] = c + h * ref.nodes[i];
            r.weights[p * order + i] = h * ref.weights[i];
        }
    }
    return r;
}

BallQuadrature ball_quadrature(int n_r, int n_t, int n_phi) {
    const auto qr = gauss_legendre(n_r, 0.0, 1.0);
    const auto qt = gauss_legendre(n_t, -1.0, 1.0);
    BallQuadrature b;
    b.points.reserve(static_cast<std::size_t>(n_r) * n_t * n_phi);
    b.weights.resize(static_cast<Eigen::Index>(n_r) * n_t * n_phi);
    Eigen::Index k = 0;
    const double wphi = kTwoPi / n_phi;
    for (int i = 0; i < n_r; ++i)
        for (int l = 0; l < n_t; ++l)
            for (int q = 0; q < n_phi; ++q) {
                b.points.push_back({qr.nodes[i], kTwoPi * q / n_phi, qt.nodes[l]});
                b.weights[k++] = qr.weights[i] * qr.nodes[i] * qr.nodes[i] * qt.weights[l] * wphi;
            }
    return b;
}

}  // namespace lrfmp

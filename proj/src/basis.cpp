#include "lrfmp/basis.hpp"

#include <cmath>
#include <vector>

#include "lrfmp/special_functions.hpp"

namespace lrfmp {

namespace {

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double longitude_offset(double phi, double Phi) { return std::remainder(phi - Phi, kTwoPi); }

double fehf_eval(const TesseroidParams& T, const SphericalPoint& p) {
    if (p.r < T.r_lo() || p.r > T.r_hi() || p.t < T.t_lo() || p.t > T.t_hi()) return 0.0;
    const double dphi = std::abs(longitude_offset(p.phi, T.Phi()));
    if (dphi > T.dPhi()) return 0.0;
    return (T.dR() - std::abs(p.r - T.R())) / T.dR() * (T.dPhi() - dphi) / T.dPhi() *
           (T.dT() - std::abs(p.t - T.T())) / T.dT();
}

FehfGradient fehf_gradient(const TesseroidParams& T, const SphericalPoint& p) {
    FehfGradient g;
    const double off = longitude_offset(p.phi, T.Phi());
    const bool outside = p.r < T.r_lo() || p.r > T.r_hi() || p.t < T.t_lo() || p.t > T.t_hi() ||
                         std::abs(off) > T.dPhi();
    if (outside) return g;
    if (p.r == T.r_lo() || p.r == T.r_hi() || p.t == T.t_lo() || p.t == T.t_hi() ||
        std::abs(off) == T.dPhi() || p.r == T.R() || off == 0.0 || p.t == T.T())
        g.defined = false;

    const double hr = (T.dR() - std::abs(p.r - T.R())) / T.dR();
    const double hp = (T.dPhi() - std::abs(off)) / T.dPhi();
    const double ht = (T.dT() - std::abs(p.t - T.T())) / T.dT();
    const double dr = -sgn(p.r - T.R()) / T.dR();
    const double dp = -sgn(off) / T.dPhi();
    const double dt = -sgn(p.t - T.T()) / T.dT();

    const auto f = local_frame_unchecked(p.phi, p.t);
    const double s = sine_of(p.t);
    g.value = dr * hp * ht * f.e_r;
    if (p.r > 0.0) {
        if (s > 0.0) g.value += hr * dp * ht / (p.r * s) * f.e_phi;
        g.value += hr * hp * dt * s / p.r * f.e_t;
    }
    return g;
}

double poly_eval(const PolyIndex& idx, const SphericalPoint& p) {
    const int k = std::abs(idx.j);
    const double I = 2.0 * p.r * p.r - 1.0;
    return radial_norm<double>(idx.m, idx.n) * jacobi(idx.m, idx.n + 0.5, I) *
           int_pow(p.r, idx.n) * angular_norm<double>(idx.n, k) * assoc_legendre(idx.n, k, p.t) *
           trig(idx.j, p.phi);
}

Eigen::Vector3d poly_gradient(const PolyIndex& idx, const SphericalPoint& p) {
    const int m = idx.m, n = idx.n, j = idx.j, k = std::abs(j);
    const double c = radial_norm<double>(m, n) * angular_norm<double>(n, k);
    const double I = 2.0 * p.r * p.r - 1.0;
    const double P = jacobi(m, n + 0.5, I);
    const double dP = jacobi_derivative(m, n + 0.5, I);
    const auto f = local_frame_unchecked(p.phi, p.t);

    const double Y = assoc_legendre(n, k, p.t);
    const double rn = int_pow(p.r, n);
    double radial = dP * 4.0 * p.r * rn;
    if (n > 0) radial += n * P * int_pow(p.r, n - 1);
    Eigen::Vector3d g = radial * Y * trig(j, p.phi) * f.e_r;
    if (n == 0) return c * g;

    const double rn1 = P * int_pow(p.r, n - 1);
    if (j != 0) g += j * rn1 * legendre_over_sine(n, k, p.t) * trig(-j, p.phi) * f.e_phi;
    g += rn1 * sine_times_legendre_prime(n, k, p.t) * trig(j, p.phi) * f.e_t;
    return c * g;
}

void poly_eval_all(int M, int N, const SphericalPoint& p, Eigen::Ref<Eigen::VectorXd> out) {
    const double I = 2.0 * p.r * p.r - 1.0;
    const double s = sine_of(p.t);
    // Angular factors q_{n,|j|} P_{n,|j|}(t) Trig(jφ), indexed n² + j + n.
    std::vector<double> Y((N + 1) * (N + 1));
    std::vector<double> cosj(N + 1), sinj(N + 1);
    for (int j = 0; j <= N; ++j) {
        cosj[j] = std::cos(j * p.phi);
        sinj[j] = std::sin(j * p.phi);
    }
    const double sqrt2 = std::sqrt(2.0);
    for (int k = 0; k <= N; ++k) {
        const double sk = int_pow(s, k);
        // Recurrence in n for fixed k on the polynomial part.
        double q0 = 0.0, q1 = 0.0;
        for (int n = k; n <= N; ++n) {
            double q;
            if (n == k) {
                q = 1.0;
                for (int i = 1; i <= k; ++i) q *= 2 * i - 1;
            } else if (n == k + 1) {
                q = (2 * k + 1) * p.t * q1;
            } else {
                q = ((2 * n - 1) * p.t * q1 - (n + k - 1) * q0) / (n - k);
            }
            q0 = q1;
            q1 = q;
            const double base = angular_norm<double>(n, k) * sk * q;
            if (k == 0) {
                Y[n * n + n] = base;
            } else {
                Y[n * n + n - k] = base * sqrt2 * cosj[k];
                Y[n * n + n + k] = base * sqrt2 * sinj[k];
            }
        }
    }
    int pos = 0;
    for (int m = 0; m <= M; ++m) {
        for (int n = 0; n <= N; ++n) {
            const double radial = radial_norm<double>(m, n) * jacobi(m, n + 0.5, I) * int_pow(p.r, n);
            for (int j = -n; j <= n; ++j) out[pos++] = radial * Y[n * n + n + j];
        }
    }
}

BasisValue evaluate(const DictionaryElement& d, const SphericalPoint& p, bool with_gradient) {
    BasisValue v;
    if (const auto* idx = std::get_if<PolyIndex>(&d)) {
        v.value = poly_eval(*idx, p);
        if (with_gradient) v.gradient = poly_gradient(*idx, p);
    } else {
        const auto& T = std::get<TesseroidParams>(d);
        v.value = fehf_eval(T, p);
        if (with_gradient) {
            const auto g = fehf_gradient(T, p);
            if (g.defined) v.gradient = g.value;
        }
    }
    return v;
}

}  // namespace lrfmp

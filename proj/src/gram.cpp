#include "lrfmp/gram.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "lrfmp/errors.hpp"
#include "lrfmp/quadrature.hpp"
#include "lrfmp/special_functions.hpp"

namespace lrfmp {

namespace {

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

std::vector<double> critical_points(double lb, double ub, double X, double dX, double Y, double dY) {
    std::vector<double> c{lb, ub};
    for (double x : {X - dX, X, X + dX, Y - dY, Y, Y + dY})
        if (x > lb && x < ub) c.push_back(x);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

// ∫_{-h}^{h} u^k du
double moment(int k, double h) {
    if (k % 2 == 1) return 0.0;
    return 2.0 * std::pow(h, k + 1) / (k + 1);
}

// Hat of half-width dX centered at X on a segment with midpoint m, as a0 + a1·u, u = x - m.
struct LocalHat {
    double a0, a1;
};

LocalHat local_hat(double m, double X, double dX) {
    const double s = sgn(m - X);
    return {1.0 - s * (m - X) / dX, -s / dX};
}

enum class Weight { One, Square, OneMinusSquare };

// ∫ (p0 + p1 u + p2 u²)·w(u) du over [-h, h] for the weights 1, x², 1 - x².
double integrate_quadratic(const double p[3], Weight wt, double m, double h) {
    double w[3] = {1.0, 0.0, 0.0};
    if (wt == Weight::Square) {
        w[0] = m * m;
        w[1] = 2.0 * m;
        w[2] = 1.0;
    } else if (wt == Weight::OneMinusSquare) {
        w[0] = 1.0 - m * m;
        w[1] = -2.0 * m;
        w[2] = -1.0;
    }
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += p[i] * w[j] * moment(i + j, h);
    return s;
}

// ∫ (p0 + p1 u + p2 u²)/(1 - x²) dx over [x0, x1], u = x - m.
double integrate_over_one_minus_square(const double p[3], double x0, double x1) {
    const double m = 0.5 * (x0 + x1), h = 0.5 * (x1 - x0);
    const double D0 = 1.0 - m * m;
    const double J0 = std::atanh((x1 - x0) / (1.0 - x0 * x1));
    const double J1 = -0.5 * std::log1p((x0 - x1) * (x0 + x1) / ((1.0 - x0) * (1.0 + x0)));
    // p = -p2·(1 - x²) + (p1 - 2m·p2)·u + (p0 + p2·D0)
    return -p[2] * 2.0 * h + (p[1] - 2.0 * m * p[2]) * (J1 - m * J0) + (p[0] + p[2] * D0) * J0;
}

struct DimIntegrals {
    double hat = 0.0;       // ∫ h h' w
    double slope = 0.0;     // ∫ h' h'' w_grad
    double hat_plain = 0.0; // ∫ h h'  (weight 1)
    double hat_inv = 0.0;   // ∫ h h' / (1 - x²)
};

DimIntegrals dim_integrals(const std::vector<OverlapPiece>& pieces, double X, double dX, double dY,
                           Weight hat_weight, Weight slope_weight, bool with_inverse) {
    DimIntegrals out;
    for (const auto& pc : pieces) {
        const double Y = pc.other_center;
        for (std::size_t i = 0; i + 1 < pc.critical.size(); ++i) {
            const double x0 = pc.critical[i], x1 = pc.critical[i + 1];
            const double m = 0.5 * (x0 + x1), h = 0.5 * (x1 - x0);
            const auto a = local_hat(m, X, dX);
            const auto b = local_hat(m, Y, dY);
            const double p[3] = {a.a0 * b.a0, a.a0 * b.a1 + a.a1 * b.a0, a.a1 * b.a1};
            const double q[3] = {a.a1 * b.a1, 0.0, 0.0};
            out.hat += integrate_quadratic(p, hat_weight, m, h);
            out.slope += integrate_quadratic(q, slope_weight, m, h);
            out.hat_plain += integrate_quadratic(p, Weight::One, m, h);
            if (with_inverse) out.hat_inv += integrate_over_one_minus_square(p, x0, x1);
        }
    }
    return out;
}

void check_pole(double lo, double hi) {
    if (lo <= -1.0 + kPoleDelta || hi >= 1.0 - kPoleDelta)
        throw PoleProximity("latitudinal integration bound within the pole band");
}

// P_m^{(alpha,beta)}(x) for m = 0..M.
void jacobi_all(int M, double alpha, double beta, double x, double* out) {
    out[0] = 1.0;
    if (M == 0) return;
    out[1] = (alpha + 1.0) + (alpha + beta + 2.0) * (x - 1.0) / 2.0;
    for (int k = 2; k <= M; ++k) {
        const double s = 2.0 * k + alpha + beta;
        const double a1 = 2.0 * k * (k + alpha + beta) * (s - 2.0);
        const double a2 = (s - 1.0) * (alpha * alpha - beta * beta);
        const double a3 = (s - 2.0) * (s - 1.0) * s;
        const double a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
        out[k] = ((a2 + a3 * x) * out[k - 1] - a4 * out[k - 2]) / a1;
    }
}

struct MixedTables {
    int M, N;
    // Radial, indexed m·(N+1) + n.
    std::vector<double> Rl, Rg, Rp;
    // Latitudinal, indexed n·(N+2) + k.
    std::vector<double> Tl, Tg, Ti;
    // Longitudinal, indexed j + N.
    std::vector<double> Fl, Fg;
};

MixedTables mixed_tables(const TesseroidParams& T, int M, int N, const GramSettings& s) {
    MixedTables tb{M, N, {}, {}, {}, {}, {}, {}, {}, {}};
    tb.Rl.assign((M + 1) * (N + 1), 0.0);
    tb.Rg = tb.Rp = tb.Rl;
    tb.Tl.assign((N + 1) * (N + 2), 0.0);
    tb.Tg = tb.Ti = tb.Tl;
    tb.Fl.assign(2 * N + 1, 0.0);
    tb.Fg = tb.Fl;

    // Radial integrands are polynomials of degree <= 2M + N + 4 on each side of R.
    const int nr = (2 * M + N + 5) / 2 + 1;
    std::vector<double> P(M + 1), J1(M + 1);
    const double rpieces[2][2] = {{T.r_lo(), std::min(T.R(), T.r_hi())},
                                  {std::max(T.R(), T.r_lo()), T.r_hi()}};
    for (int side = 0; side < 2; ++side) {
        const double a = rpieces[side][0], b = rpieces[side][1];
        if (!(b > a)) continue;
        const double sg = side == 0 ? -1.0 : 1.0;
        const double dhat = -sg / T.dR();
        const auto rule = gauss_legendre(nr, a, b);
        for (int q = 0; q < nr; ++q) {
            const double r = rule.nodes[q], w = rule.weights[q];
            const double hat = (T.dR() - std::abs(r - T.R())) / T.dR();
            const double I = 2.0 * r * r - 1.0;
            double rn = 1.0;
            for (int n = 0; n <= N; ++n) {
                const double beta = n + 0.5;
                jacobi_all(M, 0.0, beta, I, P.data());
                if (M > 0) jacobi_all(M - 1, 1.0, beta + 1.0, I, J1.data());
                for (int m = 0; m <= M; ++m) {
                    const double dP = m == 0 ? 0.0 : 0.5 * (m + beta + 1.0) * J1[m - 1];
                    const int id = m * (N + 1) + n;
                    tb.Rl[id] += w * hat * P[m] * rn * r * r;
                    tb.Rp[id] += w * hat * P[m] * rn;
                    tb.Rg[id] += w * dhat * (4.0 * dP * rn * r * r * r + n * P[m] * rn * r);
                }
                rn *= r;
            }
        }
    }

    const double tlo = T.t_lo(), thi = T.t_hi();
    check_pole(tlo, thi);
    const double tpieces[2][2] = {{tlo, std::min(T.T(), thi)}, {std::max(T.T(), tlo), thi}};
    const int K = N + 2;
    std::vector<double> Q((N + 1) * K);
    for (int side = 0; side < 2; ++side) {
        const double a = tpieces[side][0], b = tpieces[side][1];
        if (!(b > a)) continue;
        const double sg = side == 0 ? -1.0 : 1.0;
        const double dhat = -sg / T.dT();
        const int count = std::max(20, static_cast<int>(std::lround(s.latitudinal_nodes * (b - a) / (thi - tlo))));
        const auto rule = composite_gauss_legendre(count, a, b);
        for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
            const double t = rule.nodes[q], w = rule.weights[q];
            const double hat = (T.dT() - std::abs(t - T.T())) / T.dT();
            const double s2 = (1.0 - t) * (1.0 + t), sn = std::sqrt(s2);
            // Q[n][k] = k-th derivative of P_n.
            double dfact = 1.0;
            for (int k = 0; k <= N + 1; ++k) {
                if (k > 0) dfact *= 2 * k - 1;
                if (k > N) break;
                Q[k * K + k] = dfact;
                if (k + 1 <= N) Q[(k + 1) * K + k] = (2 * k + 1) * t * dfact;
                for (int n = k + 2; n <= N; ++n)
                    Q[n * K + k] = ((2 * n - 1) * t * Q[(n - 1) * K + k] - (n + k - 1) * Q[(n - 2) * K + k]) / (n - k);
            }
            double sk = 1.0;
            for (int k = 0; k <= N; ++k) {
                for (int n = k; n <= N; ++n) {
                    const double Pnk = sk * Q[n * K + k];
                    const double next = k + 1 <= n ? Q[n * K + k + 1] : 0.0;
                    const int id = n * K + k;
                    tb.Tl[id] += w * hat * Pnk;
                    tb.Ti[id] += w * hat * Pnk / s2;
                    tb.Tg[id] += w * dhat * (-k * t * Pnk + sk * s2 * next);
                }
                sk *= sn;
            }
        }
    }

    // Closed forms of ∫ hat·Trig(jφ) dφ over [Φ - ΔΦ, Φ + ΔΦ].
    const double D = T.dPhi(), sqrt2 = std::sqrt(2.0);
    for (int j = -N; j <= N; ++j) {
        double v;
        if (j == 0) {
            v = D;
        } else {
            const double hj = std::sin(0.5 * j * D);
            const double tri = 4.0 * hj * hj / (double(j) * j * D);
            v = sqrt2 * tri * (j > 0 ? std::sin(j * T.Phi()) : std::cos(j * T.Phi()));
        }
        tb.Fl[j + N] = v;
        tb.Fg[j + N] = double(j) * j * v;
    }
    return tb;
}

struct MixedParts {
    double l2, grad;
};

MixedParts mixed_from_tables(const MixedTables& tb, const PolyIndex& i) {
    const int k = std::abs(i.j), K = tb.N + 2;
    const int r = i.m * (tb.N + 1) + i.n, t = i.n * K + k, f = i.j + tb.N;
    const double c = radial_norm<double>(i.m, i.n) * angular_norm<double>(i.n, k);
    const double l2 = c * tb.Rl[r] * tb.Fl[f] * tb.Tl[t];
    const double grad = c * (tb.Rg[r] * tb.Fl[f] * tb.Tl[t] + tb.Rp[r] * tb.Fg[f] * tb.Ti[t] +
                             tb.Rp[r] * tb.Fl[f] * tb.Tg[t]);
    return {l2, grad};
}

}  // namespace

OverlapInterval overlap_bounds(const TesseroidParams& a, const TesseroidParams& b) {
    OverlapInterval ov;
    auto linear = [&](int d, double alo, double ahi, double blo, double bhi) {
        const double lb = std::max(alo, blo), ub = std::min(ahi, bhi);
        if (lb < ub)
            ov.dims[d].push_back({lb, ub, b.center[d],
                                  critical_points(lb, ub, a.center[d], a.half_width[d], b.center[d], b.half_width[d])});
    };
    linear(0, a.r_lo(), a.r_hi(), b.r_lo(), b.r_hi());
    linear(2, a.t_lo(), a.t_hi(), b.t_lo(), b.t_hi());
    for (int k = -2; k <= 2; ++k) {
        const double Y = b.Phi() + kTwoPi * k;
        const double lb = std::max(a.Phi() - a.dPhi(), Y - b.dPhi());
        const double ub = std::min(a.Phi() + a.dPhi(), Y + b.dPhi());
        if (lb < ub) ov.dims[1].push_back({lb, ub, Y, critical_points(lb, ub, a.Phi(), a.dPhi(), Y, b.dPhi())});
    }
    return ov;
}

H1Parts h1_fehf_fehf_parts(const TesseroidParams& a, const TesseroidParams& b) {
    const auto ov = overlap_bounds(a, b);
    if (ov.empty()) return {};
    check_pole(ov.dims[2].front().lb, ov.dims[2].front().ub);
    const auto r = dim_integrals(ov.dims[0], a.R(), a.dR(), b.dR(), Weight::Square, Weight::Square, false);
    const auto p = dim_integrals(ov.dims[1], a.Phi(), a.dPhi(), b.dPhi(), Weight::One, Weight::One, false);
    const auto t = dim_integrals(ov.dims[2], a.T(), a.dT(), b.dT(), Weight::One, Weight::OneMinusSquare, true);
    H1Parts out;
    out.l2 = r.hat * p.hat * t.hat;
    out.grad = r.slope * p.hat * t.hat + r.hat_plain * p.slope * t.hat_inv + r.hat_plain * p.hat * t.slope;
    return out;
}

H1Parts h1_poly_poly_parts(const PolyIndex& a, const PolyIndex& b, const GramSettings& s) {
    H1Parts out;
    if (a.n != b.n || a.j != b.j) return out;
    out.l2 = a.m == b.m ? 1.0 : 0.0;
    const int n = a.n;
    const double beta = n + 0.5;
    auto P = [&](int m, double u) { return jacobi(m, beta, u); };
    auto dP = [&](int m, double u) { return jacobi_derivative(m, beta, u); };
    const double sqrt2 = std::sqrt(2.0), two_n = std::ldexp(1.0, n);
    const double tol = s.radial_tol, floor = 1e-15;

    double g = sqrt2 / two_n *
               adaptive_gk([&](double u) { return dP(a.m, u) * dP(b.m, u) * std::pow(1.0 + u, n + 1.5); }, -1.0,
                           1.0, tol, {}, floor)
                   .value;
    if (n > 0) {
        g += n / (two_n * sqrt2) *
             adaptive_gk([&](double u) {
                 return (dP(a.m, u) * P(b.m, u) + P(a.m, u) * dP(b.m, u)) * std::pow(1.0 + u, n + 0.5);
             }, -1.0, 1.0, tol, {}, floor).value;
        g += n * (2.0 * n + 1.0) / (2.0 * two_n * sqrt2) *
             adaptive_gk([&](double u) { return P(a.m, u) * P(b.m, u) * std::pow(1.0 + u, n - 0.5); }, -1.0, 1.0,
                         tol, {}, floor)
                 .value;
    }
    out.grad = radial_norm<double>(a.m, n) * radial_norm<double>(b.m, n) * g;
    return out;
}

H1Parts h1_mixed_parts(const TesseroidParams& T, const PolyIndex& i, const GramSettings& s) {
    const auto tb = mixed_tables(T, i.m, i.n, s);
    const auto p = mixed_from_tables(tb, i);
    return {p.l2, p.grad};
}

Eigen::VectorXd h1_mixed_all(const TesseroidParams& T, int M, int N, const GramSettings& s) {
    const auto tb = mixed_tables(T, M, N, s);
    Eigen::VectorXd out(poly_count(M, N));
    int pos = 0;
    for (const auto& i : enumerate_polys(M, N)) {
        const auto p = mixed_from_tables(tb, i);
        out[pos++] = p.l2 + p.grad;
    }
    return out;
}

double h1(const DictionaryElement& a, const DictionaryElement& b, const GramSettings& s) {
    const auto* pa = std::get_if<PolyIndex>(&a);
    const auto* pb = std::get_if<PolyIndex>(&b);
    if (pa && pb) return h1_poly_poly(*pa, *pb, s);
    if (!pa && !pb) return h1_fehf_fehf(std::get<TesseroidParams>(a), std::get<TesseroidParams>(b));
    if (pa) return h1_mixed(std::get<TesseroidParams>(b), *pa, s);
    return h1_mixed(std::get<TesseroidParams>(a), *pb, s);
}

ElementKey element_key(const DictionaryElement& d) {
    if (const auto* p = std::get_if<PolyIndex>(&d)) return {0.0, double(p->m), double(p->n), double(p->j), 0, 0, 0, 0, 0};
    const auto& T = std::get<TesseroidParams>(d);
    return {1.0, T.R(), T.Phi(), T.T(), T.dR(), T.dPhi(), T.dT(), T.bounds.rho, T.bounds.eps_t};
}

double GramCache::get(const DictionaryElement& a, const DictionaryElement& b) {
    auto ka = element_key(a), kb = element_key(b);
    if (kb < ka) std::swap(ka, kb);
    const auto key = std::make_pair(ka, kb);
    {
        std::shared_lock lock(mu_);
        if (auto it = values_.find(key); it != values_.end()) return it->second;
    }
    // Evaluate in canonical order so that the stored value does not depend on call order.
    const bool swapped = element_key(a) != ka;
    const double v = swapped ? h1(b, a, settings_) : h1(a, b, settings_);
    std::unique_lock lock(mu_);
    return values_.emplace(key, v).first->second;
}

std::size_t GramCache::size() const {
    std::shared_lock lock(mu_);
    return values_.size();
}

}  // namespace lrfmp

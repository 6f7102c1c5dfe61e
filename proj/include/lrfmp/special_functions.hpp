#pragma once

#include <cmath>
#include <utility>

#include "errors.hpp"

namespace lrfmp {

// Width of the band |t| >= 1 - kPoleDelta in which pole limits replace quotients.
inline constexpr double kPoleDelta = 1e-6;

/** Jacobi polynomial P_m^{(alpha,beta)}(x) by the ascending three-term recurrence. */
template <typename Scalar>
Scalar jacobi(int m, Scalar alpha, Scalar beta, Scalar x) {
    if (m <= 0) return Scalar(1);
    Scalar p0(1);
    Scalar p1 = (alpha + 1) + (alpha + beta + 2) * (x - 1) / 2;
    for (int k = 2; k <= m; ++k) {
        const Scalar s = 2 * Scalar(k) + alpha + beta;
        const Scalar a1 = 2 * Scalar(k) * (Scalar(k) + alpha + beta) * (s - 2);
        const Scalar a2 = (s - 1) * (alpha * alpha - beta * beta);
        const Scalar a3 = (s - 2) * (s - 1) * s;
        const Scalar a4 = 2 * (Scalar(k) + alpha - 1) * (Scalar(k) + beta - 1) * s;
        const Scalar p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

// P_m^{(0,beta)}(x).
template <typename Scalar>
Scalar jacobi(int m, Scalar beta, Scalar x) {
    return jacobi<Scalar>(m, Scalar(0), beta, x);
}

// d/dx P_m^{(0,beta)}(x) = (m+beta+1)/2 · P_{m-1}^{(1,beta+1)}(x).
template <typename Scalar>
Scalar jacobi_derivative(int m, Scalar beta, Scalar x) {
    if (m <= 0) return Scalar(0);
    return (Scalar(m) + beta + 1) / 2 * jacobi<Scalar>(m - 1, Scalar(1), beta + 1, x);
}

/** k-th derivative of the Legendre polynomial P_n, i.e. P_{n,k}(t) / (1-t²)^{k/2}.
    Zero for k > n. */
template <typename Scalar>
Scalar legendre_derivative(int n, int k, Scalar t) {
    if (k > n) return Scalar(0);
    // (2k-1)!!
    Scalar pkk(1);
    for (int i = 1; i <= k; ++i) pkk *= Scalar(2 * i - 1);
    if (n == k) return pkk;
    Scalar p0 = pkk;
    Scalar p1 = Scalar(2 * k + 1) * t * pkk;
    for (int l = k + 2; l <= n; ++l) {
        const Scalar p2 = (Scalar(2 * l - 1) * t * p1 - Scalar(l + k - 1) * p0) / Scalar(l - k);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

template <typename Scalar>
Scalar sine_of(Scalar t) {
    using std::sqrt;
    const Scalar s2 = (Scalar(1) - t) * (Scalar(1) + t);
    return s2 > Scalar(0) ? sqrt(s2) : Scalar(0);
}

template <typename Scalar>
Scalar int_pow(Scalar x, int k) {
    Scalar r(1);
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

// Associated Legendre function without Condon–Shortley phase.
template <typename Scalar>
Scalar assoc_legendre(int n, int k, Scalar t) {
    return int_pow(sine_of(t), k) * legendre_derivative(n, k, t);
}

/** P_{n,k}(t)/√(1-t²) for k >= 1. Inside |t| >= 1 - kPoleDelta the pole limit is
    returned: P_n'(±1) for k = 1, zero for k > 1. */
template <typename Scalar>
Scalar legendre_over_sine(int n, int k, Scalar t) {
    using std::abs;
    if (k < 1) throw ContractViolation("legendre_over_sine requires k >= 1");
    if (abs(t) >= Scalar(1) - Scalar(kPoleDelta)) {
        if (k > 1) return Scalar(0);
        const Scalar d = Scalar(n) * Scalar(n + 1) / 2;
        return (t > 0 || (n + 1) % 2 == 0) ? d : -d;
    }
    return int_pow(sine_of(t), k - 1) * legendre_derivative(n, k, t);
}

// √(1-t²)·P'_{n,k}(t), written in the polynomial factors so that it stays finite at t = ±1.
template <typename Scalar>
Scalar sine_times_legendre_prime(int n, int k, Scalar t) {
    const Scalar s = sine_of(t);
    Scalar v = int_pow(s, k + 1) * legendre_derivative(n, k + 1, t);
    if (k > 0) v -= Scalar(k) * t * int_pow(s, k - 1) * legendre_derivative(n, k, t);
    return v;
}

template <typename Scalar>
Scalar trig(int j, Scalar phi) {
    using std::cos;
    using std::sin;
    const Scalar sqrt2 = Scalar(1.41421356237309504880);
    if (j < 0) return sqrt2 * cos(Scalar(j) * phi);
    if (j > 0) return sqrt2 * sin(Scalar(j) * phi);
    return Scalar(1);
}

/** Antiderivatives I₁ = ∫ φ·Trig(jφ) dφ and I₂ = ∫ Trig(jφ) dφ. */
template <typename Scalar>
std::pair<Scalar, Scalar> trig_antiderivatives(int j, Scalar phi) {
    using std::cos;
    using std::sin;
    const Scalar sqrt2 = Scalar(1.41421356237309504880);
    if (j == 0) return {phi * phi / 2, phi};
    const Scalar jj(j);
    const Scalar c = cos(jj * phi), s = sin(jj * phi);
    if (j < 0) return {sqrt2 * (c / (jj * jj) + phi * s / jj), sqrt2 / jj * s};
    return {sqrt2 * (s / (jj * jj) - phi * c / jj), -sqrt2 / jj * c};
}

// Radial normalization p_{m,n} = √(4m + 2n + 3) on the unit ball.
template <typename Scalar>
Scalar radial_norm(int m, int n) {
    using std::sqrt;
    return sqrt(Scalar(4 * m + 2 * n + 3));
}

// Angular normalization q_{n,k} = √((2n+1)/(4π) · (n-k)!/(n+k)!).
template <typename Scalar>
Scalar angular_norm(int n, int k) {
    using std::sqrt;
    Scalar ratio(1);
    for (int i = n - k + 1; i <= n + k; ++i) ratio /= Scalar(i);
    return sqrt(Scalar(2 * n + 1) / (4 * Scalar(3.14159265358979323846)) * ratio);
}

}  // namespace lrfmp

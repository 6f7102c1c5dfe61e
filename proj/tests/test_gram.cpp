#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "gram_oracle.hpp"
#include "lrfmp/config.hpp"
#include "lrfmp/errors.hpp"
#include "lrfmp/gram.hpp"
#include "lrfmp/runner.hpp"

using namespace lrfmp;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

PolyIndex random_poly(std::mt19937_64& g, int cap) {
    PolyIndex p;
    p.m = static_cast<int>(g() % (cap + 1));
    p.n = static_cast<int>(g() % (cap + 1));
    p.j = static_cast<int>(g() % (2 * p.n + 1)) - p.n;
    return p;
}

}  // namespace

TEST_CASE("poly x poly examples") {
    const auto p = h1_poly_poly_parts({0, 0, 0}, {0, 0, 0});
    CHECK(p.l2 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(p.grad) < 1e-15);
    CHECK(h1_poly_poly({1, 2, 1}, {1, 3, 1}) == 0.0);
    CHECK(h1_poly_poly({1, 2, 1}, {1, 2, -1}) == 0.0);
    const double v = h1_poly_poly({1, 2, 1}, {3, 2, 1});
    CHECK(rel(v, oracle::brute_poly_poly({1, 2, 1}, {3, 2, 1})) < 1e-6);
}

TEST_CASE("poly x poly Kronecker structure is exhaustive") {
    const auto idx = enumerate_polys(5, 5);
    for (const auto& a : idx)
        for (const auto& b : idx)
            if (a.n != b.n || a.j != b.j) CHECK(h1_poly_poly(a, b) == 0.0);
}

TEST_CASE("poly x poly against brute force") {
    std::mt19937_64 g(31);
    for (int i = 0; i < 10; ++i) {
        auto a = random_poly(g, 5);
        auto b = random_poly(g, 5);
        b.n = a.n;
        b.j = a.j;
        CHECK(rel(h1_poly_poly(a, b), oracle::brute_poly_poly(a, b)) < 1e-6);
    }
}

TEST_CASE("overlap_bounds examples") {
    TesseroidBounds wide;
    wide.rho = 0.0;
    const TesseroidParams a(0.5, 1.0, 0.0, 0.2, 0.5, 0.2, wide), b(0.6, 1.0, 0.0, 0.2, 0.5, 0.2, wide);
    const auto ov = overlap_bounds(a, b);
    REQUIRE(ov.dims[0].size() == 1);
    CHECK(ov.dims[0][0].lb == doctest::Approx(0.4));
    CHECK(ov.dims[0][0].ub == doctest::Approx(0.7));
    const auto& c = ov.dims[0][0].critical;
    REQUIRE(c.size() == 4);
    CHECK(c[0] == doctest::Approx(0.4));
    CHECK(c[1] == doctest::Approx(0.5));
    CHECK(c[2] == doctest::Approx(0.6));
    CHECK(c[3] == doctest::Approx(0.7));

    const TesseroidParams far(0.9, 4.0, 0.5, 0.05, 0.3, 0.1);
    CHECK(overlap_bounds(a, far).empty());
    CHECK(h1_fehf_fehf(TesseroidParams(0.8, 1.0, 0.0, 0.1, 0.5, 0.2), far) == 0.0);
}

TEST_CASE("overlap across the 2pi cut") {
    const TesseroidParams a(0.8, 0.2, 0.0, 0.1, 0.5, 0.3), b(0.8, kTwoPi - 0.1, 0.1, 0.1, 0.4, 0.3);
    const auto ov = overlap_bounds(a, b);
    REQUIRE(ov.dims[1].size() == 1);
    CHECK(ov.dims[1][0].lb == doctest::Approx(-0.3));
    CHECK(ov.dims[1][0].ub == doctest::Approx(0.3));
    CHECK(rel(h1_fehf_fehf(a, b), oracle::brute_fehf_fehf(a, b)) < 1e-6);
    // Wide arcs meet on both sides of the circle.
    const TesseroidParams w1(0.8, 0.5, 0.0, 0.1, 3.0, 0.3), w2(0.8, kPi + 0.5, 0.0, 0.1, 3.0, 0.3);
    CHECK(overlap_bounds(w1, w2).dims[1].size() == 2);
    CHECK(rel(h1_fehf_fehf(w1, w2), oracle::brute_fehf_fehf(w1, w2)) < 1e-6);
}

TEST_CASE("fehf x fehf against brute force") {
    std::mt19937_64 g(41);
    int done = 0;
    while (done < 12) {
        const auto a = oracle::random_tesseroid(g);
        auto b = oracle::random_tesseroid(g);
        b.center = a.center + 0.5 * (b.center - a.center).cwiseProduct(Eigen::Vector3d(0.3, 0.2, 0.3));
        if (!validate_tesseroid(b).empty()) continue;
        const double v = h1_fehf_fehf(a, b);
        if (v == 0.0) continue;
        CHECK(rel(v, oracle::brute_fehf_fehf(a, b)) < 1e-6);
        ++done;
    }
}

TEST_CASE("fehf self products are positive and dominate the L2 part") {
    std::mt19937_64 g(43);
    for (int i = 0; i < 50; ++i) {
        const auto a = oracle::random_tesseroid(g);
        const auto p = h1_fehf_fehf_parts(a, a);
        CHECK(p.l2 > 0.0);
        CHECK(p.grad >= 0.0);
    }
}

TEST_CASE("fehf x fehf is invariant under a common longitude rotation") {
    std::mt19937_64 g(47);
    for (int i = 0; i < 50; ++i) {
        auto a = oracle::random_tesseroid(g);
        auto b = a;
        b.center[1] = normalize_longitude(a.Phi() + 0.8);
        b.half_width[1] = 0.9;
        const double v = h1_fehf_fehf(a, b);
        for (double shift : {1.0, 3.0, 5.5}) {
            auto a2 = a, b2 = b;
            a2.center[1] = normalize_longitude(a.Phi() + shift);
            b2.center[1] = normalize_longitude(b.Phi() + shift);
            CHECK(std::abs(h1_fehf_fehf(a2, b2) - v) < 1e-12 * std::max(1.0, std::abs(v)));
        }
    }
    // Φ = 0 and Φ = 2π describe the same hat.
    const TesseroidParams a(0.8, 0.0, 0.0, 0.1, 0.5, 0.3), a2(0.8, kTwoPi, 0.0, 0.1, 0.5, 0.3),
        b(0.8, 0.3, 0.1, 0.1, 0.5, 0.3);
    CHECK(std::abs(h1_fehf_fehf(a, b) - h1_fehf_fehf(a2, b)) < 1e-12);
}

TEST_CASE("pole proximity is reported") {
    TesseroidBounds b;
    b.eps_t = 1e-8;
    const TesseroidParams a(0.8, 1.0, 1 - 1e-8, 0.1, 0.5, 0.2, b);
    CHECK_THROWS_AS(h1_fehf_fehf(a, a), PoleProximity);
}

TEST_CASE("mixed examples") {
    const TesseroidParams T(0.8, 1.0, 0.2, 0.1, 0.5, 0.3);
    const auto p = h1_mixed_parts(T, {0, 0, 0});
    CHECK(std::abs(p.grad) < 1e-14);
    // Constant polynomial: √(3/4π) ∫ hat dV = √(3/4π) ∫ r² hat_r dr · ΔΦ · ΔT.
    const double rint = [&] {
        const auto q = gauss_legendre(4, T.r_lo(), T.R());
        const auto q2 = gauss_legendre(4, T.R(), T.r_hi());
        auto h = [&](double r) { return r * r * (1 - std::abs(r - T.R()) / T.dR()); };
        return q.integrate(h) + q2.integrate(h);
    }();
    const double expect = std::sqrt(3 / (4 * kPi)) * rint * T.dPhi() * T.dT();
    CHECK(rel(p.l2, expect) < 1e-8);
    CHECK(rel(p.total(), oracle::brute_mixed(T, {0, 0, 0})) < 1e-8);
}

TEST_CASE("mixed against brute force") {
    std::mt19937_64 g(53);
    for (int i = 0; i < 12; ++i) {
        const auto T = oracle::random_tesseroid(g);
        const auto idx = random_poly(g, 4);
        const double v = h1_mixed(T, idx);
        const double ref = oracle::brute_mixed(T, idx);
        CHECK(std::abs(v - ref) < 1e-6 * std::max(std::abs(ref), 1e-3 * std::sqrt(h1_fehf_fehf(T, T))));
    }
}

TEST_CASE("mixed batch agrees with single evaluations") {
    std::mt19937_64 g(59);
    const auto idx = enumerate_polys(5, 5);
    for (int i = 0; i < 5; ++i) {
        const auto T = oracle::random_tesseroid(g);
        const Eigen::VectorXd all = h1_mixed_all(T, 5, 5);
        for (std::size_t k = 0; k < idx.size(); ++k)
            CHECK(std::abs(all[static_cast<Eigen::Index>(k)] - h1_mixed(T, idx[k])) < 1e-12 * std::max(1.0, std::abs(all[static_cast<Eigen::Index>(k)])));
    }
}

TEST_CASE("latitudinal node count: desk default agrees with a 100x finer rule") {
    std::mt19937_64 g(61);
    GramSettings fine;
    fine.latitudinal_nodes = 1000000;
    for (int i = 0; i < 3; ++i) {
        const auto T = oracle::random_tesseroid(g);
        const Eigen::VectorXd a = h1_mixed_all(T, 5, 5), b = h1_mixed_all(T, 5, 5, fine);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, b.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("gram cache is symmetric and memoizes") {
    GramCache cache;
    const DictionaryElement a = TesseroidParams(0.8, 1.0, 0.2, 0.1, 0.5, 0.3);
    const DictionaryElement b = PolyIndex{2, 3, -1};
    const double x = gram_get(cache, a, b);
    CHECK(cache.size() == 1);
    const double y = gram_get(cache, b, a);
    CHECK(x == y);
    CHECK(cache.size() == 1);
    CHECK(gram_get(cache, a, b) == x);
    CHECK(x == h1(a, b));
}

TEST_CASE("starting dictionary Gram is symmetric positive semidefinite") {
    const auto d = build_starting_dictionary(RunConfig{});
    const Eigen::Index n = static_cast<Eigen::Index>(d.size());
    Eigen::MatrixXd G(n, n);
    const int np = poly_count(5, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i >= np) {
            const Eigen::VectorXd mixed = h1_mixed_all(std::get<TesseroidParams>(d[i]), 5, 5);
            G.row(i).head(np) = mixed.transpose();
            G.col(i).head(np) = mixed;
        }
        for (Eigen::Index j = std::max<Eigen::Index>(i, i < np ? 0 : np); j < n; ++j)
            if ((i < np) == (j < np)) G(i, j) = G(j, i) = h1(d[i], d[j]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

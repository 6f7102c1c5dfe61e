#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <Eigen/Geometry>

#include "lrfmp/basis.hpp"
#include "lrfmp/errors.hpp"
#include "lrfmp/parallel.hpp"
#include "lrfmp/scenario.hpp"

using namespace lrfmp;

namespace {

Eigen::Vector3d unit_from_deg(double lon, double lat) {
    const double a = lon * kPi / 180.0, b = lat * kPi / 180.0;
    return {std::cos(b) * std::cos(a), std::cos(b) * std::sin(a), std::sin(b)};
}

PlumeSpec single(double amplitude, double base_km, double top_km) {
    PlumeSpec s;
    s.plumes.push_back({30.0, 20.0, base_km, top_km, amplitude});
    return s;
}

// ∫ (1 - √(s² + b²)/c) ds over the chord |s| ≤ √(c² - b²).
double triangle_chord(double b, double c) {
    if (b >= c) return 0.0;
    if (b == 0.0) return c;
    const double L = std::sqrt(c * c - b * b);
    return L - b * b / (2.0 * c) * std::log((c + L) / (c - L));
}

// Chord of the unit sphere in the plane x·a = h, passing at distance b from the axis.
Ray perpendicular_chord(const Eigen::Vector3d& a, double h, double b) {
    Eigen::Vector3d e1 = a.unitOrthogonal();
    Eigen::Vector3d e2 = a.cross(e1);
    const double half = std::sqrt(1.0 - h * h - b * b);
    return make_ray({h * a + b * e2 - half * e1, h * a + b * e2 + half * e1});
}

}  // namespace

TEST_CASE("plume field on the axis equals the amplitude") {
    const auto s = PlumeSpec::eifel_yellowstone();
    for (const auto& p : s.plumes)
        for (double r : {0.6, 0.77, 0.95})
            CHECK(plume_field(s, Eigen::Vector3d(r * unit_from_deg(p.lon_deg, p.lat_deg))) ==
                  doctest::Approx(p.amplitude).epsilon(1e-12));
}

TEST_CASE("plume field vanishes antipodally and below the core-mantle boundary") {
    const auto s = PlumeSpec::eifel_yellowstone();
    const Eigen::Vector3d mid = (unit_from_deg(6.7, 50.2) + unit_from_deg(-110.6, 44.4)).normalized();
    CHECK(plume_field(s, Eigen::Vector3d(-0.8 * mid)) == 0.0);
    for (const auto& p : s.plumes) {
        const Eigen::Vector3d a = unit_from_deg(p.lon_deg, p.lat_deg);
        CHECK(plume_field(s, Eigen::Vector3d(0.5 * a)) == 0.0);
        CHECK(plume_field(s, Eigen::Vector3d((s.rho - 1e-9) * a)) == 0.0);
        CHECK(plume_field(s, Eigen::Vector3d(-0.9 * a)) == 0.0);
    }
}

TEST_CASE("plume cross-section is a triangle whose radius tapers linearly") {
    const auto s = single(3.0, 1200.0, 300.0);
    const Eigen::Vector3d a = unit_from_deg(30.0, 20.0);
    const Eigen::Vector3d e = a.unitOrthogonal();
    for (double frac : {0.0, 0.5, 1.0}) {
        const double r = s.rho + (1.0 - s.rho) * frac;
        const double c = (1200.0 + (300.0 - 1200.0) * frac) / s.radius_km;
        for (double x : {0.0, 0.25, 0.5, 0.9, 1.1}) {
            const double d = x * c;
            const double h = std::sqrt(r * r - d * d);
            const double expect = x < 1.0 ? 3.0 * (1.0 - x) : 0.0;
            CHECK(plume_field(s, Eigen::Vector3d(h * a + d * e)) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("delays of rays missing the plumes are zero") {
    const auto s = PlumeSpec::eifel_yellowstone();
    const Eigen::Vector3d mid = (unit_from_deg(6.7, 50.2) + unit_from_deg(-110.6, 44.4)).normalized();
    RaySet rays;
    rays.rays.push_back(perpendicular_chord(-mid, 0.7, 0.0));
    rays.rays.push_back(make_ray({Eigen::Vector3d(0, 0, -1), Eigen::Vector3d(0, 0, -0.3)}));
    const auto y = synthesize_delays(s, rays);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
}

TEST_CASE("delay along the plume axis is amplitude times mantle thickness") {
    const auto s = single(2.5, 900.0, 400.0);
    const Eigen::Vector3d a = unit_from_deg(30.0, 20.0);
    RaySet rays;
    rays.rays.push_back(make_ray({a, Eigen::Vector3d(-a)}));
    const auto y = synthesize_delays(s, rays);
    CHECK(y[0] == doctest::Approx(2.5 * (1.0 - s.rho)).epsilon(1e-8));
}

TEST_CASE("delay of a chord across a cylindrical plume matches the closed form") {
    const double c_km = 700.0;
    const auto s = single(1.7, c_km, c_km);
    const double c = c_km / s.radius_km;
    const Eigen::Vector3d a = unit_from_deg(30.0, 20.0);
    for (double h : {0.6, 0.75, 0.9})
        for (double b : {0.0, 0.3 * c, 0.8 * c, 1.2 * c}) {
            RaySet rays;
            rays.rays.push_back(perpendicular_chord(a, h, b));
            const double got = synthesize_delays(s, rays)[0];
            CHECK(got == doctest::Approx(1.7 * triangle_chord(b, c)).epsilon(1e-6).scale(1e-6));
        }
}

TEST_CASE("delays are linear in the plume amplitude") {
    const auto rays = synthetic_chords(60, 11);
    const auto y1 = synthesize_delays(single(1.0, 1500.0, 800.0), rays);
    CHECK(y1.cwiseAbs().maxCoeff() > 0.0);
    for (double amp : {-3.0, 0.5, 7.0}) {
        const auto y = synthesize_delays(single(amp, 1500.0, 800.0), rays);
        CHECK((y - amp * y1).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + std::abs(amp) * y1.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("desk-scale delays are of order one second") {
    const auto rays = synthetic_chords(2000, 5);
    const auto y = synthesize_delays(PlumeSpec::eifel_yellowstone(), rays);
    const double peak = y.cwiseAbs().maxCoeff();
    CHECK(peak > 0.3);
    CHECK(peak < 20.0);
}

TEST_CASE("perturb follows the multiplicative noise model") {
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
    CHECK(perturb(y, 0.0, 3) == y);

    Rng rng(17);
    Eigen::VectorXd expect(5);
    for (int i = 0; i < 5; ++i) expect[i] = y[i] * (1.0 + 0.05 * rng.normal());
    CHECK(perturb(y, 0.05, 17) == expect);

    CHECK(10.0 * (1.0 + 0.05 * -2.0) == doctest::Approx(9.0));
}

TEST_CASE("perturb is bit-reproducible and unbiased") {
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(100000, 2.0);
    const auto a = perturb(y, 0.05, 99);
    const auto b = perturb(y, 0.05, 99);
    CHECK(a == b);
    CHECK(a != perturb(y, 0.05, 100));
    const double mean = ((a.array() / y.array() - 1.0) / 0.05).mean();
    CHECK(std::abs(mean) < 0.02);
    const double var = (((a.array() / y.array() - 1.0) / 0.05) - mean).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("rrmse") {
    const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(30, -2.0, 5.0);
    CHECK(rrmse(f, f) == 0.0);
    CHECK(rrmse(f, Eigen::VectorXd::Zero(30)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rrmse(f, 2.0 * f) == doctest::Approx(1.0).epsilon(1e-15));
    for (double l : {-1.5, 0.3, 0.9, 4.0})
        CHECK(rrmse(f, Eigen::VectorXd(l * f)) == doctest::Approx(std::abs(1.0 - l)).epsilon(1e-14));
    CHECK_THROWS_AS(rrmse(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)), ContractViolation);
}

TEST_CASE("slowness to relative velocity anomaly") {
    CHECK(slowness_to_dc_over_c(0.0, 8.0) == 0.0);
    CHECK(slowness_to_dc_over_c(1.0 / 9.0 - 1.0 / 10.0, 10.0) == doctest::Approx(-0.1).epsilon(1e-12));
    const double c_ref = 6.0;
    for (double c : {4.0, 5.5, 6.5, 9.0}) {
        const double dS = 1.0 / c - 1.0 / c_ref;
        CHECK(slowness_to_dc_over_c(dS, c_ref) == doctest::Approx((c - c_ref) / c_ref).epsilon(1e-12));
        CHECK((dS > 0) == (slowness_to_dc_over_c(dS, c_ref) < 0));
    }
    CHECK_THROWS_AS(slowness_to_dc_over_c(-0.25, 4.0), ContractViolation);
}

TEST_CASE("evaluation grid layout") {
    const double rho = 3482.0 / 6371.0;
    const auto g = make_grid(rho);
    REQUIRE(g.radii.size() == 12);
    CHECK(g.radii.front() == doctest::Approx(rho));
    CHECK(g.radii.back() == 1.0);
    CHECK(g.layer_size() == 73 * 37);
    CHECK(g.size() == 12 * 73 * 37);
    CHECK(g.lon_deg(72) == 360.0);
    CHECK(g.lat_deg(0) == -90.0);
    CHECK(g.lat_deg(36) == 90.0);
    CHECK(g.point(3, 0, 0).t == doctest::Approx(-1.0));
    CHECK(validate_grid(g, rho).empty());

    auto bad = g;
    bad.radii.push_back(0.3);
    bad.n_lat = 1;
    CHECK(validate_grid(bad, rho).size() == 2);
}

TEST_CASE("grid sampling and layer statistics") {
    const auto s = PlumeSpec::eifel_yellowstone();
    const auto g = make_grid(s.rho, 4, 19, 11);
    const auto v = sample_truth(s, g);
    REQUIRE(v.size() == static_cast<Eigen::Index>(g.size()));
    std::size_t q = 0;
    for (std::size_t l = 0; l < g.radii.size(); ++l)
        for (int i = 0; i < g.n_lon; ++i)
            for (int k = 0; k < g.n_lat; ++k) CHECK(v[q++] == plume_field(s, g.point(l, i, k)));

    const auto rms = layer_rms(Eigen::VectorXd::Constant(g.size(), -3.0), g);
    REQUIRE(rms.size() == 4);
    for (double r : rms) CHECK(r == doctest::Approx(3.0));

    Expansion e;
    e.terms.push_back({2.0, PolyIndex{0, 0, 0}});
    const auto sv = sample_expansion(e, g);
    for (Eigen::Index k = 0; k < sv.size(); ++k) CHECK(sv[k] == doctest::Approx(2.0 * std::sqrt(3.0 / (4.0 * kPi))));
}

TEST_CASE("layer CSV round trip") {
    const auto s = PlumeSpec::eifel_yellowstone();
    const auto g = make_grid(s.rho, 3, 9, 5);
    const auto v = sample_truth(s, g);
    const auto path = (std::filesystem::temp_directory_path() / "lrfmp_layer_test.csv").string();
    write_layer_csv(path, g, 1, v);
    const auto back = read_layer_csv(path);
    REQUIRE(back.value.size() == g.layer_size());
    std::size_t q = 0;
    for (int i = 0; i < g.n_lon; ++i)
        for (int k = 0; k < g.n_lat; ++k, ++q) {
            CHECK(back.lon[q] == g.lon_deg(i));
            CHECK(back.lat[q] == g.lat_deg(k));
            CHECK(back.value[q] == v[g.layer_size() + q]);
        }
    std::filesystem::remove(path);
}

TEST_CASE("plume validation") {
    auto s = PlumeSpec::eifel_yellowstone();
    CHECK(validate_plumes(s).empty());
    s.plumes[0].top_radius_km = 0.0;
    s.plumes[1].amplitude = NAN;
    CHECK(validate_plumes(s).size() == 2);
}

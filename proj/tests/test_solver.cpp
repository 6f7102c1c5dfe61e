#include <doctest.h>

#include <cmath>
#include <set>

#include "lrfmp/errors.hpp"
#include "lrfmp/runner.hpp"
#include "lrfmp/scenario.hpp"
#include "lrfmp/solver.hpp"

using namespace lrfmp;

namespace {

RaySet plume_rays(std::size_t n, std::uint64_t seed) {
    RaySet rays = synthetic_chords(n, seed);
    const auto y = synthesize_delays(PlumeSpec::eifel_yellowstone(), rays);
    for (std::size_t i = 0; i < n; ++i) rays.rays[i].delay = y[i];
    return rays;
}

std::vector<DictionaryElement> small_dictionary() {
    std::vector<DictionaryElement> d;
    for (const auto& p : enumerate_polys(2, 2)) d.emplace_back(p);
    for (double R : {0.65, 0.85})
        for (double Phi : {0.4, 2.0, 4.5})
            for (double T : {-0.4, 0.5}) d.emplace_back(TesseroidParams(R, Phi, T, 0.12, 0.8, 0.4));
    return d;
}

SolverConfig quiet_config() {
    SolverConfig c;
    c.learning = false;
    c.noise_level = 0.0;
    return c;
}

// J^SM of f_N + a·d computed from the state's current pieces.
double functional_after(const SolverState& s, const DictionaryElement& d, double a) {
    const auto col = dspo_matrix_column(d, *s.ws->rays, 0, s.active_end, s.ws->config.dspo);
    const Eigen::VectorXd r = s.residual.head(s.active_end) - a * col;
    const double fd = penalty_inner(s, d), dd = h1(d, d, s.ws->config.gram);
    return r.cwiseQuotient(s.ws->sigma.head(s.active_end)).squaredNorm() +
           s.lambda * (s.norm2 + 2.0 * a * fd + a * a * dd);
}

}  // namespace

TEST_CASE("objective at f = 0 and lambda = 0 is the normalized correlation") {
    const auto rays = plume_rays(80, 3);
    const auto ws = build_workspace(rays, small_dictionary(), quiet_config());
    const auto s = init_state(ws, 0.0);
    for (std::size_t i = 0; i < ws.dictionary.size(); i += 5) {
        const auto o = objective(ws.dictionary[i], s);
        const Eigen::VectorXd c = ws.columns.col(i);
        const double expect = std::pow(ws.y.dot(c), 2) / c.squaredNorm();
        CHECK(o.value == doctest::Approx(expect).epsilon(1e-9));
        CHECK(o.value >= 0.0);
    }
}

TEST_CASE("element invisible to every ray") {
    RaySet rays;
    for (double a : {0.0, 1.0, 2.0}) {
        const Eigen::Vector3d u(std::cos(a), std::sin(a), 0.0);
        const Eigen::Vector3d v(-std::sin(a), std::cos(a), 0.0);
        const double h = 0.6, w = 0.8;
        rays.rays.push_back(make_ray({Eigen::Vector3d(h * Eigen::Vector3d::UnitZ() - w * u),
                                      Eigen::Vector3d(h * Eigen::Vector3d::UnitZ() + w * v)},
                                     1.0 + a));
    }
    const TesseroidParams south(0.8, 1.0, -0.8, 0.1, 0.5, 0.1);
    SolverConfig cfg = quiet_config();
    const auto ws = build_workspace(rays, {PolyIndex{0, 0, 0}, south}, cfg);
    auto s = init_state(ws, 0.5);
    const auto o = objective(south, s);
    CHECK(o.value == 0.0);
    CHECK(o.B > 0.0);
    CHECK_THROWS_AS(objective(south, init_state(ws, 0.0)), ZeroElement);
}

TEST_CASE("coefficient is the one-dimensional least-squares weight") {
    RaySet rays;
    rays.rays.push_back(make_ray({Eigen::Vector3d(-0.9, 0.1, 0.0), Eigen::Vector3d(0.8, 0.3, 0.2)}));
    const DictionaryElement d = PolyIndex{0, 0, 0};
    const double td = dspo_matrix_column(d, rays, 0, 1)[0];
    rays.rays[0].delay = 2.0 * td;
    const auto ws = build_workspace(rays, {d}, quiet_config());
    CHECK(coefficient(d, init_state(ws, 0.0)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(coefficient(d, init_state(ws, 1e12))) < 1e-9);
}

TEST_CASE("coefficient is stationary for the functional") {
    const auto rays = plume_rays(60, 8);
    auto ws = build_workspace(rays, small_dictionary(), quiet_config());
    auto s = init_state(ws, 1e-2);
    for (int k = 0; k < 4; ++k) lrfmp_step(s);
    for (const DictionaryElement& d :
         {DictionaryElement(PolyIndex{1, 2, -1}), DictionaryElement(TesseroidParams(0.72, 5.5, 0.1, 0.1, 0.6, 0.3))}) {
        const double a = coefficient(d, s);
        const double h = 1e-4 * (1.0 + std::abs(a));
        const double slope = (functional_after(s, d, a + h) - functional_after(s, d, a - h)) / (2 * h);
        const double scale = functional_after(s, d, 0.0);
        CHECK(std::abs(slope) < 1e-8 * (1.0 + scale));
        const double hh = 1e-6 * (1.0 + std::abs(a));
        CHECK(functional_after(s, d, a + hh) > functional_after(s, d, a));
        CHECK(functional_after(s, d, a - hh) > functional_after(s, d, a));
    }
}

TEST_CASE("preselect is the exhaustive argmax over the starting dictionary") {
    RunConfig rc;
    const auto dict = build_starting_dictionary(rc);
    REQUIRE(dict.size() == 341);
    const auto rays = plume_rays(50, 21);
    const auto ws = build_workspace(rays, dict, quiet_config());
    auto s = init_state(ws, 1e-3 * ws.y.norm());
    for (int step = 0; step < 3; ++step) {
        const auto pre = preselect(s);
        int best = -1;
        double bv = -1.0, fehf_v = -1.0;
        for (std::size_t i = 0; i < ws.dictionary.size(); ++i) {
            const auto o = objective(ws.dictionary[i], s);
            if (o.value > bv * (1 + 1e-9)) {
                bv = o.value;
                best = static_cast<int>(i);
            }
            if (is_fehf(ws.dictionary[i])) fehf_v = std::max(fehf_v, o.value);
        }
        CHECK(pre.best == best);
        CHECK(pre.obj.value == doctest::Approx(bv).epsilon(1e-8));
        CHECK(pre.best_fehf_value == doctest::Approx(fehf_v).epsilon(1e-8));
        lrfmp_step(s);
    }
}

TEST_CASE("preselect tie-break and single-element dictionaries") {
    const auto rays = plume_rays(40, 4);
    const DictionaryElement hat = TesseroidParams(0.8, 0.1, 0.6, 0.15, 1.0, 0.4);
    {
        const auto ws = build_workspace(rays, {hat}, quiet_config());
        const auto pre = preselect(init_state(ws, 0.1));
        CHECK(pre.best == 0);
        CHECK(pre.best_fehf == 0);
    }
    {
        const auto ws = build_workspace(rays, {PolyIndex{1, 1, 0}, PolyIndex{1, 1, 0}, hat, hat}, quiet_config());
        CHECK(ws.columns.col(0) == ws.columns.col(1));
        const auto pre = preselect(init_state(ws, 0.1));
        CHECK((pre.best == 0 || pre.best == 2));
        CHECK(pre.best_fehf == 2);
    }
}

TEST_CASE("descent identity and residual bookkeeping over 50 iterations") {
    const auto rays = plume_rays(120, 5);
    const auto ws = build_workspace(rays, small_dictionary(), quiet_config());
    auto s = init_state(ws, 1e-3 * ws.y.norm());
    double J = tikhonov_functional(s);
    for (int k = 0; k < 50; ++k) {
        const auto pre = preselect(s);
        const auto step = lrfmp_step(s);
        REQUIRE(step.improved);
        const double Jn = tikhonov_functional(s);
        CHECK(std::abs(Jn - J + step.chosen.obj.value) < 1e-8 * (1.0 + J));
        CHECK(step.chosen.obj.value >= pre.obj.value);
        CHECK(Jn <= J);
        J = Jn;
    }
    CHECK((recompute_residual(s) - s.residual).cwiseAbs().maxCoeff() < 1e-8);
    double n2 = 0.0;
    for (const auto& a : s.expansion.terms)
        for (const auto& b : s.expansion.terms) n2 += a.alpha * b.alpha * h1(a.element, b.element);
    CHECK(s.norm2 == doctest::Approx(n2).epsilon(1e-8));
}

TEST_CASE("unregularized step is an orthogonal projection on a two-ray toy") {
    RaySet rays;
    rays.rays.push_back(make_ray({Eigen::Vector3d(-0.9, 0.0, 0.1), Eigen::Vector3d(0.9, 0.2, 0.1)}, 1.5));
    rays.rays.push_back(make_ray({Eigen::Vector3d(0.0, -0.9, -0.2), Eigen::Vector3d(0.1, 0.9, 0.3)}, -0.5));
    const DictionaryElement d = PolyIndex{1, 1, 1};
    const auto ws = build_workspace(rays, {d}, quiet_config());
    auto s = init_state(ws, 0.0);
    const Eigen::Vector2d c = ws.columns.col(0);
    const Eigen::Vector2d y(1.5, -0.5);
    const double before = s.residual.squaredNorm();
    lrfmp_step(s);
    const double drop = std::pow(y.dot(c), 2) / c.squaredNorm();
    CHECK(before - s.residual.squaredNorm() == doctest::Approx(drop).epsilon(1e-12));
    CHECK(std::abs(s.residual.dot(c)) < 1e-12);
}

TEST_CASE("reduced chi-square") {
    RaySet rays;
    rays.rays.push_back(make_ray({Eigen::Vector3d(-0.9, 0.0, 0.1), Eigen::Vector3d(0.9, 0.2, 0.1)}, 0.3, 0.3));
    rays.rays.push_back(make_ray({Eigen::Vector3d(0.0, -0.9, -0.2), Eigen::Vector3d(0.1, 0.9, 0.3)}, -2.0, 2.0));
    const auto ws = build_workspace(rays, {PolyIndex{0, 0, 0}}, quiet_config());
    auto s = init_state(ws, 0.0);
    CHECK(chi2_red(s) == doctest::Approx(1.0));
    s.residual.setZero();
    CHECK(chi2_red(s) == 0.0);

    RaySet unit;
    unit.rays.push_back(make_ray({Eigen::Vector3d(-0.9, 0.0, 0.1), Eigen::Vector3d(0.9, 0.2, 0.1)}, 3.0));
    unit.rays.push_back(make_ray({Eigen::Vector3d(0.0, -0.9, -0.2), Eigen::Vector3d(0.1, 0.9, 0.3)}, 4.0));
    const auto wu = build_workspace(unit, {PolyIndex{0, 0, 0}}, quiet_config());
    CHECK(chi2_red(init_state(wu, 0.0)) == doctest::Approx(25.0 / 2.0));
}

TEST_CASE("zero iterations return the initial field") {
    const auto rays = plume_rays(30, 2);
    auto cfg = quiet_config();
    cfg.max_iterations = 0;
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    const auto r = run_lrfmp(ws, 0.1);
    CHECK(r.expansion.terms.empty());
    CHECK(r.ledger.size() == 1);
    CHECK(r.stop_reason == "max_iter");
    CHECK(r.rel_error == doctest::Approx(1.0));
}

TEST_CASE("a planted dictionary element is recovered exactly") {
    RaySet rays = synthetic_chords(150, 9);
    const TesseroidParams planted(0.85, 2.0, 0.5, 0.12, 0.8, 0.4);
    const auto col = dspo_matrix_column(planted, rays, 0, rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) rays.rays[i].delay = 1.7 * col[i];
    const auto ws = build_workspace(rays, small_dictionary(), quiet_config());
    const auto r = run_lrfmp(ws, 0.0);
    REQUIRE(r.ledger.size() >= 2);
    CHECK(r.ledger.size() <= 4);
    CHECK(r.rel_error < 1e-8);
    CHECK((r.stop_reason == "noise_floor" || r.stop_reason == "no_improvement"));
    CHECK(std::get<TesseroidParams>(*r.ledger[1].element) == planted);
    CHECK(r.ledger[1].alpha == doctest::Approx(1.7).epsilon(1e-10));
}

TEST_CASE("stop reasons come from the fixed set") {
    const std::set<std::string> allowed{"max_iter", "noise_floor", "blow_up", "chi2", "no_improvement"};
    const auto rays = plume_rays(60, 12);
    auto cfg = quiet_config();
    cfg.max_iterations = 15;
    cfg.noise_level = 0.05;
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    for (double lambda : {0.0, 1e-2, 1e6}) {
        const auto r = run_lrfmp(ws, lambda);
        CHECK(allowed.count(r.stop_reason) == 1);
        CHECK(r.ledger.back().stop_reason == r.stop_reason);
        for (std::size_t i = 0; i + 1 < r.ledger.size(); ++i) CHECK(r.ledger[i].stop_reason.empty());
    }
    cfg.blow_up = 0.5;
    const auto wb = build_workspace(rays, small_dictionary(), cfg);
    CHECK(run_lrfmp(wb, 0.0).stop_reason == "blow_up");
}

TEST_CASE("package schedule") {
    RaySet rays = plume_rays(90, 13);
    rays.set_packages(30);
    REQUIRE(rays.package_count() == 3);
    auto cfg = quiet_config();
    cfg.package_threshold = 0.5;
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    auto s = init_state(ws, 0.0);
    CHECK(s.active_end == 30);

    s.residual.head(30) = 0.51 * ws.y.head(30);
    CHECK_FALSE(schedule_packages(s));
    s.residual.head(30) = 0.49 * ws.y.head(30);
    const auto before = s.expansion.terms.size();
    CHECK(schedule_packages(s));
    CHECK(s.active_packages == 2);
    CHECK(s.active_end == 60);
    CHECK(s.expansion.terms.size() == before);
    s.residual.head(60).setZero();
    CHECK(schedule_packages(s));
    CHECK(s.active_end == 90);
    CHECK_FALSE(schedule_packages(s));
    CHECK(s.active_packages == 3);
}

TEST_CASE("ledger records package activations at the threshold crossing") {
    RaySet rays = plume_rays(150, 14);
    rays.set_packages(50);
    auto cfg = quiet_config();
    cfg.max_iterations = 60;
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    const auto r = run_lrfmp(ws, 1e-4 * ws.y.norm());
    std::size_t active = 1;
    for (std::size_t i = 1; i < r.ledger.size(); ++i) {
        const auto& rec = r.ledger[i];
        if (rec.rel_error < 0.5 && active < 3) {
            CHECK(rec.packages == active + 1);
            ++active;
        } else {
            CHECK(rec.packages == active);
        }
    }
}

TEST_CASE("tesseroid encoding round trip") {
    const TesseroidBounds b;
    for (const auto& T : {TesseroidParams(0.7, 1.0, 0.2, 0.1, 0.5, 0.3), TesseroidParams(0.99, 6.0, -0.9, 0.011, 3.0, 0.45)}) {
        const auto x = encode_tesseroid(T);
        CHECK((x.array() >= 0).all());
        CHECK((x.array() <= 1).all());
        const auto back = decode_tesseroid(x, b);
        CHECK((back.center - T.center).norm() < 1e-12);
        CHECK((back.half_width - T.half_width).norm() < 1e-12);
    }
    for (int k = 0; k < 50; ++k) {
        const Eigen::VectorXd x = (Eigen::VectorXd::Random(6).array() + 1.0) / 2.0;
        CHECK(validate_tesseroid(decode_tesseroid(x, b)).empty());
    }
}

TEST_CASE("learning recovers a planted hat") {
    RaySet rays = synthetic_chords(300, 31);
    const TesseroidParams truth(0.8, 3.3, 0.35, 0.1, 0.7, 0.3);
    const auto col = dspo_matrix_column(truth, rays, 0, rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) rays.rays[i].delay = col[i];
    auto cfg = quiet_config();
    cfg.learning = true;
    cfg.global.max_evals = 4000;
    cfg.global.ftol_rel = 1e-10;  // converge the global stage instead of the coarse default
    const auto ws = build_workspace(rays, {PolyIndex{0, 0, 0}}, cfg);
    const auto s = init_state(ws, 0.0);
    const TesseroidParams start(0.7, 1.0, -0.2, 0.15, 1.0, 0.4);
    const auto res = learn_fehf(s, start);
    REQUIRE(res.candidates.size() == 3);
    CHECK(res.stage2_value >= res.stage1_value);
    for (const auto& c : res.candidates) CHECK(validate_tesseroid(std::get<TesseroidParams>(c.element)).empty());
    const auto& best = std::get<TesseroidParams>(res.candidates[2].element);
    CHECK(std::abs(best.R() - truth.R()) < 0.05);
    CHECK(std::abs(best.Phi() - truth.Phi()) < 0.05);
    CHECK(std::abs(best.T() - truth.T()) < 0.05);
}

TEST_CASE("learning sees only the newest package") {
    RaySet rays = plume_rays(60, 15);
    rays.set_packages(20);
    auto cfg = quiet_config();
    cfg.learning = true;
    cfg.global.max_evals = 300;
    cfg.local.max_evals = 100;
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    auto s = init_state(ws, 0.0);
    s.residual.head(20) *= 0.1;
    REQUIRE(schedule_packages(s));
    const auto res = learn_fehf(s, TesseroidParams(0.8, 1.0, 0.5, 0.12, 0.8, 0.4));
    const auto& T = std::get<TesseroidParams>(res.candidates[2].element);
    const auto newest = dspo_matrix_column(T, rays, 20, 40);
    const auto o = objective_from(s, newest, 20, penalty_inner(s, T), h1(T, T));
    CHECK(res.stage2_value == doctest::Approx(o.value).epsilon(1e-12));
    const auto all = objective(T, s);
    CHECK(res.candidates[2].obj.value == doctest::Approx(all.value).epsilon(1e-9));
}

TEST_CASE("learned candidates never lose to the dictionary") {
    const auto rays = plume_rays(80, 16);
    auto cfg = quiet_config();
    cfg.learning = true;
    cfg.global.max_evals = 400;
    cfg.local.max_evals = 200;
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    auto s = init_state(ws, 1e-3 * ws.y.norm());
    for (int k = 0; k < 4; ++k) {
        const auto pre = preselect(s);
        const double J = tikhonov_functional(s);
        const auto step = lrfmp_step(s);
        REQUIRE(step.improved);
        CHECK(step.chosen.obj.value >= pre.obj.value);
        CHECK(std::abs(tikhonov_functional(s) - J + step.chosen.obj.value) < 1e-8 * (1.0 + J));
        CHECK(s.ledger.back().best_learned >= 0.0);
    }
    CHECK((recompute_residual(s) - s.residual).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("model selection") {
    const auto rays = plume_rays(40, 17);
    auto cfg = quiet_config();
    cfg.max_iterations = 5;
    cfg.lambda_factors = {1e-2};
    {
        const auto ws = build_workspace(rays, small_dictionary(), cfg);
        const auto sel = select_model(ws, [](const Expansion&) { return 0.7; });
        CHECK(sel.best == 0);
        CHECK(sel.runs[0].lambda == doctest::Approx(1e-2 * ws.y.norm()));
    }
    cfg.lambda_factors = {1e-1, 1e-3, 1e-5};
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    const auto tie = select_model(ws, [](const Expansion&) { return 0.7; });
    CHECK(tie.best == 2);
    const auto grid = make_grid(ws.config.bounds.rho, 3, 13, 7);
    const auto truth = sample_truth(PlumeSpec::eifel_yellowstone(), grid);
    const auto sel = select_model(ws, [&](const Expansion& e) { return rrmse(truth, sample_expansion(e, grid)); });
    for (double v : sel.rrmse) CHECK(sel.rrmse[sel.best] <= v);
}

TEST_CASE("runs are deterministic") {
    const auto rays = plume_rays(60, 18);
    auto cfg = quiet_config();
    cfg.learning = true;
    cfg.max_iterations = 4;
    cfg.global.max_evals = 300;
    cfg.local.max_evals = 100;
    const auto ws = build_workspace(rays, small_dictionary(), cfg);
    const auto a = run_lrfmp(ws, 0.05);
    const auto b = run_lrfmp(ws, 0.05);
    REQUIRE(a.ledger.size() == b.ledger.size());
    for (std::size_t i = 1; i < a.ledger.size(); ++i) {
        CHECK(*a.ledger[i].element == *b.ledger[i].element);
        CHECK(a.ledger[i].alpha == b.ledger[i].alpha);
    }
}

TEST_CASE("solver configuration validation") {
    CHECK(validate_solver_config(SolverConfig{}).empty());
    SolverConfig c;
    c.lambda_factors.clear();
    c.package_size = 0;
    c.global.max_evals = 0;
    CHECK(validate_solver_config(c).size() == 3);
}

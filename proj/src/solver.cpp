#include "lrfmp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lrfmp/basis.hpp"
#include "lrfmp/errors.hpp"
#include "lrfmp/parallel.hpp"

namespace lrfmp {

std::vector<std::string> validate_solver_config(const SolverConfig& c) {
    std::vector<std::string> v;
    if (c.lambda_factors.empty()) v.emplace_back("lambda grid is empty");
    for (double l : c.lambda_factors)
        if (!(l >= 0.0) || !std::isfinite(l)) v.emplace_back("lambda factors must be finite and >= 0");
    if (c.max_iterations < 0) v.emplace_back("max_iterations must be >= 0");
    if (!(c.noise_level >= 0.0)) v.emplace_back("noise_level must be >= 0");
    if (!(c.blow_up > 0.0)) v.emplace_back("blow_up must be > 0");
    if (!(c.chi2_tolerance > 0.0)) v.emplace_back("chi2_tolerance must be > 0");
    if (c.package_size == 0) v.emplace_back("package_size must be > 0");
    if (!(c.package_threshold > 0.0)) v.emplace_back("package_threshold must be > 0");
    if (c.global.max_evals <= 0 || c.local.max_evals <= 0) v.emplace_back("optimizer budgets must be > 0");
    if (!(c.global.xtol_rel > 0.0 && c.global.ftol_rel > 0.0 && c.local.xtol_rel > 0.0 && c.local.ftol_rel > 0.0))
        v.emplace_back("optimizer tolerances must be > 0");
    if (!(c.global.time_cap_s > 0.0 && c.local.time_cap_s > 0.0)) v.emplace_back("optimizer time caps must be > 0");
    if (c.gram.latitudinal_nodes < 1) v.emplace_back("latitudinal_nodes must be >= 1");
    if (!(c.dspo.tol > 0.0)) v.emplace_back("quadrature tolerance must be > 0");
    return v;
}

double Expansion::evaluate(const SphericalPoint& p) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.alpha * lrfmp::evaluate(t.element, p).value;
    return v;
}

Workspace build_workspace(const RaySet& rays, std::vector<DictionaryElement> dictionary, const SolverConfig& config) {
    Workspace ws;
    ws.rays = &rays;
    ws.config = config;
    std::stable_sort(dictionary.begin(), dictionary.end(), canonical_less);
    ws.dictionary = std::move(dictionary);
    for (const auto& d : ws.dictionary)
        if (const auto* p = std::get_if<PolyIndex>(&d)) {
            ws.M = std::max(ws.M, p->m);
            ws.N = std::max(ws.N, p->n);
        }
    const std::size_t n = rays.size(), D = ws.dictionary.size();
    ws.y = rays.delays();
    ws.sigma = rays.sigmas();

    std::vector<std::size_t> polys, hats;
    ws.poly_slot.assign(D, -1);
    for (std::size_t i = 0; i < D; ++i) {
        if (const auto* p = std::get_if<PolyIndex>(&ws.dictionary[i])) {
            ws.poly_slot[i] = poly_linear_index(*p, ws.N);
            polys.push_back(i);
        } else {
            hats.push_back(i);
        }
    }

    ws.columns.resize(n, D);
    if (!polys.empty()) {
        const Eigen::MatrixXd pc = poly_columns(ws.M, ws.N, rays, 0, n);
        for (auto i : polys) ws.columns.col(i) = pc.col(ws.poly_slot[i]);
    }
    for (auto i : hats) ws.columns.col(i) = dspo_matrix_column(ws.dictionary[i], rays, 0, n, config.dspo);

    ws.gram = Eigen::MatrixXd::Zero(D, D);
    for (auto a : polys)
        for (auto b : polys)
            if (b >= a) {
                const auto& pa = std::get<PolyIndex>(ws.dictionary[a]);
                const auto& pb = std::get<PolyIndex>(ws.dictionary[b]);
                if (pa.n != pb.n || pa.j != pb.j) continue;
                ws.gram(a, b) = ws.gram(b, a) = h1_poly_poly(pa, pb, config.gram);
            }
    parallel_for(hats.size(), [&](std::size_t q) {
        const std::size_t a = hats[q];
        const auto& T = std::get<TesseroidParams>(ws.dictionary[a]);
        if (!polys.empty()) {
            const Eigen::VectorXd mixed = h1_mixed_all(T, ws.M, ws.N, config.gram);
            for (auto b : polys) ws.gram(a, b) = mixed[ws.poly_slot[b]];
        }
        for (auto b : hats) ws.gram(a, b) = h1_fehf_fehf(T, std::get<TesseroidParams>(ws.dictionary[b]));
    });
    // Mirror the hat rows into the polynomial block and make the hat block exactly symmetric.
    for (auto a : hats) {
        for (auto b : polys) ws.gram(b, a) = ws.gram(a, b);
        for (auto b : hats)
            if (b > a) ws.gram(b, a) = ws.gram(a, b);
    }
    return ws;
}

namespace {

void refresh_column_norms(SolverState& s) {
    const auto& ws = *s.ws;
    const Eigen::VectorXd inv = ws.sigma.head(s.active_end).cwiseInverse();
    s.column_norm2 = (inv.asDiagonal() * ws.columns.topRows(s.active_end)).colwise().squaredNorm().transpose();
}

double weighted_norm2(const Eigen::VectorXd& v, const Eigen::VectorXd& sigma) {
    return v.cwiseQuotient(sigma).squaredNorm();
}

}  // namespace

SolverState init_state(const Workspace& ws, double lambda) {
    SolverState s;
    s.ws = &ws;
    s.lambda = lambda;
    s.residual = ws.y;
    const auto& rays = *ws.rays;
    s.active_packages = rays.package_count() == 0 ? 0 : 1;
    s.active_end = rays.package_count() == 0 ? rays.size() : rays.package_range(0).second;
    s.acc = Eigen::VectorXd::Zero(ws.dictionary.size());
    s.poly_coeffs = Eigen::VectorXd::Zero(poly_count(ws.M, ws.N));
    refresh_column_norms(s);
    return s;
}

double tikhonov_functional(const SolverState& s) {
    return weighted_norm2(s.residual.head(s.active_end), s.ws->sigma.head(s.active_end)) + s.lambda * s.norm2;
}

double relative_data_error(const SolverState& s) {
    const double ny = s.ws->y.head(s.active_end).norm();
    const double nr = s.residual.head(s.active_end).norm();
    if (ny == 0.0) return nr == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return nr / ny;
}

double chi2_red(const SolverState& s) {
    if (s.active_end == 0) return 0.0;
    return weighted_norm2(s.residual.head(s.active_end), s.ws->sigma.head(s.active_end)) / double(s.active_end);
}

Eigen::VectorXd recompute_residual(const SolverState& s) {
    const auto& ws = *s.ws;
    Eigen::VectorXd r = ws.y;
    for (const auto& t : s.expansion.terms)
        r -= t.alpha * dspo_matrix_column(t.element, *ws.rays, 0, ws.rays->size(), ws.config.dspo);
    return r;
}

ObjectiveValue objective_from(const SolverState& s, const Eigen::VectorXd& col, std::size_t begin, double fd,
                              double dd) {
    const auto n = col.size();
    const Eigen::VectorXd sig2 = s.ws->sigma.segment(begin, n).array().square();
    ObjectiveValue o;
    o.A = (s.residual.segment(begin, n).array() * col.array() / sig2.array()).sum() - s.lambda * fd;
    o.B = (col.array().square() / sig2.array()).sum() + s.lambda * dd;
    if (!(o.B > 0.0)) throw ZeroElement("B_N(d) = 0");
    o.value = o.A * o.A / o.B;
    return o;
}

double penalty_inner(const SolverState& s, const DictionaryElement& d) {
    const auto& ws = *s.ws;
    const auto& gs = ws.config.gram;
    double v = 0.0;
    if (const auto* p = std::get_if<PolyIndex>(&d)) {
        for (const auto& t : s.expansion.terms) v += t.alpha * h1(t.element, d, gs);
        (void)p;
        return v;
    }
    const auto& T = std::get<TesseroidParams>(d);
    if (s.poly_coeffs.cwiseAbs().maxCoeff() > 0.0) v += s.poly_coeffs.dot(h1_mixed_all(T, ws.M, ws.N, gs));
    for (const auto& t : s.fehf_terms) v += t.alpha * h1_fehf_fehf(std::get<TesseroidParams>(t.element), T);
    return v;
}

ObjectiveValue objective(const DictionaryElement& d, const SolverState& s) {
    const auto col = dspo_matrix_column(d, *s.ws->rays, 0, s.active_end, s.ws->config.dspo);
    return objective_from(s, col, 0, penalty_inner(s, d), h1(d, d, s.ws->config.gram));
}

double coefficient(const DictionaryElement& d, const SolverState& s) {
    const auto o = objective(d, s);
    return o.A / o.B;
}

Preselection preselect(const SolverState& s) {
    const auto& ws = *s.ws;
    const std::size_t ae = s.active_end;
    const Eigen::VectorXd w = s.residual.head(ae).cwiseQuotient(ws.sigma.head(ae).cwiseAbs2());
    const Eigen::VectorXd A = ws.columns.topRows(ae).transpose() * w - s.lambda * s.acc;
    const Eigen::VectorXd B = s.column_norm2 + s.lambda * ws.gram.diagonal();
    Preselection out;
    double best = -1.0;
    for (Eigen::Index i = 0; i < A.size(); ++i) {
        if (!(B[i] > 0.0)) continue;
        const double v = A[i] * A[i] / B[i];
        if (v > best) {
            best = v;
            out.best = static_cast<int>(i);
            out.obj = {v, A[i], B[i]};
        }
        if (is_fehf(ws.dictionary[i]) && v > out.best_fehf_value) {
            out.best_fehf_value = v;
            out.best_fehf = static_cast<int>(i);
        }
    }
    return out;
}

Eigen::VectorXd encode_tesseroid(const TesseroidParams& T) {
    const auto& b = T.bounds;
    Eigen::VectorXd x(6);
    x[0] = (T.R() - b.r_min()) / (b.r_max() - b.r_min());
    x[1] = normalize_longitude(T.Phi()) / kTwoPi;
    x[2] = (T.T() - b.t_min()) / (b.t_max() - b.t_min());
    x[3] = std::log(T.dR() / b.eps_r) / std::log(0.5 * b.r_max() / b.eps_r);
    x[4] = std::log(T.dPhi() / b.eps_phi) / std::log(kPi / b.eps_phi);
    x[5] = std::log(T.dT() / b.eps_t) / std::log(0.5 / b.eps_t);
    return x.cwiseMax(0.0).cwiseMin(1.0);
}

TesseroidParams decode_tesseroid(const Eigen::VectorXd& x, const TesseroidBounds& b) {
    auto c = [&](int i) { return std::clamp(x[i], 0.0, 1.0); };
    TesseroidParams T;
    T.bounds = b;
    T.center[0] = b.r_min() + (b.r_max() - b.r_min()) * c(0);
    T.center[1] = std::min(kTwoPi * c(1), kTwoPi);
    T.center[2] = b.t_min() + (b.t_max() - b.t_min()) * c(2);
    T.half_width[0] = std::clamp(b.eps_r * std::pow(0.5 * b.r_max() / b.eps_r, c(3)), b.eps_r, 0.5 * b.r_max());
    T.half_width[1] = std::clamp(b.eps_phi * std::pow(kPi / b.eps_phi, c(4)), b.eps_phi, kPi);
    T.half_width[2] = std::clamp(b.eps_t * std::pow(0.5 / b.eps_t, c(5)), b.eps_t, 0.5);
    return T;
}

namespace {

struct Evaluated {
    ObjectiveValue obj;
    double fd = 0.0, dd = 0.0;
    Eigen::VectorXd column;
};

Evaluated evaluate_hat(const SolverState& s, const TesseroidParams& T, std::size_t begin, std::size_t end) {
    const auto& ws = *s.ws;
    Evaluated e;
    e.column = dspo_matrix_column(T, *ws.rays, begin, end, ws.config.dspo);
    e.fd = penalty_inner(s, T);
    e.dd = h1_fehf_fehf(T, T);
    try {
        e.obj = objective_from(s, e.column, begin, e.fd, e.dd);
    } catch (const ZeroElement&) {
        e.obj = {};
    }
    return e;
}

Candidate make_candidate(const SolverState& s, const TesseroidParams& T, const char* source) {
    auto e = evaluate_hat(s, T, 0, s.active_end);
    return {T, e.obj, e.fd, e.dd, -1, source, std::move(e.column)};
}

}  // namespace

LearnResult learn_fehf(const SolverState& s, const TesseroidParams& start) {
    const auto& ws = *s.ws;
    const auto& cfg = ws.config;
    const auto& rays = *ws.rays;
    std::size_t begin = 0, end = s.active_end;
    if (s.active_packages > 0 && rays.package_count() > 0) std::tie(begin, end) = rays.package_range(s.active_packages - 1);

    LearnResult out;
    auto f = [&](const Eigen::VectorXd& x) {
        ++out.evals;
        return -evaluate_hat(s, decode_tesseroid(x, cfg.bounds), begin, end).obj.value;
    };
    TesseroidParams st = start;
    st.bounds = cfg.bounds;
    const Eigen::VectorXd x_start = encode_tesseroid(st);
    const double f_start = f(x_start);

    const auto g = direct_l(f, 6, cfg.global);
    out.stage1_value = -g.f;
    const bool from_start = f_start < g.f;
    const auto l = nelder_mead_box(f, from_start ? x_start : g.x, cfg.local);
    out.stage2_value = -l.f;
    out.budget_exhausted = g.budget_exhausted || l.budget_exhausted;

    out.candidates.push_back(make_candidate(s, decode_tesseroid(x_start, cfg.bounds), "learned_start"));
    out.candidates.push_back(make_candidate(s, decode_tesseroid(g.x, cfg.bounds), "learned_global"));
    out.candidates.push_back(make_candidate(s, decode_tesseroid(l.x, cfg.bounds), "learned_local"));
    return out;
}

namespace {

void accept(SolverState& s, const Candidate& c, double alpha) {
    const auto& ws = *s.ws;
    const std::size_t n = ws.rays->size();
    if (c.dict_index >= 0) {
        s.residual -= alpha * ws.columns.col(c.dict_index);
        s.acc += alpha * ws.gram.col(c.dict_index);
    } else {
        Eigen::VectorXd col(n);
        col.head(s.active_end) = c.column;
        if (s.active_end < n)
            col.tail(n - s.active_end) = dspo_matrix_column(c.element, *ws.rays, s.active_end, n, ws.config.dspo);
        s.residual -= alpha * col;
        const auto& T = std::get<TesseroidParams>(c.element);
        Eigen::VectorXd mixed;
        if (ws.N >= 0 && std::any_of(ws.poly_slot.begin(), ws.poly_slot.end(), [](int v) { return v >= 0; }))
            mixed = h1_mixed_all(T, ws.M, ws.N, ws.config.gram);
        for (std::size_t i = 0; i < ws.dictionary.size(); ++i) {
            const double g = ws.poly_slot[i] >= 0 ? mixed[ws.poly_slot[i]]
                                                  : h1_fehf_fehf(T, std::get<TesseroidParams>(ws.dictionary[i]));
            s.acc[i] += alpha * g;
        }
    }
    s.norm2 += 2.0 * alpha * c.fd + alpha * alpha * c.dd;
    if (const auto* p = std::get_if<PolyIndex>(&c.element)) {
        if (p->m <= ws.M && p->n <= ws.N) s.poly_coeffs[poly_linear_index(*p, ws.N)] += alpha;
    } else {
        s.fehf_terms.push_back({alpha, c.element});
    }
    s.expansion.terms.push_back({alpha, c.element});
    ++s.iteration;
}

}  // namespace

StepResult lrfmp_step(SolverState& s) {
    const auto& ws = *s.ws;
    if (s.active_end == 0) throw ContractViolation("no active rays");
    const auto pre = preselect(s);

    StepResult res;
    bool have = false;
    if (pre.best >= 0) {
        const auto i = static_cast<std::size_t>(pre.best);
        res.chosen = {ws.dictionary[i], pre.obj, s.acc[i], ws.gram(i, i), pre.best, "dictionary", {}};
        have = true;
    }
    double best_learned = -1.0;
    if (ws.config.learning) {
        TesseroidParams start;
        if (pre.best_fehf >= 0) {
            start = std::get<TesseroidParams>(ws.dictionary[pre.best_fehf]);
        } else {
            start = decode_tesseroid(Eigen::VectorXd::Constant(6, 0.5), ws.config.bounds);
        }
        auto learned = learn_fehf(s, start);
        for (auto& c : learned.candidates) {
            if (c.source != "learned_start") best_learned = std::max(best_learned, c.obj.value);
            if (!have || c.obj.value > res.chosen.obj.value) {
                res.chosen = std::move(c);
                have = true;
            }
        }
    }

    LedgerRecord rec;
    rec.best_dictionary_fehf = pre.best_fehf_value;
    rec.best_learned = best_learned;
    if (!have || !(res.chosen.obj.value > ws.config.no_improvement)) {
        res.improved = false;
        return res;
    }
    const double alpha = res.chosen.obj.A / res.chosen.obj.B;
    accept(s, res.chosen, alpha);

    rec.N = s.iteration;
    rec.element = res.chosen.element;
    rec.source = res.chosen.source;
    rec.alpha = alpha;
    rec.objective = res.chosen.obj.value;
    rec.J = tikhonov_functional(s);
    rec.rel_error = relative_data_error(s);
    rec.chi2_red = chi2_red(s);
    rec.packages = s.active_packages;
    s.ledger.push_back(rec);
    return res;
}

bool schedule_packages(SolverState& s) {
    const auto& rays = *s.ws->rays;
    if (s.active_packages >= rays.package_count()) return false;
    if (!(relative_data_error(s) < s.ws->config.package_threshold)) return false;
    ++s.active_packages;
    s.active_end = rays.package_range(s.active_packages - 1).second;
    refresh_column_norms(s);
    return true;
}

RunResult run_lrfmp(const Workspace& ws, double lambda) {
    const auto& cfg = ws.config;
    SolverState s = init_state(ws, lambda);
    {
        LedgerRecord r0;
        r0.J = tikhonov_functional(s);
        r0.rel_error = relative_data_error(s);
        r0.chi2_red = chi2_red(s);
        r0.packages = s.active_packages;
        s.ledger.push_back(r0);
    }
    auto stop_check = [&]() -> std::string {
        const double rel = relative_data_error(s);
        if (rel < cfg.noise_level) return "noise_floor";
        if (rel > cfg.blow_up) return "blow_up";
        if (std::abs(chi2_red(s) - 1.0) < cfg.chi2_tolerance) return "chi2";
        return {};
    };
    std::string reason = s.active_end == 0 ? "no_improvement" : stop_check();
    while (reason.empty()) {
        if (s.iteration >= cfg.max_iterations) {
            reason = "max_iter";
            break;
        }
        const auto step = lrfmp_step(s);
        if (!step.improved) {
            reason = "no_improvement";
            break;
        }
        if (schedule_packages(s)) s.ledger.back().packages = s.active_packages;
        reason = stop_check();
    }
    s.ledger.back().stop_reason = reason;

    RunResult out;
    out.lambda = lambda;
    out.expansion = s.expansion;
    out.ledger = std::move(s.ledger);
    out.stop_reason = reason;
    out.rel_error = relative_data_error(s);
    out.chi2_red = chi2_red(s);
    out.packages = s.active_packages;
    const double ny = ws.y.norm();
    out.rel_error_all = ny > 0.0 ? s.residual.norm() / ny : 0.0;
    return out;
}

ModelSelection select_model(const Workspace& ws, const std::function<double(const Expansion&)>& rrmse_of) {
    ModelSelection sel;
    const double ny = ws.y.norm();
    for (double factor : ws.config.lambda_factors) {
        sel.runs.push_back(run_lrfmp(ws, factor * ny));
        sel.rrmse.push_back(rrmse_of(sel.runs.back().expansion));
    }
    for (std::size_t i = 1; i < sel.runs.size(); ++i) {
        const double a = sel.rrmse[i], b = sel.rrmse[sel.best];
        if (a < b || (a == b && sel.runs[i].lambda < sel.runs[sel.best].lambda)) sel.best = i;
    }
    return sel;
}

}  // namespace lrfmp

#include "lrfmp/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

namespace lrfmp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Rect {
    Eigen::VectorXd c;
    Eigen::VectorXi k;  // side along dim i is 3^{-k_i}
    double f;
};

double diameter(const Eigen::VectorXi& k) {
    double s = 0.0;
    for (int i = 0; i < k.size(); ++i) s += std::pow(9.0, -k[i]);
    return 0.5 * std::sqrt(s);
}

}  // namespace

OptimizeResult direct_l(const CubeObjective& f, int dim, const DirectOptions& opt) {
    const auto t0 = Clock::now();
    OptimizeResult res;
    std::vector<Rect> rects;
    auto eval = [&](const Eigen::VectorXd& x) {
        const double v = f(x);
        ++res.evals;
        if (res.x.size() == 0 || v < res.f) {
            res.x = x;
            res.f = v;
        }
        return v;
    };
    Eigen::VectorXd c0 = Eigen::VectorXd::Constant(dim, 0.5);
    rects.push_back({c0, Eigen::VectorXi::Zero(dim), eval(c0)});

    while (true) {
        if (res.evals >= opt.max_evals || elapsed(t0) > opt.time_cap_s) {
            res.budget_exhausted = true;
            break;
        }
        // Best rectangle of every size class, keyed by the total subdivision level.
        std::map<int, std::size_t, std::greater<>> best;
        for (std::size_t i = 0; i < rects.size(); ++i) {
            const int key = rects[i].k.sum();
            auto it = best.find(key);
            if (it == best.end() || rects[i].f < rects[it->second].f) best[key] = i;
        }
        // Ascending diameter.
        std::vector<std::size_t> cand;
        for (auto& [key, idx] : best) cand.push_back(idx);
        double fmin = std::numeric_limits<double>::infinity();
        std::size_t start = 0;
        for (std::size_t q = 0; q < cand.size(); ++q)
            if (rects[cand[q]].f <= fmin) {
                fmin = rects[cand[q]].f;
                start = q;
            }
        // Lower-right convex hull from the minimizer towards larger rectangles.
        std::vector<std::size_t> hull;
        for (std::size_t q = start; q < cand.size(); ++q) {
            const auto& r = rects[cand[q]];
            const double d = diameter(r.k);
            while (hull.size() >= 2) {
                const auto& a = rects[hull[hull.size() - 2]];
                const auto& b = rects[hull.back()];
                const double da = diameter(a.k), db = diameter(b.k);
                const double cross = (db - da) * (r.f - a.f) - (b.f - a.f) * (d - da);
                if (cross <= 0.0) hull.pop_back();
                else break;
            }
            hull.push_back(cand[q]);
        }
        std::vector<std::size_t> selected;
        for (std::size_t h = 0; h < hull.size(); ++h) {
            if (h + 1 < hull.size()) {
                const auto& a = rects[hull[h]];
                const auto& b = rects[hull[h + 1]];
                const double da = diameter(a.k), db = diameter(b.k);
                const double K = (b.f - a.f) / (db - da);
                if (a.f - K * da > fmin - opt.epsilon * std::abs(fmin)) continue;
            }
            selected.push_back(hull[h]);
        }
        if (selected.empty()) selected.push_back(hull.back());

        double smallest_side = 1.0;
        for (auto idx : selected) smallest_side = std::min(smallest_side, std::pow(3.0, -rects[idx].k.minCoeff()));
        if (smallest_side < opt.xtol_rel) break;

        const double before = res.f;
        bool out_of_budget = false;
        for (auto idx : selected) {
            Rect parent = rects[idx];
            const int kmin = parent.k.minCoeff();
            const double delta = std::pow(3.0, -(kmin + 1));
            std::vector<int> dims;
            for (int i = 0; i < dim; ++i)
                if (parent.k[i] == kmin) dims.push_back(i);
            if (res.evals + 2 * static_cast<int>(dims.size()) > opt.max_evals) {
                out_of_budget = true;
                break;
            }
            std::vector<double> fp(dim), fm(dim), w(dim);
            for (int i : dims) {
                Eigen::VectorXd xp = parent.c, xm = parent.c;
                xp[i] += delta;
                xm[i] -= delta;
                fp[i] = eval(xp);
                fm[i] = eval(xm);
                w[i] = std::min(fp[i], fm[i]);
            }
            std::stable_sort(dims.begin(), dims.end(), [&](int a, int b) { return w[a] < w[b]; });
            for (int i : dims) {
                parent.k[i] += 1;
                Eigen::VectorXd xp = parent.c, xm = parent.c;
                xp[i] += delta;
                xm[i] -= delta;
                rects.push_back({xp, parent.k, fp[i]});
                rects.push_back({xm, parent.k, fm[i]});
            }
            rects[idx] = parent;
        }
        if (out_of_budget) {
            res.budget_exhausted = true;
            break;
        }
        if (res.f < before && std::isfinite(before) &&
            std::abs(before - res.f) < 0.5 * opt.ftol_rel * (std::abs(res.f) + std::abs(before)))
            break;
    }
    return res;
}

OptimizeResult nelder_mead_box(const CubeObjective& f, const Eigen::VectorXd& x0, const SimplexOptions& opt) {
    const auto t0 = Clock::now();
    const int n = static_cast<int>(x0.size());
    OptimizeResult res;
    auto clampv = [](Eigen::VectorXd x) { return x.cwiseMax(0.0).cwiseMin(1.0).eval(); };
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evals;
        return f(x);
    };

    std::vector<Eigen::VectorXd> xs;
    std::vector<double> fs;
    xs.push_back(clampv(x0));
    fs.push_back(eval(xs[0]));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x = xs[0];
        x[i] += x[i] + opt.initial_step <= 1.0 ? opt.initial_step : -opt.initial_step;
        xs.push_back(x);
        fs.push_back(eval(x));
    }
    std::vector<int> order(n + 1);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        const int best = order.front(), worst = order.back(), second = order[n - 1];
        const double frange = fs[worst] - fs[best];
        double xrange = 0.0;
        for (int i = 0; i <= n; ++i) xrange = std::max(xrange, (xs[i] - xs[best]).lpNorm<Eigen::Infinity>());
        if (frange <= opt.ftol_rel * std::abs(fs[best])) break;
        if (xrange <= opt.xtol_rel * std::max(xs[best].lpNorm<Eigen::Infinity>(), 1e-12)) break;
        if (res.evals >= opt.max_evals || elapsed(t0) > opt.time_cap_s) {
            res.budget_exhausted = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += xs[i];
        centroid /= n;

        const Eigen::VectorXd xr = clampv(centroid + (centroid - xs[worst]));
        const double fr = eval(xr);
        if (fr < fs[best]) {
            const Eigen::VectorXd xe = clampv(centroid + 2.0 * (centroid - xs[worst]));
            const double fe = eval(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
            continue;
        }
        if (fr < fs[second]) {
            xs[worst] = xr;
            fs[worst] = fr;
            continue;
        }
        const bool outside = fr < fs[worst];
        const Eigen::VectorXd xc =
            outside ? clampv(centroid + 0.5 * (xr - centroid)) : clampv(centroid + 0.5 * (xs[worst] - centroid));
        const double fc = eval(xc);
        if (fc < (outside ? fr : fs[worst])) {
            xs[worst] = xc;
            fs[worst] = fc;
            continue;
        }
        for (int i = 0; i <= n; ++i) {
            if (i == best) continue;
            xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
            fs[i] = eval(xs[i]);
        }
    }
    const int best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
    res.x = xs[best];
    res.f = fs[best];
    return res;
}

}  // namespace lrfmp

#pragma once

#include <functional>

#include <Eigen/Core>

namespace lrfmp {

// Minimizers on the unit cube [0, 1]^n.
using CubeObjective = std::function<double(const Eigen::VectorXd&)>;

struct OptimizeResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int evals = 0;
    bool budget_exhausted = false;
};

struct DirectOptions {
    double xtol_rel = 1e-4;
    double ftol_rel = 1.0;
    int max_evals = 10000;
    double time_cap_s = 600.0;
    double epsilon = 1e-4;
};

// Locally biased DIRECT: one rectangle per size class enters the convex-hull selection.
OptimizeResult direct_l(const CubeObjective& f, int dim, const DirectOptions& opt = {});

struct SimplexOptions {
    double xtol_rel = 1e-8;
    double ftol_rel = 1e-4;
    int max_evals = 10000;
    double time_cap_s = 600.0;
    double initial_step = 0.05;
};

// Nelder–Mead with every trial point projected onto the cube.
OptimizeResult nelder_mead_box(const CubeObjective& f, const Eigen::VectorXd& x0, const SimplexOptions& opt = {});

}  // namespace lrfmp

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dictionary.hpp"
#include "forward.hpp"
#include "geometry.hpp"
#include "gram.hpp"
#include "optimize.hpp"

namespace lrfmp {

struct SolverConfig {
    std::vector<double> lambda_factors{1e-1, 1e-2, 1e-3, 1e-4};  // multiples of ‖y‖
    int max_iterations = 300;
    double noise_level = 0.05;
    double blow_up = 2.0;
    double chi2_tolerance = 1e-8;
    double no_improvement = 1e-14;
    std::size_t package_size = 1000;
    double package_threshold = 0.5;
    bool learning = true;
    DirectOptions global{};
    SimplexOptions local{};
    GramSettings gram{};
    DspoSettings dspo{};
    TesseroidBounds bounds{};
};

// Empty when valid.
std::vector<std::string> validate_solver_config(const SolverConfig& c);

struct Term {
    double alpha = 0.0;
    DictionaryElement element;
};

struct Expansion {
    std::vector<Term> terms;  // f₀ = 0
    double evaluate(const SphericalPoint& p) const;
};

// Everything that does not depend on λ: dictionary columns over all rays and the dictionary Gram.
struct Workspace {
    const RaySet* rays = nullptr;
    std::vector<DictionaryElement> dictionary;  // canonical order
    int M = 0, N = 0;                           // caps of the polynomial batch routines
    std::vector<int> poly_slot;                 // enumerate_polys(M, N) position, -1 for hats
    Eigen::MatrixXd columns;                    // rays × dictionary
    Eigen::MatrixXd gram;                       // dictionary × dictionary
    Eigen::VectorXd y, sigma;
    SolverConfig config;
};

Workspace build_workspace(const RaySet& rays, std::vector<DictionaryElement> dictionary, const SolverConfig& config);

struct LedgerRecord {
    int N = 0;
    std::optional<DictionaryElement> element;
    std::string source;  // dictionary, learned_start, learned_global, learned_local
    double alpha = 0.0;
    double objective = 0.0;
    double J = 0.0;
    double rel_error = 0.0;      // over the rays active during the step
    double chi2_red = 0.0;
    std::size_t packages = 0;    // active after this record
    double best_dictionary_fehf = -1.0;  // objective of the best starting hat, -1 if none
    double best_learned = -1.0;          // best stage-1/stage-2 candidate, -1 if learning is off
    std::string stop_reason;
};

struct SolverState {
    const Workspace* ws = nullptr;
    double lambda = 0.0;
    Expansion expansion;
    Eigen::VectorXd residual;     // all rays
    std::size_t active_packages = 1;
    std::size_t active_end = 0;
    Eigen::VectorXd acc;          // ⟨f_N, d⟩_{H¹} for every dictionary element
    Eigen::VectorXd poly_coeffs;  // aggregated coefficients on enumerate_polys(M, N)
    std::vector<Term> fehf_terms;
    double norm2 = 0.0;           // ‖f_N‖²_{H¹}
    int iteration = 0;
    std::vector<LedgerRecord> ledger;
    std::string stop_reason;
    Eigen::VectorXd column_norm2;  // ‖𝒯d/σ‖² over the active rays
};

SolverState init_state(const Workspace& ws, double lambda);

double tikhonov_functional(const SolverState& s);  // J^SM
double relative_data_error(const SolverState& s);  // ‖R‖/‖y‖ over active rays
double chi2_red(const SolverState& s);

// y - 𝒯 f_N over all rays, recomputed from the expansion.
Eigen::VectorXd recompute_residual(const SolverState& s);

struct ObjectiveValue {
    double value = 0.0;
    double A = 0.0;
    double B = 0.0;
};

// A = ⟨R/σ, 𝒯d/σ⟩ - λ fd, B = ‖𝒯d/σ‖² + λ dd over rays [begin, begin + col.size()).
ObjectiveValue objective_from(const SolverState& s, const Eigen::VectorXd& col, std::size_t begin, double fd,
                              double dd);

// ⟨f_N, d⟩_{H¹} computed afresh.
double penalty_inner(const SolverState& s, const DictionaryElement& d);

// Objective and coefficient of an arbitrary element over the active rays; throw ZeroElement if B = 0.
ObjectiveValue objective(const DictionaryElement& d, const SolverState& s);
double coefficient(const DictionaryElement& d, const SolverState& s);

struct Candidate {
    DictionaryElement element;
    ObjectiveValue obj;
    double fd = 0.0;
    double dd = 0.0;
    int dict_index = -1;
    std::string source;
    Eigen::VectorXd column;  // over the active rays
};

struct Preselection {
    int best = -1;
    ObjectiveValue obj;
    int best_fehf = -1;
    double best_fehf_value = -1.0;
};

Preselection preselect(const SolverState& s);

// Unit-cube encoding used by the optimizers; half-widths on a log scale.
Eigen::VectorXd encode_tesseroid(const TesseroidParams& T);
TesseroidParams decode_tesseroid(const Eigen::VectorXd& x, const TesseroidBounds& b);

struct LearnResult {
    std::vector<Candidate> candidates;  // start, stage 1, stage 2
    double stage1_value = 0.0;          // objectives on the newest package
    double stage2_value = 0.0;
    int evals = 0;
    bool budget_exhausted = false;
};

LearnResult learn_fehf(const SolverState& s, const TesseroidParams& start);

struct StepResult {
    bool improved = true;
    Candidate chosen;
};

StepResult lrfmp_step(SolverState& s);

// Activates the next package when the relative data error is below the threshold.
bool schedule_packages(SolverState& s);

struct RunResult {
    double lambda = 0.0;
    Expansion expansion;
    std::vector<LedgerRecord> ledger;
    std::string stop_reason;
    double rel_error = 0.0;
    double rel_error_all = 0.0;
    double chi2_red = 0.0;
    std::size_t packages = 0;
};

RunResult run_lrfmp(const Workspace& ws, double lambda);

struct ModelSelection {
    std::size_t best = 0;
    std::vector<RunResult> runs;
    std::vector<double> rrmse;
};

ModelSelection select_model(const Workspace& ws, const std::function<double(const Expansion&)>& rrmse_of);

}  // namespace lrfmp

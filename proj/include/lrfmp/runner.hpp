#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "config.hpp"
#include "dictionary.hpp"
#include "forward.hpp"
#include "scenario.hpp"
#include "solver.hpp"

namespace lrfmp {

// Polynomials up to the caps, then hats on the configured center grid; canonical order.
std::vector<DictionaryElement> build_starting_dictionary(const RunConfig& c);

// Rays with delays filled in: synthetic chords with perturbed plume delays, or the ray file.
struct Dataset {
    RaySet rays;
    Eigen::VectorXd clean;  // unperturbed delays (synthetic only)
};
Dataset make_dataset(const RunConfig& c);

struct RunReport {
    RunConfig config;
    EvalGrid grid;
    std::vector<RunResult> runs;  // one per λ factor
    std::vector<double> rrmse;    // synthetic only
    std::size_t best = 0;
    Eigen::VectorXd truth;        // empty in rayfile mode
    Eigen::VectorXd approx;
    std::vector<double> layer_error_rms;
    std::vector<double> layer_truth_rms;
    std::size_t n_rays = 0;
    std::size_t dictionary_size = 0;
    double wall_seconds = 0.0;

    const RunResult& best_run() const { return runs.at(best); }
};

RunReport execute(const RunConfig& c, std::ostream* log = nullptr);

// Everything but wall time, so that equal seeds give identical bytes.
std::string summary_json(const RunReport& r);
std::string elements_json(const RunResult& run);

// grids/, ledger.jsonl, elements.json, summary.json and timing.json under c.output_dir.
void write_artifacts(const RunReport& r);

struct LedgerRow {
    std::size_t run = 0;
    double lambda = 0.0;
    LedgerRecord record;
};

std::string ledger_line(std::size_t run, double lambda, const LedgerRecord& rec);
LedgerRow parse_ledger_line(const std::string& line);
std::vector<LedgerRow> read_ledger(const std::string& path);

std::string element_json(const DictionaryElement& d);
DictionaryElement element_from_json(const std::string& text, const TesseroidBounds& b = {});

}  // namespace lrfmp

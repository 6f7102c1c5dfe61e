#include "lrfmp/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lrfmp/errors.hpp"
#include "lrfmp/parallel.hpp"

namespace lrfmp {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<DictionaryElement> build_starting_dictionary(const RunConfig& c) {
    const auto& d = c.dictionary;
    if (d.max_radial_degree < 0 || d.max_angular_degree < 0) throw ConfigError("dictionary caps must be >= 0");
    std::vector<DictionaryElement> out;
    for (const auto& p : enumerate_polys(d.max_radial_degree, d.max_angular_degree)) out.emplace_back(p);
    if (d.include_fehfs) {
        const auto& b = c.solver.bounds;
        const int nr = d.fehf_radial_centers, np = d.fehf_lon_centers, nt = d.fehf_lat_centers;
        if (nr < 2 || np < 2 || nt < 2) throw ConfigError("FEHF grids need at least 2 centers per dimension");
        const double dR = (b.r_max() - b.r_min()) / (nr - 1);
        const double dP = kTwoPi / (np - 1);
        const double dT = (b.t_max() - b.t_min()) / (nt - 1);
        for (int i = 0; i < nr; ++i)
            for (int k = 0; k < np; ++k)
                for (int l = 0; l < nt; ++l)
                    out.emplace_back(TesseroidParams(b.r_min() + dR * i, dP * k, b.t_min() + dT * l, dR, dP, dT, b));
    }
    std::stable_sort(out.begin(), out.end(), canonical_less);
    return out;
}

Dataset make_dataset(const RunConfig& c) {
    Dataset ds;
    if (c.mode == Mode::Rayfile) {
        ds.rays = load_rays(c.ray_file);
    } else {
        const auto& sc = c.scenario;
        ds.rays = synthetic_chords(sc.n_rays, substream_seed(c.seed, "chords"), sc.depth_biased, c.solver.bounds.rho);
        ds.clean = synthesize_delays(sc.plumes, ds.rays);
        const Eigen::VectorXd noisy = perturb(ds.clean, sc.noise_level, substream_seed(c.seed, "noise"));
        for (std::size_t i = 0; i < ds.rays.size(); ++i) {
            ds.rays.rays[i].delay = noisy[static_cast<Eigen::Index>(i)];
            ds.rays.rays[i].sigma = 1.0;
        }
    }
    ds.rays.set_packages(c.solver.package_size);
    return ds;
}

RunReport execute(const RunConfig& c, std::ostream* log) {
    if (auto v = validate_config(c); !v.empty()) {
        std::string msg = "invalid config:";
        for (auto& e : v) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    const auto t0 = std::chrono::steady_clock::now();
    RunReport r;
    r.config = c;
    r.grid = make_grid(c.solver.bounds.rho, c.scenario.grid_layers, c.scenario.grid_lon, c.scenario.grid_lat);

    const Dataset ds = make_dataset(c);
    r.n_rays = ds.rays.size();
    auto dict = build_starting_dictionary(c);
    r.dictionary_size = dict.size();
    if (log) *log << "rays " << r.n_rays << ", dictionary " << r.dictionary_size << ", packages "
                  << ds.rays.package_count() << "\n";
    const Workspace ws = build_workspace(ds.rays, std::move(dict), c.solver);
    if (log) *log << "workspace ready\n";

    if (c.mode == Mode::Synthetic) {
        PlumeSpec spec = c.scenario.plumes;
        spec.rho = c.solver.bounds.rho;
        r.truth = sample_truth(spec, r.grid);
        auto sel = select_model(ws, [&](const Expansion& f) { return rrmse(r.truth, sample_expansion(f, r.grid)); });
        r.runs = std::move(sel.runs);
        r.rrmse = std::move(sel.rrmse);
        r.best = sel.best;
    } else {
        r.runs.push_back(run_lrfmp(ws, c.solver.lambda_factors.front() * ws.y.norm()));
    }
    if (log)
        for (std::size_t i = 0; i < r.runs.size(); ++i)
            *log << "lambda " << r.runs[i].lambda << ": " << r.runs[i].expansion.terms.size() << " terms, "
                 << r.runs[i].stop_reason << (r.rrmse.empty() ? "" : ", rrmse " + std::to_string(r.rrmse[i]))
                 << "\n";

    r.approx = sample_expansion(r.best_run().expansion, r.grid);
    if (r.truth.size() > 0) {
        r.layer_error_rms = layer_rms(r.truth - r.approx, r.grid);
        r.layer_truth_rms = layer_rms(r.truth, r.grid);
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

namespace {

json element_to_json(const DictionaryElement& d) {
    if (const auto* p = std::get_if<PolyIndex>(&d)) return {{"type", "poly"}, {"m", p->m}, {"n", p->n}, {"j", p->j}};
    const auto& T = std::get<TesseroidParams>(d);
    return {{"type", "fehf"},
            {"R", T.R()},
            {"Phi", T.Phi()},
            {"T", T.T()},
            {"dR", T.dR()},
            {"dPhi", T.dPhi()},
            {"dT", T.dT()}};
}

DictionaryElement element_from(const json& j, const TesseroidBounds& b) {
    const std::string type = j.at("type");
    if (type == "poly") return PolyIndex{j.at("m").get<int>(), j.at("n").get<int>(), j.at("j").get<int>()};
    if (type == "fehf")
        return TesseroidParams(j.at("R"), j.at("Phi"), j.at("T"), j.at("dR"), j.at("dPhi"), j.at("dT"), b);
    throw ParseError(0, "unknown element type '" + type + "'");
}

json record_to_json(std::size_t run, double lambda, const LedgerRecord& rec) {
    json j = {{"run", run},
              {"lambda", lambda},
              {"N", rec.N},
              {"element", rec.element ? element_to_json(*rec.element) : json(nullptr)},
              {"source", rec.source},
              {"alpha", rec.alpha},
              {"objective", rec.objective},
              {"J", rec.J},
              {"rel_error", rec.rel_error},
              {"chi2_red", rec.chi2_red},
              {"packages", rec.packages},
              {"best_dictionary_fehf", rec.best_dictionary_fehf},
              {"best_learned", rec.best_learned},
              {"stop_reason", rec.stop_reason}};
    return j;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

}  // namespace

std::string element_json(const DictionaryElement& d) { return element_to_json(d).dump(); }

DictionaryElement element_from_json(const std::string& text, const TesseroidBounds& b) {
    return element_from(json::parse(text), b);
}

std::string ledger_line(std::size_t run, double lambda, const LedgerRecord& rec) {
    return record_to_json(run, lambda, rec).dump();
}

LedgerRow parse_ledger_line(const std::string& line) {
    const json j = json::parse(line);
    LedgerRow row;
    row.run = j.at("run");
    row.lambda = j.at("lambda");
    auto& r = row.record;
    r.N = j.at("N");
    if (!j.at("element").is_null()) r.element = element_from(j.at("element"), {});
    r.source = j.at("source");
    r.alpha = j.at("alpha");
    r.objective = j.at("objective");
    r.J = j.at("J");
    r.rel_error = j.at("rel_error");
    r.chi2_red = j.at("chi2_red");
    r.packages = j.at("packages");
    r.best_dictionary_fehf = j.at("best_dictionary_fehf");
    r.best_learned = j.at("best_learned");
    r.stop_reason = j.at("stop_reason");
    return row;
}

std::vector<LedgerRow> read_ledger(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open ledger " + path);
    std::vector<LedgerRow> rows;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(parse_ledger_line(line));
    return rows;
}

std::string summary_json(const RunReport& r) {
    const auto& b = r.best_run();
    json runs = json::array();
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        const auto& x = r.runs[i];
        json e = {{"lambda_factor", r.config.solver.lambda_factors[i]},
                  {"lambda", x.lambda},
                  {"iterations", x.expansion.terms.size()},
                  {"rel_data_error", x.rel_error},
                  {"rel_data_error_all_rays", x.rel_error_all},
                  {"chi2_red", x.chi2_red},
                  {"packages", x.packages},
                  {"stop_reason", x.stop_reason}};
        e["rrmse"] = r.rrmse.empty() ? json(nullptr) : json(r.rrmse[i]);
        runs.push_back(e);
    }
    json s = {{"mode", r.config.mode == Mode::Synthetic ? "synthetic" : "rayfile"},
              {"seed", r.config.seed},
              {"rays", r.n_rays},
              {"dictionary_size", r.dictionary_size},
              {"best_run", r.best},
              {"lambda_factor", r.config.solver.lambda_factors[r.best]},
              {"lambda", b.lambda},
              {"iterations", b.expansion.terms.size()},
              {"rel_data_error", b.rel_error},
              {"rel_data_error_all_rays", b.rel_error_all},
              {"chi2_red", b.chi2_red},
              {"stop_reason", b.stop_reason},
              {"runs", runs},
              {"layer_radii", r.grid.radii}};
    s["rrmse"] = r.rrmse.empty() ? json(nullptr) : json(r.rrmse[r.best]);
    s["layer_error_rms"] = r.layer_error_rms;
    s["layer_truth_rms"] = r.layer_truth_rms;
    return s.dump(2) + "\n";
}

std::string elements_json(const RunResult& run) {
    json arr = json::array();
    for (std::size_t i = 0; i < run.expansion.terms.size(); ++i) {
        const auto& t = run.expansion.terms[i];
        json e = element_to_json(t.element);
        e["N"] = i + 1;
        e["alpha"] = t.alpha;
        if (const auto* T = std::get_if<TesseroidParams>(&t.element)) {
            // Plot-friendly geography of the center.
            e["depth_km"] = (1.0 - T->R()) * 6371.0;
            e["lon_deg"] = T->Phi() * 180.0 / kPi;
            e["lat_deg"] = std::asin(std::clamp(T->T(), -1.0, 1.0)) * 180.0 / kPi;
        }
        arr.push_back(e);
    }
    return arr.dump(2) + "\n";
}

void write_artifacts(const RunReport& r) {
    const fs::path dir(r.config.output_dir);
    fs::create_directories(dir / "grids");
    for (std::size_t l = 0; l < r.grid.radii.size(); ++l) {
        std::ostringstream name;
        name << "layer" << std::setw(2) << std::setfill('0') << l;
        write_layer_csv((dir / "grids" / (name.str() + "_approx.csv")).string(), r.grid, l, r.approx);
        if (r.truth.size() > 0) {
            write_layer_csv((dir / "grids" / (name.str() + "_truth.csv")).string(), r.grid, l, r.truth);
            const Eigen::VectorXd err = (r.truth - r.approx).cwiseAbs();
            write_layer_csv((dir / "grids" / (name.str() + "_abserr.csv")).string(), r.grid, l, err);
        }
    }
    std::string ledger;
    for (std::size_t i = 0; i < r.runs.size(); ++i)
        for (const auto& rec : r.runs[i].ledger) ledger += ledger_line(i, r.runs[i].lambda, rec) + "\n";
    write_text(dir / "ledger.jsonl", ledger);
    write_text(dir / "elements.json", elements_json(r.best_run()));
    write_text(dir / "summary.json", summary_json(r));
    write_text(dir / "timing.json", json{{"wall_seconds", r.wall_seconds}}.dump(2) + "\n");
}

}  // namespace lrfmp

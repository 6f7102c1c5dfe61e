#include <iostream>

#include <CLI11.hpp>

#include "lrfmp/config.hpp"
#include "lrfmp/errors.hpp"
#include "lrfmp/forward.hpp"
#include "lrfmp/parallel.hpp"
#include "lrfmp/runner.hpp"

namespace {

int report_invalid(const std::vector<std::string>& problems) {
    for (const auto& p : problems) std::cerr << "invalid: " << p << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularized functional matching pursuit for travel-time tomography on the ball"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 0;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Run an inversion");
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--threads", threads, "Worker cap (0 = hardware)")->check(CLI::NonNegativeNumber);
    auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");

    auto* validate = app.add_subcommand("validate", "Parse and validate a config");
    validate->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);

    std::size_t n_rays = 0;
    std::string out_path;
    bool uniform = false;
    auto* gen = app.add_subcommand("gen-rays", "Write synthetic chords in the ray format");
    gen->add_option("--n", n_rays, "Number of rays")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", seed, "Seed")->required();
    gen->add_option("--out", out_path, "Output file")->required();
    gen->add_flag("--uniform", uniform, "Uniform turning radii instead of the mid-mantle bias");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto rays = lrfmp::synthetic_chords(n_rays, lrfmp::substream_seed(seed, "chords"), !uniform);
            lrfmp::save_rays(out_path, rays);
            std::cout << "wrote " << rays.size() << " rays to " << out_path << "\n";
            return 0;
        }
        auto cfg = lrfmp::load_config(config_path);
        if (*validate) {
            if (auto v = lrfmp::validate_config(cfg); !v.empty()) return report_invalid(v);
            std::cout << "ok\n";
            return 0;
        }
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (auto v = lrfmp::validate_config(cfg); !v.empty()) return report_invalid(v);
        if (threads > 0) lrfmp::set_thread_count(threads);
        const auto report = lrfmp::execute(cfg, &std::cerr);
        lrfmp::write_artifacts(report);
        std::cout << lrfmp::summary_json(report);
        return 0;
    } catch (const lrfmp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const lrfmp::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenario.hpp"
#include "solver.hpp"

namespace lrfmp {

enum class Mode { Synthetic, Rayfile };

struct DictionarySpec {
    int max_radial_degree = 5;   // M
    int max_angular_degree = 5;  // N
    bool include_fehfs = true;
    int fehf_radial_centers = 5;
    int fehf_lon_centers = 5;
    int fehf_lat_centers = 5;
};

struct ScenarioSpec {
    std::size_t n_rays = 5000;
    bool depth_biased = true;
    double noise_level = 0.05;
    PlumeSpec plumes = PlumeSpec::eifel_yellowstone();
    int grid_layers = 12;
    int grid_lon = 73;
    int grid_lat = 37;
};

struct RunConfig {
    Mode mode = Mode::Synthetic;
    std::uint64_t seed = 1;
    std::string output_dir = "lrfmp_out";
    std::string ray_file;
    DictionarySpec dictionary;
    SolverConfig solver;
    ScenarioSpec scenario;
};

// Throws ParseError on malformed lines and ConfigError on unknown keys or wrong value types.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string serialize_config(const RunConfig& c);

// Empty when the configuration can be run.
std::vector<std::string> validate_config(const RunConfig& c);

}  // namespace lrfmp

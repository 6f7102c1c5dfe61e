#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forward.hpp"
#include "geometry.hpp"
#include "solver.hpp"

namespace lrfmp {

struct Plume {
    double lon_deg = 0.0;
    double lat_deg = 0.0;
    double base_radius_km = 1000.0;  // at the core-mantle boundary
    double top_radius_km = 500.0;    // at the surface
    double amplitude = 20.0;         // δS in s per unit length; > 0 is slow
};

struct PlumeSpec {
    std::vector<Plume> plumes;
    double rho = 3482.0 / 6371.0;
    double radius_km = 6371.0;

    // Plumes below the Volcanic Eifel (50.2°N 6.7°E) and Yellowstone (44.4°N 110.6°W).
    static PlumeSpec eifel_yellowstone();
};

std::vector<std::string> validate_plumes(const PlumeSpec& spec);

// Cone of radius linear in r between the two radii, triangular lateral profile.
double plume_field(const PlumeSpec& spec, const Eigen::Vector3d& x);
double plume_field(const PlumeSpec& spec, const SphericalPoint& p);

Eigen::VectorXd synthesize_delays(const PlumeSpec& spec, const RaySet& rays, double tol = 1e-10);

// y_i (1 + level ε_i) with ε_i standard normal from the seeded stream.
Eigen::VectorXd perturb(const Eigen::VectorXd& y, double level, std::uint64_t seed);

struct EvalGrid {
    std::vector<double> radii;
    int n_lon = 73;
    int n_lat = 37;

    // Equi-angular nodes including both poles and lon = 360°.
    double lon_deg(int i) const { return 360.0 * i / (n_lon - 1); }
    double lat_deg(int k) const { return -90.0 + 180.0 * k / (n_lat - 1); }
    SphericalPoint point(std::size_t layer, int i, int k) const;
    std::size_t layer_size() const { return static_cast<std::size_t>(n_lon) * n_lat; }
    std::size_t size() const { return radii.size() * layer_size(); }
};

// `layers` radii evenly spaced over [rho, 1].
EvalGrid make_grid(double rho, int layers = 12, int n_lon = 73, int n_lat = 37);
std::vector<std::string> validate_grid(const EvalGrid& g, double rho);

// Values in layer-major, then longitude, then latitude order.
Eigen::VectorXd sample_truth(const PlumeSpec& spec, const EvalGrid& g);
Eigen::VectorXd sample_expansion(const Expansion& f, const EvalGrid& g);

double rrmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& approx);

// Root mean square of `values` on each layer.
std::vector<double> layer_rms(const Eigen::VectorXd& values, const EvalGrid& g);

// dc/c = -δS / (δS + 1/c_ref).
double slowness_to_dc_over_c(double delta_s, double c_ref);

struct GridLayerCsv {
    std::vector<double> lon, lat, value;
};

void write_layer_csv(const std::string& path, const EvalGrid& g, std::size_t layer, const Eigen::VectorXd& values);
GridLayerCsv read_layer_csv(const std::string& path);

}  // namespace lrfmp

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace lrfmp {

// Admissible parameter box for tesseroid hat functions on the unit ball.
struct TesseroidBounds {
    double rho = 3482.0 / 6371.0;
    double eps_r = 1e-2;
    double eps_phi = 1e-2;
    double eps_t = 1e-2;

    double r_min() const { return rho; }
    double r_max() const { return 1.0; }
    double t_min() const { return -1.0 + eps_t; }
    double t_max() const { return 1.0 - eps_t; }

    bool operator==(const TesseroidBounds&) const = default;
};

// Center (R, Φ, T) and half-widths (ΔR, ΔΦ, ΔT); index 0 = r, 1 = φ, 2 = t.
struct TesseroidParams {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d half_width = Eigen::Vector3d::Ones();
    TesseroidBounds bounds{};

    TesseroidParams() = default;
    TesseroidParams(double R, double Phi, double T, double dR, double dPhi, double dT,
                    const TesseroidBounds& b = {})
        : center(R, Phi, T), half_width(dR, dPhi, dT), bounds(b) {}

    double R() const { return center[0]; }
    double Phi() const { return center[1]; }
    double T() const { return center[2]; }
    double dR() const { return half_width[0]; }
    double dPhi() const { return half_width[1]; }
    double dT() const { return half_width[2]; }

    // Support in r and t, clipped to the admissible box.
    double r_lo() const;
    double r_hi() const;
    double t_lo() const;
    double t_hi() const;

    bool operator==(const TesseroidParams& o) const {
        return center == o.center && half_width == o.half_width && bounds == o.bounds;
    }
};

// Every violated constraint, in a fixed order; empty means valid.
std::vector<std::string> validate_tesseroid(const TesseroidParams& T);

}  // namespace lrfmp

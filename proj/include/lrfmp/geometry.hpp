#pragma once

#include <Eigen/Core>

namespace lrfmp {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// (r, φ, t) with t the cosine of the polar distance.
struct SphericalPoint {
    double r = 0.0;
    double phi = 0.0;
    double t = 0.0;
};

struct LocalFrame {
    Eigen::Vector3d e_r;
    Eigen::Vector3d e_phi;
    Eigen::Vector3d e_t;
};

// Maps any angle into [0, 2π).
double normalize_longitude(double phi);

Eigen::Vector3d spherical_to_cartesian(const SphericalPoint& p);

// The origin maps to (0, 0, 0); the poles get φ = 0.
SphericalPoint cartesian_to_spherical(const Eigen::Vector3d& x);

// Throws DegenerateFrame for |t| >= 1.
LocalFrame local_frame(double phi, double t);

// Same formulas without the pole check; ε^r, ε^φ, ε^t stay finite at t = ±1.
LocalFrame local_frame_unchecked(double phi, double t);

}  // namespace lrfmp

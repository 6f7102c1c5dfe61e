#include "lrfmp/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "lrfmp/errors.hpp"

namespace lrfmp {

double normalize_longitude(double phi) {
    double p = std::fmod(phi, kTwoPi);
    if (p < 0.0) p += kTwoPi;
    if (p >= kTwoPi) p = 0.0;
    return p;
}

Eigen::Vector3d spherical_to_cartesian(const SphericalPoint& p) {
    const double s = std::sqrt(std::max(0.0, (1.0 - p.t) * (1.0 + p.t)));
    return p.r * Eigen::Vector3d(s * std::cos(p.phi), s * std::sin(p.phi), p.t);
}

SphericalPoint cartesian_to_spherical(const Eigen::Vector3d& x) {
    SphericalPoint p;
    p.r = x.norm();
    if (p.r == 0.0) return p;
    p.t = std::clamp(x.z() / p.r, -1.0, 1.0);
    p.phi = (x.x() == 0.0 && x.y() == 0.0) ? 0.0 : normalize_longitude(std::atan2(x.y(), x.x()));
    return p;
}

LocalFrame local_frame_unchecked(double phi, double t) {
    const double s = std::sqrt(std::max(0.0, (1.0 - t) * (1.0 + t)));
    const double c = std::cos(phi), sn = std::sin(phi);
    return {Eigen::Vector3d(s * c, s * sn, t), Eigen::Vector3d(-sn, c, 0.0),
            Eigen::Vector3d(-t * c, -t * sn, s)};
}

LocalFrame local_frame(double phi, double t) {
    if (!(std::abs(t) < 1.0)) throw DegenerateFrame("local frame undefined at t = ±1");
    return local_frame_unchecked(phi, t);
}

}  // namespace lrfmp

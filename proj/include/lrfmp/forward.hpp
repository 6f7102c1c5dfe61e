#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dictionary.hpp"
#include "quadrature.hpp"

namespace lrfmp {

struct Ray {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<double> arc;  // cumulative arc length, arc[0] = 0
    double delay = 0.0;       // seconds
    double sigma = 1.0;       // seconds

    double length() const { return arc.empty() ? 0.0 : arc.back(); }
};

// Validates the ray invariants and fills the arc lengths; throws InvariantViolation.
Ray make_ray(std::vector<Eigen::Vector3d> vertices, double delay = 0.0, double sigma = 1.0);

struct RaySet {
    std::vector<Ray> rays;
    // Start index of every package, ascending, first entry 0 when non-empty.
    std::vector<std::size_t> package_starts;

    std::size_t size() const { return rays.size(); }
    std::size_t package_count() const { return package_starts.size(); }
    std::pair<std::size_t, std::size_t> package_range(std::size_t p) const;
    // Consecutive packages of `size` rays; the last one may be shorter.
    void set_packages(std::size_t size);
    Eigen::VectorXd delays() const;
    Eigen::VectorXd sigmas() const;
};

RaySet parse_rays(std::istream& in);
RaySet load_rays(const std::string& path);
void write_rays(std::ostream& out, const RaySet& rays, double radius_km = 6371.0);
void save_rays(const std::string& path, const RaySet& rays, double radius_km = 6371.0);

// Straight chords between surface points. With depth bias the turning radius is drawn from
// a triangular law on [rho, 1] peaking mid-mantle, so no chord enters the core.
RaySet synthetic_chords(std::size_t n, std::uint64_t seed, bool depth_biased = true,
                        double rho = 3482.0 / 6371.0);

struct DspoSettings {
    double tol = 1e-4;
};

struct LineIntegral {
    double value = 0.0;
    bool converged = true;
};

/** ∫ f ds along the polyline. `breaks(x0, u, L)` returns the kink positions τ ∈ (0, L)
    on the segment x0 + τu; `skip(x0, u, L, τa, τb)` may declare a piece identically zero. */
template <typename Field, typename Breaks, typename Skip>
LineIntegral line_integral(const Field& f, const Ray& ray, double tol, const Breaks& breaks, const Skip& skip) {
    LineIntegral out;
    for (std::size_t k = 0; k + 1 < ray.vertices.size(); ++k) {
        const Eigen::Vector3d x0 = ray.vertices[k];
        const double L = ray.arc[k + 1] - ray.arc[k];
        const Eigen::Vector3d u = (ray.vertices[k + 1] - x0) / L;
        std::vector<double> cuts = breaks(x0, u, L);
        cuts.insert(cuts.begin(), 0.0);
        cuts.push_back(L);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double a = cuts[i], b = cuts[i + 1];
            if (!(b > a) || skip(x0, u, L, a, b)) continue;
            const auto r = adaptive_gk([&](double tau) { return f(Eigen::Vector3d(x0 + tau * u)); }, a, b, tol);
            out.value += r.value;
            out.converged = out.converged && r.converged;
        }
    }
    return out;
}

template <typename Field>
LineIntegral line_integral(const Field& f, const Ray& ray, double tol) {
    return line_integral(
        f, ray, tol, [](const Eigen::Vector3d&, const Eigen::Vector3d&, double) { return std::vector<double>{}; },
        [](const Eigen::Vector3d&, const Eigen::Vector3d&, double, double, double) { return false; });
}

// Positions τ ∈ (0, L) where x0 + τu crosses a face or kink surface of the tesseroid.
std::vector<double> fehf_segment_breaks(const TesseroidParams& T, const Eigen::Vector3d& x0, const Eigen::Vector3d& u,
                                        double L);

LineIntegral dspo_apply_checked(const DictionaryElement& d, const Ray& ray, const DspoSettings& s = {});
double dspo_apply(const DictionaryElement& d, const Ray& ray, const DspoSettings& s = {});

Eigen::VectorXd dspo_matrix_column(const DictionaryElement& d, const RaySet& rays, std::size_t begin,
                                   std::size_t end, const DspoSettings& s = {});

// Columns for all G_{m,n,j} (m <= M, n <= N) over rays [begin, end); Gauss–Legendre on each
// segment is exact for these polynomials.
Eigen::MatrixXd poly_columns(int M, int N, const RaySet& rays, std::size_t begin, std::size_t end);

}  // namespace lrfmp

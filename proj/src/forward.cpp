#include "lrfmp/forward.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lrfmp/basis.hpp"
#include "lrfmp/errors.hpp"
#include "lrfmp/parallel.hpp"

namespace lrfmp {

Ray make_ray(std::vector<Eigen::Vector3d> vertices, double delay, double sigma) {
    if (vertices.size() < 2) throw InvariantViolation("ray needs at least 2 vertices");
    if (!(sigma > 0.0) || !std::isfinite(delay)) throw InvariantViolation("ray needs sigma > 0 and a finite delay");
    Ray r;
    r.arc.reserve(vertices.size());
    r.arc.push_back(0.0);
    for (std::size_t k = 0; k < vertices.size(); ++k) {
        if (!vertices[k].allFinite() || vertices[k].norm() > 1.0 + 1e-9)
            throw InvariantViolation("ray vertex " + std::to_string(k) + " lies outside the ball");
        if (k > 0) {
            const double step = (vertices[k] - vertices[k - 1]).norm();
            if (!(step > 0.0)) throw InvariantViolation("ray has a zero-length segment at vertex " + std::to_string(k));
            r.arc.push_back(r.arc.back() + step);
        }
    }
    r.vertices = std::move(vertices);
    r.delay = delay;
    r.sigma = sigma;
    return r;
}

std::pair<std::size_t, std::size_t> RaySet::package_range(std::size_t p) const {
    const std::size_t lo = package_starts.at(p);
    const std::size_t hi = p + 1 < package_starts.size() ? package_starts[p + 1] : rays.size();
    return {lo, hi};
}

void RaySet::set_packages(std::size_t size) {
    package_starts.clear();
    if (size == 0) size = rays.size();
    for (std::size_t i = 0; i < rays.size(); i += size) package_starts.push_back(i);
}

Eigen::VectorXd RaySet::delays() const {
    Eigen::VectorXd y(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) y[i] = rays[i].delay;
    return y;
}

Eigen::VectorXd RaySet::sigmas() const {
    Eigen::VectorXd s(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) s[i] = rays[i].sigma;
    return s;
}

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double to_double(std::string_view s, int line) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError(line, "expected a number, got '" + std::string(s) + "'");
    return v;
}

long to_count(std::string_view s, int line) {
    long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || v < 0)
        throw ParseError(line, "expected a vertex count, got '" + std::string(s) + "'");
    return v;
}

}  // namespace

RaySet parse_rays(std::istream& in) {
    RaySet set;
    std::string line;
    int lineno = 0;
    double radius = 0.0;
    bool have_header = false;
    long pending = 0;
    int ray_line = 0;
    double delay = 0.0, sigma = 1.0;
    std::vector<Eigen::Vector3d> verts;

    auto finish = [&] {
        try {
            set.rays.push_back(make_ray(std::move(verts), delay, sigma));
        } catch (const InvariantViolation& e) {
            throw InvariantViolation("ray " + std::to_string(set.rays.size()) + " (line " +
                                     std::to_string(ray_line) + "): " + e.what());
        }
        verts.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto tk = tokens(line);
        if (tk.empty() || tk[0].front() == '#') continue;
        if (!have_header) {
            if (tk.size() != 2 || tk[0] != "radius_km") throw ParseError(lineno, "expected 'radius_km <float>'");
            radius = to_double(tk[1], lineno);
            if (!(radius > 0.0)) throw ParseError(lineno, "radius_km must be positive");
            have_header = true;
            continue;
        }
        if (pending > 0) {
            if (tk.size() != 3) throw ParseError(lineno, "expected 'x y z'");
            verts.emplace_back(to_double(tk[0], lineno) / radius, to_double(tk[1], lineno) / radius,
                               to_double(tk[2], lineno) / radius);
            if (--pending == 0) finish();
            continue;
        }
        if (tk.size() != 4 || tk[0] != "ray") throw ParseError(lineno, "expected 'ray <delay_s> <sigma_s> <nvertices>'");
        delay = to_double(tk[1], lineno);
        sigma = to_double(tk[2], lineno);
        pending = to_count(tk[3], lineno);
        ray_line = lineno;
        if (pending == 0) finish();
    }
    if (pending > 0) throw ParseError(lineno, "file ends inside a ray");
    set.set_packages(set.rays.size());
    return set;
}

RaySet load_rays(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open ray file " + path);
    return parse_rays(in);
}

void write_rays(std::ostream& out, const RaySet& rays, double radius_km) {
    out << std::setprecision(17) << "radius_km " << radius_km << "\n";
    for (const auto& r : rays.rays) {
        out << "\nray " << r.delay << " " << r.sigma << " " << r.vertices.size() << "\n";
        for (const auto& v : r.vertices)
            out << v.x() * radius_km << " " << v.y() * radius_km << " " << v.z() * radius_km << "\n";
    }
}

void save_rays(const std::string& path, const RaySet& rays, double radius_km) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write ray file " + path);
    write_rays(out, rays, radius_km);
}

RaySet synthetic_chords(std::size_t n, std::uint64_t seed, bool depth_biased, double rho) {
    Rng rng(seed);
    auto unit = [&] {
        const double z = 2.0 * rng.uniform() - 1.0, ph = kTwoPi * rng.uniform();
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Eigen::Vector3d(s * std::cos(ph), s * std::sin(ph), z);
    };
    RaySet set;
    set.rays.reserve(n);
    while (set.rays.size() < n) {
        const Eigen::Vector3d p = unit();
        Eigen::Vector3d q;
        if (depth_biased) {
            const double turn = rho + (1.0 - rho) * 0.5 * (rng.uniform() + rng.uniform());
            const double gamma = 2.0 * std::acos(std::min(1.0, turn));
            // Random direction tangent to the sphere at p.
            Eigen::Vector3d v = unit();
            v -= v.dot(p) * p;
            if (v.norm() < 1e-8) continue;
            v.normalize();
            q = std::cos(gamma) * p + std::sin(gamma) * v;
        } else {
            q = unit();
        }
        q.normalize();
        if ((q - p).norm() < 1e-6) continue;
        set.rays.push_back(make_ray({p, q}));
    }
    set.set_packages(n);
    return set;
}

namespace {

// Real roots of a τ² + b τ + c = 0.
void quadratic_roots(double a, double b, double c, std::vector<double>& out) {
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
    if (scale == 0.0) return;
    if (std::abs(a) <= 1e-14 * scale) {
        if (b != 0.0) out.push_back(-c / b);
        return;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return;
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    out.push_back(q / a);
    if (q != 0.0) out.push_back(c / q);
}

}  // namespace

std::vector<double> fehf_segment_breaks(const TesseroidParams& T, const Eigen::Vector3d& x0, const Eigen::Vector3d& u,
                                        double L) {
    std::vector<double> cand;
    const double xu = x0.dot(u), xx = x0.squaredNorm();
    for (double c : {T.r_lo(), T.R(), T.r_hi()}) quadratic_roots(1.0, 2.0 * xu, xx - c * c, cand);

    std::vector<double> cone;
    for (double c : {T.t_lo(), T.T(), T.t_hi()}) {
        cone.clear();
        if (c == 0.0) {
            if (u.z() != 0.0) cone.push_back(-x0.z() / u.z());
        } else {
            const double c2 = c * c;
            quadratic_roots(u.z() * u.z() - c2, 2.0 * (x0.z() * u.z() - c2 * xu), x0.z() * x0.z() - c2 * xx, cone);
        }
        for (double tau : cone) {
            const double z = x0.z() + tau * u.z();
            if (c == 0.0 || (z > 0.0) == (c > 0.0)) cand.push_back(tau);
        }
    }

    for (double a : {T.Phi() - T.dPhi(), T.Phi(), T.Phi() + T.dPhi()}) {
        const double ca = std::cos(a), sa = std::sin(a);
        const double den = -u.x() * sa + u.y() * ca;
        if (den == 0.0) continue;
        const double tau = (x0.x() * sa - x0.y() * ca) / den;
        const Eigen::Vector3d x = x0 + tau * u;
        if (x.x() * ca + x.y() * sa > 0.0) cand.push_back(tau);
    }

    std::vector<double> out;
    for (double tau : cand)
        if (tau > 0.0 && tau < L) out.push_back(tau);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

LineIntegral dspo_apply_checked(const DictionaryElement& d, const Ray& ray, const DspoSettings& s) {
    if (const auto* idx = std::get_if<PolyIndex>(&d))
        return line_integral([&](const Eigen::Vector3d& x) { return poly_eval(*idx, cartesian_to_spherical(x)); },
                             ray, s.tol);
    const auto& T = std::get<TesseroidParams>(d);
    const double rlo = T.r_lo(), rhi = T.r_hi();
    return line_integral(
        [&](const Eigen::Vector3d& x) { return fehf_eval(T, cartesian_to_spherical(x)); }, ray, s.tol,
        [&](const Eigen::Vector3d& x0, const Eigen::Vector3d& u, double L) {
            // Radial reject: the segment never reaches the shell of the support.
            const double tc = std::clamp(-x0.dot(u), 0.0, L);
            const double rmin = (x0 + tc * u).norm();
            const double rmax = std::max(x0.norm(), (x0 + L * u).norm());
            if (rmin > rhi || rmax < rlo) return std::vector<double>{};
            return fehf_segment_breaks(T, x0, u, L);
        },
        [&](const Eigen::Vector3d& x0, const Eigen::Vector3d& u, double L, double a, double b) {
            const double tc = std::clamp(-x0.dot(u), 0.0, L);
            const double rmin = (x0 + tc * u).norm();
            const double rmax = std::max(x0.norm(), (x0 + L * u).norm());
            if (rmin > rhi || rmax < rlo) return true;
            return fehf_eval(T, cartesian_to_spherical(x0 + 0.5 * (a + b) * u)) <= 0.0;
        });
}

double dspo_apply(const DictionaryElement& d, const Ray& ray, const DspoSettings& s) {
    return dspo_apply_checked(d, ray, s).value;
}

Eigen::VectorXd dspo_matrix_column(const DictionaryElement& d, const RaySet& rays, std::size_t begin, std::size_t end,
                                   const DspoSettings& s) {
    Eigen::VectorXd col(end - begin);
    parallel_for(end - begin, [&](std::size_t i) { col[i] = dspo_apply(d, rays.rays[begin + i], s); });
    return col;
}

Eigen::MatrixXd poly_columns(int M, int N, const RaySet& rays, std::size_t begin, std::size_t end) {
    const int count = poly_count(M, N);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(end - begin, count);
    const auto& ref = *gauss_legendre_reference((2 * M + N) / 2 + 1);
    parallel_for(end - begin, [&](std::size_t i) {
        const Ray& ray = rays.rays[begin + i];
        Eigen::VectorXd vals(count), acc = Eigen::VectorXd::Zero(count);
        for (std::size_t k = 0; k + 1 < ray.vertices.size(); ++k) {
            const Eigen::Vector3d c = 0.5 * (ray.vertices[k] + ray.vertices[k + 1]);
            const Eigen::Vector3d h = 0.5 * (ray.vertices[k + 1] - ray.vertices[k]);
            const double half = 0.5 * (ray.arc[k + 1] - ray.arc[k]);
            for (Eigen::Index q = 0; q < ref.nodes.size(); ++q) {
                poly_eval_all(M, N, cartesian_to_spherical(c + ref.nodes[q] * h), vals);
                acc += (ref.weights[q] * half) * vals;
            }
        }
        out.row(i) = acc.transpose();
    });
    return out;
}

}  // namespace lrfmp

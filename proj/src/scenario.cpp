#include "lrfmp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lrfmp/basis.hpp"
#include "lrfmp/errors.hpp"
#include "lrfmp/parallel.hpp"

namespace lrfmp {

PlumeSpec PlumeSpec::eifel_yellowstone() {
    PlumeSpec s;
    s.plumes.push_back({6.7, 50.2, 1000.0, 500.0, 20.0});
    s.plumes.push_back({-110.6, 44.4, 1000.0, 500.0, 20.0});
    return s;
}

std::vector<std::string> validate_plumes(const PlumeSpec& spec) {
    std::vector<std::string> v;
    if (!(spec.rho > 0.0 && spec.rho < 1.0)) v.emplace_back("rho must lie in (0, 1)");
    if (!(spec.radius_km > 0.0)) v.emplace_back("radius_km must be > 0");
    for (const auto& p : spec.plumes) {
        if (!(p.base_radius_km > 0.0 && p.top_radius_km > 0.0)) v.emplace_back("plume radii must be > 0");
        if (!std::isfinite(p.amplitude)) v.emplace_back("plume amplitude must be finite");
        if (!(std::abs(p.lat_deg) <= 90.0) || !std::isfinite(p.lon_deg)) v.emplace_back("plume center out of range");
    }
    return v;
}

namespace {

Eigen::Vector3d axis_of(const Plume& p) {
    const double lon = p.lon_deg * kPi / 180.0, lat = p.lat_deg * kPi / 180.0;
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

}  // namespace

double plume_field(const PlumeSpec& spec, const Eigen::Vector3d& x) {
    const double r = x.norm();
    if (r < spec.rho || r > 1.0) return 0.0;
    double v = 0.0;
    for (const auto& p : spec.plumes) {
        const Eigen::Vector3d a = axis_of(p);
        const double h = x.dot(a);
        if (h <= 0.0) continue;
        const double d = (x - h * a).norm();
        const double frac = (r - spec.rho) / (1.0 - spec.rho);
        const double c = (p.base_radius_km + (p.top_radius_km - p.base_radius_km) * frac) / spec.radius_km;
        if (d < c) v += p.amplitude * (1.0 - d / c);
    }
    return v;
}

double plume_field(const PlumeSpec& spec, const SphericalPoint& p) {
    return plume_field(spec, spherical_to_cartesian(p));
}

Eigen::VectorXd synthesize_delays(const PlumeSpec& spec, const RaySet& rays, double tol) {
    Eigen::VectorXd y(rays.size());
    parallel_for(rays.size(), [&](std::size_t i) {
        y[i] = line_integral([&](const Eigen::Vector3d& x) { return plume_field(spec, x); }, rays.rays[i], tol).value;
    });
    return y;
}

Eigen::VectorXd perturb(const Eigen::VectorXd& y, double level, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = y[i] * (1.0 + level * rng.normal());
    return out;
}

SphericalPoint EvalGrid::point(std::size_t layer, int i, int k) const {
    const double lat = lat_deg(k) * kPi / 180.0;
    return {radii[layer], normalize_longitude(lon_deg(i) * kPi / 180.0), std::sin(lat)};
}

EvalGrid make_grid(double rho, int layers, int n_lon, int n_lat) {
    EvalGrid g;
    g.n_lon = n_lon;
    g.n_lat = n_lat;
    for (int l = 0; l < layers; ++l) g.radii.push_back(layers == 1 ? 1.0 : rho + (1.0 - rho) * l / (layers - 1));
    return g;
}

std::vector<std::string> validate_grid(const EvalGrid& g, double rho) {
    std::vector<std::string> v;
    if (g.radii.empty()) v.emplace_back("grid needs at least one layer");
    if (g.n_lon < 2 || g.n_lat < 2) v.emplace_back("grid needs at least 2x2 points per layer");
    for (double r : g.radii)
        if (r < rho - 1e-12 || r > 1.0) v.emplace_back("layer radius outside [rho, 1]");
    return v;
}

Eigen::VectorXd sample_truth(const PlumeSpec& spec, const EvalGrid& g) {
    Eigen::VectorXd v(g.size());
    std::size_t q = 0;
    for (std::size_t l = 0; l < g.radii.size(); ++l)
        for (int i = 0; i < g.n_lon; ++i)
            for (int k = 0; k < g.n_lat; ++k) v[q++] = plume_field(spec, g.point(l, i, k));
    return v;
}

Eigen::VectorXd sample_expansion(const Expansion& f, const EvalGrid& g) {
    int M = -1, N = -1;
    for (const auto& t : f.terms)
        if (const auto* p = std::get_if<PolyIndex>(&t.element)) {
            M = std::max(M, p->m);
            N = std::max(N, p->n);
        }
    Eigen::VectorXd coeffs;
    std::vector<Term> hats;
    if (M >= 0) coeffs = Eigen::VectorXd::Zero(poly_count(M, N));
    for (const auto& t : f.terms) {
        if (const auto* p = std::get_if<PolyIndex>(&t.element)) coeffs[poly_linear_index(*p, N)] += t.alpha;
        else hats.push_back(t);
    }
    Eigen::VectorXd v(g.size());
    const std::size_t per_layer = g.layer_size();
    parallel_for(g.size(), [&](std::size_t q) {
        const std::size_t l = q / per_layer, rem = q % per_layer;
        const auto p = g.point(l, static_cast<int>(rem / g.n_lat), static_cast<int>(rem % g.n_lat));
        double s = 0.0;
        if (M >= 0) {
            Eigen::VectorXd vals(coeffs.size());
            poly_eval_all(M, N, p, vals);
            s += coeffs.dot(vals);
        }
        for (const auto& t : hats) s += t.alpha * fehf_eval(std::get<TesseroidParams>(t.element), p);
        v[q] = s;
    });
    return v;
}

double rrmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& approx) {
    const double den = truth.squaredNorm();
    if (!(den > 0.0)) throw ContractViolation("rrmse needs a nonzero truth");
    return std::sqrt((truth - approx).squaredNorm() / den);
}

std::vector<double> layer_rms(const Eigen::VectorXd& values, const EvalGrid& g) {
    std::vector<double> out;
    const auto n = static_cast<Eigen::Index>(g.layer_size());
    for (std::size_t l = 0; l < g.radii.size(); ++l)
        out.push_back(std::sqrt(values.segment(l * n, n).squaredNorm() / n));
    return out;
}

double slowness_to_dc_over_c(double delta_s, double c_ref) {
    const double den = delta_s + 1.0 / c_ref;
    if (den == 0.0 || !std::isfinite(den)) throw ContractViolation("dS + 1/c_ref = 0");
    return -delta_s / den;
}

void write_layer_csv(const std::string& path, const EvalGrid& g, std::size_t layer, const Eigen::VectorXd& values) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << std::setprecision(17) << "lon_deg,lat_deg,value\n";
    const std::size_t base = layer * g.layer_size();
    std::size_t q = 0;
    for (int i = 0; i < g.n_lon; ++i)
        for (int k = 0; k < g.n_lat; ++k) out << g.lon_deg(i) << "," << g.lat_deg(k) << "," << values[base + q++] << "\n";
}

GridLayerCsv read_layer_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    GridLayerCsv g;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != "lon_deg,lat_deg,value") throw ParseError(lineno, "unexpected grid header");
            continue;
        }
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c, extra;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
            std::getline(ss, extra, ','))
            throw ParseError(lineno, "expected lon,lat,value");
        try {
            g.lon.push_back(std::stod(a));
            g.lat.push_back(std::stod(b));
            g.value.push_back(std::stod(c));
        } catch (const std::exception&) {
            throw ParseError(lineno, "bad number");
        }
    }
    return g;
}

}  // namespace lrfmp

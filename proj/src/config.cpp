#include "lrfmp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "lrfmp/errors.hpp"

namespace lrfmp {

namespace {

using Value = std::variant<bool, double, std::string, std::vector<double>>;

struct Entry {
    Value value;
    int line;
};

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

double parse_number(const std::string& s, int line) {
    double v = 0.0;
    const char* b = s.data();
    if (!s.empty() && s[0] == '+') ++b;
    const auto r = std::from_chars(b, s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError(line, "bad number '" + s + "'");
    return v;
}

Value parse_value(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (s.empty()) throw ParseError(line, "missing value");
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') throw ParseError(line, "unterminated string");
        const std::string body = s.substr(1, s.size() - 2);
        if (body.find('"') != std::string::npos) throw ParseError(line, "embedded quote in string");
        return body;
    }
    if (s.front() == '[') {
        if (s.back() != ']') throw ParseError(line, "unterminated list");
        std::vector<double> out;
        const std::string body = trim(s.substr(1, s.size() - 2));
        if (body.empty()) return out;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), line));
        return out;
    }
    return parse_number(s, line);
}

using Sections = std::map<std::string, std::map<std::string, Entry>>;

Sections parse_sections(const std::string& text) {
    Sections out;
    std::string section;
    out[section];
    std::stringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(line, "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ParseError(line, "empty section name");
            static const std::set<std::string> known{"dictionary", "tesseroid", "solver",
                                                     "optimizer", "quadrature", "scenario"};
            if (!known.count(section))
                throw ConfigError("line " + std::to_string(line) + ": unknown section [" + section + "]");
            if (out.count(section) && section != "") throw ParseError(line, "duplicate section [" + section + "]");
            out[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ParseError(line, "missing key");
        auto& sec = out[section];
        if (sec.count(key)) throw ParseError(line, "duplicate key '" + key + "'");
        sec.emplace(key, Entry{parse_value(s.substr(eq + 1), line), line});
    }
    return out;
}

// Binds section keys to struct fields and rejects anything unbound.
class Binder {
public:
    explicit Binder(Sections s) : sections_(std::move(s)) {}

    void number(const std::string& sec, const std::string& key, double& dst) {
        if (auto* e = take(sec, key)) dst = get<double>(*e, sec, key, "a number");
    }
    void integer(const std::string& sec, const std::string& key, int& dst) {
        double v = dst;
        number(sec, key, v);
        if (v != std::floor(v)) throw ConfigError(where(sec, key) + " must be an integer");
        dst = static_cast<int>(v);
    }
    void size(const std::string& sec, const std::string& key, std::size_t& dst) {
        double v = static_cast<double>(dst);
        number(sec, key, v);
        if (v != std::floor(v) || v < 0) throw ConfigError(where(sec, key) + " must be a non-negative integer");
        dst = static_cast<std::size_t>(v);
    }
    void seed(const std::string& sec, const std::string& key, std::uint64_t& dst) {
        double v = static_cast<double>(dst);
        number(sec, key, v);
        if (v != std::floor(v) || v < 0 || v > 9007199254740992.0)
            throw ConfigError(where(sec, key) + " must be an integer in [0, 2^53]");
        dst = static_cast<std::uint64_t>(v);
    }
    void boolean(const std::string& sec, const std::string& key, bool& dst) {
        if (auto* e = take(sec, key)) dst = get<bool>(*e, sec, key, "true or false");
    }
    void string(const std::string& sec, const std::string& key, std::string& dst) {
        if (auto* e = take(sec, key)) dst = get<std::string>(*e, sec, key, "a string");
    }
    bool list(const std::string& sec, const std::string& key, std::vector<double>& dst) {
        if (auto* e = take(sec, key)) {
            dst = get<std::vector<double>>(*e, sec, key, "a list of numbers");
            return true;
        }
        return false;
    }
    void finish() const {
        for (const auto& [sec, keys] : sections_)
            for (const auto& [key, e] : keys)
                if (!used_.count({sec, key}))
                    throw ConfigError("line " + std::to_string(e.line) + ": unknown key " + where(sec, key));
    }

private:
    static std::string where(const std::string& sec, const std::string& key) {
        return sec.empty() ? "'" + key + "'" : "'" + sec + "." + key + "'";
    }
    const Entry* take(const std::string& sec, const std::string& key) {
        auto s = sections_.find(sec);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        used_.insert({sec, key});
        return &k->second;
    }
    template <typename T>
    static T get(const Entry& e, const std::string& sec, const std::string& key, const char* what) {
        if (const auto* v = std::get_if<T>(&e.value)) return *v;
        throw ConfigError("line " + std::to_string(e.line) + ": " + where(sec, key) + " must be " + what);
    }

    Sections sections_;
    std::set<std::pair<std::string, std::string>> used_;
};

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    Binder b(parse_sections(text));
    std::string mode = "synthetic";
    b.string("", "mode", mode);
    if (mode == "synthetic") c.mode = Mode::Synthetic;
    else if (mode == "rayfile") c.mode = Mode::Rayfile;
    else throw ConfigError("mode must be \"synthetic\" or \"rayfile\"");
    b.seed("", "seed", c.seed);
    b.string("", "output_dir", c.output_dir);
    b.string("", "ray_file", c.ray_file);

    auto& d = c.dictionary;
    b.integer("dictionary", "max_radial_degree", d.max_radial_degree);
    b.integer("dictionary", "max_angular_degree", d.max_angular_degree);
    b.boolean("dictionary", "include_fehfs", d.include_fehfs);
    b.integer("dictionary", "fehf_radial_centers", d.fehf_radial_centers);
    b.integer("dictionary", "fehf_lon_centers", d.fehf_lon_centers);
    b.integer("dictionary", "fehf_lat_centers", d.fehf_lat_centers);

    auto& tb = c.solver.bounds;
    b.number("tesseroid", "rho", tb.rho);
    b.number("tesseroid", "eps_r", tb.eps_r);
    b.number("tesseroid", "eps_phi", tb.eps_phi);
    b.number("tesseroid", "eps_t", tb.eps_t);

    auto& s = c.solver;
    b.list("solver", "lambda_factors", s.lambda_factors);
    b.integer("solver", "max_iterations", s.max_iterations);
    b.number("solver", "noise_stop", s.noise_level);
    b.number("solver", "blow_up", s.blow_up);
    b.number("solver", "chi2_tolerance", s.chi2_tolerance);
    b.number("solver", "no_improvement", s.no_improvement);
    b.size("solver", "package_size", s.package_size);
    b.number("solver", "package_threshold", s.package_threshold);
    b.boolean("solver", "learning", s.learning);

    b.number("optimizer", "global_xtol_rel", s.global.xtol_rel);
    b.number("optimizer", "global_ftol_rel", s.global.ftol_rel);
    b.integer("optimizer", "global_max_evals", s.global.max_evals);
    b.number("optimizer", "local_xtol_rel", s.local.xtol_rel);
    b.number("optimizer", "local_ftol_rel", s.local.ftol_rel);
    b.integer("optimizer", "local_max_evals", s.local.max_evals);
    double cap = s.global.time_cap_s;
    b.number("optimizer", "time_cap_s", cap);
    s.global.time_cap_s = s.local.time_cap_s = cap;

    b.number("quadrature", "gk_tolerance", s.dspo.tol);
    b.integer("quadrature", "latitudinal_nodes", s.gram.latitudinal_nodes);
    b.number("quadrature", "radial_tolerance", s.gram.radial_tol);

    auto& sc = c.scenario;
    b.size("scenario", "n_rays", sc.n_rays);
    b.boolean("scenario", "depth_biased", sc.depth_biased);
    b.number("scenario", "noise_level", sc.noise_level);
    b.integer("scenario", "grid_layers", sc.grid_layers);
    b.integer("scenario", "grid_lon", sc.grid_lon);
    b.integer("scenario", "grid_lat", sc.grid_lat);
    b.number("scenario", "radius_km", sc.plumes.radius_km);
    std::vector<double> lon, lat, base, top, amp;
    for (const auto& p : sc.plumes.plumes) {
        lon.push_back(p.lon_deg);
        lat.push_back(p.lat_deg);
        base.push_back(p.base_radius_km);
        top.push_back(p.top_radius_km);
        amp.push_back(p.amplitude);
    }
    b.list("scenario", "plume_lon_deg", lon);
    b.list("scenario", "plume_lat_deg", lat);
    b.list("scenario", "plume_base_radius_km", base);
    b.list("scenario", "plume_top_radius_km", top);
    b.list("scenario", "plume_amplitude", amp);
    b.finish();

    const std::size_t np = lon.size();
    if (lat.size() != np || base.size() != np || top.size() != np || amp.size() != np)
        throw ConfigError("plume_* lists must have equal lengths");
    sc.plumes.plumes.clear();
    for (std::size_t i = 0; i < np; ++i) sc.plumes.plumes.push_back({lon[i], lat[i], base[i], top[i], amp[i]});
    sc.plumes.rho = tb.rho;
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream o;
    auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
    auto str = [](const std::string& s) { return "\"" + s + "\""; };
    auto bl = [](bool v) { return std::string(v ? "true" : "false"); };
    kv("mode", str(c.mode == Mode::Synthetic ? "synthetic" : "rayfile"));
    kv("seed", std::to_string(c.seed));
    kv("output_dir", str(c.output_dir));
    kv("ray_file", str(c.ray_file));

    const auto& d = c.dictionary;
    o << "\n[dictionary]\n";
    kv("max_radial_degree", std::to_string(d.max_radial_degree));
    kv("max_angular_degree", std::to_string(d.max_angular_degree));
    kv("include_fehfs", bl(d.include_fehfs));
    kv("fehf_radial_centers", std::to_string(d.fehf_radial_centers));
    kv("fehf_lon_centers", std::to_string(d.fehf_lon_centers));
    kv("fehf_lat_centers", std::to_string(d.fehf_lat_centers));

    const auto& tb = c.solver.bounds;
    o << "\n[tesseroid]\n";
    kv("rho", fmt(tb.rho));
    kv("eps_r", fmt(tb.eps_r));
    kv("eps_phi", fmt(tb.eps_phi));
    kv("eps_t", fmt(tb.eps_t));

    const auto& s = c.solver;
    o << "\n[solver]\n";
    kv("lambda_factors", fmt_list(s.lambda_factors));
    kv("max_iterations", std::to_string(s.max_iterations));
    kv("noise_stop", fmt(s.noise_level));
    kv("blow_up", fmt(s.blow_up));
    kv("chi2_tolerance", fmt(s.chi2_tolerance));
    kv("no_improvement", fmt(s.no_improvement));
    kv("package_size", std::to_string(s.package_size));
    kv("package_threshold", fmt(s.package_threshold));
    kv("learning", bl(s.learning));

    o << "\n[optimizer]\n";
    kv("global_xtol_rel", fmt(s.global.xtol_rel));
    kv("global_ftol_rel", fmt(s.global.ftol_rel));
    kv("global_max_evals", std::to_string(s.global.max_evals));
    kv("local_xtol_rel", fmt(s.local.xtol_rel));
    kv("local_ftol_rel", fmt(s.local.ftol_rel));
    kv("local_max_evals", std::to_string(s.local.max_evals));
    kv("time_cap_s", fmt(s.global.time_cap_s));

    o << "\n[quadrature]\n";
    kv("gk_tolerance", fmt(s.dspo.tol));
    kv("latitudinal_nodes", std::to_string(s.gram.latitudinal_nodes));
    kv("radial_tolerance", fmt(s.gram.radial_tol));

    const auto& sc = c.scenario;
    o << "\n[scenario]\n";
    kv("n_rays", std::to_string(sc.n_rays));
    kv("depth_biased", bl(sc.depth_biased));
    kv("noise_level", fmt(sc.noise_level));
    kv("grid_layers", std::to_string(sc.grid_layers));
    kv("grid_lon", std::to_string(sc.grid_lon));
    kv("grid_lat", std::to_string(sc.grid_lat));
    kv("radius_km", fmt(sc.plumes.radius_km));
    std::vector<double> lon, lat, base, top, amp;
    for (const auto& p : sc.plumes.plumes) {
        lon.push_back(p.lon_deg);
        lat.push_back(p.lat_deg);
        base.push_back(p.base_radius_km);
        top.push_back(p.top_radius_km);
        amp.push_back(p.amplitude);
    }
    kv("plume_lon_deg", fmt_list(lon));
    kv("plume_lat_deg", fmt_list(lat));
    kv("plume_base_radius_km", fmt_list(base));
    kv("plume_top_radius_km", fmt_list(top));
    kv("plume_amplitude", fmt_list(amp));
    return o.str();
}

std::vector<std::string> validate_config(const RunConfig& c) {
    auto v = validate_solver_config(c.solver);
    const auto& d = c.dictionary;
    if (d.max_radial_degree < 0 || d.max_angular_degree < 0) v.emplace_back("dictionary caps must be >= 0");
    if (d.include_fehfs && (d.fehf_radial_centers < 2 || d.fehf_lon_centers < 2 || d.fehf_lat_centers < 2))
        v.emplace_back("FEHF grids need at least 2 centers per dimension");
    const auto& tb = c.solver.bounds;
    if (!(tb.rho > 0.0 && tb.rho < 1.0)) v.emplace_back("tesseroid.rho must lie in (0, 1)");
    if (!(tb.eps_r > 0.0 && tb.eps_phi > 0.0 && tb.eps_t > 0.0)) v.emplace_back("tesseroid eps values must be > 0");
    if (c.mode == Mode::Rayfile) {
        if (c.ray_file.empty()) v.emplace_back("rayfile mode needs ray_file");
        if (c.solver.lambda_factors.size() != 1) v.emplace_back("rayfile mode needs exactly one lambda factor");
    } else {
        for (auto& e : validate_plumes(c.scenario.plumes)) v.push_back(e);
        if (c.scenario.plumes.plumes.empty()) v.emplace_back("synthetic mode needs at least one plume");
        if (!(c.scenario.noise_level >= 0.0)) v.emplace_back("scenario.noise_level must be >= 0");
    }
    if (c.scenario.grid_layers < 1 || c.scenario.grid_lon < 2 || c.scenario.grid_lat < 2)
        v.emplace_back("grid needs >= 1 layer and >= 2x2 points");
    if (c.output_dir.empty()) v.emplace_back("output_dir must be set");
    return v;
}

}  // namespace lrfmp

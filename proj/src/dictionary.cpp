#include "lrfmp/dictionary.hpp"

#include <cmath>
#include <array>
#include <sstream>

#include "lrfmp/geometry.hpp"

namespace lrfmp {

double TesseroidParams::r_lo() const { return std::max(bounds.r_min(), R() - dR()); }
double TesseroidParams::r_hi() const { return std::min(bounds.r_max(), R() + dR()); }
double TesseroidParams::t_lo() const { return std::max(bounds.t_min(), T() - dT()); }
double TesseroidParams::t_hi() const { return std::min(bounds.t_max(), T() + dT()); }

std::vector<std::string> validate_tesseroid(const TesseroidParams& T) {
    std::vector<std::string> v;
    const auto& b = T.bounds;
    auto check = [&](bool ok, const char* msg) {
        if (!ok) v.emplace_back(msg);
    };
    // NaN fails every comparison below and is reported as a violation.
    check(T.R() >= b.r_min(), "R >= rho*Rball");
    check(T.R() <= b.r_max(), "R <= Rball");
    check(T.dR() >= b.eps_r, "dR >= eps_R");
    check(T.dR() <= 0.5 * b.r_max(), "dR <= Rball/2");
    check(T.Phi() >= 0.0, "Phi >= 0");
    check(T.Phi() <= kTwoPi, "Phi <= 2pi");
    check(T.dPhi() >= b.eps_phi, "dPhi >= eps_Phi");
    check(T.dPhi() <= 0.5 * kTwoPi, "dPhi <= pi");
    check(T.T() >= b.t_min(), "T >= -1+eps_T");
    check(T.T() <= b.t_max(), "T <= 1-eps_T");
    check(T.dT() >= b.eps_t, "dT >= eps_T");
    check(T.dT() <= 0.5, "dT <= 0.5");
    if (v.empty()) {
        check(T.r_lo() < T.r_hi(), "radial support is degenerate");
        check(T.t_lo() < T.t_hi(), "latitudinal support is degenerate");
    }
    return v;
}

std::vector<PolyIndex> enumerate_polys(int M, int N) {
    std::vector<PolyIndex> out;
    out.reserve(poly_count(M, N));
    for (int m = 0; m <= M; ++m)
        for (int n = 0; n <= N; ++n)
            for (int j = -n; j <= n; ++j) out.push_back({m, n, j});
    return out;
}

namespace {
std::array<double, 6> tuple_of(const TesseroidParams& T) {
    return {T.R(), T.Phi(), T.T(), T.dR(), T.dPhi(), T.dT()};
}
}  // namespace

bool canonical_less(const DictionaryElement& a, const DictionaryElement& b) {
    if (a.index() != b.index()) return a.index() < b.index();
    if (is_poly(a)) return std::get<PolyIndex>(a) < std::get<PolyIndex>(b);
    return tuple_of(std::get<TesseroidParams>(a)) < tuple_of(std::get<TesseroidParams>(b));
}

std::vector<std::string> validate_element(const DictionaryElement& d, int M_max, int N_max) {
    if (is_fehf(d)) return validate_tesseroid(std::get<TesseroidParams>(d));
    const auto& i = std::get<PolyIndex>(d);
    std::vector<std::string> v;
    if (i.m < 0 || i.m > M_max) v.emplace_back("m outside [0, M]");
    if (i.n < 0 || i.n > N_max) v.emplace_back("n outside [0, N]");
    if (std::abs(i.j) > i.n) v.emplace_back("|j| <= n");
    return v;
}

std::string describe(const DictionaryElement& d) {
    std::ostringstream os;
    os.precision(6);
    if (is_poly(d)) {
        const auto& i = std::get<PolyIndex>(d);
        os << "G(" << i.m << "," << i.n << "," << i.j << ")";
    } else {
        const auto& T = std::get<TesseroidParams>(d);
        os << "N(R=" << T.R() << ",Phi=" << T.Phi() << ",T=" << T.T() << ",dR=" << T.dR()
           << ",dPhi=" << T.dPhi() << ",dT=" << T.dT() << ")";
    }
    return os.str();
}

}  // namespace lrfmp

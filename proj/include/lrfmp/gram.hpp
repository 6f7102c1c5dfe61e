#pragma once

#include <array>
#include <map>
#include <shared_mutex>
#include <vector>

#include <Eigen/Core>

#include "dictionary.hpp"

namespace lrfmp {

struct GramSettings {
    // Total Gauss–Legendre nodes for the latitudinal integrals of the mixed case.
    int latitudinal_nodes = 10000;
    // Relative tolerance of the radial integrals in the polynomial case.
    double radial_tol = 1e-13;
};

// One overlap piece in a single dimension. `other_center` is the second element's center
// after the 2πk shift that aligns it with this piece (equal to the original in r and t).
struct OverlapPiece {
    double lb = 0.0;
    double ub = 0.0;
    double other_center = 0.0;
    std::vector<double> critical;  // lb, kinks inside, ub; ascending
};

struct OverlapInterval {
    std::array<std::vector<OverlapPiece>, 3> dims;
    bool empty() const { return dims[0].empty() || dims[1].empty() || dims[2].empty(); }
};

OverlapInterval overlap_bounds(const TesseroidParams& a, const TesseroidParams& b);

struct H1Parts {
    double l2 = 0.0;
    double grad = 0.0;
    double total() const { return l2 + grad; }
};

H1Parts h1_poly_poly_parts(const PolyIndex& a, const PolyIndex& b, const GramSettings& s = {});
H1Parts h1_fehf_fehf_parts(const TesseroidParams& a, const TesseroidParams& b);
H1Parts h1_mixed_parts(const TesseroidParams& T, const PolyIndex& i, const GramSettings& s = {});

inline double h1_poly_poly(const PolyIndex& a, const PolyIndex& b, const GramSettings& s = {}) {
    return h1_poly_poly_parts(a, b, s).total();
}
inline double h1_fehf_fehf(const TesseroidParams& a, const TesseroidParams& b) {
    return h1_fehf_fehf_parts(a, b).total();
}
inline double h1_mixed(const TesseroidParams& T, const PolyIndex& i, const GramSettings& s = {}) {
    return h1_mixed_parts(T, i, s).total();
}

// ⟨N_T, G_{m,n,j}⟩_{H¹} for all m <= M, n <= N in enumerate_polys order.
Eigen::VectorXd h1_mixed_all(const TesseroidParams& T, int M, int N, const GramSettings& s = {});

double h1(const DictionaryElement& a, const DictionaryElement& b, const GramSettings& s = {});

// Only the parameters that change the integral enter the key.
using ElementKey = std::array<double, 9>;
ElementKey element_key(const DictionaryElement& d);

class GramCache {
public:
    explicit GramCache(GramSettings s = {}) : settings_(s) {}
    double get(const DictionaryElement& a, const DictionaryElement& b);
    std::size_t size() const;
    const GramSettings& settings() const { return settings_; }

private:
    GramSettings settings_;
    mutable std::shared_mutex mu_;
    std::map<std::pair<ElementKey, ElementKey>, double> values_;
};

inline double gram_get(GramCache& cache, const DictionaryElement& a, const DictionaryElement& b) {
    return cache.get(a, b);
}

}  // namespace lrfmp

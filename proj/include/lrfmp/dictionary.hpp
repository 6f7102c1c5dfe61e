#pragma once

#include <compare>
#include <string>
#include <variant>
#include <vector>

#include "tesseroid.hpp"

namespace lrfmp {

struct PolyIndex {
    int m = 0;
    int n = 0;
    int j = 0;

    auto operator<=>(const PolyIndex&) const = default;
};

// Number of (m, n, j) with m <= M, n <= N.
inline int poly_count(int M, int N) { return (M + 1) * (N + 1) * (N + 1); }

// Position of idx in the (m, n, j) lexicographic enumeration with caps M, N.
inline int poly_linear_index(const PolyIndex& idx, int N) {
    return idx.m * (N + 1) * (N + 1) + idx.n * idx.n + (idx.j + idx.n);
}

std::vector<PolyIndex> enumerate_polys(int M, int N);

using DictionaryElement = std::variant<PolyIndex, TesseroidParams>;

inline bool is_poly(const DictionaryElement& d) { return std::holds_alternative<PolyIndex>(d); }
inline bool is_fehf(const DictionaryElement& d) { return std::holds_alternative<TesseroidParams>(d); }

// Polynomials by (m, n, j), then hats by (R, Φ, T, ΔR, ΔΦ, ΔT).
bool canonical_less(const DictionaryElement& a, const DictionaryElement& b);

std::vector<std::string> validate_element(const DictionaryElement& d, int M_max, int N_max);

std::string describe(const DictionaryElement& d);

}  // namespace lrfmp

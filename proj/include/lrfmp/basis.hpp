#pragma once

#include <optional>

#include <Eigen/Core>

#include "dictionary.hpp"
#include "geometry.hpp"

namespace lrfmp {

struct BasisValue {
    double value = 0.0;
    std::optional<Eigen::Vector3d> gradient;
};

struct FehfGradient {
    Eigen::Vector3d value = Eigen::Vector3d::Zero();
    // False on the kink planes a_j = A_j and on the faces of the support.
    bool defined = true;
};

// Signed periodic offset φ - Φ folded into [-π, π].
double longitude_offset(double phi, double Phi);

double fehf_eval(const TesseroidParams& T, const SphericalPoint& p);
FehfGradient fehf_gradient(const TesseroidParams& T, const SphericalPoint& p);

double poly_eval(const PolyIndex& idx, const SphericalPoint& p);
Eigen::Vector3d poly_gradient(const PolyIndex& idx, const SphericalPoint& p);

// All G_{m,n,j} with m <= M, n <= N at p, in enumerate_polys order.
void poly_eval_all(int M, int N, const SphericalPoint& p, Eigen::Ref<Eigen::VectorXd> out);

BasisValue evaluate(const DictionaryElement& d, const SphericalPoint& p, bool with_gradient = false);

}  // namespace lrfmp

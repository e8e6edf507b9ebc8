#pragma once

#include <array>
#include <span>

#include "lamp/image.hpp"

namespace lamp {

// Bivariate Gaussian with a symmetric positive-definite covariance. The
// off-diagonal is stored once, so the symmetry invariant holds by
// construction.
struct Gaussian2 {
    std::array<double, 2> mean{0.0, 0.0};
    double c00 = 1.0;
    double c01 = 0.0;
    double c11 = 1.0;

    bool operator==(const Gaussian2&) const = default;
};

// Regularization floor added to fitted covariance diagonals, in squared
// pixel-value units. Keeps constant patches positive definite.
inline constexpr double kCovFloor = 1e-6;

// Sample mean and population covariance (divide by n) plus kCovFloor * I.
Gaussian2 fit_gaussian2(std::span<const std::array<double, 2>> samples);

// 2-Wasserstein distance between Gaussians:
//   W2 = sqrt(||mu_a - mu_b||^2
//             + tr(Sa) + tr(Sb) - 2 tr((Sa^1/2 Sb Sa^1/2)^1/2))
// The cross trace is sqrt(l+) + sqrt(l-) with l+- the eigenvalues of the
// product Sa*Sb, obtained from its characteristic polynomial; that routing
// makes the computation exactly symmetric in (a, b). Negative residues from
// rounding are clamped to zero. Equal inputs return exactly 0.
double gaussian_w2(const Gaussian2& a, const Gaussian2& b);

// Edge Gaussian over (gx, gy) and chroma Gaussian over (Cb, Cr) of a patch.
struct PatternModel {
    Gaussian2 edge;
    Gaussian2 chroma;

    bool operator==(const PatternModel&) const = default;
};

PatternModel patch_pattern(const PlaneSet& planes, const Rect& r);

// Sum of the edge and chroma W2 terms. Symmetric, nonnegative.
double pattern_distance(const PatternModel& m1, const PatternModel& m2);

} // namespace lamp

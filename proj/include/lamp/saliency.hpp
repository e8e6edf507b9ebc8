#pragma once

#include "lamp/image.hpp"

namespace lamp {

// Normalized saliency map over one image, with a precomputed integral so
// per-patch scores are four lookups.
struct SaliencyMap {
    Plane map;           // values in [0, 1]
    IntegralPlane ip;
    int width = 0;
    int height = 0;
};

// Global-contrast saliency estimate:
//   raw(p) = || blur_sigma(Y, Cb, Cr)(p) - mean(Y, Cb, Cr) ||_2
// with sigma = min(width, height) / 16, then min-max normalized to [0, 1].
// A flat raw map (max == min) yields the all-zero map.
//
// The blur is a sampled Gaussian, kernel radius ceil(3*sigma) (at least 1),
// weights normalized to sum 1, borders replicated. Output is deterministic
// and independent of the worker count.
SaliencyMap compute_saliency(const Image& img);

// Serial reference; bit-identical to compute_saliency.
SaliencyMap compute_saliency_serial(const Image& img);

// Mean saliency over the patch: rect_sum / area, clamped to [0, 1].
double patch_saliency(const SaliencyMap& map, const Rect& r);

} // namespace lamp

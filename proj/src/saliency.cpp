#include "lamp/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "lamp/error.hpp"
#include "lamp/parallel.hpp"

namespace lamp {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& w : k) w /= sum;
    return k;
}

// Separable blur with replicated borders. Rows and columns are independent,
// so the parallel run is bit-identical to the serial one.
Plane blur(const Plane& src, const std::vector<double>& kernel, bool parallel) {
    const int w = src.width;
    const int h = src.height;
    const int radius = static_cast<int>(kernel.size() / 2);

    Plane tmp(w, h);
    parallel_for(h, parallel, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xi = std::clamp(x + i, 0, w - 1);
                acc += kernel[i + radius] * src.at(xi, y);
            }
            tmp.at(x, y) = acc;
        }
    });

    Plane out(w, h);
    parallel_for(h, parallel, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yi = std::clamp(y + i, 0, h - 1);
                acc += kernel[i + radius] * tmp.at(x, yi);
            }
            out.at(x, y) = acc;
        }
    });
    return out;
}

double plane_mean(const Plane& p) {
    double sum = 0.0;
    for (double v : p.v) sum += v;
    return sum / static_cast<double>(p.v.size());
}

SaliencyMap compute_impl(const Image& img, bool parallel) {
    if (img.width < 1 || img.height < 1) {
        raise(ErrorCode::ShapeMismatch, "compute_saliency: empty image");
    }
    const PlaneSet ps = derive_planes(img);
    const double sigma = std::min(img.width, img.height) / 16.0;
    const std::vector<double> kernel = gaussian_kernel(sigma);

    const Plane by = blur(ps.y, kernel, parallel);
    const Plane bcb = blur(ps.cb, kernel, parallel);
    const Plane bcr = blur(ps.cr, kernel, parallel);
    const double my = plane_mean(ps.y);
    const double mcb = plane_mean(ps.cb);
    const double mcr = plane_mean(ps.cr);

    Plane raw(img.width, img.height);
    parallel_for(img.height, parallel, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            const double dy = by.at(x, y) - my;
            const double dcb = bcb.at(x, y) - mcb;
            const double dcr = bcr.at(x, y) - mcr;
            raw.at(x, y) = std::sqrt(dy * dy + dcb * dcb + dcr * dcr);
        }
    });

    double lo = raw.v[0];
    double hi = raw.v[0];
    for (double v : raw.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    SaliencyMap sm;
    sm.width = img.width;
    sm.height = img.height;
    sm.map = Plane(img.width, img.height);
    if (hi > lo) {
        const double scale = 1.0 / (hi - lo);
        parallel_for(img.height, parallel, [&](int y) {
            for (int x = 0; x < img.width; ++x) {
                sm.map.at(x, y) = (raw.at(x, y) - lo) * scale;
            }
        });
    }
    sm.ip = integral(sm.map);
    return sm;
}

} // namespace

SaliencyMap compute_saliency(const Image& img) { return compute_impl(img, true); }

SaliencyMap compute_saliency_serial(const Image& img) { return compute_impl(img, false); }

double patch_saliency(const SaliencyMap& map, const Rect& r) {
    const double sum = rect_sum(map.ip, r); // throws OutOfBounds
    const double mean = sum / static_cast<double>(r.area());
    return std::clamp(mean, 0.0, 1.0);
}

} // namespace lamp

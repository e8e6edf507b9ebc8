#include "lamp/image.hpp"

#include <algorithm>
#include <cmath>

#include "lamp/error.hpp"

namespace lamp {

long long rect_intersection_area(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) return 0;
    return static_cast<long long>(x1 - x0) * (y1 - y0);
}

PlaneSet derive_planes(const Image& img) {
    if (img.width < 1 || img.height < 1) {
        raise(ErrorCode::ShapeMismatch, "derive_planes: empty image");
    }
    const int w = img.width;
    const int h = img.height;
    PlaneSet ps;
    ps.y = Plane(w, h);
    ps.cb = Plane(w, h);
    ps.cr = Plane(w, h);
    ps.gx = Plane(w, h);
    ps.gy = Plane(w, h);

    for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx) {
            const double r = img.at(xx, yy, 0);
            const double g = img.at(xx, yy, 1);
            const double b = img.at(xx, yy, 2);
            ps.y.at(xx, yy) = 0.299 * r + 0.587 * g + 0.114 * b;
            // 0.168736 + 0.331264 = 0.5 and 0.418688 + 0.081312 = 0.5, so the
            // matrix rows rewrite in terms of differences from G; R==G==B then
            // gives exactly 128.
            ps.cb.at(xx, yy) = 128.0 + 0.5 * (b - g) - 0.168736 * (r - g);
            ps.cr.at(xx, yy) = 128.0 + 0.5 * (r - g) - 0.081312 * (b - g);
        }
    }

    auto clampx = [w](int x) { return std::clamp(x, 0, w - 1); };
    auto clampy = [h](int y) { return std::clamp(y, 0, h - 1); };
    for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx) {
            ps.gx.at(xx, yy) =
                (ps.y.at(clampx(xx + 1), yy) - ps.y.at(clampx(xx - 1), yy)) / 2.0;
            ps.gy.at(xx, yy) =
                (ps.y.at(xx, clampy(yy + 1)) - ps.y.at(xx, clampy(yy - 1))) / 2.0;
        }
    }
    return ps;
}

IntegralPlane integral(const Plane& plane) {
    IntegralPlane ip;
    ip.width = plane.width;
    ip.height = plane.height;
    ip.sums.assign(static_cast<size_t>(plane.width + 1) * (plane.height + 1), 0.0);
    const int stride = plane.width + 1;
    for (int y = 0; y < plane.height; ++y) {
        double row = 0.0;
        for (int x = 0; x < plane.width; ++x) {
            row += plane.at(x, y);
            ip.sums[static_cast<size_t>(y + 1) * stride + (x + 1)] =
                ip.sums[static_cast<size_t>(y) * stride + (x + 1)] + row;
        }
    }
    return ip;
}

double rect_sum(const IntegralPlane& ip, const Rect& r) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > ip.width ||
        r.y + r.h > ip.height) {
        raise(ErrorCode::OutOfBounds, "rect_sum: rect outside plane");
    }
    return ip.border_at(r.x + r.w, r.y + r.h) - ip.border_at(r.x, r.y + r.h) -
           ip.border_at(r.x + r.w, r.y) + ip.border_at(r.x, r.y);
}

Image crop_resize(const Image& img, const Rect& r, int out_side) {
    if (!img.contains(r)) {
        raise(ErrorCode::OutOfBounds, "crop_resize: rect outside image");
    }
    if (out_side < 1) {
        raise(ErrorCode::OutOfBounds, "crop_resize: out_side must be >= 1");
    }
    Image out(out_side, out_side);
    const double sx = static_cast<double>(r.w) / out_side;
    const double sy = static_cast<double>(r.h) / out_side;
    for (int oy = 0; oy < out_side; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(r.h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, r.h - 1);
        const double wy = fy - y0;
        for (int ox = 0; ox < out_side; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(r.w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, r.w - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double p00 = img.at(r.x + x0, r.y + y0, c);
                const double p10 = img.at(r.x + x1, r.y + y0, c);
                const double p01 = img.at(r.x + x0, r.y + y1, c);
                const double p11 = img.at(r.x + x1, r.y + y1, c);
                const double top = p00 + (p10 - p00) * wx;
                const double bot = p01 + (p11 - p01) * wx;
                const double val = top + (bot - top) * wy;
                out.pixels[(static_cast<size_t>(oy) * out_side + ox) * 3 + c] =
                    static_cast<std::uint8_t>(
                        std::clamp(std::lround(val), 0L, 255L));
            }
        }
    }
    return out;
}

} // namespace lamp

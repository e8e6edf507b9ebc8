#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace lamp {

// Axis-aligned pixel rectangle, top-left anchored, w/h in pixels.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    std::array<double, 2> center() const {
        return {x + w / 2.0, y + h / 2.0};
    }
    bool operator==(const Rect&) const = default;
};

// Intersection area of two rects, 0 when disjoint.
long long rect_intersection_area(const Rect& a, const Rect& b);

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0) {}

    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::uint8_t* p = &pixels[(static_cast<size_t>(y) * width + x) * 3];
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
    bool contains(const Rect& r) const {
        return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 &&
               r.x + r.w <= width && r.y + r.h <= height;
    }
};

// Real-valued plane with image dimensions.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), v(static_cast<size_t>(w) * h, 0.0) {}

    double at(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return v[static_cast<size_t>(y) * width + x]; }
    bool contains(const Rect& r) const {
        return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 &&
               r.x + r.w <= width && r.y + r.h <= height;
    }
};

// Luma, chroma and luma-gradient planes derived from one image.
struct PlaneSet {
    Plane y;
    Plane cb;
    Plane cr;
    Plane gx;
    Plane gy;
};

// Summed-area table with a zero top row / left column, so a rect sum is four
// lookups. Dimensions refer to the source plane.
struct IntegralPlane {
    int width = 0;
    int height = 0;
    std::vector<double> sums; // (width+1) x (height+1)

    double border_at(int x, int y) const {
        return sums[static_cast<size_t>(y) * (width + 1) + x];
    }
};

// Full-range BT.601 YCbCr planes (values kept as unclamped reals) plus
// central-difference gradients of Y with replicated borders:
//   Y  = 0.299 R + 0.587 G + 0.114 B
//   Cb = 128 - 0.168736 R - 0.331264 G + 0.5 B
//   Cr = 128 + 0.5 R - 0.418688 G - 0.081312 B
// Chroma is evaluated in a difference form that is algebraically identical
// and yields exactly 128 whenever R == G == B.
PlaneSet derive_planes(const Image& img);

IntegralPlane integral(const Plane& plane);

// Sum of plane values inside r. Exact for integer-valued planes; within
// 1e-9 relative of the naive double loop for reals.
double rect_sum(const IntegralPlane& ip, const Rect& r);

// Bilinear resample of the cropped region onto an out_side x out_side image.
// Sampling is center-aligned, so a rect that already has the target size is
// reproduced exactly.
Image crop_resize(const Image& img, const Rect& r, int out_side);

} // namespace lamp

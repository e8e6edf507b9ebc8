#include "lamp/pattern.hpp"

#include <cmath>

#include "lamp/error.hpp"

namespace lamp {

namespace {

void check_psd(const Gaussian2& g, const char* which) {
    // Eigenvalues of [[c00, c01], [c01, c11]] must be positive.
    const double tr = g.c00 + g.c11;
    const double det = g.c00 * g.c11 - g.c01 * g.c01;
    const double disc = std::max(0.0, tr * tr - 4.0 * det);
    const double lmin = 0.5 * (tr - std::sqrt(disc));
    if (!(lmin > 0.0) || !std::isfinite(g.c00) || !std::isfinite(g.c01) ||
        !std::isfinite(g.c11)) {
        raise(ErrorCode::NonPsdInput,
              std::string("gaussian_w2: covariance not positive definite (") +
                  which + ")");
    }
}

} // namespace

Gaussian2 fit_gaussian2(std::span<const std::array<double, 2>> samples) {
    if (samples.empty()) {
        raise(ErrorCode::EmptySamples, "fit_gaussian2: no samples");
    }
    const double n = static_cast<double>(samples.size());
    double m0 = 0.0, m1 = 0.0;
    for (const auto& s : samples) {
        m0 += s[0];
        m1 += s[1];
    }
    m0 /= n;
    m1 /= n;

    double s00 = 0.0, s01 = 0.0, s11 = 0.0;
    for (const auto& s : samples) {
        const double d0 = s[0] - m0;
        const double d1 = s[1] - m1;
        s00 += d0 * d0;
        s01 += d0 * d1;
        s11 += d1 * d1;
    }
    Gaussian2 g;
    g.mean = {m0, m1};
    g.c00 = s00 / n + kCovFloor;
    g.c01 = s01 / n;
    g.c11 = s11 / n + kCovFloor;
    return g;
}

double gaussian_w2(const Gaussian2& a, const Gaussian2& b) {
    check_psd(a, "lhs");
    check_psd(b, "rhs");
    if (a == b) return 0.0;

    const double d0 = a.mean[0] - b.mean[0];
    const double d1 = a.mean[1] - b.mean[1];
    const double dmu2 = d0 * d0 + d1 * d1;

    // tr(Sa*Sb) and det(Sa*Sb); both expressions commute in (a, b) term by
    // term, so the result is bitwise symmetric.
    const double t = a.c00 * b.c00 + 2.0 * (a.c01 * b.c01) + a.c11 * b.c11;
    const double det_a = a.c00 * a.c11 - a.c01 * a.c01;
    const double det_b = b.c00 * b.c11 - b.c01 * b.c01;
    const double d = det_a * det_b;

    const double disc = std::max(0.0, t * t - 4.0 * d);
    const double root = std::sqrt(disc);
    const double lp = 0.5 * (t + root);
    const double lm = std::max(0.0, 0.5 * (t - root));
    const double cross = std::sqrt(lp) + std::sqrt(lm);

    const double resid =
        std::max(0.0, (a.c00 + a.c11) + (b.c00 + b.c11) - 2.0 * cross);
    return std::sqrt(dmu2 + resid);
}

PatternModel patch_pattern(const PlaneSet& planes, const Rect& r) {
    if (!planes.y.contains(r)) {
        raise(ErrorCode::OutOfBounds, "patch_pattern: rect outside planes");
    }
    std::vector<std::array<double, 2>> edge;
    std::vector<std::array<double, 2>> chroma;
    edge.reserve(static_cast<size_t>(r.area()));
    chroma.reserve(static_cast<size_t>(r.area()));
    for (int y = r.y; y < r.y + r.h; ++y) {
        for (int x = r.x; x < r.x + r.w; ++x) {
            edge.push_back({planes.gx.at(x, y), planes.gy.at(x, y)});
            chroma.push_back({planes.cb.at(x, y), planes.cr.at(x, y)});
        }
    }
    PatternModel m;
    m.edge = fit_gaussian2(edge);
    m.chroma = fit_gaussian2(chroma);
    return m;
}

double pattern_distance(const PatternModel& m1, const PatternModel& m2) {
    return gaussian_w2(m1.edge, m2.edge) + gaussian_w2(m1.chroma, m2.chroma);
}

} // namespace lamp

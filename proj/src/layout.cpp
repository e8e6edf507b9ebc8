#include "lamp/layout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "lamp/error.hpp"

namespace lamp {

double rect_overlap_ratio(const Rect& a, const Rect& b) {
    const long long inter = rect_intersection_area(a, b);
    if (inter == 0) return 0.0;
    const long long smaller = std::min(a.area(), b.area());
    return static_cast<double>(inter) / static_cast<double>(smaller);
}

double line_angle(double dx, double dy) {
    if (dx == 0.0 && dy == 0.0) return 0.0;
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += std::numbers::pi;
    if (theta >= std::numbers::pi) theta -= std::numbers::pi;
    return theta;
}

double ray_angle(double dx, double dy) {
    if (dx == 0.0 && dy == 0.0) return 0.0;
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    if (theta >= 2.0 * std::numbers::pi) theta -= 2.0 * std::numbers::pi;
    return theta;
}

std::array<double, 2> edge_attrs(const std::array<double, 2>& c1,
                                 const std::array<double, 2>& c2,
                                 EdgeKind kind, int img_w, int img_h) {
    const double dx = c2[0] - c1[0];
    const double dy_img = c2[1] - c1[1];
    const double diag = std::hypot(static_cast<double>(img_w),
                                   static_cast<double>(img_h));
    const double dist = std::hypot(dx, dy_img) / diag;
    // Image y grows downward; negate for the anti-clockwise convention.
    const double theta = kind == EdgeKind::local ? line_angle(dx, -dy_img)
                                                 : ray_angle(dx, -dy_img);
    return {dist, theta};
}

AttributeGraph build_attribute_graph(const std::vector<Detection>& dets,
                                     int img_w, int img_h) {
    std::vector<Detection> sorted = dets;
    std::sort(sorted.begin(), sorted.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.box.x != b.box.x) return a.box.x < b.box.x;
        if (a.box.y != b.box.y) return a.box.y < b.box.y;
        if (a.box.w != b.box.w) return a.box.w < b.box.w;
        return a.box.h < b.box.h;
    });
    if (static_cast<int>(sorted.size()) > kMaxObjects) {
        sorted.resize(kMaxObjects);
    }

    AttributeGraph g;
    g.width = img_w;
    g.height = img_h;
    const double img_area = static_cast<double>(img_w) * img_h;
    for (const Detection& d : sorted) {
        GraphNode node;
        node.box = d.box;
        node.score = d.score;
        node.centroid = d.box.center();
        node.area_frac = static_cast<double>(d.box.area()) / img_area;
        g.nodes.push_back(node);
    }

    const int n = static_cast<int>(g.nodes.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto [dist, theta] =
                edge_attrs(g.nodes[i].centroid, g.nodes[j].centroid,
                           EdgeKind::local, img_w, img_h);
            g.local_edges.push_back(
                {i, j, dist, theta,
                 rect_overlap_ratio(g.nodes[i].box, g.nodes[j].box)});
        }
    }

    const std::array<double, 2> center{img_w / 2.0, img_h / 2.0};
    for (int i = 0; i < n; ++i) {
        const auto [dist, theta] = edge_attrs(g.nodes[i].centroid, center,
                                              EdgeKind::global, img_w, img_h);
        g.global_edges.push_back({i, dist, theta, g.nodes[i].area_frac});
    }
    return g;
}

LayoutVector vectorize_graph(const AttributeGraph& g) {
    LayoutVector out;
    // Pair slots (0,1),(0,2),(0,3),(1,2),(1,3),(2,3) over node indices.
    static constexpr std::array<std::array<int, 2>, 6> kPairs = {
        {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
    for (const LocalEdge& e : g.local_edges) {
        for (size_t slot = 0; slot < kPairs.size(); ++slot) {
            if (kPairs[slot][0] == e.i && kPairs[slot][1] == e.j) {
                out.v[slot * 3 + 0] = e.dist;
                out.v[slot * 3 + 1] = e.theta;
                out.v[slot * 3 + 2] = e.overlap;
            }
        }
    }
    for (const GlobalEdge& e : g.global_edges) {
        const size_t base = 18 + static_cast<size_t>(e.i) * 3;
        out.v[base + 0] = e.dist;
        out.v[base + 1] = e.theta;
        out.v[base + 2] = e.area;
    }
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        out.v[30 + i] = 1.0;
    }
    return out;
}

std::vector<Detection> load_detections(const std::string& path, int img_w,
                                       int img_h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::NotFound, "no such file: " + path);

    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ParseError, "bad detections JSON in " + path + ": " + e.what());
    }
    if (!doc.is_array()) {
        raise(ErrorCode::ParseError, "detections file must be a JSON array: " + path);
    }

    std::vector<Detection> dets;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("x") || !item.contains("y") ||
            !item.contains("w") || !item.contains("h") || !item.contains("score")) {
            raise(ErrorCode::ParseError,
                  "detection entries need x, y, w, h, score: " + path);
        }
        Detection d;
        d.box = {item["x"].get<int>(), item["y"].get<int>(),
                 item["w"].get<int>(), item["h"].get<int>()};
        d.score = item["score"].get<double>();
        if (d.box.w < 1 || d.box.h < 1 || d.box.x < 0 || d.box.y < 0 ||
            d.box.x + d.box.w > img_w || d.box.y + d.box.h > img_h) {
            raise(ErrorCode::ParseError, "detection box outside image: " + path);
        }
        if (!(d.score >= 0.0 && d.score <= 1.0)) {
            raise(ErrorCode::ParseError, "detection score outside [0, 1]: " + path);
        }
        dets.push_back(d);
    }
    return dets;
}

} // namespace lamp

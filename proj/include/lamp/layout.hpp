#pragma once

#include <array>
#include <string>
#include <vector>

#include "lamp/image.hpp"

namespace lamp {

// Object detection ingested from a sidecar file. The detector itself is
// external to this project.
struct Detection {
    Rect box;
    double score = 0.0; // confidence in [0, 1]
};

// Up to four local nodes (objects) plus one implicit global node (the image
// frame). Edge attributes follow the local/global attribute definitions.
inline constexpr int kMaxObjects = 4;

struct GraphNode {
    Rect box;
    double score = 0.0;
    std::array<double, 2> centroid{0.0, 0.0};
    double area_frac = 0.0; // box area / image area, in (0, 1]
};

struct LocalEdge {
    int i = 0;
    int j = 0;
    double dist = 0.0;    // centroid distance / image diagonal, in [0, 1]
    double theta = 0.0;   // undirected angle, in [0, pi)
    double overlap = 0.0; // intersection / min box area, in [0, 1]
};

struct GlobalEdge {
    int i = 0;
    double dist = 0.0;  // centroid-to-image-center distance / diagonal
    double theta = 0.0; // directed angle object -> center, in [0, 2*pi)
    double area = 0.0;  // node area fraction
};

struct AttributeGraph {
    int width = 0;
    int height = 0;
    std::vector<GraphNode> nodes;       // canonical order, at most kMaxObjects
    std::vector<LocalEdge> local_edges; // C(n, 2), pair-index order
    std::vector<GlobalEdge> global_edges; // n, node order
};

// Fixed-order flattening: 6 local-edge triples (dist, theta, overlap) for
// pairs (1,2),(1,3),(1,4),(2,3),(2,4),(3,4), then 4 global-edge triples
// (dist, theta, area), then 4 presence flags. Absent entries are zero.
struct LayoutVector {
    static constexpr int kDim = 34;
    std::array<double, kDim> v{};

    bool operator==(const LayoutVector&) const = default;
};

// Intersection area over the smaller box's area; 1 under containment,
// 0 when disjoint. Symmetric.
double rect_overlap_ratio(const Rect& a, const Rect& b);

// Angle of the undirected line through the origin with direction (dx, dy),
// y-up convention, folded to [0, pi). The zero vector maps to 0.
double line_angle(double dx, double dy);

// Angle of the ray (dx, dy), y-up convention, in [0, 2*pi). Zero vector
// maps to 0.
double ray_angle(double dx, double dy);

enum class EdgeKind { local, global };

// Normalized distance and angle between two centroids given in image
// coordinates (y down). For local edges the angle is undirected in [0, pi);
// for global edges it is the direction c1 -> c2 in [0, 2*pi).
std::array<double, 2> edge_attrs(const std::array<double, 2>& c1,
                                 const std::array<double, 2>& c2,
                                 EdgeKind kind, int img_w, int img_h);

// Keeps the top-kMaxObjects detections by score (ties broken by smaller x,
// then y) and builds the complete local graph plus global edges to the image
// center. Zero detections produce an empty local set.
AttributeGraph build_attribute_graph(const std::vector<Detection>& dets,
                                     int img_w, int img_h);

LayoutVector vectorize_graph(const AttributeGraph& g);

// Reads a JSON array [{x, y, w, h, score}, ...] and validates every box
// against the image bounds and every score against [0, 1].
std::vector<Detection> load_detections(const std::string& path, int img_w,
                                       int img_h);

} // namespace lamp

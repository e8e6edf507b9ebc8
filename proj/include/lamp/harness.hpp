#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lamp/config.hpp"
#include "lamp/net.hpp"

namespace lamp {

enum class QualityLabel { low, high };

struct ManifestEntry {
    std::string path;
    std::optional<double> mean_rating;
    QualityLabel label = QualityLabel::low;
};

// Mean ratings of at most 5 are low quality, anything above is high.
QualityLabel label_from_rating(double mean_rating);

// CSV manifest with header `path,mean_rating` or `path,mean_rating,label`.
// An explicit label wins over the rating rule; a row with neither is an
// error. Paths containing commas are rejected (the format has no quoting).
std::vector<ManifestEntry> load_manifest(const std::string& path);

struct Metrics {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;
    int skipped = 0;

    long long total() const { return tp + fp + tn + fn; }
    double accuracy() const;
    double precision() const;
    double recall() const;
    double f_measure() const; // 0 when precision + recall is 0
};

// Sidecar detections path convention: "<image path>.dets.json".
std::string default_dets_path(const std::string& image_path);

// Full single-image pipeline: decode, saliency, candidate generation,
// greedy + local-search selection, patch crops, attribute graph, forward.
// The optional out-parameter receives the saliency map for debug dumps.
double score_image(const ModelParams& params, const PipelineConfig& cfg,
                   const std::string& image_path, const std::string& dets_path,
                   Plane* saliency_out = nullptr);

// Builds the training example (selected patches + layout vector) for one
// image. The same construction backs score_image, train and evaluate.
Example make_example(const PipelineConfig& cfg, const std::string& image_path,
                     const std::string& dets_path, int label);

// Parallel over images; results keep manifest order, so output is
// independent of the worker count.
std::vector<Example> build_examples(std::span<const ManifestEntry> entries,
                                    const PipelineConfig& cfg);

// Scores every manifest image (threshold 0.5, ties classified high) and
// accumulates integer confusion counts, so the result is invariant to row
// order and parallel scheduling. With skip_errors, per-image failures are
// counted instead of propagated.
Metrics evaluate(const ModelParams& params, std::span<const ManifestEntry> entries,
                 const PipelineConfig& cfg, bool skip_errors = false);

} // namespace lamp

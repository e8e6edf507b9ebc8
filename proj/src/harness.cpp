#include "lamp/harness.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <sstream>

#include "lamp/error.hpp"
#include "lamp/image_io.hpp"
#include "lamp/layout.hpp"
#include "lamp/parallel.hpp"
#include "lamp/saliency.hpp"
#include "lamp/selector.hpp"

namespace lamp {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

QualityLabel label_from_name(const std::string& name, const std::string& path) {
    if (name == "low") return QualityLabel::low;
    if (name == "high") return QualityLabel::high;
    raise(ErrorCode::ParseError, "label must be low or high in " + path);
}

} // namespace

QualityLabel label_from_rating(double mean_rating) {
    return mean_rating <= 5.0 ? QualityLabel::low : QualityLabel::high;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::NotFound, "no such file: " + path);

    std::string line;
    if (!std::getline(in, line)) {
        raise(ErrorCode::ParseError, "empty manifest: " + path);
    }
    line = strip_cr(line);
    const bool has_label_col = line == "path,mean_rating,label";
    if (!has_label_col && line != "path,mean_rating") {
        raise(ErrorCode::ParseError,
              "manifest header must be path,mean_rating[,label]: " + path);
    }
    const size_t ncols = has_label_col ? 3 : 2;

    std::vector<ManifestEntry> entries;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != ncols) {
            raise(ErrorCode::ParseError, "manifest line " + std::to_string(lineno) +
                                             " has " + std::to_string(fields.size()) +
                                             " fields, expected " +
                                             std::to_string(ncols) + ": " + path);
        }
        ManifestEntry entry;
        entry.path = fields[0];
        if (entry.path.empty()) {
            raise(ErrorCode::ParseError,
                  "empty path on manifest line " + std::to_string(lineno));
        }
        if (!fields[1].empty()) {
            try {
                entry.mean_rating = std::stod(fields[1]);
            } catch (const std::exception&) {
                raise(ErrorCode::ParseError,
                      "bad mean_rating on line " + std::to_string(lineno));
            }
            if (*entry.mean_rating < 1.0 || *entry.mean_rating > 10.0) {
                raise(ErrorCode::ParseError,
                      "mean_rating outside [1, 10] on line " + std::to_string(lineno));
            }
        }
        const bool has_explicit = has_label_col && !fields[2].empty();
        if (has_explicit) {
            entry.label = label_from_name(fields[2], path);
        } else if (entry.mean_rating) {
            entry.label = label_from_rating(*entry.mean_rating);
        } else {
            raise(ErrorCode::MissingLabelInfo,
                  "line " + std::to_string(lineno) + " has neither rating nor label");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

double Metrics::accuracy() const {
    const long long n = total();
    return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

double Metrics::precision() const {
    return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Metrics::recall() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Metrics::f_measure() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::string default_dets_path(const std::string& image_path) {
    return image_path + ".dets.json";
}

Example make_example(const PipelineConfig& cfg, const std::string& image_path,
                     const std::string& dets_path, int label) {
    const Image img = load_image(image_path);
    const SaliencyMap sal = compute_saliency(img);
    const PlaneSet planes = derive_planes(img);

    std::vector<Candidate> cands =
        generate_candidates(img.width, img.height, cfg.selector, sal, planes);
    const SelectionContext ctx =
        make_selection_context(std::move(cands), img.width, img.height);
    const PatchSet seed = select_greedy(ctx, cfg.selector);
    const PatchSet picked = select_local_search(ctx, cfg.selector, seed);

    Example ex;
    ex.label = label;
    for (const Candidate& c : picked.members) {
        ex.patches.push_back(crop_resize(img, c.rect, cfg.net.extractor.input_side));
    }
    const std::vector<Detection> dets =
        load_detections(dets_path, img.width, img.height);
    ex.layout = vectorize_graph(build_attribute_graph(dets, img.width, img.height));
    return ex;
}

double score_image(const ModelParams& params, const PipelineConfig& cfg,
                   const std::string& image_path, const std::string& dets_path,
                   Plane* saliency_out) {
    if (saliency_out) {
        const Image img = load_image(image_path);
        *saliency_out = compute_saliency(img).map;
    }
    const Example ex = make_example(cfg, image_path, dets_path, 0);
    return forward(ex.patches, ex.layout, params, cfg.net);
}

std::vector<Example> build_examples(std::span<const ManifestEntry> entries,
                                    const PipelineConfig& cfg) {
    const int n = static_cast<int>(entries.size());
    std::vector<Example> out(n);
    std::vector<std::exception_ptr> errors(n);
    parallel_for(n, true, [&](int i) {
        try {
            out[i] = make_example(cfg, entries[i].path,
                                  default_dets_path(entries[i].path),
                                  entries[i].label == QualityLabel::high ? 1 : 0);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (int i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
    }
    return out;
}

Metrics evaluate(const ModelParams& params, std::span<const ManifestEntry> entries,
                 const PipelineConfig& cfg, bool skip_errors) {
    const int n = static_cast<int>(entries.size());
    std::vector<int> status(n, 0); // 0 = failed, 1 = ok
    std::vector<int> predicted(n, 0);
    std::vector<std::exception_ptr> errors(n);
    parallel_for(n, true, [&](int i) {
        try {
            const double score =
                score_image(params, cfg, entries[i].path,
                            default_dets_path(entries[i].path));
            predicted[i] = score >= 0.5 ? 1 : 0; // ties classify high
            status[i] = 1;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });

    Metrics m;
    for (int i = 0; i < n; ++i) {
        if (!status[i]) {
            if (!skip_errors) std::rethrow_exception(errors[i]);
            ++m.skipped;
            continue;
        }
        const bool actual_high = entries[i].label == QualityLabel::high;
        if (predicted[i] == 1) {
            actual_high ? ++m.tp : ++m.fp;
        } else {
            actual_high ? ++m.fn : ++m.tn;
        }
    }
    return m;
}

} // namespace lamp

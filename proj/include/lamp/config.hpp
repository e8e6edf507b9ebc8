#pragma once

#include <cstdint>
#include <string>

#include "lamp/net.hpp"
#include "lamp/selector.hpp"

namespace lamp {

// Everything needed to run the pipeline. The bag size always mirrors
// selector.m; normalize() enforces that along with the canonical statistics
// order.
struct PipelineConfig {
    SelectorConfig selector;
    NetConfig net;
    TrainConfig train;

    void normalize();
};

// Desk-scale configuration used throughout the test suites: 3 patches from a
// 32-pixel window with stride 16, 64-dim features over 32-pixel inputs.
PipelineConfig desk_config(ExtractorKind kind = ExtractorKind::tiny_conv);

// Parses a config JSON document; absent fields keep their defaults.
PipelineConfig parse_config_json(const std::string& text);
PipelineConfig load_config(const std::string& path);

// Canonical one-line JSON of the model-defining parts (selector + extractor
// + aggregation); training hyperparameters are deliberately excluded so a
// checkpoint stays loadable regardless of how it was trained.
std::string canonical_model_config(const PipelineConfig& cfg);

// FNV-1a 64-bit digest of the canonical model config, as 16 hex digits.
std::string config_digest(const PipelineConfig& cfg);

} // namespace lamp

#pragma once

#include <string>

#include "lamp/config.hpp"
#include "lamp/net.hpp"

namespace lamp {

// Versioned checkpoint container: an ASCII header (magic + version, the
// canonical model config, its digest, the tensor count) followed by named
// tensors stored as little-endian 32-bit floats with explicit shapes.
// Parameters are float-representable by construction, so save -> load ->
// save reproduces the file byte for byte.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const PipelineConfig& cfg);

struct Checkpoint {
    ModelParams params;
    PipelineConfig config;
};

// Loads a checkpoint, verifying magic/version, the stored digest and, when
// given, that the embedded model config matches `expected`.
Checkpoint load_checkpoint(const std::string& path,
                           const PipelineConfig* expected = nullptr);

} // namespace lamp

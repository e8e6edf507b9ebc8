#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lamp/image.hpp"
#include "lamp/layout.hpp"

namespace lamp {

enum class ExtractorKind { handcrafted, tiny_conv };

// Statistics applied per feature dimension across the bag. Aggregation always
// evaluates enabled statistics in this order.
enum class Stat : int { max = 0, mean = 1, min = 2, median = 3 };

const char* stat_name(Stat s);
const char* extractor_name(ExtractorKind k);

// Sorted, deduplicated statistics set; raises on an empty set.
std::vector<Stat> canonical_stats(std::vector<Stat> stats);

struct ExtractorSpec {
    ExtractorKind kind = ExtractorKind::tiny_conv;
    int feature_dim = 64; // K
    int input_side = 32;  // square patch side fed to the extractor
};

struct NetConfig {
    ExtractorSpec extractor;
    std::vector<Stat> stats = {Stat::max, Stat::mean};
    int stat_dim = 32; // K_stat, width of the aggregation FC layers
    int bag_size = 5;  // m, patches per bag
};

struct TrainConfig {
    double lr = 0.01;
    double weight_decay = 1e-5;
    double momentum = 0.9;
    int epochs = 20;
    int batch_size = 16;
    std::uint64_t seed = 1;
};

struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::vector<int> s) : shape(std::move(s)) {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        v.assign(n, 0.0);
    }
    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
};

// One set of tensors: used for weights, velocity buffers and gradients.
// Convolution tensors stay empty for the handcrafted extractor. visit()
// enumerates all slots in a fixed canonical order.
struct ParamSet {
    Tensor conv1_w, conv1_b; // [8,3,3,3], [8]
    Tensor conv2_w, conv2_b; // [16,8,3,3], [16]
    Tensor fc0_w, fc0_b;     // [K, 16*(S/4)^2], [K]
    Tensor agg1_w, agg1_b;   // [K_stat, U*K], [K_stat]
    Tensor agg2_w, agg2_b;   // [K_stat, K_stat], [K_stat]
    Tensor head_w, head_b;   // [1, K_stat+34], [1]

    template <class F>
    void visit(F&& f) {
        f("conv1_w", conv1_w);
        f("conv1_b", conv1_b);
        f("conv2_w", conv2_w);
        f("conv2_b", conv2_b);
        f("fc0_w", fc0_w);
        f("fc0_b", fc0_b);
        f("agg1_w", agg1_w);
        f("agg1_b", agg1_b);
        f("agg2_w", agg2_w);
        f("agg2_b", agg2_b);
        f("head_w", head_w);
        f("head_b", head_b);
    }
    template <class F>
    void visit(F&& f) const {
        const_cast<ParamSet*>(this)->visit(
            [&](const char* name, Tensor& t) { f(name, const_cast<const Tensor&>(t)); });
    }
};

// Trainable state. Every stored value is exactly representable as a 32-bit
// float: initialization and every update round through float, so float
// checkpoints restore the exact state while all arithmetic runs in double.
struct ModelParams {
    ParamSet w;
    ParamSet vel; // momentum buffers, shapes mirror w
};

// Deterministic initialization: uniform(-a, a) per tensor with
// a = sqrt(6 / (fan_in + fan_out)), biases zero, draw order fixed.
ModelParams init_params(const NetConfig& cfg, std::uint64_t seed);

struct FeatureBlob {
    int rows = 0; // M patches
    int cols = 0; // K dims
    std::vector<double> v;

    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
};

// Per-patch feature vector of length spec.feature_dim. The handcrafted
// extractor is parameter-free (luma histogram, gradient-magnitude histogram,
// channel moments); tiny_conv is conv3x3(8)-relu-pool2-conv3x3(16)-relu-
// pool2-fc with weights from params.
std::vector<double> extract_features(const Image& patch, const ExtractorSpec& spec,
                                     const ModelParams& params);

// Orderless aggregation: for each enabled statistic (canonical order) and
// each feature dimension, the statistic of the M values in that column.
// Median of an even count is the mean of the two middle values.
std::vector<double> stats_aggregate(const FeatureBlob& blob,
                                    std::span<const Stat> stats);

// Full model: extract -> aggregate -> FC+ReLU -> FC -> concat layout ->
// FC -> sigmoid. Returns the probability of the high-quality class.
double forward(std::span<const Image> patches, const LayoutVector& layout,
               const ModelParams& params, const NetConfig& cfg);

struct Example {
    std::vector<Image> patches;
    LayoutVector layout;
    int label = 0; // 1 = high quality
};

struct LossGrads {
    double loss = 0.0;
    ParamSet grads;
};

// Mean binary cross-entropy over the batch plus reverse-mode gradients for
// every parameter. Examples evaluate in parallel; the gradient reduction
// runs in example-index order, so results are bit-identical to the serial
// variant.
LossGrads loss_and_grads(std::span<const Example> batch, const ModelParams& params,
                         const NetConfig& cfg);
LossGrads loss_and_grads_serial(std::span<const Example> batch,
                                const ModelParams& params, const NetConfig& cfg);

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped = 0;
};

// Central-difference check of loss_and_grads on randomly sampled parameter
// coordinates. A coordinate is skipped when its
// perturbation flips any discrete decision (ReLU sign, pool or statistic
// argmax, median pair) or drives an influenced ReLU pre-activation within
// 10*h of the kink. Relative error is |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(const ModelParams& params, std::span<const Example> batch,
                           const NetConfig& cfg, double h = 1e-4,
                           int min_coords = 200, std::uint64_t seed = 0);

// Classical momentum with L2 folded into the gradient:
//   g' = g + wd * p;  v' = momentum * v + g';  p' = p - lr * v'
void sgd_step(ModelParams& params, const ParamSet& grads, const TrainConfig& cfg);

enum class TrainStage { mp_only, fused };

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_losses;
};

// Minibatch SGD over shuffled epochs. Stage mp_only zeroes the layout input
// (attributes and presence flags) and initializes fresh from the seed; stage
// fused starts from the supplied stage-1 params and trains all weights.
TrainResult train(std::span<const Example> dataset, const NetConfig& cfg,
                  const TrainConfig& tcfg, TrainStage stage,
                  const ModelParams* stage1 = nullptr);

} // namespace lamp

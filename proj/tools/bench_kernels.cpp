// Compares the OpenMP kernels against their serial references: wall time,
// speedup, and a bitwise-equality check of the outputs.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include <CLI11.hpp>

#include "lamp/net.hpp"
#include "lamp/parallel.hpp"
#include "lamp/saliency.hpp"
#include "lamp/selector.hpp"

using namespace lamp;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Image make_scene(std::mt19937_64& rng, int side) {
    Image img(side, side);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);
    return img;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-22s serial %9.2f ms   omp %9.2f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    int side = 384;
    int batch = 24;
    app.add_option("--size", side, "benchmark image side");
    app.add_option("--batch", batch, "gradient batch size");
    CLI11_PARSE(app, argc, argv);

    std::printf("threads: %d\n", worker_count());
    std::mt19937_64 rng(1);
    const Image img = make_scene(rng, side);

    // Saliency map.
    auto t0 = Clock::now();
    const SaliencyMap ss = compute_saliency_serial(img);
    const double sal_serial = ms_since(t0);
    t0 = Clock::now();
    const SaliencyMap sp = compute_saliency(img);
    const double sal_parallel = ms_since(t0);
    report("saliency", sal_serial, sal_parallel, ss.map.v == sp.map.v);

    // Candidate generation (per-candidate saliency + pattern fits).
    SelectorConfig cfg;
    cfg.m = 3;
    cfg.window = side / 8;
    cfg.stride = side / 16;
    const PlaneSet planes = derive_planes(img);
    t0 = Clock::now();
    const auto cs = generate_candidates_serial(side, side, cfg, sp, planes);
    const double gen_serial = ms_since(t0);
    t0 = Clock::now();
    const auto cp = generate_candidates(side, side, cfg, sp, planes);
    const double gen_parallel = ms_since(t0);
    bool gen_same = cs.size() == cp.size();
    for (size_t i = 0; gen_same && i < cs.size(); ++i) {
        gen_same = cs[i].rect == cp[i].rect && cs[i].saliency == cp[i].saliency &&
                   cs[i].pattern == cp[i].pattern;
    }
    report("candidate scoring", gen_serial, gen_parallel, gen_same);

    // Pairwise pattern-distance matrix.
    t0 = Clock::now();
    const SelectionContext xs = make_selection_context_serial(cs, side, side);
    const double ctx_serial = ms_since(t0);
    t0 = Clock::now();
    const SelectionContext xp = make_selection_context(cp, side, side);
    const double ctx_parallel = ms_since(t0);
    report("pairwise distances", ctx_serial, ctx_parallel, xs.pair_dp == xp.pair_dp);

    // Batch gradients.
    NetConfig net;
    net.extractor.kind = ExtractorKind::tiny_conv;
    net.extractor.feature_dim = 64;
    net.extractor.input_side = 32;
    net.stat_dim = 32;
    net.bag_size = 3;
    const ModelParams params = init_params(net, 7);
    std::vector<Example> examples;
    for (int i = 0; i < batch; ++i) {
        Example ex;
        for (int p = 0; p < net.bag_size; ++p) {
            ex.patches.push_back(make_scene(rng, net.extractor.input_side));
        }
        for (double& v : ex.layout.v) v = static_cast<double>(rng() % 100) / 99.0;
        ex.label = static_cast<int>(rng() % 2);
        examples.push_back(ex);
    }
    t0 = Clock::now();
    const LossGrads gs = loss_and_grads_serial(examples, params, net);
    const double grad_serial = ms_since(t0);
    t0 = Clock::now();
    const LossGrads gp = loss_and_grads(examples, params, net);
    const double grad_parallel = ms_since(t0);
    bool grad_same = gs.loss == gp.loss;
    std::vector<const Tensor*> ta, tb;
    gs.grads.visit([&](const char*, const Tensor& t) { ta.push_back(&t); });
    gp.grads.visit([&](const char*, const Tensor& t) { tb.push_back(&t); });
    for (size_t i = 0; grad_same && i < ta.size(); ++i) {
        grad_same = ta[i]->v == tb[i]->v;
    }
    report("batch gradients", grad_serial, grad_parallel, grad_same);
    return 0;
}

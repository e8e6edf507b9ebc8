// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "lamp/checkpoint.hpp"
#include "lamp/harness.hpp"
#include "lamp/layout.hpp"
#include "lamp/net.hpp"
#include "lamp/pattern.hpp"
#include "lamp/selector.hpp"
#include "support/imagegen.hpp"
#include "support/oracles.hpp"
#include "support/toygen.hpp"

using namespace lamp;
namespace ts = lamp::testsupport;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool report(int num, const char* name, bool pass, double secs,
            const std::string& detail) {
    std::printf("[%s] criterion %d: %-28s (%6.2f s) %s\n", pass ? "PASS" : "FAIL",
                num, name, secs, detail.c_str());
    std::fflush(stdout);
    return pass;
}

Gaussian2 random_spd(std::mt19937_64& rng, double scale) {
    auto u = [&rng]() { return static_cast<double>(rng() % 1000000) / 999999.0; };
    Gaussian2 g;
    g.mean = {scale * (2.0 * u() - 1.0), scale * (2.0 * u() - 1.0)};
    const double a = 2.0 * u() - 1.0, b = 2.0 * u() - 1.0;
    const double c = 2.0 * u() - 1.0, d = 2.0 * u() - 1.0;
    g.c00 = scale * (a * a + c * c) + 0.01;
    g.c01 = scale * (a * b + c * d);
    g.c11 = scale * (b * b + d * d) + 0.01;
    return g;
}

// --- criterion 1: Wasserstein analytic suite --------------------------------

bool criterion_wasserstein() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail = "all checks held";

    const Gaussian2 unit{};
    if (!(gaussian_w2(unit, unit) < 1e-9)) {
        ok = false;
        detail = "identical-Gaussian distance";
    }

    Gaussian2 shifted;
    shifted.mean = {3.0, 4.0};
    if (std::abs(gaussian_w2(unit, shifted) - 5.0) > 1e-9) {
        ok = false;
        detail = "mean-shift case";
    }

    Gaussian2 wide;
    wide.c00 = wide.c11 = 9.0;
    if (std::abs(gaussian_w2(unit, wide) - 2.0 * std::sqrt(2.0)) > 1e-9) {
        ok = false;
        detail = "isotropic case";
    }

    std::mt19937_64 rng(101);
    double worst_oracle = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Gaussian2 a = random_spd(rng, 4.0);
        const Gaussian2 b = random_spd(rng, 4.0);
        const double got = gaussian_w2(a, b);
        worst_oracle = std::max(worst_oracle, std::abs(got - oracle::w2_reference(a, b)));
        if (got != gaussian_w2(b, a)) {
            ok = false;
            detail = "symmetry not exact";
        }
        if (gaussian_w2(a, a) >= 1e-9) {
            ok = false;
            detail = "identical random pair";
        }
    }
    if (worst_oracle >= 1e-8) {
        ok = false;
        detail = "oracle deviation too large";
    }

    for (int i = 0; i < 100; ++i) {
        const Gaussian2 a = random_spd(rng, 4.0);
        const Gaussian2 b = random_spd(rng, 4.0);
        const Gaussian2 c = random_spd(rng, 4.0);
        if (gaussian_w2(a, c) > gaussian_w2(a, b) + gaussian_w2(b, c) + 1e-8) {
            ok = false;
            detail = "triangle inequality";
        }
    }

    const double secs = seconds_since(t0);
    if (secs >= 5.0) {
        ok = false;
        detail = "runtime budget exceeded";
    }
    return report(1, "Wasserstein analytic suite", ok, secs, detail);
}

// --- criterion 2: selection oracle suite -------------------------------------

bool criterion_selection() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    int oracle_matches = 0;
    const int instances = 200;

    std::mt19937_64 rng(202);
    SelectorConfig cfg;
    cfg.m = 3;
    cfg.window = 32;
    cfg.stride = 16;

    for (int t = 0; t < instances && ok; ++t) {
        const Image img = ts::random_scene(rng, 128, 128);
        const SaliencyMap sal = compute_saliency(img);
        const PlaneSet planes = derive_planes(img);
        std::vector<Candidate> cands =
            generate_candidates(128, 128, cfg, sal, planes);
        if (cands.size() != 49) {
            ok = false;
            detail = "unexpected candidate count";
            break;
        }
        const SelectionContext ctx =
            make_selection_context(std::move(cands), 128, 128);

        const PatchSet ex = select_exhaustive(ctx, cfg);
        const PatchSet gr = select_greedy(ctx, cfg);
        const PatchSet ls = select_local_search(ctx, cfg, gr);

        const auto ref = oracle::brute_force_select(ctx.candidates, cfg, 128, 128);
        if (!ref.found || ref.indices != ex.indices) {
            ok = false;
            detail = "exhaustive disagrees with the brute-force oracle";
            break;
        }
        ++oracle_matches;

        if (!(ex.objective >= ls.objective && ls.objective >= gr.objective)) {
            ok = false;
            detail = "solver objective ordering violated";
            break;
        }
        if (!subset_feasible(ctx, ex.indices, cfg) ||
            !subset_feasible(ctx, gr.indices, cfg) ||
            !subset_feasible(ctx, ls.indices, cfg)) {
            ok = false;
            detail = "overlap constraint violated";
            break;
        }
    }

    const double secs = seconds_since(t0);
    if (secs >= 120.0) {
        ok = false;
        detail = "runtime budget exceeded";
    }
    if (ok) {
        detail = std::to_string(oracle_matches) + "/200 oracle matches";
    }
    return report(2, "selection oracle suite", ok, secs, detail);
}

// --- criterion 3: permutation invariance -------------------------------------

bool criterion_permutation() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail = "forward and vectorize invariant";

    NetConfig cfg;
    cfg.extractor.kind = ExtractorKind::tiny_conv;
    cfg.extractor.feature_dim = 64;
    cfg.extractor.input_side = 32;
    cfg.stat_dim = 32;
    cfg.bag_size = 3;

    std::mt19937_64 rng(303);
    double worst = 0.0;
    for (int t = 0; t < 100 && ok; ++t) {
        const ModelParams params = init_params(cfg, rng());
        std::vector<Image> patches;
        for (int i = 0; i < 3; ++i) patches.push_back(ts::random_image(rng, 32, 32));
        LayoutVector layout;
        for (double& v : layout.v) v = static_cast<double>(rng() % 1000) / 999.0;

        const double base = forward(patches, layout, params, cfg);
        std::vector<int> perm = {0, 1, 2};
        while (std::next_permutation(perm.begin(), perm.end())) {
            std::vector<Image> shuffled;
            for (int i : perm) shuffled.push_back(patches[i]);
            const double p = forward(shuffled, layout, params, cfg);
            const double rel = std::abs(p - base) / std::max(1e-30, std::abs(base));
            worst = std::max(worst, rel);
            if (rel > 1e-9) {
                ok = false;
                detail = "forward changed under patch permutation";
            }
        }
    }

    for (int t = 0; t < 100 && ok; ++t) {
        std::vector<Detection> dets;
        const int n = static_cast<int>(rng() % 7);
        for (int i = 0; i < n; ++i) {
            Detection d;
            d.box.w = 1 + static_cast<int>(rng() % 80);
            d.box.h = 1 + static_cast<int>(rng() % 60);
            d.box.x = static_cast<int>(rng() % static_cast<std::uint64_t>(161 - d.box.w));
            d.box.y = static_cast<int>(rng() % static_cast<std::uint64_t>(121 - d.box.h));
            d.score = static_cast<double>(rng() % 1000) / 999.0;
            dets.push_back(d);
        }
        const LayoutVector base =
            vectorize_graph(build_attribute_graph(dets, 160, 120));
        for (int p = 0; p < 3; ++p) {
            for (size_t i = dets.size(); i > 1; --i) {
                std::swap(dets[i - 1], dets[rng() % i]);
            }
            if (!(vectorize_graph(build_attribute_graph(dets, 160, 120)) == base)) {
                ok = false;
                detail = "vectorize_graph changed under detection permutation";
            }
        }
    }
    if (ok) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "max forward deviation %.2e", worst);
        detail = buf;
    }
    return report(3, "permutation invariance", ok, seconds_since(t0), detail);
}

// --- criterion 4: gradient check ---------------------------------------------

bool criterion_gradients() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;

    NetConfig cfg;
    cfg.extractor.kind = ExtractorKind::tiny_conv;
    cfg.extractor.feature_dim = 64;
    cfg.extractor.input_side = 32;
    cfg.stat_dim = 32;
    cfg.bag_size = 3;

    std::mt19937_64 rng(404);
    double worst = 0.0;
    for (int run = 0; run < 10 && ok; ++run) {
        const ModelParams params = init_params(cfg, rng());
        std::vector<Example> batch;
        for (int i = 0; i < 2; ++i) {
            Example ex;
            for (int p = 0; p < 3; ++p) ex.patches.push_back(ts::random_image(rng, 32, 32));
            for (double& v : ex.layout.v) v = static_cast<double>(rng() % 1000) / 999.0;
            ex.label = static_cast<int>(rng() % 2);
            batch.push_back(ex);
        }
        const GradCheckResult res = grad_check(params, batch, cfg, 1e-4, 200, rng());
        worst = std::max(worst, res.max_rel_err);
        if (res.checked < 200) {
            ok = false;
            detail = "fewer than 200 coordinates checked";
        }
        if (res.max_rel_err >= 1e-4) {
            ok = false;
            detail = "max relative error too large";
        }
    }

    const double secs = seconds_since(t0);
    if (secs >= 60.0) {
        ok = false;
        detail = "runtime budget exceeded";
    }
    if (ok) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "max relative error %.2e", worst);
        detail = buf;
    }
    return report(4, "gradient check", ok, secs, detail);
}

// --- criterion 5: layout attribute bounds ------------------------------------

bool criterion_layout_bounds() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail = "bounds held on 1000 sets";
    const double pi = std::numbers::pi;

    std::mt19937_64 rng(505);
    for (int t = 0; t < 1000 && ok; ++t) {
        const int img_w = 64 + static_cast<int>(rng() % 256);
        const int img_h = 64 + static_cast<int>(rng() % 256);
        std::vector<Detection> dets;
        const int n = static_cast<int>(rng() % 7);
        for (int i = 0; i < n; ++i) {
            Detection d;
            d.box.w = 1 + static_cast<int>(rng() % (img_w / 2));
            d.box.h = 1 + static_cast<int>(rng() % (img_h / 2));
            d.box.x =
                static_cast<int>(rng() % static_cast<std::uint64_t>(img_w - d.box.w + 1));
            d.box.y =
                static_cast<int>(rng() % static_cast<std::uint64_t>(img_h - d.box.h + 1));
            d.score = static_cast<double>(rng() % 1000) / 999.0;
            dets.push_back(d);
        }
        const AttributeGraph g = build_attribute_graph(dets, img_w, img_h);
        for (const LocalEdge& e : g.local_edges) {
            if (!(e.dist >= 0.0 && e.dist <= 1.0 && e.overlap >= 0.0 &&
                  e.overlap <= 1.0 && e.theta >= 0.0 && e.theta < pi)) {
                ok = false;
                detail = "local edge out of bounds";
            }
        }
        for (const GlobalEdge& e : g.global_edges) {
            if (!(e.dist >= 0.0 && e.dist <= 1.0 && e.theta >= 0.0 &&
                  e.theta < 2.0 * pi && e.area > 0.0 && e.area <= 1.0)) {
                ok = false;
                detail = "global edge out of bounds";
            }
        }
        const LayoutVector v = vectorize_graph(g);
        if (v.v.size() != 34) {
            ok = false;
            detail = "vector dimension";
        }
    }

    // Containment returns exactly 1.
    if (rect_overlap_ratio({10, 10, 50, 50}, {20, 20, 5, 8}) != 1.0) {
        ok = false;
        detail = "containment overlap is not exactly 1";
    }
    return report(5, "layout attribute bounds", ok, seconds_since(t0), detail);
}

// --- criterion 6: toy learnability -------------------------------------------

double accuracy_on(const std::vector<Example>& examples, const ModelParams& params,
                   const NetConfig& cfg, bool zero_layout) {
    int correct = 0;
    for (const Example& ex : examples) {
        Example probe = ex;
        if (zero_layout) probe.layout = LayoutVector{};
        const double p = forward(probe.patches, probe.layout, params, cfg);
        const int pred = p >= 0.5 ? 1 : 0;
        if (pred == ex.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

bool criterion_learnability() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;

    ts::ToySpec spec;
    spec.count = 400;
    spec.seed = 606;
    spec.dir = ts::temp_dir("acceptance_toy");
    const ts::ToyDataset ds = ts::generate_toy_dataset(spec);

    PipelineConfig cfg = desk_config(ExtractorKind::handcrafted);
    cfg.train.epochs = 30;
    cfg.train.batch_size = 16;

    const std::vector<Example> all = build_examples(ds.entries, cfg);
    std::vector<Example> train_set, held_out;
    for (size_t i = 0; i < all.size(); ++i) {
        (i % 5 == 4 ? held_out : train_set).push_back(all[i]);
    }

    double mp_sum = 0.0;
    double fused_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        const TrainResult stage1 =
            train(train_set, cfg.net, tc, TrainStage::mp_only);
        mp_sum += accuracy_on(held_out, stage1.params, cfg.net, true);

        TrainConfig tc2 = tc;
        tc2.epochs = 40;
        const TrainResult stage2 =
            train(train_set, cfg.net, tc2, TrainStage::fused, &stage1.params);
        fused_sum += accuracy_on(held_out, stage2.params, cfg.net, false);
    }
    const double mp_acc = mp_sum / 5.0;
    const double fused_acc = fused_sum / 5.0;

    if (fused_acc < 0.9) {
        ok = false;
        detail = "fused held-out accuracy " + std::to_string(fused_acc);
    } else if (fused_acc < mp_acc) {
        ok = false;
        detail = "fused below mp_only";
    }

    const double secs = seconds_since(t0);
    if (secs >= 600.0) {
        ok = false;
        detail = "runtime budget exceeded";
    }
    if (ok) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "fused %.3f vs mp_only %.3f over 5 seeds",
                      fused_acc, mp_acc);
        detail = buf;
    }
    return report(6, "toy learnability", ok, secs, detail);
}

// --- criterion 7: determinism and persistence ---------------------------------

bool criterion_determinism() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail = "training, checkpoints and label rule exact";

    ts::ToySpec spec;
    spec.count = 24;
    spec.seed = 707;
    spec.dir = ts::temp_dir("acceptance_det");
    const ts::ToyDataset ds = ts::generate_toy_dataset(spec);

    PipelineConfig cfg = desk_config(ExtractorKind::handcrafted);
    cfg.train.epochs = 4;
    cfg.train.batch_size = 8;
    cfg.train.seed = 11;

    const std::vector<Example> examples = build_examples(ds.entries, cfg);
    const TrainResult a = train(examples, cfg.net, cfg.train, TrainStage::mp_only);
    const TrainResult b = train(examples, cfg.net, cfg.train, TrainStage::mp_only);

    const std::string p1 = spec.dir + "/a.ck";
    const std::string p2 = spec.dir + "/b.ck";
    save_checkpoint(p1, a.params, cfg);
    save_checkpoint(p2, b.params, cfg);
    auto slurp = [](const std::string& p) {
        std::FILE* f = std::fopen(p.c_str(), "rb");
        std::string data;
        char buf[4096];
        size_t n;
        while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) data.append(buf, n);
        std::fclose(f);
        return data;
    };
    if (slurp(p1) != slurp(p2)) {
        ok = false;
        detail = "same-seed checkpoints differ";
    }

    const Checkpoint loaded = load_checkpoint(p1);
    const std::string p3 = spec.dir + "/c.ck";
    save_checkpoint(p3, loaded.params, loaded.config);
    if (slurp(p1) != slurp(p3)) {
        ok = false;
        detail = "save-load-save not byte-identical";
    }

    if (label_from_rating(5.0) != QualityLabel::low ||
        label_from_rating(5.1) != QualityLabel::high) {
        ok = false;
        detail = "label rule boundary";
    }
    return report(7, "determinism and persistence", ok, seconds_since(t0), detail);
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    bool all = true;
    all &= criterion_wasserstein();
    all &= criterion_selection();
    all &= criterion_permutation();
    all &= criterion_gradients();
    all &= criterion_layout_bounds();
    all &= criterion_learnability();
    all &= criterion_determinism();
    std::printf("%s\n", all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED");
    return all ? 0 : 1;
}

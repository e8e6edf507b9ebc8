#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lamp/error.hpp"
#include "lamp/selector.hpp"
#include "support/imagegen.hpp"
#include "support/oracles.hpp"

using namespace lamp;
namespace ts = lamp::testsupport;

namespace {

SelectorConfig desk_cfg(int m = 3, int window = 32, int stride = 16) {
    SelectorConfig cfg;
    cfg.m = m;
    cfg.window = window;
    cfg.stride = stride;
    return cfg;
}

// Synthetic candidate pool on the desk-scale grid: random saliency and
// random pattern models, no image processing involved.
std::vector<Candidate> synthetic_pool(std::mt19937_64& rng, int img, int window,
                                      int stride) {
    auto u = [&rng]() { return static_cast<double>(rng() % 1000000) / 999999.0; };
    auto spd = [&]() {
        Gaussian2 g;
        g.mean = {8.0 * u() - 4.0, 8.0 * u() - 4.0};
        const double a = 2.0 * u() - 1.0, b = 2.0 * u() - 1.0;
        const double c = 2.0 * u() - 1.0, d = 2.0 * u() - 1.0;
        g.c00 = 3.0 * (a * a + c * c) + 0.02;
        g.c01 = 3.0 * (a * b + c * d);
        g.c11 = 3.0 * (b * b + d * d) + 0.02;
        return g;
    };
    std::vector<Candidate> out;
    for (int y = 0; y + window <= img; y += stride) {
        for (int x = 0; x + window <= img; x += stride) {
            Candidate c;
            c.rect = {x, y, window, window};
            c.center = c.rect.center();
            c.saliency = u();
            c.pattern = {spd(), spd()};
            out.push_back(c);
        }
    }
    return out;
}

SelectionContext pipeline_context(std::mt19937_64& rng, const SelectorConfig& cfg,
                                  int w, int h) {
    const Image img = ts::random_scene(rng, w, h);
    const SaliencyMap sal = compute_saliency(img);
    const PlaneSet planes = derive_planes(img);
    std::vector<Candidate> cands = generate_candidates(w, h, cfg, sal, planes);
    return make_selection_context(std::move(cands), w, h);
}

} // namespace

TEST_CASE("candidate grid counts") {
    std::mt19937_64 rng(1);
    const Image img = ts::random_scene(rng, 100, 100);
    const SaliencyMap sal = compute_saliency(img);
    const PlaneSet planes = derive_planes(img);

    CHECK(generate_candidates(100, 100, desk_cfg(3, 50, 25), sal, planes).size() == 9);

    CHECK_THROWS_AS(
        generate_candidates(100, 100, desk_cfg(3, 200, 25), sal, planes), Error);
    CHECK_THROWS_AS(generate_candidates(100, 100, desk_cfg(3, 50, 0), sal, planes),
                    Error);

    // Flush column: window 40 stride 25 on 100 -> positions 0, 25, 50, 60.
    CHECK(generate_candidates(100, 100, desk_cfg(3, 40, 25), sal, planes).size() ==
          16);
}

TEST_CASE("a window equal to the image yields exactly one candidate") {
    std::mt19937_64 rng(2);
    const Image img = ts::random_scene(rng, 224, 224);
    const SaliencyMap sal = compute_saliency(img);
    const PlaneSet planes = derive_planes(img);
    const auto cands =
        generate_candidates(224, 224, desk_cfg(1, 224, 112), sal, planes);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].rect == Rect{0, 0, 224, 224});
}

TEST_CASE("parallel candidate generation and context match the serial reference") {
    std::mt19937_64 rng(3);
    const SelectorConfig cfg = desk_cfg();
    const Image img = ts::random_scene(rng, 128, 128);
    const SaliencyMap sal = compute_saliency(img);
    const PlaneSet planes = derive_planes(img);

    const auto par = generate_candidates(128, 128, cfg, sal, planes);
    const auto ser = generate_candidates_serial(128, 128, cfg, sal, planes);
    REQUIRE(par.size() == ser.size());
    for (size_t i = 0; i < par.size(); ++i) {
        CHECK(par[i].rect == ser[i].rect);
        CHECK(par[i].saliency == ser[i].saliency);
        CHECK(par[i].pattern == ser[i].pattern);
    }

    const SelectionContext cp = make_selection_context(par, 128, 128);
    const SelectionContext cs = make_selection_context_serial(ser, 128, 128);
    CHECK(cp.pair_dp == cs.pair_dp);
    CHECK(cp.dp_max == cs.dp_max);
}

TEST_CASE("objective term isolation") {
    std::mt19937_64 rng(4);
    const auto cands = synthetic_pool(rng, 128, 32, 16);
    const SelectionContext ctx = make_selection_context(cands, 128, 128);

    SelectorConfig cfg = desk_cfg();
    const std::vector<int> one = {5};
    CHECK(subset_objective(ctx, one, cfg) ==
          doctest::Approx(cands[5].saliency).epsilon(1e-12));

    cfg.lambda_p = 0.0;
    cfg.lambda_d = 0.0;
    cfg.lambda_s = 2.5;
    const std::vector<int> sub = {1, 8, 17};
    const double expect =
        2.5 * (cands[1].saliency + cands[8].saliency + cands[17].saliency);
    CHECK(subset_objective(ctx, sub, cfg) == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(subset_objective(ctx, std::vector<int>{}, cfg), Error);
}

TEST_CASE("objective matches the independent recomputation on random subsets") {
    std::mt19937_64 rng(5);
    const auto cands = synthetic_pool(rng, 128, 32, 16);
    const SelectionContext ctx = make_selection_context(cands, 128, 128);
    const SelectorConfig cfg = desk_cfg(4);

    for (int t = 0; t < 25; ++t) {
        std::vector<int> sub;
        while (sub.size() < 4) {
            const int c = static_cast<int>(rng() % cands.size());
            if (std::find(sub.begin(), sub.end(), c) == sub.end()) sub.push_back(c);
        }
        std::sort(sub.begin(), sub.end());
        const double got = subset_objective(ctx, sub, cfg);
        const double ref = oracle::objective_reference(cands, sub, cfg, 128, 128);
        CHECK(got == doctest::Approx(ref).epsilon(1e-9));
    }
}

TEST_CASE("exhaustive matches the brute-force oracle on synthetic pools") {
    std::mt19937_64 rng(6);
    const SelectorConfig cfg = desk_cfg();
    for (int t = 0; t < 25; ++t) {
        const auto cands = synthetic_pool(rng, 96, 32, 16); // 25 candidates
        const SelectionContext ctx = make_selection_context(cands, 96, 96);
        const PatchSet got = select_exhaustive(ctx, cfg);
        const auto ref = oracle::brute_force_select(cands, cfg, 96, 96);
        REQUIRE(ref.found);
        CHECK(got.indices == ref.indices);
        CHECK(subset_feasible(ctx, got.indices, cfg));
    }
}

TEST_CASE("exhaustive with m=1 picks the most salient candidate") {
    std::mt19937_64 rng(7);
    const auto cands = synthetic_pool(rng, 96, 32, 16);
    const SelectionContext ctx = make_selection_context(cands, 96, 96);
    const PatchSet got = select_exhaustive(ctx, desk_cfg(1));
    int best = 0;
    for (size_t i = 1; i < cands.size(); ++i) {
        if (cands[i].saliency > cands[best].saliency) best = static_cast<int>(i);
    }
    REQUIRE(got.indices.size() == 1);
    CHECK(got.indices[0] == best);
}

TEST_CASE("infeasible pools raise NoFeasibleSet") {
    std::mt19937_64 rng(8);
    // Window 16 on a 20x20 image: every candidate pair overlaps heavily.
    const auto cands = synthetic_pool(rng, 20, 16, 2);
    const SelectionContext ctx = make_selection_context(cands, 20, 20);
    SelectorConfig cfg = desk_cfg(2, 16, 2);
    cfg.tau_overlap = 0.0;
    CHECK_THROWS_AS(select_exhaustive(ctx, cfg), Error);
    CHECK_THROWS_AS(select_greedy(ctx, cfg), Error);
}

TEST_CASE("combination guard") {
    std::mt19937_64 rng(9);
    const auto cands = synthetic_pool(rng, 128, 32, 16); // 49 candidates
    const SelectionContext ctx = make_selection_context(cands, 128, 128);
    const SelectorConfig cfg = desk_cfg(6); // C(49, 6) > 1e6
    try {
        select_exhaustive(ctx, cfg);
        FAIL("expected TooManyCombinations");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooManyCombinations);
    }
}

TEST_CASE("greedy first pick is the saliency argmax and results are feasible") {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 10; ++t) {
        const auto cands = synthetic_pool(rng, 128, 32, 16);
        const SelectionContext ctx = make_selection_context(cands, 128, 128);
        const SelectorConfig cfg = desk_cfg();
        const PatchSet g = select_greedy(ctx, cfg);
        REQUIRE(g.indices.size() == 3);
        CHECK(subset_feasible(ctx, g.indices, cfg));

        int best = 0;
        for (size_t i = 1; i < cands.size(); ++i) {
            if (cands[i].saliency > cands[best].saliency) best = static_cast<int>(i);
        }
        CHECK(std::find(g.indices.begin(), g.indices.end(), best) != g.indices.end());
    }
}

TEST_CASE("solver ordering and local-search quality over 200 random instances") {
    std::mt19937_64 rng(11);
    const SelectorConfig cfg = desk_cfg();
    int ls_optimal = 0;
    for (int t = 0; t < 200; ++t) {
        const SelectionContext ctx = pipeline_context(rng, cfg, 128, 128);

        const PatchSet ex = select_exhaustive(ctx, cfg);
        const PatchSet gr = select_greedy(ctx, cfg);
        const PatchSet ls = select_local_search(ctx, cfg, gr);

        CHECK(ex.objective >= ls.objective);
        CHECK(ls.objective >= gr.objective);
        CHECK(subset_feasible(ctx, ex.indices, cfg));
        CHECK(subset_feasible(ctx, ls.indices, cfg));
        if (ls.indices == ex.indices) ++ls_optimal;

        // Local search keeps the exhaustive optimum fixed.
        const PatchSet again = select_local_search(ctx, cfg, ex);
        CHECK(again.indices == ex.indices);
        CHECK(again.objective == ex.objective);
    }
    CHECK(ls_optimal >= 160); // >= 80 % of instances
}

TEST_CASE("stored objective equals recomputation and solvers are deterministic") {
    std::mt19937_64 rng(12);
    const SelectorConfig cfg = desk_cfg();
    const SelectionContext ctx = pipeline_context(rng, cfg, 128, 128);

    const PatchSet a = select_greedy(ctx, cfg);
    const PatchSet b = select_greedy(ctx, cfg);
    CHECK(a.indices == b.indices);
    CHECK(a.objective == b.objective);
    CHECK(a.objective ==
          doctest::Approx(subset_objective(ctx, a.indices, cfg)).epsilon(1e-9));

    const PatchSet ls = select_local_search(ctx, cfg, a);
    CHECK(ls.objective >= a.objective);
    CHECK(ls.objective ==
          doctest::Approx(subset_objective(ctx, ls.indices, cfg)).epsilon(1e-9));
}

TEST_CASE("doubling a lone saliency weight keeps the argmax subset") {
    std::mt19937_64 rng(13);
    const auto cands = synthetic_pool(rng, 96, 32, 16);
    const SelectionContext ctx = make_selection_context(cands, 96, 96);
    SelectorConfig cfg = desk_cfg();
    cfg.lambda_p = 0.0;
    cfg.lambda_d = 0.0;
    cfg.lambda_s = 1.0;
    const PatchSet one = select_exhaustive(ctx, cfg);
    cfg.lambda_s = 2.0;
    const PatchSet two = select_exhaustive(ctx, cfg);
    CHECK(one.indices == two.indices);
}

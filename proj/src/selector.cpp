#include "lamp/selector.hpp"

#include <algorithm>
#include <cmath>

#include "lamp/error.hpp"
#include "lamp/layout.hpp"
#include "lamp/parallel.hpp"

namespace lamp {

namespace {

std::vector<int> grid_positions(int extent, int window, int stride) {
    std::vector<int> xs;
    for (int x = 0; x + window <= extent; x += stride) {
        xs.push_back(x);
    }
    const int flush = extent - window;
    if (xs.empty() || xs.back() != flush) {
        xs.push_back(flush);
    }
    return xs;
}

std::vector<Candidate> generate_impl(int img_w, int img_h,
                                     const SelectorConfig& cfg,
                                     const SaliencyMap& map,
                                     const PlaneSet& planes, bool parallel) {
    if (cfg.stride < 1) raise(ErrorCode::ZeroStride, "stride must be >= 1");
    if (cfg.window < 1) {
        raise(ErrorCode::WindowTooLarge, "window must be >= 1");
    }
    if (cfg.window > std::min(img_w, img_h)) {
        raise(ErrorCode::WindowTooLarge, "window exceeds image dimensions");
    }

    const std::vector<int> xs = grid_positions(img_w, cfg.window, cfg.stride);
    const std::vector<int> ys = grid_positions(img_h, cfg.window, cfg.stride);

    std::vector<Candidate> cands(xs.size() * ys.size());
    const int n = static_cast<int>(cands.size());
    parallel_for(n, parallel, [&](int idx) {
        const int gy = idx / static_cast<int>(xs.size());
        const int gx = idx % static_cast<int>(xs.size());
        Candidate& c = cands[idx];
        c.rect = {xs[gx], ys[gy], cfg.window, cfg.window};
        c.center = c.rect.center();
        c.saliency = patch_saliency(map, c.rect);
        c.pattern = patch_pattern(planes, c.rect);
    });
    return cands;
}

SelectionContext make_context_impl(std::vector<Candidate> cands, int img_w,
                                   int img_h, bool parallel) {
    SelectionContext ctx;
    ctx.img_w = img_w;
    ctx.img_h = img_h;
    ctx.diagonal = std::hypot(static_cast<double>(img_w), static_cast<double>(img_h));
    ctx.candidates = std::move(cands);

    const int n = static_cast<int>(ctx.candidates.size());
    ctx.pair_dp.assign(static_cast<size_t>(n) * n, 0.0);
    // Row i fills cells (i, j) and (j, i) for j > i only, so rows are
    // independent and the parallel fill is exact.
    parallel_for(n, parallel, [&](int i) {
        for (int j = i + 1; j < n; ++j) {
            const double d =
                pattern_distance(ctx.candidates[i].pattern, ctx.candidates[j].pattern);
            ctx.pair_dp[static_cast<size_t>(i) * n + j] = d;
            ctx.pair_dp[static_cast<size_t>(j) * n + i] = d;
        }
    });

    ctx.dp_max = 0.0;
    for (double d : ctx.pair_dp) ctx.dp_max = std::max(ctx.dp_max, d);
    return ctx;
}

double center_dist(const Candidate& a, const Candidate& b) {
    return std::hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]);
}

// Marginal objective gain of adding cand to the selected set.
double marginal_gain(const SelectionContext& ctx, const SelectorConfig& cfg,
                     std::span<const int> selected, int cand) {
    double gain = cfg.lambda_s * ctx.candidates[cand].saliency;
    for (int s : selected) {
        if (ctx.dp_max > 0.0) {
            gain += cfg.lambda_p * ctx.dp(s, cand) / ctx.dp_max;
        }
        gain += cfg.lambda_d *
                center_dist(ctx.candidates[s], ctx.candidates[cand]) / ctx.diagonal;
    }
    return gain;
}

bool pair_feasible(const SelectionContext& ctx, const SelectorConfig& cfg, int a,
                   int b) {
    return rect_overlap_ratio(ctx.candidates[a].rect, ctx.candidates[b].rect) <=
           cfg.tau_overlap;
}

PatchSet finish(const SelectionContext& ctx, const SelectorConfig& cfg,
                std::vector<int> indices, Solver solver) {
    std::sort(indices.begin(), indices.end());
    PatchSet ps;
    ps.indices = indices;
    for (int i : indices) ps.members.push_back(ctx.candidates[i]);
    ps.objective = subset_objective(ctx, indices, cfg);
    ps.solver = solver;
    return ps;
}

double combination_count(int n, int m) {
    double c = 1.0;
    for (int i = 0; i < m; ++i) {
        c *= static_cast<double>(n - i) / (i + 1);
        if (c > 1e15) return c;
    }
    return c;
}

} // namespace

const char* solver_name(Solver s) {
    switch (s) {
        case Solver::exhaustive: return "exhaustive";
        case Solver::greedy: return "greedy";
        case Solver::local_search: return "local_search";
    }
    return "unknown";
}

std::vector<Candidate> generate_candidates(int img_w, int img_h,
                                           const SelectorConfig& cfg,
                                           const SaliencyMap& map,
                                           const PlaneSet& planes) {
    return generate_impl(img_w, img_h, cfg, map, planes, true);
}

std::vector<Candidate> generate_candidates_serial(int img_w, int img_h,
                                                  const SelectorConfig& cfg,
                                                  const SaliencyMap& map,
                                                  const PlaneSet& planes) {
    return generate_impl(img_w, img_h, cfg, map, planes, false);
}

SelectionContext make_selection_context(std::vector<Candidate> cands, int img_w,
                                        int img_h) {
    return make_context_impl(std::move(cands), img_w, img_h, true);
}

SelectionContext make_selection_context_serial(std::vector<Candidate> cands,
                                               int img_w, int img_h) {
    return make_context_impl(std::move(cands), img_w, img_h, false);
}

double subset_objective(const SelectionContext& ctx, std::span<const int> subset,
                        const SelectorConfig& cfg) {
    if (subset.empty()) raise(ErrorCode::EmptySet, "objective of empty set");

    double sal = 0.0;
    for (int i : subset) sal += ctx.candidates[i].saliency;

    double div = 0.0;
    double spread = 0.0;
    for (size_t a = 0; a < subset.size(); ++a) {
        for (size_t b = a + 1; b < subset.size(); ++b) {
            if (ctx.dp_max > 0.0) {
                div += ctx.dp(subset[a], subset[b]) / ctx.dp_max;
            }
            spread += center_dist(ctx.candidates[subset[a]],
                                  ctx.candidates[subset[b]]) /
                      ctx.diagonal;
        }
    }
    return cfg.lambda_s * sal + cfg.lambda_p * div + cfg.lambda_d * spread;
}

bool subset_feasible(const SelectionContext& ctx, std::span<const int> subset,
                     const SelectorConfig& cfg) {
    for (size_t a = 0; a < subset.size(); ++a) {
        for (size_t b = a + 1; b < subset.size(); ++b) {
            if (!pair_feasible(ctx, cfg, subset[a], subset[b])) return false;
        }
    }
    return true;
}

PatchSet select_exhaustive(const SelectionContext& ctx, const SelectorConfig& cfg) {
    const int n = static_cast<int>(ctx.candidates.size());
    if (cfg.m < 1 || n < cfg.m) {
        raise(ErrorCode::NoFeasibleSet, "not enough candidates");
    }
    if (combination_count(n, cfg.m) > 1e6) {
        raise(ErrorCode::TooManyCombinations,
              "exhaustive search guard: C(n, m) > 1e6");
    }

    std::vector<int> current;
    std::vector<int> best;
    double best_obj = 0.0;
    bool found = false;

    // Lexicographic enumeration with overlap pruning; the first optimum
    // encountered wins ties.
    auto recurse = [&](auto&& self, int next) -> void {
        if (static_cast<int>(current.size()) == cfg.m) {
            const double obj = subset_objective(ctx, current, cfg);
            if (!found || obj > best_obj) {
                found = true;
                best_obj = obj;
                best = current;
            }
            return;
        }
        const int need = cfg.m - static_cast<int>(current.size());
        for (int c = next; c <= n - need; ++c) {
            bool ok = true;
            for (int s : current) {
                if (!pair_feasible(ctx, cfg, s, c)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            current.push_back(c);
            self(self, c + 1);
            current.pop_back();
        }
    };
    recurse(recurse, 0);

    if (!found) raise(ErrorCode::NoFeasibleSet, "no feasible subset");
    return finish(ctx, cfg, best, Solver::exhaustive);
}

PatchSet select_greedy(const SelectionContext& ctx, const SelectorConfig& cfg) {
    const int n = static_cast<int>(ctx.candidates.size());
    if (cfg.m < 1 || n < 1) {
        raise(ErrorCode::NoFeasibleSet, "no candidates");
    }

    std::vector<int> selected;
    std::vector<char> used(n, 0);
    for (int round = 0; round < cfg.m; ++round) {
        int best_c = -1;
        double best_gain = 0.0;
        for (int c = 0; c < n; ++c) {
            if (used[c]) continue;
            bool ok = true;
            for (int s : selected) {
                if (!pair_feasible(ctx, cfg, s, c)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            const double gain = marginal_gain(ctx, cfg, selected, c);
            if (best_c < 0 || gain > best_gain) {
                best_c = c;
                best_gain = gain;
            }
        }
        if (best_c < 0) {
            raise(ErrorCode::NoFeasibleSet, "greedy ran out of feasible candidates");
        }
        selected.push_back(best_c);
        used[best_c] = 1;
    }
    return finish(ctx, cfg, selected, Solver::greedy);
}

PatchSet select_local_search(const SelectionContext& ctx, const SelectorConfig& cfg,
                             const PatchSet& seed) {
    std::vector<int> current = seed.indices;
    std::sort(current.begin(), current.end());
    const int n = static_cast<int>(ctx.candidates.size());
    double current_obj = subset_objective(ctx, current, cfg);

    std::vector<char> used(n, 0);
    for (int i : current) used[i] = 1;

    for (;;) {
        double best_obj = current_obj;
        int best_pos = -1;
        int best_cand = -1;
        for (size_t pos = 0; pos < current.size(); ++pos) {
            for (int c = 0; c < n; ++c) {
                if (used[c]) continue;
                bool ok = true;
                for (size_t q = 0; q < current.size(); ++q) {
                    if (q == pos) continue;
                    if (!pair_feasible(ctx, cfg, current[q], c)) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                std::vector<int> trial = current;
                trial[pos] = c;
                std::sort(trial.begin(), trial.end());
                const double obj = subset_objective(ctx, trial, cfg);
                if (obj > best_obj) {
                    best_obj = obj;
                    best_pos = static_cast<int>(pos);
                    best_cand = c;
                }
            }
        }
        if (best_pos < 0) break;
        used[current[best_pos]] = 0;
        used[best_cand] = 1;
        current[best_pos] = best_cand;
        std::sort(current.begin(), current.end());
        current_obj = subset_objective(ctx, current, cfg);
    }
    return finish(ctx, cfg, current, Solver::local_search);
}

} // namespace lamp

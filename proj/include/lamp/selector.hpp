#pragma once

#include <span>
#include <string>
#include <vector>

#include "lamp/image.hpp"
#include "lamp/pattern.hpp"
#include "lamp/saliency.hpp"

namespace lamp {

// One sliding-window patch candidate with its precomputed scores.
struct Candidate {
    Rect rect;
    std::array<double, 2> center{0.0, 0.0};
    double saliency = 0.0; // mean map value, in [0, 1]
    PatternModel pattern;
};

struct SelectorConfig {
    int m = 5;            // patches per bag
    int window = 224;     // square patch side
    int stride = 112;     // grid step (half window by default)
    double lambda_s = 1.0;
    double lambda_p = 1.0;
    double lambda_d = 1.0;
    double tau_overlap = 0.3; // max pairwise overlap ratio
};

enum class Solver { exhaustive, greedy, local_search };

const char* solver_name(Solver s);

struct PatchSet {
    std::vector<int> indices;       // ascending candidate indices
    std::vector<Candidate> members; // same order as indices
    double objective = 0.0;
    Solver solver = Solver::greedy;
};

// Sliding-window grid: positions 0, stride, 2*stride, ... plus a final
// position flush to the far edge when the grid does not land on it. Each
// candidate carries its mean saliency and pattern model. Candidates are
// ordered row-major (y outer, x inner); that order fixes all tie-breaking.
std::vector<Candidate> generate_candidates(int img_w, int img_h,
                                           const SelectorConfig& cfg,
                                           const SaliencyMap& map,
                                           const PlaneSet& planes);

// Serial reference; bit-identical to generate_candidates.
std::vector<Candidate> generate_candidates_serial(int img_w, int img_h,
                                                  const SelectorConfig& cfg,
                                                  const SaliencyMap& map,
                                                  const PlaneSet& planes);

// Immutable per-pool state shared by the solvers: the candidates, the full
// pairwise pattern-distance matrix, its maximum (the normalizer for the
// diversity term) and the image diagonal (the normalizer for spread).
struct SelectionContext {
    int img_w = 0;
    int img_h = 0;
    double diagonal = 1.0;
    std::vector<Candidate> candidates;
    std::vector<double> pair_dp; // n*n, symmetric, zero diagonal
    double dp_max = 0.0;

    double dp(int i, int j) const {
        return pair_dp[static_cast<size_t>(i) * candidates.size() + j];
    }
};

SelectionContext make_selection_context(std::vector<Candidate> cands,
                                        int img_w, int img_h);

// Serial reference; bit-identical to make_selection_context.
SelectionContext make_selection_context_serial(std::vector<Candidate> cands,
                                               int img_w, int img_h);

// Objective of a candidate subset:
//   lambda_s * sum S_i
//   + lambda_p * sum_{i<j} Dp(i,j) / dp_max     (0 when dp_max is 0)
//   + lambda_d * sum_{i<j} |c_i - c_j| / diagonal
// Pairs are summed in subset order, so the value is deterministic.
double subset_objective(const SelectionContext& ctx, std::span<const int> subset,
                        const SelectorConfig& cfg);

// True when every pair in the subset overlaps by at most tau_overlap.
bool subset_feasible(const SelectionContext& ctx, std::span<const int> subset,
                     const SelectorConfig& cfg);

// Exact argmax over all feasible m-subsets, enumerated in lexicographic
// index order (first optimum wins ties). Guarded by C(n, m) <= 10^6.
PatchSet select_exhaustive(const SelectionContext& ctx, const SelectorConfig& cfg);

// Adds the feasible candidate with the largest marginal gain until m patches
// are selected; ties broken by smaller index.
PatchSet select_greedy(const SelectionContext& ctx, const SelectorConfig& cfg);

// Repeatedly applies the best strictly improving feasible single swap.
PatchSet select_local_search(const SelectionContext& ctx, const SelectorConfig& cfg,
                             const PatchSet& seed);

} // namespace lamp

#include "lamp/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lamp/error.hpp"
#include "lamp/parallel.hpp"

namespace lamp {

namespace {

constexpr int kConv1Ch = 8;
constexpr int kConv2Ch = 16;
constexpr int kLayoutDim = LayoutVector::kDim;

inline double round_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double softplus(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

void check_tiny_conv_side(int side) {
    if (side < 4 || side % 4 != 0) {
        raise(ErrorCode::ShapeMismatch,
              "tiny_conv input side must be a positive multiple of 4");
    }
}

// ---- dense primitives ------------------------------------------------------

void conv3x3(const double* in, int ch_in, int side, const double* w,
             const double* b, int ch_out, double* out) {
    const int hw = side * side;
    for (int o = 0; o < ch_out; ++o) {
        double* dst = out + static_cast<size_t>(o) * hw;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                double acc = b[o];
                for (int c = 0; c < ch_in; ++c) {
                    const double* src = in + static_cast<size_t>(c) * hw;
                    const double* ker =
                        w + (static_cast<size_t>(o) * ch_in + c) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= side) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= side) continue;
                            acc += ker[ky * 3 + kx] * src[iy * side + ix];
                        }
                    }
                }
                dst[y * side + x] = acc;
            }
        }
    }
}

void conv3x3_backward(const double* in, int ch_in, int side, const double* w,
                      int ch_out, const double* dout, double* dw, double* db,
                      double* din) {
    const int hw = side * side;
    for (int o = 0; o < ch_out; ++o) {
        const double* go = dout + static_cast<size_t>(o) * hw;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const double g = go[y * side + x];
                if (g == 0.0) continue;
                db[o] += g;
                for (int c = 0; c < ch_in; ++c) {
                    const double* src = in + static_cast<size_t>(c) * hw;
                    double* dker = dw + (static_cast<size_t>(o) * ch_in + c) * 9;
                    const double* ker = w + (static_cast<size_t>(o) * ch_in + c) * 9;
                    double* dsrc = din ? din + static_cast<size_t>(c) * hw : nullptr;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= side) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= side) continue;
                            dker[ky * 3 + kx] += g * src[iy * side + ix];
                            if (dsrc) dsrc[iy * side + ix] += g * ker[ky * 3 + kx];
                        }
                    }
                }
            }
        }
    }
}

// 2x2 max pooling; argmax offset 0..3 in row-major window order, first
// maximum wins ties.
void maxpool2(const double* in, int ch, int side, double* out, int* amax) {
    const int half = side / 2;
    for (int c = 0; c < ch; ++c) {
        const double* src = in + static_cast<size_t>(c) * side * side;
        double* dst = out + static_cast<size_t>(c) * half * half;
        int* am = amax + static_cast<size_t>(c) * half * half;
        for (int y = 0; y < half; ++y) {
            for (int x = 0; x < half; ++x) {
                double best = src[(2 * y) * side + 2 * x];
                int arg = 0;
                const double v1 = src[(2 * y) * side + 2 * x + 1];
                if (v1 > best) { best = v1; arg = 1; }
                const double v2 = src[(2 * y + 1) * side + 2 * x];
                if (v2 > best) { best = v2; arg = 2; }
                const double v3 = src[(2 * y + 1) * side + 2 * x + 1];
                if (v3 > best) { best = v3; arg = 3; }
                dst[y * half + x] = best;
                am[y * half + x] = arg;
            }
        }
    }
}

void maxpool2_backward(const double* dout, const int* amax, int ch, int side,
                       double* din) {
    const int half = side / 2;
    for (int c = 0; c < ch; ++c) {
        const double* go = dout + static_cast<size_t>(c) * half * half;
        const int* am = amax + static_cast<size_t>(c) * half * half;
        double* dst = din + static_cast<size_t>(c) * side * side;
        for (int y = 0; y < half; ++y) {
            for (int x = 0; x < half; ++x) {
                const int arg = am[y * half + x];
                const int iy = 2 * y + (arg >> 1);
                const int ix = 2 * x + (arg & 1);
                dst[iy * side + ix] += go[y * half + x];
            }
        }
    }
}

void fc_forward(const double* w, const double* b, const double* x, int in_dim,
                int out_dim, double* y) {
    for (int o = 0; o < out_dim; ++o) {
        double acc = b[o];
        const double* row = w + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

void fc_backward(const double* w, const double* x, const double* dy, int in_dim,
                 int out_dim, double* dw, double* db, double* dx) {
    for (int o = 0; o < out_dim; ++o) {
        const double g = dy[o];
        db[o] += g;
        double* drow = dw + static_cast<size_t>(o) * in_dim;
        const double* row = w + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            drow[i] += g * x[i];
            if (dx) dx[i] += g * row[i];
        }
    }
}

// ---- handcrafted extractor -------------------------------------------------

std::vector<double> handcrafted_features(const Image& patch, int k_out) {
    const PlaneSet ps = derive_planes(patch);
    const int np = patch.width * patch.height;
    std::vector<double> f(38, 0.0);
    for (int y = 0; y < patch.height; ++y) {
        for (int x = 0; x < patch.width; ++x) {
            const int ybin = std::min(15, static_cast<int>(ps.y.at(x, y) / 16.0));
            f[ybin] += 1.0;
            const double gmag = std::hypot(ps.gx.at(x, y), ps.gy.at(x, y));
            const int gbin = std::min(15, static_cast<int>(gmag / 8.0));
            f[16 + gbin] += 1.0;
        }
    }
    for (int i = 0; i < 32; ++i) f[i] /= np;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0, sumsq = 0.0;
        for (int y = 0; y < patch.height; ++y) {
            for (int x = 0; x < patch.width; ++x) {
                const double v = patch.at(x, y, c);
                sum += v;
                sumsq += v * v;
            }
        }
        const double mean = sum / np;
        const double var = std::max(0.0, sumsq / np - mean * mean);
        f[32 + c] = mean / 255.0;
        f[35 + c] = var / (255.0 * 255.0);
    }
    f.resize(static_cast<size_t>(k_out), 0.0);
    return f;
}

// ---- traced forward / backward ----------------------------------------------

struct PatchTrace {
    std::vector<double> x, pre1, a1, p1, pre2, a2, p2, feat;
    std::vector<int> amax1, amax2;
};

struct Trace {
    std::vector<PatchTrace> patches;
    std::vector<double> blob; // M x K
    std::vector<double> agg;
    std::vector<double> h1pre, h1, h2, fused;
    std::vector<int> stat_choice;
    double logit = 0.0;
    double prob = 0.0;
};

void check_patch(const Image& patch, const ExtractorSpec& spec) {
    if (patch.width != spec.input_side || patch.height != spec.input_side) {
        raise(ErrorCode::ShapeMismatch, "patch is not resized to input_side");
    }
}

void extract_traced(const Image& patch, const ExtractorSpec& spec,
                    const ModelParams& params, PatchTrace& pt) {
    check_patch(patch, spec);
    const int k = spec.feature_dim;
    if (spec.kind == ExtractorKind::handcrafted) {
        pt.feat = handcrafted_features(patch, k);
        return;
    }
    check_tiny_conv_side(spec.input_side);
    const int s = spec.input_side;
    const int s2 = s / 2;
    const int s4 = s / 4;

    pt.x.resize(static_cast<size_t>(3) * s * s);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                pt.x[(static_cast<size_t>(c) * s + y) * s + x] =
                    patch.at(x, y, c) / 255.0;
            }
        }
    }

    pt.pre1.resize(static_cast<size_t>(kConv1Ch) * s * s);
    conv3x3(pt.x.data(), 3, s, params.w.conv1_w.v.data(),
            params.w.conv1_b.v.data(), kConv1Ch, pt.pre1.data());
    pt.a1 = pt.pre1;
    for (double& v : pt.a1) v = std::max(0.0, v);

    pt.p1.resize(static_cast<size_t>(kConv1Ch) * s2 * s2);
    pt.amax1.resize(pt.p1.size());
    maxpool2(pt.a1.data(), kConv1Ch, s, pt.p1.data(), pt.amax1.data());

    pt.pre2.resize(static_cast<size_t>(kConv2Ch) * s2 * s2);
    conv3x3(pt.p1.data(), kConv1Ch, s2, params.w.conv2_w.v.data(),
            params.w.conv2_b.v.data(), kConv2Ch, pt.pre2.data());
    pt.a2 = pt.pre2;
    for (double& v : pt.a2) v = std::max(0.0, v);

    pt.p2.resize(static_cast<size_t>(kConv2Ch) * s4 * s4);
    pt.amax2.resize(pt.p2.size());
    maxpool2(pt.a2.data(), kConv2Ch, s2, pt.p2.data(), pt.amax2.data());

    pt.feat.assign(static_cast<size_t>(k), 0.0);
    fc_forward(params.w.fc0_w.v.data(), params.w.fc0_b.v.data(), pt.p2.data(),
               kConv2Ch * s4 * s4, k, pt.feat.data());
}

void aggregate_traced(const std::vector<double>& blob, int rows, int cols,
                      std::span<const Stat> stats, std::vector<double>& out,
                      std::vector<int>& choices) {
    out.clear();
    out.reserve(stats.size() * cols);
    std::vector<int> order(rows);
    for (const Stat stat : stats) {
        for (int k = 0; k < cols; ++k) {
            auto val = [&](int r) { return blob[static_cast<size_t>(r) * cols + k]; };
            switch (stat) {
                case Stat::max: {
                    int arg = 0;
                    for (int r = 1; r < rows; ++r)
                        if (val(r) > val(arg)) arg = r;
                    out.push_back(val(arg));
                    choices.push_back(arg);
                    break;
                }
                case Stat::min: {
                    int arg = 0;
                    for (int r = 1; r < rows; ++r)
                        if (val(r) < val(arg)) arg = r;
                    out.push_back(val(arg));
                    choices.push_back(arg);
                    break;
                }
                case Stat::mean: {
                    double acc = 0.0;
                    for (int r = 0; r < rows; ++r) acc += val(r);
                    out.push_back(acc / rows);
                    break;
                }
                case Stat::median: {
                    for (int r = 0; r < rows; ++r) order[r] = r;
                    std::sort(order.begin(), order.end(), [&](int a, int b) {
                        if (val(a) != val(b)) return val(a) < val(b);
                        return a < b;
                    });
                    if (rows % 2 == 1) {
                        const int mid = order[rows / 2];
                        out.push_back(val(mid));
                        choices.push_back(mid);
                    } else {
                        const int lo = order[rows / 2 - 1];
                        const int hi = order[rows / 2];
                        out.push_back(0.5 * (val(lo) + val(hi)));
                        choices.push_back(lo);
                        choices.push_back(hi);
                    }
                    break;
                }
            }
        }
    }
}

void forward_traced(std::span<const Image> patches, const LayoutVector& layout,
                    const ModelParams& params, const NetConfig& cfg,
                    const std::vector<Stat>& stats, Trace& tr) {
    if (static_cast<int>(patches.size()) != cfg.bag_size || patches.empty()) {
        raise(ErrorCode::ShapeMismatch, "bag size does not match config");
    }
    const int m = static_cast<int>(patches.size());
    const int k = cfg.extractor.feature_dim;
    const int ks = cfg.stat_dim;

    tr.patches.resize(m);
    tr.blob.assign(static_cast<size_t>(m) * k, 0.0);
    for (int i = 0; i < m; ++i) {
        extract_traced(patches[i], cfg.extractor, params, tr.patches[i]);
        std::copy(tr.patches[i].feat.begin(), tr.patches[i].feat.end(),
                  tr.blob.begin() + static_cast<size_t>(i) * k);
    }

    tr.stat_choice.clear();
    aggregate_traced(tr.blob, m, k, stats, tr.agg, tr.stat_choice);

    tr.h1pre.assign(static_cast<size_t>(ks), 0.0);
    fc_forward(params.w.agg1_w.v.data(), params.w.agg1_b.v.data(), tr.agg.data(),
               static_cast<int>(stats.size()) * k, ks, tr.h1pre.data());
    tr.h1 = tr.h1pre;
    for (double& v : tr.h1) v = std::max(0.0, v);

    tr.h2.assign(static_cast<size_t>(ks), 0.0);
    fc_forward(params.w.agg2_w.v.data(), params.w.agg2_b.v.data(), tr.h1.data(),
               ks, ks, tr.h2.data());

    tr.fused.resize(static_cast<size_t>(ks) + kLayoutDim);
    std::copy(tr.h2.begin(), tr.h2.end(), tr.fused.begin());
    std::copy(layout.v.begin(), layout.v.end(), tr.fused.begin() + ks);

    double z = 0.0;
    fc_forward(params.w.head_w.v.data(), params.w.head_b.v.data(), tr.fused.data(),
               ks + kLayoutDim, 1, &z);
    tr.logit = z;
    tr.prob = sigmoid(z);
}

// Accumulates parameter gradients for one example given dL/dlogit.
void backward_traced(const Trace& tr, const ModelParams& params,
                     const NetConfig& cfg, const std::vector<Stat>& stats,
                     double dz, ParamSet& g) {
    const int m = static_cast<int>(tr.patches.size());
    const int k = cfg.extractor.feature_dim;
    const int ks = cfg.stat_dim;
    const int u = static_cast<int>(stats.size());

    std::vector<double> dfused(static_cast<size_t>(ks) + kLayoutDim, 0.0);
    fc_backward(params.w.head_w.v.data(), tr.fused.data(), &dz, ks + kLayoutDim, 1,
                g.head_w.v.data(), g.head_b.v.data(), dfused.data());

    std::vector<double> dh2(dfused.begin(), dfused.begin() + ks);
    std::vector<double> dh1(static_cast<size_t>(ks), 0.0);
    fc_backward(params.w.agg2_w.v.data(), tr.h1.data(), dh2.data(), ks, ks,
                g.agg2_w.v.data(), g.agg2_b.v.data(), dh1.data());
    for (int i = 0; i < ks; ++i) {
        if (tr.h1pre[i] <= 0.0) dh1[i] = 0.0;
    }

    std::vector<double> dagg(static_cast<size_t>(u) * k, 0.0);
    fc_backward(params.w.agg1_w.v.data(), tr.agg.data(), dh1.data(), u * k, ks,
                g.agg1_w.v.data(), g.agg1_b.v.data(), dagg.data());

    std::vector<double> dblob(static_cast<size_t>(m) * k, 0.0);
    size_t choice_pos = 0;
    size_t out_pos = 0;
    for (const Stat stat : stats) {
        for (int kk = 0; kk < k; ++kk) {
            const double gu = dagg[out_pos++];
            switch (stat) {
                case Stat::max:
                case Stat::min: {
                    const int arg = tr.stat_choice[choice_pos++];
                    dblob[static_cast<size_t>(arg) * k + kk] += gu;
                    break;
                }
                case Stat::mean: {
                    for (int r = 0; r < m; ++r)
                        dblob[static_cast<size_t>(r) * k + kk] += gu / m;
                    break;
                }
                case Stat::median: {
                    if (m % 2 == 1) {
                        const int mid = tr.stat_choice[choice_pos++];
                        dblob[static_cast<size_t>(mid) * k + kk] += gu;
                    } else {
                        const int lo = tr.stat_choice[choice_pos++];
                        const int hi = tr.stat_choice[choice_pos++];
                        dblob[static_cast<size_t>(lo) * k + kk] += 0.5 * gu;
                        dblob[static_cast<size_t>(hi) * k + kk] += 0.5 * gu;
                    }
                    break;
                }
            }
        }
    }

    if (cfg.extractor.kind != ExtractorKind::tiny_conv) {
        return; // handcrafted extractor has no parameters
    }
    const int s = cfg.extractor.input_side;
    const int s2 = s / 2;
    const int s4 = s / 4;
    for (int i = 0; i < m; ++i) {
        const PatchTrace& pt = tr.patches[i];
        const double* dfeat = dblob.data() + static_cast<size_t>(i) * k;

        std::vector<double> dp2(static_cast<size_t>(kConv2Ch) * s4 * s4, 0.0);
        fc_backward(params.w.fc0_w.v.data(), pt.p2.data(), dfeat,
                    kConv2Ch * s4 * s4, k, g.fc0_w.v.data(), g.fc0_b.v.data(),
                    dp2.data());

        std::vector<double> da2(static_cast<size_t>(kConv2Ch) * s2 * s2, 0.0);
        maxpool2_backward(dp2.data(), pt.amax2.data(), kConv2Ch, s2, da2.data());
        for (size_t j = 0; j < da2.size(); ++j) {
            if (pt.pre2[j] <= 0.0) da2[j] = 0.0;
        }

        std::vector<double> dp1(static_cast<size_t>(kConv1Ch) * s2 * s2, 0.0);
        conv3x3_backward(pt.p1.data(), kConv1Ch, s2, params.w.conv2_w.v.data(),
                         kConv2Ch, da2.data(), g.conv2_w.v.data(),
                         g.conv2_b.v.data(), dp1.data());

        std::vector<double> da1(static_cast<size_t>(kConv1Ch) * s * s, 0.0);
        maxpool2_backward(dp1.data(), pt.amax1.data(), kConv1Ch, s, da1.data());
        for (size_t j = 0; j < da1.size(); ++j) {
            if (pt.pre1[j] <= 0.0) da1[j] = 0.0;
        }

        conv3x3_backward(pt.x.data(), 3, s, params.w.conv1_w.v.data(), kConv1Ch,
                         da1.data(), g.conv1_w.v.data(), g.conv1_b.v.data(),
                         nullptr);
    }
}

ParamSet zero_like(const ParamSet& src) {
    ParamSet out;
    std::vector<const Tensor*> s;
    std::vector<Tensor*> d;
    src.visit([&](const char*, const Tensor& t) { s.push_back(&t); });
    out.visit([&](const char*, Tensor& t) { d.push_back(&t); });
    for (size_t i = 0; i < s.size(); ++i) {
        d[i]->shape = s[i]->shape;
        d[i]->v.assign(s[i]->v.size(), 0.0);
    }
    return out;
}

void add_into(ParamSet& dst, const ParamSet& src) {
    std::vector<Tensor*> d;
    std::vector<const Tensor*> s;
    dst.visit([&](const char*, Tensor& t) { d.push_back(&t); });
    src.visit([&](const char*, const Tensor& t) { s.push_back(&t); });
    for (size_t i = 0; i < d.size(); ++i) {
        for (size_t j = 0; j < d[i]->v.size(); ++j) d[i]->v[j] += s[i]->v[j];
    }
}

double bce_loss(double logit, int label) {
    return label == 1 ? softplus(-logit) : softplus(logit);
}

LossGrads loss_grads_impl(std::span<const Example> batch, const ModelParams& params,
                          const NetConfig& cfg, bool parallel) {
    if (batch.empty()) raise(ErrorCode::EmptySet, "empty batch");
    const std::vector<Stat> stats = canonical_stats(cfg.stats);
    const int n = static_cast<int>(batch.size());

    // Validate up front; the parallel workers must not throw.
    for (const Example& ex : batch) {
        if (static_cast<int>(ex.patches.size()) != cfg.bag_size) {
            raise(ErrorCode::ShapeMismatch, "bag size does not match config");
        }
        for (const Image& p : ex.patches) check_patch(p, cfg.extractor);
    }
    if (cfg.extractor.kind == ExtractorKind::tiny_conv) {
        check_tiny_conv_side(cfg.extractor.input_side);
    }

    std::vector<ParamSet> per_example(n);
    std::vector<double> per_loss(n, 0.0);
    parallel_for(n, parallel, [&](int i) {
        Trace tr;
        forward_traced(batch[i].patches, batch[i].layout, params, cfg, stats, tr);
        per_loss[i] = bce_loss(tr.logit, batch[i].label);
        per_example[i] = zero_like(params.w);
        const double dz = (tr.prob - static_cast<double>(batch[i].label)) / n;
        backward_traced(tr, params, cfg, stats, dz, per_example[i]);
    });

    LossGrads out;
    out.grads = zero_like(params.w);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) { // fixed reduction order
        loss += per_loss[i];
        add_into(out.grads, per_example[i]);
    }
    out.loss = loss / n;
    return out;
}

// ---- gradient check ---------------------------------------------------------

struct Signature {
    std::vector<double> relu_pre;
    std::vector<int> choices;
};

void append_signature(const Trace& tr, Signature& sig) {
    for (const PatchTrace& pt : tr.patches) {
        sig.relu_pre.insert(sig.relu_pre.end(), pt.pre1.begin(), pt.pre1.end());
        sig.relu_pre.insert(sig.relu_pre.end(), pt.pre2.begin(), pt.pre2.end());
        sig.choices.insert(sig.choices.end(), pt.amax1.begin(), pt.amax1.end());
        sig.choices.insert(sig.choices.end(), pt.amax2.begin(), pt.amax2.end());
    }
    sig.relu_pre.insert(sig.relu_pre.end(), tr.h1pre.begin(), tr.h1pre.end());
    sig.choices.insert(sig.choices.end(), tr.stat_choice.begin(),
                       tr.stat_choice.end());
}

double loss_only(std::span<const Example> batch, const ModelParams& params,
                 const NetConfig& cfg, const std::vector<Stat>& stats,
                 Signature& sig) {
    double loss = 0.0;
    Trace tr;
    for (const Example& ex : batch) {
        forward_traced(ex.patches, ex.layout, params, cfg, stats, tr);
        loss += bce_loss(tr.logit, ex.label);
        append_signature(tr, sig);
    }
    return loss / static_cast<double>(batch.size());
}

// A coordinate sits against a discrete kink when its perturbation flips any
// branch decision or moves an influenced ReLU pre-activation into the
// |pre| < 10h band around zero.
bool kink_between(const Signature& a, const Signature& b, double h) {
    if (a.choices != b.choices) return true;
    if (a.relu_pre.size() != b.relu_pre.size()) return true;
    for (size_t i = 0; i < a.relu_pre.size(); ++i) {
        const double pa = a.relu_pre[i];
        const double pb = b.relu_pre[i];
        if (pa == pb) continue; // not influenced by this coordinate
        if ((pa > 0.0) != (pb > 0.0)) return true;
        if (std::min(std::abs(pa), std::abs(pb)) < 10.0 * h) return true;
    }
    return false;
}

} // namespace

const char* stat_name(Stat s) {
    switch (s) {
        case Stat::max: return "max";
        case Stat::mean: return "mean";
        case Stat::min: return "min";
        case Stat::median: return "median";
    }
    return "unknown";
}

const char* extractor_name(ExtractorKind k) {
    return k == ExtractorKind::handcrafted ? "handcrafted" : "tiny_conv";
}

std::vector<Stat> canonical_stats(std::vector<Stat> stats) {
    std::sort(stats.begin(), stats.end(),
              [](Stat a, Stat b) { return static_cast<int>(a) < static_cast<int>(b); });
    stats.erase(std::unique(stats.begin(), stats.end()), stats.end());
    if (stats.empty()) raise(ErrorCode::EmptySet, "statistics set is empty");
    return stats;
}

ModelParams init_params(const NetConfig& cfg, std::uint64_t seed) {
    const std::vector<Stat> stats = canonical_stats(cfg.stats);
    const int k = cfg.extractor.feature_dim;
    const int ks = cfg.stat_dim;
    if (k < 1 || ks < 1) raise(ErrorCode::ShapeMismatch, "bad feature dims");

    ModelParams p;
    if (cfg.extractor.kind == ExtractorKind::tiny_conv) {
        check_tiny_conv_side(cfg.extractor.input_side);
        const int s4 = cfg.extractor.input_side / 4;
        p.w.conv1_w = Tensor({kConv1Ch, 3, 3, 3});
        p.w.conv1_b = Tensor({kConv1Ch});
        p.w.conv2_w = Tensor({kConv2Ch, kConv1Ch, 3, 3});
        p.w.conv2_b = Tensor({kConv2Ch});
        p.w.fc0_w = Tensor({k, kConv2Ch * s4 * s4});
        p.w.fc0_b = Tensor({k});
    }
    p.w.agg1_w = Tensor({ks, static_cast<int>(stats.size()) * k});
    p.w.agg1_b = Tensor({ks});
    p.w.agg2_w = Tensor({ks, ks});
    p.w.agg2_b = Tensor({ks});
    p.w.head_w = Tensor({1, ks + kLayoutDim});
    p.w.head_b = Tensor({1});

    std::mt19937_64 rng(seed);
    auto uniform01 = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    auto fill = [&](Tensor& t, int fan_in, int fan_out) {
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : t.v) v = round_f32(a * (2.0 * uniform01() - 1.0));
    };
    if (cfg.extractor.kind == ExtractorKind::tiny_conv) {
        fill(p.w.conv1_w, 3 * 9, kConv1Ch * 9);
        fill(p.w.conv2_w, kConv1Ch * 9, kConv2Ch * 9);
        fill(p.w.fc0_w, p.w.fc0_w.shape[1], k);
    }
    fill(p.w.agg1_w, p.w.agg1_w.shape[1], ks);
    fill(p.w.agg2_w, ks, ks);
    fill(p.w.head_w, ks + kLayoutDim, 1);

    p.vel = zero_like(p.w);
    return p;
}

std::vector<double> extract_features(const Image& patch, const ExtractorSpec& spec,
                                     const ModelParams& params) {
    PatchTrace pt;
    extract_traced(patch, spec, params, pt);
    return pt.feat;
}

std::vector<double> stats_aggregate(const FeatureBlob& blob,
                                    std::span<const Stat> stats) {
    if (blob.rows < 1 || blob.cols < 1) {
        raise(ErrorCode::EmptyBlob, "stats_aggregate: empty blob");
    }
    const std::vector<Stat> canon =
        canonical_stats(std::vector<Stat>(stats.begin(), stats.end()));
    std::vector<double> out;
    std::vector<int> choices;
    aggregate_traced(blob.v, blob.rows, blob.cols, canon, out, choices);
    return out;
}

double forward(std::span<const Image> patches, const LayoutVector& layout,
               const ModelParams& params, const NetConfig& cfg) {
    const std::vector<Stat> stats = canonical_stats(cfg.stats);
    Trace tr;
    forward_traced(patches, layout, params, cfg, stats, tr);
    return tr.prob;
}

LossGrads loss_and_grads(std::span<const Example> batch, const ModelParams& params,
                         const NetConfig& cfg) {
    return loss_grads_impl(batch, params, cfg, true);
}

LossGrads loss_and_grads_serial(std::span<const Example> batch,
                                const ModelParams& params, const NetConfig& cfg) {
    return loss_grads_impl(batch, params, cfg, false);
}

GradCheckResult grad_check(const ModelParams& params, std::span<const Example> batch,
                           const NetConfig& cfg, double h, int min_coords,
                           std::uint64_t seed) {
    const std::vector<Stat> stats = canonical_stats(cfg.stats);
    const LossGrads analytic = loss_and_grads_serial(batch, params, cfg);

    std::vector<const Tensor*> wt;
    std::vector<const Tensor*> gt;
    params.w.visit([&](const char*, const Tensor& t) { wt.push_back(&t); });
    analytic.grads.visit([&](const char*, const Tensor& t) { gt.push_back(&t); });

    size_t total = 0;
    for (const Tensor* t : wt) total += t->size();

    std::vector<size_t> perm(total);
    for (size_t i = 0; i < total; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    for (size_t i = total; i > 1; --i) {
        const size_t j = rng() % i;
        std::swap(perm[i - 1], perm[j]);
    }

    auto locate = [&](size_t flat) {
        for (size_t t = 0; t < wt.size(); ++t) {
            if (flat < wt[t]->size()) return std::make_pair(t, flat);
            flat -= wt[t]->size();
        }
        raise(ErrorCode::ShapeMismatch, "coordinate out of range");
    };

    GradCheckResult res;
    size_t pos = 0;
    while (res.checked < min_coords && pos < total) {
        const int chunk =
            static_cast<int>(std::min<size_t>(total - pos, static_cast<size_t>(
                                                               std::max(min_coords, 64))));
        struct Probe {
            bool skipped = false;
            double err = 0.0;
        };
        std::vector<Probe> probes(chunk);
        parallel_for(chunk, true, [&](int ci) {
            const auto [t_idx, off] = locate(perm[pos + ci]);
            ModelParams local = params;
            std::vector<Tensor*> lw;
            local.w.visit([&](const char*, Tensor& t) { lw.push_back(&t); });
            const double orig = lw[t_idx]->v[off];

            Signature sp, sm;
            lw[t_idx]->v[off] = orig + h;
            const double lp = loss_only(batch, local, cfg, stats, sp);
            lw[t_idx]->v[off] = orig - h;
            const double lm = loss_only(batch, local, cfg, stats, sm);

            if (kink_between(sp, sm, h)) {
                probes[ci].skipped = true;
                return;
            }
            const double numeric = (lp - lm) / (2.0 * h);
            const double a = gt[t_idx]->v[off];
            probes[ci].err =
                std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        });
        for (int ci = 0; ci < chunk && res.checked < min_coords; ++ci) {
            if (probes[ci].skipped) {
                ++res.skipped;
            } else {
                ++res.checked;
                res.max_rel_err = std::max(res.max_rel_err, probes[ci].err);
            }
        }
        pos += static_cast<size_t>(chunk);
    }
    return res;
}

void sgd_step(ModelParams& params, const ParamSet& grads, const TrainConfig& cfg) {
    std::vector<Tensor*> w;
    std::vector<Tensor*> v;
    std::vector<const Tensor*> g;
    params.w.visit([&](const char*, Tensor& t) { w.push_back(&t); });
    params.vel.visit([&](const char*, Tensor& t) { v.push_back(&t); });
    grads.visit([&](const char*, const Tensor& t) { g.push_back(&t); });

    for (size_t t = 0; t < w.size(); ++t) {
        if (w[t]->size() != g[t]->size()) {
            raise(ErrorCode::ShapeMismatch, "gradient shape mismatch");
        }
        for (size_t i = 0; i < w[t]->size(); ++i) {
            const double gi = g[t]->v[i] + cfg.weight_decay * w[t]->v[i];
            const double vi = cfg.momentum * v[t]->v[i] + gi;
            v[t]->v[i] = round_f32(vi);
            w[t]->v[i] = round_f32(w[t]->v[i] - cfg.lr * vi);
        }
    }
}

TrainResult train(std::span<const Example> dataset, const NetConfig& cfg,
                  const TrainConfig& tcfg, TrainStage stage,
                  const ModelParams* stage1) {
    if (dataset.empty()) raise(ErrorCode::EmptySet, "empty training set");
    if (tcfg.lr <= 0.0) raise(ErrorCode::NumericError, "learning rate must be > 0");

    ModelParams params;
    if (stage == TrainStage::fused) {
        if (!stage1) {
            raise(ErrorCode::MissingStage1Checkpoint,
                  "fused stage requires the mp_only checkpoint");
        }
        params = *stage1;
    } else {
        params = init_params(cfg, tcfg.seed);
    }

    std::vector<Example> data(dataset.begin(), dataset.end());
    if (stage == TrainStage::mp_only) {
        for (Example& ex : data) ex.layout = LayoutVector{}; // zero attrs + flags
    }

    std::mt19937_64 rng(tcfg.seed);
    std::vector<int> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    const int bs = std::max(1, tcfg.batch_size);

    TrainResult result;
    std::vector<Example> batch;
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = rng() % i;
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += bs) {
            batch.clear();
            for (size_t i = start; i < std::min(order.size(), start + bs); ++i) {
                batch.push_back(data[order[i]]);
            }
            const LossGrads lg = loss_and_grads(batch, params, cfg);
            sgd_step(params, lg.grads, tcfg);
            epoch_loss += lg.loss;
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / batches);
    }
    result.params = std::move(params);
    return result;
}

} // namespace lamp

/* Copyright 2026 The fvb authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License. */

#ifndef FVB_ENCODER_HPP
#define FVB_ENCODER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fvb/reparam.hpp"

namespace fvb {

enum class StageKind { repmixer, attention };
enum class MultiscaleMethod { none, avgpool, dwconv };

inline const char* to_string(StageKind k) {
    return k == StageKind::repmixer ? "repmixer" : "attention";
}

inline StageKind stage_kind_from_string(const std::string& s) {
    if (s == "repmixer") return StageKind::repmixer;
    if (s == "attention") return StageKind::attention;
    throw usage_error("unknown stage kind '" + s + "'");
}

inline const char* to_string(MultiscaleMethod m) {
    switch (m) {
        case MultiscaleMethod::avgpool: return "avgpool";
        case MultiscaleMethod::dwconv: return "dwconv";
        default: return "none";
    }
}

inline MultiscaleMethod multiscale_from_string(const std::string& s) {
    if (s == "none") return MultiscaleMethod::none;
    if (s == "avgpool") return MultiscaleMethod::avgpool;
    if (s == "dwconv") return MultiscaleMethod::dwconv;
    throw usage_error("unknown multiscale method '" + s + "'");
}

// Number of overparameterized depthwise branches in train-form patch embeds
// and the stem unit.
inline constexpr int kOverparamBranches = 2;

// Full architectural description of one encoder variant. Channels double
// between consecutive stages; each stage transition halves the spatial grid,
// so the total downsample factor is stem_factor * 2^(stages-1).
struct EncoderConfig {
    std::string name;
    std::vector<int> stage_depths;
    std::vector<int> stage_dims;
    std::vector<StageKind> stage_kinds;
    int stem_factor = 4;
    float ffn_ratio = 4.0f;
    int head_dim = 64;
    MultiscaleMethod multiscale = MultiscaleMethod::none;
    int projector_dim = 896;

    int num_stages() const { return static_cast<int>(stage_depths.size()); }
    int downsample_factor() const { return stem_factor << (num_stages() - 1); }
    int final_dim() const { return stage_dims.back(); }
    int ffn_hidden(int dim) const { return static_cast<int>(ffn_ratio * dim + 0.5f); }
    int heads_for(int dim) const { return dim / head_dim; }
};

inline void validate_config(const EncoderConfig& cfg) {
    const size_t s = cfg.stage_depths.size();
    if (s == 0 || cfg.stage_dims.size() != s || cfg.stage_kinds.size() != s)
        throw shape_error("config '" + cfg.name + "': stage_depths/stage_dims/stage_kinds must be same nonzero length");
    if (cfg.stem_factor != 4)
        throw shape_error("config '" + cfg.name + "': stem factor must be 4");
    for (size_t i = 0; i < s; ++i) {
        if (cfg.stage_depths[i] < 1)
            throw shape_error("config '" + cfg.name + "': stage depths must be >= 1");
        if (cfg.stage_dims[i] < 1)
            throw shape_error("config '" + cfg.name + "': stage dims must be >= 1");
        if (i > 0 && cfg.stage_dims[i] != 2 * cfg.stage_dims[i - 1])
            throw shape_error("config '" + cfg.name + "': stage dims must double between stages, got " +
                              std::to_string(cfg.stage_dims[i - 1]) + " -> " +
                              std::to_string(cfg.stage_dims[i]));
        if (cfg.stage_kinds[i] == StageKind::attention && cfg.stage_dims[i] % cfg.head_dim != 0)
            throw shape_error("config '" + cfg.name + "': attention stage dim " +
                              std::to_string(cfg.stage_dims[i]) + " not divisible by head dim " +
                              std::to_string(cfg.head_dim));
    }
    if (cfg.ffn_ratio <= 0.0f)
        throw shape_error("config '" + cfg.name + "': ffn ratio must be positive");
    if (cfg.projector_dim < 1)
        throw shape_error("config '" + cfg.name + "': projector dim must be >= 1");
}

// The three built-in variants. fastvithd is the five-stage model with
// self-attention running on /32 and /64 grids; fastvit_naive_scaled is the
// four-stage width-scaled baseline with attention at /16 and /32; and
// fastvit_approx is a small four-stage stand-in for the MCi2-style encoder
// (token math is what matters about it, not its exact widths).
inline EncoderConfig builtin_config(const std::string& name) {
    EncoderConfig cfg;
    cfg.name = name;
    if (name == "fastvithd") {
        cfg.stage_depths = {2, 12, 24, 4, 2};
        cfg.stage_dims = {96, 192, 384, 768, 1536};
        cfg.stage_kinds = {StageKind::repmixer, StageKind::repmixer, StageKind::repmixer,
                           StageKind::attention, StageKind::attention};
        cfg.ffn_ratio = 4.0f;
    } else if (name == "fastvit_naive_scaled") {
        cfg.stage_depths = {2, 12, 16, 6};
        cfg.stage_dims = {128, 256, 512, 1024};
        cfg.stage_kinds = {StageKind::repmixer, StageKind::repmixer, StageKind::attention,
                           StageKind::attention};
        cfg.ffn_ratio = 3.0f;
    } else if (name == "fastvit_approx") {
        cfg.stage_depths = {2, 6, 10, 2};
        cfg.stage_dims = {64, 128, 256, 512};
        cfg.stage_kinds = {StageKind::repmixer, StageKind::repmixer, StageKind::repmixer,
                           StageKind::attention};
        cfg.ffn_ratio = 3.0f;
    } else {
        throw usage_error("unknown encoder config '" + name +
                          "' (expected fastvithd, fastvit_approx or fastvit_naive_scaled)");
    }
    validate_config(cfg);
    return cfg;
}

struct StageParams {
    StageKind kind = StageKind::repmixer;
    std::vector<RepBlockParams> rep_blocks;
    std::vector<AttnBlockParams> attn_blocks;

    size_t depth() const {
        return kind == StageKind::repmixer ? rep_blocks.size() : attn_blocks.size();
    }
};

// Learned pooling + projection for multi-scale aggregation. Tapped stage
// features are brought to the final grid (avg pool, or a strided depthwise
// conv with kernel == stride == ratio), channel-concatenated and projected
// back to the final stage width.
struct MultiscaleParams {
    MultiscaleMethod method = MultiscaleMethod::none;
    std::vector<int> tap_stages; // stage indices, ascending
    std::vector<int> ratios;     // stage grid / final grid, per tap
    std::vector<ConvParams> pool_dw; // dwconv method only, one per tap
    ConvParams proj;
};

struct ProjectorParams {
    ConvParams fc1, fc2;
};

struct EncoderModel {
    EncoderConfig config;
    Form form = Form::train;
    uint64_t seed = 0;
    StemParams stem;
    std::vector<StageParams> stages;
    std::vector<PatchEmbedParams> patch_embeds;
    std::optional<MultiscaleParams> multiscale;
    ProjectorParams projector;
};

// Token sequence handed to the LLM side: (n, seq, dim, 1) with seq = gh*gw
// in row-major grid order.
struct TokenGrid {
    Tensor tokens;
    int gh = 0, gw = 0;

    int seq() const { return tokens.c; }
    int dim() const { return tokens.h; }
};

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------
namespace detail {

inline ConvParams make_conv(Rng& rng, int out_ch, int in_ch, int k, int stride, int pad,
                            int groups) {
    ConvParams p;
    p.weight = Tensor(out_ch, in_ch / groups, k, k);
    p.bias.assign(out_ch, 0.0f);
    p.stride = stride;
    p.padding = pad;
    p.groups = groups;
    const float bound = 1.0f / std::sqrt(static_cast<float>((in_ch / groups) * k * k));
    for (float& v : p.weight.data) v = rng.uniform(-bound, bound);
    return p;
}

inline BnParams make_bn(Rng& rng, int c) {
    BnParams p;
    p.gamma.resize(c);
    p.beta.resize(c);
    p.mean.resize(c);
    p.var.resize(c);
    p.eps = 1e-5f;
    for (int i = 0; i < c; ++i) {
        p.gamma[i] = rng.uniform(0.8f, 1.2f);
        p.beta[i] = rng.uniform(-0.1f, 0.1f);
        p.mean[i] = rng.uniform(-0.1f, 0.1f);
        p.var[i] = rng.uniform(0.5f, 1.5f);
    }
    return p;
}

inline LayerNormParams make_ln(Rng& rng, int c) {
    LayerNormParams p;
    p.gamma.resize(c);
    p.beta.resize(c);
    p.eps = 1e-6f;
    for (int i = 0; i < c; ++i) {
        p.gamma[i] = rng.uniform(0.8f, 1.2f);
        p.beta[i] = rng.uniform(-0.1f, 0.1f);
    }
    return p;
}

inline PatchEmbedParams make_patch_embed(Rng& rng, int in_ch, int out_ch) {
    PatchEmbedParams p;
    p.form = Form::train;
    for (int b = 0; b < kOverparamBranches; ++b)
        p.branches.push_back({make_conv(rng, in_ch, in_ch, 7, 2, 3, in_ch), make_bn(rng, in_ch)});
    p.pointwise = make_conv(rng, out_ch, in_ch, 1, 1, 0, 1);
    p.pointwise_bn = make_bn(rng, out_ch);
    return p;
}

inline ConvFfnParams make_convffn(Rng& rng, int c, int hidden) {
    ConvFfnParams p;
    p.pre_dw = make_conv(rng, c, c, 7, 1, 3, c);
    p.pre_bn = make_bn(rng, c);
    p.fc1 = make_conv(rng, hidden, c, 1, 1, 0, 1);
    p.fc2 = make_conv(rng, c, hidden, 1, 1, 0, 1);
    return p;
}

inline RepBlockParams make_rep_block(Rng& rng, int c, int hidden) {
    RepBlockParams p;
    p.mixer.form = Form::train;
    p.mixer.mix_dw = make_conv(rng, c, c, 3, 1, 1, c);
    p.mixer.bn = make_bn(rng, c);
    p.ffn = make_convffn(rng, c, hidden);
    return p;
}

inline AttnBlockParams make_attn_block(Rng& rng, int c, int heads, int hidden) {
    AttnBlockParams p;
    p.cpe = make_conv(rng, c, c, 7, 1, 3, c);
    p.norm = make_ln(rng, c);
    p.attn.wq = make_conv(rng, c, c, 1, 1, 0, 1);
    p.attn.wk = make_conv(rng, c, c, 1, 1, 0, 1);
    p.attn.wv = make_conv(rng, c, c, 1, 1, 0, 1);
    p.attn.wo = make_conv(rng, c, c, 1, 1, 0, 1);
    p.attn.heads = heads;
    p.ffn = make_convffn(rng, c, hidden);
    return p;
}

// Multi-scale taps: the last three stages (fewer if the config is shorter).
inline std::vector<int> multiscale_taps(const EncoderConfig& cfg) {
    std::vector<int> taps;
    const int s = cfg.num_stages();
    for (int i = std::max(0, s - 3); i < s; ++i) taps.push_back(i);
    return taps;
}

} // namespace detail

// Deterministic for a given (config, seed): parameters are drawn from one
// seeded stream in a fixed construction order.
inline EncoderModel build(const EncoderConfig& cfg, uint64_t seed) {
    validate_config(cfg);
    EncoderModel m;
    m.config = cfg;
    m.form = Form::train;
    m.seed = seed;
    Rng rng(seed);

    const int c1 = cfg.stage_dims[0];
    m.stem.form = Form::train;
    m.stem.conv3 = detail::make_conv(rng, c1, 3, 3, 2, 1, 1);
    m.stem.conv3_bn = detail::make_bn(rng, c1);
    m.stem.unit = detail::make_patch_embed(rng, c1, c1);

    for (int i = 0; i < cfg.num_stages(); ++i) {
        const int c = cfg.stage_dims[i];
        const int hidden = cfg.ffn_hidden(c);
        StageParams stage;
        stage.kind = cfg.stage_kinds[i];
        for (int d = 0; d < cfg.stage_depths[i]; ++d) {
            if (stage.kind == StageKind::repmixer)
                stage.rep_blocks.push_back(detail::make_rep_block(rng, c, hidden));
            else
                stage.attn_blocks.push_back(
                    detail::make_attn_block(rng, c, cfg.heads_for(c), hidden));
        }
        m.stages.push_back(std::move(stage));
        if (i + 1 < cfg.num_stages())
            m.patch_embeds.push_back(
                detail::make_patch_embed(rng, c, cfg.stage_dims[i + 1]));
    }

    if (cfg.multiscale != MultiscaleMethod::none) {
        MultiscaleParams ms;
        ms.method = cfg.multiscale;
        ms.tap_stages = detail::multiscale_taps(cfg);
        int concat = 0;
        for (int tap : ms.tap_stages) {
            const int ratio = 1 << (cfg.num_stages() - 1 - tap);
            ms.ratios.push_back(ratio);
            concat += cfg.stage_dims[tap];
            if (cfg.multiscale == MultiscaleMethod::dwconv)
                ms.pool_dw.push_back(detail::make_conv(rng, cfg.stage_dims[tap],
                                                       cfg.stage_dims[tap], ratio, ratio, 0,
                                                       cfg.stage_dims[tap]));
        }
        ms.proj = detail::make_conv(rng, cfg.final_dim(), concat, 1, 1, 0, 1);
        m.multiscale = std::move(ms);
    }

    m.projector.fc1 = detail::make_conv(rng, cfg.projector_dim, cfg.final_dim(), 1, 1, 0, 1);
    m.projector.fc2 = detail::make_conv(rng, cfg.projector_dim, cfg.projector_dim, 1, 1, 0, 1);
    return m;
}

// ---------------------------------------------------------------------------
// forward pass
// ---------------------------------------------------------------------------

inline Tensor multiscale_aggregate(const std::vector<Tensor>& features,
                                   const MultiscaleParams& ms, int target_h, int target_w) {
    if (features.size() != ms.ratios.size())
        throw shape_error("multiscale: got " + std::to_string(features.size()) +
                          " features for " + std::to_string(ms.ratios.size()) + " taps");
    int concat_ch = 0;
    std::vector<Tensor> pooled;
    for (size_t i = 0; i < features.size(); ++i) {
        const Tensor& f = features[i];
        const int ratio = ms.ratios[i];
        if (f.h != target_h * ratio || f.w != target_w * ratio)
            throw shape_error("multiscale: feature " + f.shape_str() + " is not ratio " +
                              std::to_string(ratio) + " of target grid " +
                              std::to_string(target_h) + "x" + std::to_string(target_w));
        if (ms.method == MultiscaleMethod::avgpool)
            pooled.push_back(ratio == 1 ? f : avg_pool(f, ratio, ratio));
        else
            pooled.push_back(conv2d(f, ms.pool_dw[i]));
        concat_ch += f.c;
    }
    Tensor cat(pooled[0].n, concat_ch, target_h, target_w);
    int co = 0;
    for (const Tensor& f : pooled) {
        for (int b = 0; b < f.n; ++b)
            for (int ic = 0; ic < f.c; ++ic)
                std::copy(f.plane(b, ic), f.plane(b, ic) + static_cast<size_t>(f.h) * f.w,
                          cat.plane(b, co + ic));
        co += f.c;
    }
    return conv2d(cat, ms.proj);
}

namespace detail {

inline Tensor run_stage(const Tensor& x, const StageParams& stage) {
    Tensor y = x;
    if (stage.kind == StageKind::repmixer)
        for (const auto& b : stage.rep_blocks) y = rep_block_forward(y, b);
    else
        for (const auto& b : stage.attn_blocks) y = attn_block_forward(y, b);
    return y;
}

} // namespace detail

inline TokenGrid forward(const EncoderModel& m, const Tensor& x) {
    const int factor = m.config.downsample_factor();
    if (x.h % factor != 0 || x.w % factor != 0)
        throw shape_error("forward: input " + x.shape_str() + " not divisible by required factor " +
                          std::to_string(factor));

    Tensor y = stem_forward(x, m.stem);
    std::vector<Tensor> taps;
    const std::vector<int> tap_stages =
        m.multiscale ? m.multiscale->tap_stages : std::vector<int>{};
    for (int i = 0; i < m.config.num_stages(); ++i) {
        y = detail::run_stage(y, m.stages[i]);
        if (std::find(tap_stages.begin(), tap_stages.end(), i) != tap_stages.end())
            taps.push_back(y);
        if (i + 1 < m.config.num_stages()) y = patch_embed_forward(y, m.patch_embeds[i]);
    }

    if (m.multiscale) y = multiscale_aggregate(taps, *m.multiscale, y.h, y.w);
    y = conv2d(gelu(conv2d(y, m.projector.fc1)), m.projector.fc2);

    TokenGrid grid;
    grid.gh = y.h;
    grid.gw = y.w;
    grid.tokens = Tensor(y.n, y.h * y.w, y.c, 1);
    for (int b = 0; b < y.n; ++b)
        for (int d = 0; d < y.c; ++d) {
            const float* src = y.plane(b, d);
            for (int t = 0; t < y.h * y.w; ++t) grid.tokens.at(b, t, d, 0) = src[t];
        }
    return grid;
}

// ---------------------------------------------------------------------------
// whole-model folding
// ---------------------------------------------------------------------------

inline std::pair<EncoderModel, std::vector<FoldReport>> fold_model(const EncoderModel& m,
                                                                   int probes = 8) {
    if (m.form != Form::train)
        throw state_error("fold_model: model is already in inference form");
    EncoderModel out = m;
    out.form = Form::inference;
    std::vector<FoldReport> reports;

    auto [stem, stem_report] = fold_block(m.stem, "stem", probes);
    out.stem = std::move(stem);
    reports.push_back(stem_report);

    for (size_t i = 0; i < m.stages.size(); ++i) {
        if (m.stages[i].kind != StageKind::repmixer) continue;
        for (size_t j = 0; j < m.stages[i].rep_blocks.size(); ++j) {
            const std::string id =
                "stage" + std::to_string(i + 1) + ".block" + std::to_string(j);
            auto [mixer, report] = fold_block(m.stages[i].rep_blocks[j].mixer, id, probes);
            out.stages[i].rep_blocks[j].mixer = std::move(mixer);
            reports.push_back(report);
        }
    }
    for (size_t i = 0; i < m.patch_embeds.size(); ++i) {
        const std::string id = "patch_embed" + std::to_string(i + 1);
        auto [pe, report] = fold_block(m.patch_embeds[i], id, probes);
        out.patch_embeds[i] = std::move(pe);
        reports.push_back(report);
    }
    return {std::move(out), std::move(reports)};
}

// ---------------------------------------------------------------------------
// analytic parameter and MAC counts
// ---------------------------------------------------------------------------
namespace detail {

inline int64_t conv_params(int out_ch, int in_ch, int groups, int k) {
    return static_cast<int64_t>(out_ch) * (in_ch / groups) * k * k + out_ch;
}

} // namespace detail

// Exact parameter count of a built model in the given form; kept analytic so
// it never needs a 125M-float allocation, and tested against param_count()
// of real builds.
inline int64_t count_params(const EncoderConfig& cfg, Form form) {
    validate_config(cfg);
    using detail::conv_params;
    const bool train = form == Form::train;
    const int k_br = train ? kOverparamBranches : 1;
    auto bn = [&](int c) { return train ? static_cast<int64_t>(4) * c : 0; };
    auto patch_embed = [&](int cin, int cout) {
        int64_t total = k_br * (conv_params(cin, cin, cin, 7) + bn(cin));
        total += conv_params(cout, cin, 1, 1) + bn(cout);
        return total;
    };
    auto convffn = [&](int c) {
        const int hidden = cfg.ffn_hidden(c);
        // the pre-DW batch norm is not reparameterized, so it stays in both forms
        return conv_params(c, c, c, 7) + static_cast<int64_t>(4) * c +
               conv_params(hidden, c, 1, 1) + conv_params(c, hidden, 1, 1);
    };

    const int c1 = cfg.stage_dims[0];
    int64_t total = conv_params(c1, 3, 1, 3) + bn(c1) + patch_embed(c1, c1);

    for (int i = 0; i < cfg.num_stages(); ++i) {
        const int c = cfg.stage_dims[i];
        int64_t block;
        if (cfg.stage_kinds[i] == StageKind::repmixer) {
            block = conv_params(c, c, c, 3) + bn(c) + convffn(c);
        } else {
            block = conv_params(c, c, c, 7)             // cpe
                    + 2 * static_cast<int64_t>(c)       // layer norm
                    + 4 * conv_params(c, c, 1, 1)       // q, k, v, o
                    + convffn(c);
        }
        total += static_cast<int64_t>(cfg.stage_depths[i]) * block;
        if (i + 1 < cfg.num_stages()) total += patch_embed(c, cfg.stage_dims[i + 1]);
    }

    if (cfg.multiscale != MultiscaleMethod::none) {
        const auto taps = detail::multiscale_taps(cfg);
        int concat = 0;
        for (int tap : taps) {
            const int c = cfg.stage_dims[tap];
            concat += c;
            if (cfg.multiscale == MultiscaleMethod::dwconv) {
                const int ratio = 1 << (cfg.num_stages() - 1 - tap);
                total += conv_params(c, c, c, ratio);
            }
        }
        total += conv_params(cfg.final_dim(), concat, 1, 1);
    }

    total += conv_params(cfg.projector_dim, cfg.final_dim(), 1, 1);
    total += conv_params(cfg.projector_dim, cfg.projector_dim, 1, 1);
    return total;
}

inline int64_t param_count(const StageParams& s) {
    size_t total = 0;
    for (const auto& b : s.rep_blocks) total += param_count(b);
    for (const auto& b : s.attn_blocks) total += param_count(b);
    return static_cast<int64_t>(total);
}

inline int64_t param_count(const EncoderModel& m) {
    int64_t total = static_cast<int64_t>(param_count(m.stem));
    for (const auto& s : m.stages) total += param_count(s);
    for (const auto& pe : m.patch_embeds) total += static_cast<int64_t>(param_count(pe));
    if (m.multiscale) {
        for (const auto& dw : m.multiscale->pool_dw)
            total += static_cast<int64_t>(param_count(dw));
        total += static_cast<int64_t>(param_count(m.multiscale->proj));
    }
    total += static_cast<int64_t>(param_count(m.projector.fc1));
    total += static_cast<int64_t>(param_count(m.projector.fc2));
    return total;
}

// Analytic multiply-accumulate count of a forward pass. Convention: conv and
// attention matmul MACs only; normalizations, activations, softmax and
// residual adds are excluded.
inline int64_t count_flops(const EncoderConfig& cfg, int res, Form form = Form::inference) {
    validate_config(cfg);
    const int factor = cfg.downsample_factor();
    if (res % factor != 0)
        throw shape_error("count_flops: resolution " + std::to_string(res) +
                          " not divisible by required factor " + std::to_string(factor));
    const bool train = form == Form::train;
    const int k_br = train ? kOverparamBranches : 1;
    auto conv_macs = [](int64_t out_elems, int in_ch, int groups, int k) {
        return out_elems * (in_ch / groups) * k * k;
    };

    const int c1 = cfg.stage_dims[0];
    const int64_t half = static_cast<int64_t>(res / 2) * (res / 2);
    const int64_t quarter = static_cast<int64_t>(res / 4) * (res / 4);
    int64_t total = conv_macs(half * c1, 3, 1, 3);                   // stem conv3x3
    total += k_br * conv_macs(quarter * c1, c1, c1, 7);              // stem unit DW
    total += conv_macs(quarter * c1, c1, 1, 1);                      // stem unit PW

    int grid = res / cfg.stem_factor;
    for (int i = 0; i < cfg.num_stages(); ++i) {
        const int c = cfg.stage_dims[i];
        const int hidden = cfg.ffn_hidden(c);
        const int64_t cells = static_cast<int64_t>(grid) * grid;
        const int64_t ffn = conv_macs(cells * c, c, c, 7) + conv_macs(cells * hidden, c, 1, 1) +
                            conv_macs(cells * c, hidden, 1, 1);
        int64_t block;
        if (cfg.stage_kinds[i] == StageKind::repmixer) {
            block = conv_macs(cells * c, c, c, 3) + ffn;
        } else {
            block = conv_macs(cells * c, c, c, 7)      // cpe
                    + 4 * conv_macs(cells * c, c, 1, 1) // q, k, v, o
                    + 2 * cells * cells * c             // scores + apply
                    + ffn;
        }
        total += static_cast<int64_t>(cfg.stage_depths[i]) * block;
        if (i + 1 < cfg.num_stages()) {
            const int cout = cfg.stage_dims[i + 1];
            const int64_t out_cells = static_cast<int64_t>(grid / 2) * (grid / 2);
            total += k_br * conv_macs(out_cells * c, c, c, 7);
            total += conv_macs(out_cells * cout, c, 1, 1);
            grid /= 2;
        }
    }

    const int64_t final_cells = static_cast<int64_t>(grid) * grid;
    if (cfg.multiscale != MultiscaleMethod::none) {
        const auto taps = detail::multiscale_taps(cfg);
        int concat = 0;
        for (int tap : taps) {
            const int c = cfg.stage_dims[tap];
            concat += c;
            if (cfg.multiscale == MultiscaleMethod::dwconv) {
                const int ratio = 1 << (cfg.num_stages() - 1 - tap);
                total += conv_macs(final_cells * c, c, c, ratio);
            }
        }
        total += conv_macs(final_cells * cfg.final_dim(), concat, 1, 1);
    }
    total += conv_macs(final_cells * cfg.projector_dim, cfg.final_dim(), 1, 1);
    total += conv_macs(final_cells * cfg.projector_dim, cfg.projector_dim, 1, 1);
    return total;
}

} // namespace fvb

#endif // FVB_ENCODER_HPP

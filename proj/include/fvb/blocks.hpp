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

#ifndef FVB_BLOCKS_HPP
#define FVB_BLOCKS_HPP

#include <optional>
#include <string>
#include <vector>

#include "fvb/tensor.hpp"

namespace fvb {

enum class Form { train, inference };

inline const char* to_string(Form f) { return f == Form::train ? "train" : "inference"; }

inline Form form_from_string(const std::string& s) {
    if (s == "train") return Form::train;
    if (s == "inference") return Form::inference;
    throw usage_error("unknown form '" + s + "', expected train or inference");
}

// One overparameterized depthwise branch: conv followed by batch norm.
struct ConvBnBranch {
    ConvParams conv;
    BnParams bn;
};

// Stride-2 downsampling unit between stages: k parallel 7x7 depthwise
// branches (each conv+BN) summed, then a 1x1 pointwise conv (+BN in train
// form). Stride 2 leaves no room for an identity branch, so there is none.
struct PatchEmbedParams {
    Form form = Form::train;
    std::vector<ConvBnBranch> branches;      // train form
    ConvParams pointwise;                    // train form (bare conv)
    std::optional<BnParams> pointwise_bn;    // train form
    std::optional<ConvParams> folded_dw;     // inference form
    std::optional<ConvParams> folded_pw;     // inference form
};

// Token mixer. Train form is x + BN(DW3x3(x)); inference form is the single
// depthwise conv with the identity merged in.
struct RepMixerParams {
    Form form = Form::train;
    ConvParams mix_dw;
    std::optional<BnParams> bn; // train form only
};

// 7x7 depthwise + BN preceding the two 1x1 FFN layers. fc1 expands channels
// by the configured ratio; the residual is part of the block.
struct ConvFfnParams {
    ConvParams pre_dw;
    BnParams pre_bn;
    ConvParams fc1;
    ConvParams fc2;
};

struct MhsaParams {
    ConvParams wq, wk, wv, wo;
    int heads = 1;
};

struct LayerNormParams {
    std::vector<float> gamma, beta;
    float eps = 1e-6f;
};

// Attention block: residual 7x7 depthwise positional encoding, pre-norm
// attention, then ConvFFN. The CPE conv is kept un-reparameterized.
struct AttnBlockParams {
    ConvParams cpe;
    LayerNormParams norm;
    MhsaParams attn;
    ConvFfnParams ffn;
};

// Input stem: 3x3 stride-2 conv (+BN in train form) into a patch-embed-style
// 7x7 DW stride-2 / 1x1 PW unit. Composed spatial reduction is exactly 4.
struct StemParams {
    Form form = Form::train;
    ConvParams conv3;
    std::optional<BnParams> conv3_bn; // train form only
    PatchEmbedParams unit;
};

// A full mixer-stage block: token mixer plus ConvFFN.
struct RepBlockParams {
    RepMixerParams mixer;
    ConvFfnParams ffn;
};

// ---------------------------------------------------------------------------
// forward passes
// ---------------------------------------------------------------------------

inline Tensor patch_embed_forward(const Tensor& x, const PatchEmbedParams& p) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw shape_error("patch_embed: spatial dims " + x.shape_str() + " must be even");
    if (p.form == Form::train) {
        if (p.branches.empty() || p.folded_dw || p.folded_pw)
            throw state_error("patch_embed: train form requires branches and no folded params");
        Tensor acc = batch_norm_inference(conv2d(x, p.branches[0].conv), p.branches[0].bn);
        for (size_t i = 1; i < p.branches.size(); ++i)
            acc = add(acc, batch_norm_inference(conv2d(x, p.branches[i].conv), p.branches[i].bn));
        Tensor out = conv2d(acc, p.pointwise);
        if (!p.pointwise_bn)
            throw state_error("patch_embed: train form requires pointwise BN");
        return batch_norm_inference(out, *p.pointwise_bn);
    }
    if (!p.folded_dw || !p.folded_pw)
        throw state_error("patch_embed: inference form requires folded params");
    return conv2d(conv2d(x, *p.folded_dw), *p.folded_pw);
}

inline Tensor repmixer_forward(const Tensor& x, const RepMixerParams& p) {
    if (p.form == Form::train) {
        if (!p.bn) throw state_error("repmixer: train form requires BN params");
        return add(x, batch_norm_inference(conv2d(x, p.mix_dw), *p.bn));
    }
    if (p.bn) throw state_error("repmixer: inference form must not carry BN params");
    return conv2d(x, p.mix_dw);
}

inline Tensor convffn_forward(const Tensor& x, const ConvFfnParams& p) {
    const int hidden = p.fc1.out_channels();
    // fc1 width is pinned to the configured expansion of the input width; a
    // mismatched hidden dim is a construction bug, not a data error.
    if (p.fc2.out_channels() != x.c || p.fc1.in_channels() != x.c)
        throw shape_error("convffn: channel mismatch, input " + std::to_string(x.c) +
                          " vs fc1 in " + std::to_string(p.fc1.in_channels()) + ", fc2 out " +
                          std::to_string(p.fc2.out_channels()));
    if (p.fc2.in_channels() != hidden)
        throw shape_error("convffn: fc2 expects " + std::to_string(p.fc2.in_channels()) +
                          " channels, fc1 produces " + std::to_string(hidden));
    Tensor y = batch_norm_inference(conv2d(x, p.pre_dw), p.pre_bn);
    y = conv2d(gelu(conv2d(y, p.fc1)), p.fc2);
    return add(x, y);
}

inline Tensor attn_block_forward(const Tensor& x, const AttnBlockParams& p) {
    const Tensor x1 = add(x, conv2d(x, p.cpe));
    const Tensor normed = layer_norm(x1, p.norm.gamma, p.norm.beta, p.norm.eps);
    const Tensor x2 = add(x1, mhsa(normed, p.attn.wq, p.attn.wk, p.attn.wv, p.attn.wo, p.attn.heads));
    return convffn_forward(x2, p.ffn);
}

inline Tensor stem_forward(const Tensor& x, const StemParams& p) {
    if (x.h % 4 != 0 || x.w % 4 != 0)
        throw shape_error("stem: input " + x.shape_str() + " not divisible by 4 per side");
    Tensor y = conv2d(x, p.conv3);
    if (p.form == Form::train) {
        if (!p.conv3_bn) throw state_error("stem: train form requires conv BN");
        y = batch_norm_inference(y, *p.conv3_bn);
    } else if (p.conv3_bn) {
        throw state_error("stem: inference form must not carry conv BN");
    }
    return patch_embed_forward(y, p.unit);
}

inline Tensor rep_block_forward(const Tensor& x, const RepBlockParams& p) {
    return convffn_forward(repmixer_forward(x, p.mixer), p.ffn);
}

} // namespace fvb

#endif // FVB_BLOCKS_HPP

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

#include "fvb/encoder.hpp"

#include <gtest/gtest.h>

using namespace fvb;

namespace {

Tensor random_input(Rng& rng, int c, int hw) {
    Tensor t(1, c, hw, hw);
    for (float& v : t.data) v = rng.uniform(-1.0f, 1.0f);
    return t;
}

BnParams identity_bn(int c) {
    BnParams p;
    p.gamma.assign(c, 1.0f);
    p.beta.assign(c, 0.0f);
    p.mean.assign(c, 0.0f);
    p.var.assign(c, 1.0f);
    p.eps = 0.0f;
    return p;
}

} // namespace

TEST(FoldBn, IdentityBnIsBitExactNoOp) {
    Rng rng(1);
    const ConvParams conv = detail::make_conv(rng, 6, 4, 3, 1, 1, 1);
    const ConvParams folded = fold_bn_into_conv(conv, identity_bn(6));
    EXPECT_EQ(folded.weight.data, conv.weight.data);
    EXPECT_EQ(folded.bias, conv.bias);
}

TEST(FoldBn, ZeroConvTakesBeta) {
    ConvParams conv;
    conv.weight = Tensor(1, 1, 1, 1);
    conv.bias = {0.0f};
    BnParams bn = identity_bn(1);
    bn.beta = {2.0f};
    const ConvParams folded = fold_bn_into_conv(conv, bn);
    EXPECT_FLOAT_EQ(folded.bias[0], 2.0f);
    EXPECT_FLOAT_EQ(folded.weight.data[0], 0.0f);
}

TEST(FoldBn, ComposedVsFoldedOn50Inputs) {
    Rng rng(2);
    const ConvParams conv = detail::make_conv(rng, 6, 6, 3, 1, 1, 1);
    const BnParams bn = detail::make_bn(rng, 6);
    const ConvParams folded = fold_bn_into_conv(conv, bn);
    for (int i = 0; i < 50; ++i) {
        const Tensor x = random_input(rng, 6, 6);
        EXPECT_LE(max_abs_diff(conv2d(x, folded), batch_norm_inference(conv2d(x, conv), bn)),
                  1e-5f);
    }
    BnParams wrong = detail::make_bn(rng, 4);
    EXPECT_THROW(fold_bn_into_conv(conv, wrong), shape_error);
}

TEST(IdentityKernel, PassThrough) {
    Rng rng(3);
    for (auto [c, k] : std::vector<std::pair<int, int>>{{4, 3}, {96, 3}, {7, 5}}) {
        const Tensor x = random_input(rng, c, 6);
        EXPECT_EQ(max_abs_diff(conv2d(x, identity_kernel(c, k)), x), 0.0f);
    }
    const ConvParams one = identity_kernel(1, 1);
    EXPECT_FLOAT_EQ(one.weight.data[0], 1.0f);
    EXPECT_THROW(identity_kernel(4, 2), shape_error);
}

TEST(MergeBranches, SingleBranchUnchanged) {
    Rng rng(4);
    const ConvParams b = detail::make_conv(rng, 4, 4, 3, 1, 1, 4);
    const ConvParams merged = merge_parallel_branches({b});
    EXPECT_EQ(merged.weight.data, b.weight.data);
    EXPECT_EQ(merged.bias, b.bias);
}

TEST(MergeBranches, NegationCancels) {
    Rng rng(5);
    ConvParams b = detail::make_conv(rng, 4, 4, 3, 1, 1, 4);
    for (float& v : b.bias) v = 0.5f;
    ConvParams neg = b;
    for (float& v : neg.weight.data) v = -v;
    for (float& v : neg.bias) v = -v;
    const ConvParams merged = merge_parallel_branches({b, neg});
    for (float v : merged.weight.data) EXPECT_FLOAT_EQ(v, 0.0f);
    for (float v : merged.bias) EXPECT_FLOAT_EQ(v, 0.0f);
}

TEST(MergeBranches, SumOracleOn7x7Depthwise) {
    Rng rng(6);
    const ConvParams a = detail::make_conv(rng, 8, 8, 7, 2, 3, 8);
    const ConvParams b = detail::make_conv(rng, 8, 8, 7, 2, 3, 8);
    const ConvParams merged = merge_parallel_branches({a, b});
    for (int i = 0; i < 10; ++i) {
        const Tensor x = random_input(rng, 8, 10);
        EXPECT_LE(max_abs_diff(conv2d(x, merged), add(conv2d(x, a), conv2d(x, b))), 1e-5f);
    }
}

TEST(MergeBranches, CenterAlignsSmallerKernels) {
    Rng rng(7);
    const ConvParams k3 = detail::make_conv(rng, 4, 4, 3, 1, 1, 4);
    ConvParams k1 = detail::make_conv(rng, 4, 4, 1, 1, 0, 4);
    const ConvParams merged = merge_parallel_branches({k3, k1});
    EXPECT_EQ(merged.kernel(), 3);
    EXPECT_EQ(merged.padding, 1);
    for (int i = 0; i < 10; ++i) {
        const Tensor x = random_input(rng, 4, 5);
        // center-aligned zero padding of the 1x1 kernel into a 3x3 makes the
        // merged conv at pad 1 equal the sum of conv(k3, pad 1) + conv(k1, pad 0)
        EXPECT_LE(max_abs_diff(conv2d(x, merged), add(conv2d(x, k3), conv2d(x, k1))), 1e-5f);
    }
    ConvParams stride2 = detail::make_conv(rng, 4, 4, 3, 2, 1, 4);
    EXPECT_THROW(merge_parallel_branches({k3, stride2}), shape_error);
    ConvParams even = detail::make_conv(rng, 4, 4, 2, 1, 0, 4);
    EXPECT_THROW(merge_parallel_branches({k3, even}), shape_error);
    EXPECT_THROW(merge_parallel_branches({}), shape_error);
}

TEST(FoldBlock, ZeroMixerFoldsToIdentityKernel) {
    RepMixerParams p;
    p.form = Form::train;
    p.mix_dw = identity_kernel(8, 3); // reuse shape, then zero it
    std::fill(p.mix_dw.weight.data.begin(), p.mix_dw.weight.data.end(), 0.0f);
    p.bn = identity_bn(8);
    auto [folded, report] = fold_block(p, "zero", 8);
    EXPECT_EQ(folded.mix_dw.weight.data, identity_kernel(8, 3).weight.data);
    EXPECT_EQ(report.max_abs_diff, 0.0f);
}

TEST(FoldBlock, AlreadyFoldedErrors) {
    Rng rng(8);
    RepMixerParams p;
    p.form = Form::train;
    p.mix_dw = detail::make_conv(rng, 8, 8, 3, 1, 1, 8);
    p.bn = detail::make_bn(rng, 8);
    auto [folded, report] = fold_block(p, "x", 8);
    EXPECT_THROW(fold_repmixer_params(folded), state_error);
    PatchEmbedParams pe = detail::make_patch_embed(rng, 8, 16);
    const PatchEmbedParams pef = fold_patch_embed_params(pe);
    EXPECT_THROW(fold_patch_embed_params(pef), state_error);
}

// The central property: train-form and folded inference-form outputs agree
// within 1e-4 max abs on randomized draws of every reparameterizable kind.
TEST(FoldBlock, HundredRandomDrawsPerKind) {
    Rng rng(0xabcdef);
    const int kDraws = 100;
    const int channels[] = {4, 8, 16, 32};

    for (int i = 0; i < kDraws; ++i) {
        const int c = channels[rng.next_u64() % 4];
        RepMixerParams p;
        p.form = Form::train;
        p.mix_dw = detail::make_conv(rng, c, c, 3, 1, 1, c);
        p.bn = detail::make_bn(rng, c);
        auto [folded, report] = fold_block(p, "mix", 4);
        ASSERT_LE(report.max_abs_diff, 1e-4f) << "repmixer draw " << i;
    }
    for (int i = 0; i < kDraws; ++i) {
        const int c = channels[rng.next_u64() % 4];
        const PatchEmbedParams p = detail::make_patch_embed(rng, c, 2 * c);
        auto [folded, report] = fold_block(p, "pe", 4);
        ASSERT_LE(report.max_abs_diff, 1e-4f) << "patch_embed draw " << i;
    }
    for (int i = 0; i < kDraws; ++i) {
        const int c = channels[rng.next_u64() % 4];
        StemParams p;
        p.form = Form::train;
        p.conv3 = detail::make_conv(rng, c, 3, 3, 2, 1, 1);
        p.conv3_bn = detail::make_bn(rng, c);
        p.unit = detail::make_patch_embed(rng, c, c);
        auto [folded, report] = fold_block(p, "stem", 4);
        ASSERT_LE(report.max_abs_diff, 1e-4f) << "stem draw " << i;
    }
}

TEST(FoldBlock, ReducesParamsKeepsShape) {
    Rng rng(9);
    const PatchEmbedParams pe = detail::make_patch_embed(rng, 8, 16);
    const PatchEmbedParams folded = fold_patch_embed_params(pe);
    EXPECT_LT(param_count(folded), param_count(pe));
    const Tensor x = random_input(rng, 8, 8);
    EXPECT_EQ(patch_embed_forward(x, pe).shape_str(), patch_embed_forward(x, folded).shape_str());

    RepMixerParams mix;
    mix.form = Form::train;
    mix.mix_dw = detail::make_conv(rng, 8, 8, 3, 1, 1, 8);
    mix.bn = detail::make_bn(rng, 8);
    EXPECT_LT(param_count(fold_repmixer_params(mix)), param_count(mix));
}

TEST(FoldReport, RecordsSeedAndProbes) {
    Rng rng(10);
    RepMixerParams p;
    p.form = Form::train;
    p.mix_dw = detail::make_conv(rng, 8, 8, 3, 1, 1, 8);
    p.bn = detail::make_bn(rng, 8);
    auto [folded, report] = fold_block(p, "stage1.block0", 16);
    EXPECT_EQ(report.block_id, "stage1.block0");
    EXPECT_EQ(report.probe_count, 16);
    EXPECT_EQ(report.probe_seed, kFoldProbeSeed);
    EXPECT_GE(report.max_abs_diff, 0.0f);
}

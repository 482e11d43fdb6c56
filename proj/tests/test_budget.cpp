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

#include "fvb/budget.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace fvb;

namespace {

// O(n^2) dominance oracle with the same duplicate rule: survivors are points
// no other point dominates, minus later exact (ttft, accuracy) duplicates.
std::vector<TtftPoint> pareto_oracle(const std::vector<TtftPoint>& pts) {
    std::vector<TtftPoint> out;
    for (size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < pts.size() && !dominated; ++j) {
            if (i == j) continue;
            const bool le = pts[j].ttft_ms <= pts[i].ttft_ms;
            const bool ge = *pts[j].accuracy >= *pts[i].accuracy;
            const bool strict =
                pts[j].ttft_ms < pts[i].ttft_ms || *pts[j].accuracy > *pts[i].accuracy;
            if (le && ge && strict) dominated = true;
        }
        if (dominated) continue;
        bool duplicate = false;
        for (size_t j = 0; j < i && !duplicate; ++j)
            if (pts[j].ttft_ms == pts[i].ttft_ms && *pts[j].accuracy == *pts[i].accuracy)
                duplicate = true;
        if (!duplicate) out.push_back(pts[i]);
    }
    std::sort(out.begin(), out.end(),
              [](const TtftPoint& a, const TtftPoint& b) { return a.ttft_ms < b.ttft_ms; });
    return out;
}

bool same_points(const std::vector<TtftPoint>& a, const std::vector<TtftPoint>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].ttft_ms != b[i].ttft_ms || *a[i].accuracy != *b[i].accuracy ||
            a[i].encoder != b[i].encoder)
            return false;
    return true;
}

TtftPoint pt(double enc, double prefill, double acc, const std::string& tag = "e") {
    return make_point(tag, "llm", 0, 0, enc, prefill, acc);
}

} // namespace

TEST(VisualTokens, ReproducesPublishedCounts) {
    EXPECT_EQ(visual_tokens(builtin_family("vit14"), 336), 576);
    EXPECT_EQ(visual_tokens(builtin_family("fastvit"), 256), 64);
    EXPECT_EQ(visual_tokens(builtin_family("fastvit"), 768), 576);
    EXPECT_EQ(visual_tokens(builtin_family("fastvithd"), 256), 16);
    EXPECT_EQ(visual_tokens(builtin_family("fastvithd"), 512), 64);
    EXPECT_EQ(visual_tokens(builtin_family("fastvithd"), 768), 144);
    EXPECT_EQ(visual_tokens(builtin_family("fastvithd"), 1024), 256);
    EXPECT_EQ(visual_tokens(builtin_family("convnext-l"), 320), 100);
    EXPECT_EQ(visual_tokens(builtin_family("convnext-l"), 512), 256);
    EXPECT_EQ(visual_tokens(builtin_family("convnext-xxl"), 256), 64);
}

TEST(VisualTokens, ThrowsInsteadOfRounding) {
    EXPECT_THROW(visual_tokens(builtin_family("fastvithd"), 1000), shape_error);
    EXPECT_THROW(visual_tokens(builtin_family("vit14"), 100), shape_error);
    EXPECT_THROW(builtin_family("unknown"), usage_error);
}

TEST(TokenDensityRatio, KnownRatios) {
    EXPECT_NEAR(token_density_ratio(builtin_family("fastvit"), builtin_family("vit14")), 5.22,
                0.01);
    EXPECT_DOUBLE_EQ(
        token_density_ratio(builtin_family("fastvithd"), builtin_family("fastvit")), 4.0);
    EXPECT_DOUBLE_EQ(
        token_density_ratio(builtin_family("fastvit"), builtin_family("fastvit")), 1.0);
}

TEST(PrefillLatency, InterpolationContract) {
    const LlmProfile single{"qwen2-0.5b", {{256, 50.5}}};
    EXPECT_DOUBLE_EQ(prefill_latency(single, 256), 50.5);
    EXPECT_DOUBLE_EQ(prefill_latency(single, 999), 50.5); // constant extrapolation

    const LlmProfile two{"toy", {{0, 0.0}, {256, 50.5}}};
    EXPECT_DOUBLE_EQ(prefill_latency(two, 128), 25.25);

    const LlmProfile qwen15{"qwen2-1.5b", {{144, 97.1}, {256, 116.1}}};
    EXPECT_NEAR(prefill_latency(qwen15, 200), 106.6, 0.05);

    // extrapolation uses the nearest segment's slope
    const double slope = (116.1 - 97.1) / (256.0 - 144.0);
    EXPECT_NEAR(prefill_latency(qwen15, 300), 116.1 + slope * 44.0, 1e-9);
    EXPECT_NEAR(prefill_latency(qwen15, 100), 97.1 - slope * 44.0, 1e-9);

    // clamped at zero when a segment extrapolates negative
    const LlmProfile steep{"s", {{100, 1.0}, {200, 100.0}}};
    EXPECT_DOUBLE_EQ(prefill_latency(steep, 0), 0.0);

    EXPECT_THROW(prefill_latency(LlmProfile{"empty", {}}, 1), usage_error);
    EXPECT_THROW(prefill_latency(qwen15, -1), usage_error);
    EXPECT_THROW(validate_profile(LlmProfile{"dup", {{1, 1.0}, {1, 2.0}}}), usage_error);
}

TEST(PrefillLatency, MonotoneForMonotoneProfiles) {
    const LlmProfile p{"vicuna-7b",
                       {{16, 143.4}, {144, 332.1}, {256, 461.1}, {576, 1170.0}}};
    double prev = -1.0;
    for (int64_t t = 0; t <= 700; t += 7) {
        const double v = prefill_latency(p, t);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Ttft, SumAndErrors) {
    EXPECT_NEAR(ttft(116.3, 50.5), 166.8, 1e-9);
    EXPECT_NEAR(ttft(54.8, 97.1), 151.9, 1e-9);
    EXPECT_DOUBLE_EQ(ttft(0.0, 42.0), 42.0);
    EXPECT_THROW(ttft(-1.0, 1.0), usage_error);
    const TtftPoint p = make_point("e", "l", 1024, 256, 116.3, 50.5);
    EXPECT_DOUBLE_EQ(p.ttft_ms, p.enc_latency_ms + p.prefill_ms); // exact sum invariant
}

TEST(TtftBreakdown, FractionsSumToOne) {
    const auto [v1, p1] = ttft_breakdown(make_point("e", "l", 1024, 256, 116.3, 50.5));
    EXPECT_NEAR(v1, 0.697, 0.0005);
    EXPECT_NEAR(v1 + p1, 1.0, 1e-12);

    const auto [v2, p2] = ttft_breakdown(make_point("e", "l", 0, 0, 3.5, 3.5));
    EXPECT_DOUBLE_EQ(v2, 0.5);
    EXPECT_DOUBLE_EQ(p2, 0.5);

    const auto [v3, p3] = ttft_breakdown(make_point("e", "l", 2048, 1280, 581.5, 336.4));
    EXPECT_NEAR(v3, 0.634, 0.0005);

    EXPECT_THROW(ttft_breakdown(make_point("e", "l", 0, 0, 0.0, 0.0)), usage_error);
}

// The checkable, static-resolution form of "vision latency dominates at high
// resolution": with one LLM fixed, the vision fraction grows with resolution.
TEST(TtftBreakdown, VisionFractionGrowsWithStaticResolution) {
    const auto q15_768 = ttft_breakdown(make_point("fastvithd", "qwen2-1.5b", 768, 144, 54.8, 97.1));
    const auto q15_1024 =
        ttft_breakdown(make_point("fastvithd", "qwen2-1.5b", 1024, 256, 116.3, 116.1));
    EXPECT_LT(q15_768.first, q15_1024.first);

    const auto q7_768 = ttft_breakdown(make_point("fastvithd", "qwen2-7b", 768, 144, 54.8, 391.2));
    const auto q7_1024 =
        ttft_breakdown(make_point("fastvithd", "qwen2-7b", 1024, 256, 116.3, 524.5));
    EXPECT_LT(q7_768.first, q7_1024.first);
}

TEST(Pareto, SinglePointSurvives) {
    const auto f = pareto_frontier({pt(10, 10, 50)});
    ASSERT_EQ(f.points.size(), 1u);
}

TEST(Pareto, StrictDominance) {
    const auto f = pareto_frontier({pt(50, 50, 60, "a"), pt(40, 50, 61, "b")});
    ASSERT_EQ(f.points.size(), 1u);
    EXPECT_EQ(f.points[0].encoder, "b");
}

TEST(Pareto, TieRules) {
    // equal ttft, lower accuracy -> dominated
    auto f = pareto_frontier({pt(50, 50, 60, "low"), pt(50, 50, 61, "high")});
    ASSERT_EQ(f.points.size(), 1u);
    EXPECT_EQ(f.points[0].encoder, "high");
    // exact duplicates collapse to the first in input order
    f = pareto_frontier({pt(50, 50, 61, "first"), pt(50, 50, 61, "second")});
    ASSERT_EQ(f.points.size(), 1u);
    EXPECT_EQ(f.points[0].encoder, "first");
    // equal accuracy, slower ttft -> dominated
    f = pareto_frontier({pt(50, 50, 61, "fast"), pt(60, 50, 61, "slow")});
    ASSERT_EQ(f.points.size(), 1u);
    EXPECT_EQ(f.points[0].encoder, "fast");
}

TEST(Pareto, MissingAccuracyRejected) {
    std::vector<TtftPoint> pts = {make_point("e", "l", 0, 0, 1.0, 1.0)};
    EXPECT_THROW(pareto_frontier(pts), usage_error);
}

TEST(Pareto, MatchesBruteForceOracleAndPermutationInvariant) {
    std::mt19937_64 gen(4242);
    for (int suite = 0; suite < 50; ++suite) {
        const int n = 1 + static_cast<int>(gen() % 1000);
        std::vector<TtftPoint> pts;
        pts.reserve(n);
        for (int i = 0; i < n; ++i) {
            // small integer grid so ties and duplicates actually occur
            const double enc = static_cast<double>(gen() % 50);
            const double pre = static_cast<double>(gen() % 50);
            const double acc = static_cast<double>(gen() % 40);
            pts.push_back(pt(enc, pre, acc, "p" + std::to_string(i)));
        }
        const auto got = pareto_frontier(pts);
        const auto want = pareto_oracle(pts);
        ASSERT_TRUE(same_points(got.points, want)) << "suite " << suite << " n=" << n;

        // frontier accuracy strictly increases along ascending ttft
        for (size_t i = 1; i < got.points.size(); ++i) {
            EXPECT_GT(got.points[i].ttft_ms, got.points[i - 1].ttft_ms);
            EXPECT_GT(*got.points[i].accuracy, *got.points[i - 1].accuracy);
        }

        // permutation invariance (up to the shared (ttft, acc) set)
        std::vector<TtftPoint> shuffled = pts;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        const auto f2 = pareto_frontier(shuffled);
        ASSERT_EQ(f2.points.size(), got.points.size());
        for (size_t i = 0; i < f2.points.size(); ++i) {
            EXPECT_EQ(f2.points[i].ttft_ms, got.points[i].ttft_ms);
            EXPECT_EQ(*f2.points[i].accuracy, *got.points[i].accuracy);
        }
    }
}

TEST(Csv, ParsesShippedTable6Fixture) {
    const auto rows = read_ttft_csv_file(std::string(FVB_DATA_DIR) + "/ttft_table6.csv");
    ASSERT_EQ(rows.size(), 11u);
    const TtftRow* q05 = nullptr;
    for (const auto& r : rows)
        if (r.point.llm == "qwen2-0.5b" && r.point.resolution == 1024) q05 = &r;
    ASSERT_NE(q05, nullptr);
    EXPECT_EQ(q05->point.visual_tokens, 256);
    EXPECT_NEAR(q05->point.ttft_ms, 166.8, 1e-9);
    ASSERT_TRUE(q05->reported_ttft_ms.has_value());
    EXPECT_DOUBLE_EQ(*q05->reported_ttft_ms, 166.0);
    // every shipped row's component sum is within 1% of the reported total
    for (const auto& r : rows) {
        ASSERT_TRUE(r.reported_ttft_ms.has_value());
        EXPECT_LE(std::fabs(r.point.ttft_ms - *r.reported_ttft_ms) / *r.reported_ttft_ms, 0.01)
            << r.point.llm << "@" << r.point.resolution;
    }
}

TEST(Csv, ParsesShippedParetoFixture) {
    const auto rows = read_ttft_csv_file(std::string(FVB_DATA_DIR) + "/pareto_vicuna7b.csv");
    ASSERT_EQ(rows.size(), 5u);
    std::vector<TtftPoint> pts;
    for (const auto& r : rows) pts.push_back(r.point);
    const auto f = pareto_frontier(pts);
    ASSERT_EQ(f.points.size(), 3u);
    for (const auto& p : f.points) EXPECT_EQ(p.encoder, "fastvithd");
}

TEST(Csv, SchemaViolationsCarryLineNumbers) {
    std::istringstream bad_header("nope\n");
    EXPECT_THROW(read_ttft_csv(bad_header, "mem"), format_error);

    std::istringstream bad_row(
        "encoder,llm,resolution,visual_tokens,enc_latency_ms,prefill_ms,accuracy\n"
        "a,b,256,16,1.0\n");
    try {
        read_ttft_csv(bad_row, "mem");
        FAIL() << "expected format_error";
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }

    std::istringstream bad_number(
        "encoder,llm,resolution,visual_tokens,enc_latency_ms,prefill_ms,accuracy\n"
        "a,b,256,16,xyz,2.0,50\n");
    try {
        read_ttft_csv(bad_number, "mem");
        FAIL() << "expected format_error";
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Svg, RendersScatterAndFrontier) {
    std::vector<TtftPoint> pts = {pt(10, 10, 50, "a"), pt(20, 20, 60, "b"), pt(30, 5, 55, "c")};
    const auto f = pareto_frontier(pts);
    const std::string svg = render_pareto_svg(pts, f, true);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("polyline"), std::string::npos);
    EXPECT_NE(svg.find("log scale"), std::string::npos);
    EXPECT_NE(svg.find("circle"), std::string::npos);
}

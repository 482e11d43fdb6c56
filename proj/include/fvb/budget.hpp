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

#ifndef FVB_BUDGET_HPP
#define FVB_BUDGET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fvb/core.hpp"

namespace fvb {

// Token accounting: a patch encoder emits one token per patch, a
// hierarchical encoder one token per downsample-factor cell, so both reduce
// to (res / factor)^2.
struct EncoderFamily {
    std::string name;
    enum class Kind { patch, hierarchical } kind = Kind::hierarchical;
    int factor = 1; // patch size or downsample factor

    static EncoderFamily patch(std::string name, int patch_size) {
        return {std::move(name), Kind::patch, patch_size};
    }
    static EncoderFamily hierarchical(std::string name, int factor) {
        return {std::move(name), Kind::hierarchical, factor};
    }
};

inline EncoderFamily builtin_family(const std::string& name) {
    if (name == "vit14") return EncoderFamily::patch("vit14", 14);
    if (name == "fastvit") return EncoderFamily::hierarchical("fastvit", 32);
    if (name == "fastvit_approx") return EncoderFamily::hierarchical("fastvit_approx", 32);
    if (name == "fastvithd") return EncoderFamily::hierarchical("fastvithd", 64);
    if (name == "convnext-l") return EncoderFamily::hierarchical("convnext-l", 32);
    if (name == "convnext-xxl") return EncoderFamily::hierarchical("convnext-xxl", 32);
    throw usage_error("unknown encoder family '" + name +
                      "' (expected vit14, fastvit, fastvit_approx, fastvithd, convnext-l or convnext-xxl)");
}

// Exact integer token count. Throws rather than rounds.
inline int64_t visual_tokens(const EncoderFamily& family, int res) {
    if (family.factor < 1)
        throw shape_error("visual_tokens: non-positive factor for family " + family.name);
    if (res < 1 || res % family.factor != 0)
        throw shape_error("visual_tokens: resolution " + std::to_string(res) +
                          " not divisible by " + family.name + " factor " +
                          std::to_string(family.factor));
    const int64_t side = res / family.factor;
    return side * side;
}

// How many times fewer tokens family b emits than family a at equal
// resolution.
inline double token_density_ratio(const EncoderFamily& a, const EncoderFamily& b) {
    const double r = static_cast<double>(a.factor) / static_cast<double>(b.factor);
    return r * r;
}

// Measured (token count -> prefill ms) pairs for one LLM; queries are
// answered by piecewise-linear interpolation.
struct LlmProfile {
    std::string name;
    std::vector<std::pair<int64_t, double>> prefill_points;
};

inline void validate_profile(const LlmProfile& p) {
    if (p.prefill_points.empty())
        throw usage_error("llm profile '" + p.name + "' has no prefill points");
    for (size_t i = 0; i < p.prefill_points.size(); ++i) {
        if (p.prefill_points[i].second < 0.0)
            throw usage_error("llm profile '" + p.name + "' has a negative latency");
        if (i > 0 && p.prefill_points[i].first <= p.prefill_points[i - 1].first)
            throw usage_error("llm profile '" + p.name + "' token counts must strictly increase");
    }
}

// Piecewise-linear over the profile, extrapolating with the nearest
// segment's slope; a single-point profile is constant. Clamped at zero.
inline double prefill_latency(const LlmProfile& p, int64_t tokens) {
    validate_profile(p);
    if (tokens < 0) throw usage_error("prefill_latency: negative token count");
    const auto& pts = p.prefill_points;
    if (pts.size() == 1) return pts[0].second;
    size_t hi = 1;
    while (hi + 1 < pts.size() && tokens > pts[hi].first) ++hi;
    const auto [t0, l0] = pts[hi - 1];
    const auto [t1, l1] = pts[hi];
    const double slope = (l1 - l0) / static_cast<double>(t1 - t0);
    const double v = l0 + slope * static_cast<double>(tokens - t0);
    return v < 0.0 ? 0.0 : v;
}

inline double ttft(double enc_latency_ms, double prefill_ms) {
    if (enc_latency_ms < 0.0 || prefill_ms < 0.0)
        throw usage_error("ttft: latencies must be non-negative");
    return enc_latency_ms + prefill_ms;
}

// One (configuration, measurement) record. ttft_ms is always the exact sum
// of the two components; accuracy is an opaque score carried through from
// the input data.
struct TtftPoint {
    std::string encoder;
    std::string llm;
    int resolution = 0;
    int64_t visual_tokens = 0;
    double enc_latency_ms = 0.0;
    double prefill_ms = 0.0;
    double ttft_ms = 0.0;
    std::optional<double> accuracy;
};

inline TtftPoint make_point(std::string encoder, std::string llm, int resolution,
                            int64_t tokens, double enc_ms, double prefill_ms,
                            std::optional<double> accuracy = std::nullopt) {
    TtftPoint p;
    p.encoder = std::move(encoder);
    p.llm = std::move(llm);
    p.resolution = resolution;
    p.visual_tokens = tokens;
    p.enc_latency_ms = enc_ms;
    p.prefill_ms = prefill_ms;
    p.ttft_ms = ttft(enc_ms, prefill_ms);
    p.accuracy = accuracy;
    return p;
}

inline std::pair<double, double> ttft_breakdown(const TtftPoint& p) {
    if (p.ttft_ms <= 0.0) throw usage_error("ttft_breakdown: ttft must be positive");
    return {p.enc_latency_ms / p.ttft_ms, p.prefill_ms / p.ttft_ms};
}

struct ParetoFrontier {
    std::vector<TtftPoint> points; // sorted by ttft ascending, accuracy strictly increasing
};

// Dominance-filter the point set. A point is dominated when another point is
// at least as fast and at least as accurate, with one of the two strict;
// exact (ttft, accuracy) duplicates collapse to the first in input order.
inline ParetoFrontier pareto_frontier(const std::vector<TtftPoint>& points) {
    for (const auto& p : points)
        if (!p.accuracy)
            throw usage_error("pareto_frontier: point '" + p.encoder + "/" + p.llm +
                              "' is missing an accuracy value");
    std::vector<size_t> order(points.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (points[a].ttft_ms != points[b].ttft_ms) return points[a].ttft_ms < points[b].ttft_ms;
        if (*points[a].accuracy != *points[b].accuracy)
            return *points[a].accuracy > *points[b].accuracy;
        return a < b;
    });

    ParetoFrontier out;
    double best_acc = -std::numeric_limits<double>::infinity();
    size_t i = 0;
    while (i < order.size()) {
        // Points tying on ttft: only the most accurate can survive, and the
        // sort put its first-in-input representative up front.
        const double t = points[order[i]].ttft_ms;
        const TtftPoint& cand = points[order[i]];
        while (i < order.size() && points[order[i]].ttft_ms == t) ++i;
        if (*cand.accuracy > best_acc) {
            best_acc = *cand.accuracy;
            out.points.push_back(cand);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV schema: encoder,llm,resolution,visual_tokens,enc_latency_ms,prefill_ms,
// accuracy with an optional trailing reported_ttft_ms column (a reported
// total to validate against the recomputed component sum).
// ---------------------------------------------------------------------------

struct TtftRow {
    TtftPoint point;
    std::optional<double> reported_ttft_ms;
    int line = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline std::vector<TtftRow> read_ttft_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line))
        throw format_error(origin + ": empty CSV");
    const std::string base_header =
        "encoder,llm,resolution,visual_tokens,enc_latency_ms,prefill_ms,accuracy";
    const std::string header = detail::trim(line);
    bool has_reported = false;
    if (header == base_header + ",reported_ttft_ms")
        has_reported = true;
    else if (header != base_header)
        throw format_error(origin + ": line 1: unexpected header '" + header + "'");

    std::vector<TtftRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto cells = detail::split_csv_line(t);
        const size_t want = has_reported ? 8 : 7;
        if (cells.size() != want)
            throw format_error(origin + ": line " + std::to_string(lineno) + ": expected " +
                               std::to_string(want) + " fields, got " +
                               std::to_string(cells.size()));
        try {
            TtftRow row;
            row.line = lineno;
            const std::string acc = detail::trim(cells[6]);
            row.point = make_point(detail::trim(cells[0]), detail::trim(cells[1]),
                                   std::stoi(cells[2]), std::stoll(cells[3]), std::stod(cells[4]),
                                   std::stod(cells[5]),
                                   acc.empty() ? std::nullopt
                                               : std::optional<double>(std::stod(acc)));
            if (has_reported) {
                const std::string rep = detail::trim(cells[7]);
                if (!rep.empty()) row.reported_ttft_ms = std::stod(rep);
            }
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            // malformed numbers and invariant violations alike are schema
            // violations of this row
            throw format_error(origin + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

inline std::vector<TtftRow> read_ttft_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw format_error("cannot open CSV: " + path);
    return read_ttft_csv(f, path);
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

inline void write_frontier_csv(std::ostream& out, const std::vector<TtftPoint>& points,
                               const ParetoFrontier& frontier) {
    auto on_frontier = [&](const TtftPoint& p) {
        for (const auto& f : frontier.points)
            if (f.ttft_ms == p.ttft_ms && f.accuracy == p.accuracy && f.encoder == p.encoder &&
                f.llm == p.llm && f.resolution == p.resolution)
                return true;
        return false;
    };
    out << "encoder,llm,resolution,visual_tokens,enc_latency_ms,prefill_ms,accuracy,on_frontier\n";
    for (const auto& p : points) {
        out << p.encoder << ',' << p.llm << ',' << p.resolution << ',' << p.visual_tokens << ','
            << format_double(p.enc_latency_ms) << ',' << format_double(p.prefill_ms) << ','
            << (p.accuracy ? format_double(*p.accuracy) : std::string()) << ','
            << (on_frontier(p) ? 1 : 0) << '\n';
    }
}

// Minimal scatter + frontier polyline SVG; no plotting dependency.
inline std::string render_pareto_svg(const std::vector<TtftPoint>& points,
                                     const ParetoFrontier& frontier, bool log_x) {
    const int W = 640, H = 420, ML = 60, MR = 20, MT = 20, MB = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : points) {
        const double x = log_x ? std::log10(std::max(p.ttft_ms, 1e-3)) : p.ttft_ms;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        if (p.accuracy) {
            ymin = std::min(ymin, *p.accuracy);
            ymax = std::max(ymax, *p.accuracy);
        }
    }
    if (points.empty()) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-12) xmax = xmin + 1;
    if (ymax - ymin < 1e-12) ymax = ymin + 1;
    auto px = [&](double t) {
        const double x = log_x ? std::log10(std::max(t, 1e-3)) : t;
        return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
    };
    auto py = [&](double a) { return H - MB - (a - ymin) / (ymax - ymin) * (H - MT - MB); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
        << H - MB << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">TTFT (ms" << (log_x ? ", log scale" : "")
        << ")</text>\n";
    svg << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << (MT + H - MB) / 2 << ")\">accuracy</text>\n";
    if (!frontier.points.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : frontier.points)
            svg << px(p.ttft_ms) << "," << py(*p.accuracy) << " ";
        svg << "\"/>\n";
    }
    for (const auto& p : points) {
        if (!p.accuracy) continue;
        svg << "<circle cx=\"" << px(p.ttft_ms) << "\" cy=\"" << py(*p.accuracy)
            << "\" r=\"4\" fill=\"#2980b9\"/>\n";
        svg << "<text x=\"" << px(p.ttft_ms) + 6 << "\" y=\"" << py(*p.accuracy) - 6
            << "\" font-size=\"10\">" << p.encoder << "@" << p.resolution << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace fvb

#endif // FVB_BUDGET_HPP

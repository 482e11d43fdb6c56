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

// fvb command-line front end.
//
// Exit codes are part of the contract: 0 ok, 2 usage, 3 I/O or file format,
// 4 shape/resolution, 5 state (e.g. folding an already-folded model).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fvb/bench.hpp"
#include "fvb/budget.hpp"
#include "fvb/encoder.hpp"
#include "fvb/io.hpp"
#include "fvb/manifest.hpp"
#include "fvb/tiler.hpp"

namespace fs = std::filesystem;
using fvb::json;

namespace {

struct EncodeOptions {
    std::string encoder = "fastvithd";
    uint64_t seed = 0;
    int resolution = 0;
    std::string form = "inference";
    std::string multiscale = "none";
    std::string tile_mode = "static";
    int tile_size = 1024;
    std::string grid = "2x2";
    std::string base = "on";
    std::string image;
    std::string out;
    std::string sidecar;
    std::optional<std::vector<int>> override_depths;
    std::optional<std::vector<int>> override_dims;
    std::optional<std::vector<std::string>> override_kinds;
    std::optional<int> override_projector_dim;
};

std::pair<int, int> parse_grid(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= s.size())
        throw fvb::usage_error("grid must look like ROWSxCOLS, got '" + s + "'");
    try {
        return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw fvb::usage_error("grid must look like ROWSxCOLS, got '" + s + "'");
    }
}

bool parse_on_off(const std::string& s) {
    if (s == "on") return true;
    if (s == "off") return false;
    throw fvb::usage_error("expected on or off, got '" + s + "'");
}

std::vector<int> parse_res_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw fvb::usage_error("bad resolution '" + item + "' in list '" + s + "'");
        }
    }
    if (out.empty()) throw fvb::usage_error("empty resolution list '" + s + "'");
    return out;
}

// Run-config JSON for encode. Unknown keys are rejected.
void apply_run_config(const std::string& path, EncodeOptions& o) {
    std::ifstream f(path);
    if (!f) throw fvb::usage_error("cannot open run config: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw fvb::format_error(path + ": " + e.what());
    }
    static const std::vector<std::string> known = {
        "encoder", "seed", "resolution", "form", "multiscale", "tile",
        "image",   "out",  "sidecar",    "overrides"};
    for (const auto& [key,_] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw fvb::usage_error(path + ": unknown run-config key '" + key + "'");
    try {
        if (j.contains("encoder")) o.encoder = j["encoder"].get<std::string>();
        if (j.contains("seed")) o.seed = j["seed"].get<uint64_t>();
        if (j.contains("resolution")) o.resolution = j["resolution"].get<int>();
        if (j.contains("form")) o.form = j["form"].get<std::string>();
        if (j.contains("multiscale")) o.multiscale = j["multiscale"].get<std::string>();
        if (j.contains("image")) o.image = j["image"].get<std::string>();
        if (j.contains("out")) o.out = j["out"].get<std::string>();
        if (j.contains("sidecar")) o.sidecar = j["sidecar"].get<std::string>();
        if (j.contains("tile")) {
            const json& t = j["tile"];
            static const std::vector<std::string> tknown = {"mode", "tile_size", "grid",
                                                            "include_base"};
            for (const auto& [key, _] : t.items())
                if (std::find(tknown.begin(), tknown.end(), key) == tknown.end())
                    throw fvb::usage_error(path + ": unknown tile key '" + key + "'");
            if (t.contains("mode")) o.tile_mode = t["mode"].get<std::string>();
            if (t.contains("tile_size")) o.tile_size = t["tile_size"].get<int>();
            if (t.contains("grid")) {
                const auto g = t["grid"].get<std::vector<int>>();
                if (g.size() != 2) throw fvb::usage_error(path + ": tile grid must be [rows, cols]");
                o.grid = std::to_string(g[0]) + "x" + std::to_string(g[1]);
            }
            if (t.contains("include_base"))
                o.base = t["include_base"].get<bool>() ? "on" : "off";
        }
        if (j.contains("overrides")) {
            const json& v = j["overrides"];
            static const std::vector<std::string> oknown = {"stage_depths", "stage_dims",
                                                            "stage_kinds", "projector_dim"};
            for (const auto& [key, _] : v.items())
                if (std::find(oknown.begin(), oknown.end(), key) == oknown.end())
                    throw fvb::usage_error(path + ": unknown override key '" + key + "'");
            if (v.contains("stage_depths"))
                o.override_depths = v["stage_depths"].get<std::vector<int>>();
            if (v.contains("stage_dims"))
                o.override_dims = v["stage_dims"].get<std::vector<int>>();
            if (v.contains("stage_kinds"))
                o.override_kinds = v["stage_kinds"].get<std::vector<std::string>>();
            if (v.contains("projector_dim"))
                o.override_projector_dim = v["projector_dim"].get<int>();
        }
    } catch (const json::exception& e) {
        throw fvb::format_error(path + ": " + e.what());
    }
}

fvb::EncoderConfig resolve_config(const EncodeOptions& o) {
    fvb::EncoderConfig cfg = fvb::builtin_config(o.encoder);
    if (o.override_depths) cfg.stage_depths = *o.override_depths;
    if (o.override_dims) cfg.stage_dims = *o.override_dims;
    if (o.override_kinds) {
        cfg.stage_kinds.clear();
        for (const auto& k : *o.override_kinds)
            cfg.stage_kinds.push_back(fvb::stage_kind_from_string(k));
    }
    if (o.override_projector_dim) cfg.projector_dim = *o.override_projector_dim;
    cfg.multiscale = fvb::multiscale_from_string(o.multiscale);
    fvb::validate_config(cfg);
    return cfg;
}

fvb::EncoderModel build_in_form(const fvb::EncoderConfig& cfg, uint64_t seed, fvb::Form form) {
    fvb::EncoderModel m = fvb::build(cfg, seed);
    if (form == fvb::Form::inference) m = fvb::fold_model(m).first;
    return m;
}

fvb::Tensor load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw fvb::usage_error("unreadable image file: " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (magic[0] == 'P' && magic[1] == '6') return fvb::read_ppm(path);
    if (std::string(magic, 4) == "FVT1") {
        fvb::Tensor t = fvb::read_fvt(path);
        if (t.c != 3)
            throw fvb::shape_error("image tensor must have 3 channels, got " + t.shape_str());
        return t;
    }
    throw fvb::format_error(path + ": bad magic, expected P6 or FVT1");
}

int cmd_encode(const EncodeOptions& o) {
    if (o.image.empty() || o.out.empty())
        throw fvb::usage_error("encode requires --image and --out");
    const fvb::EncoderConfig cfg = resolve_config(o);
    const fvb::Form form = fvb::form_from_string(o.form);
    const fvb::EncoderModel model = build_in_form(cfg, o.seed, form);
    const int factor = cfg.downsample_factor();

    fvb::Tensor img = load_image(o.image);
    fvb::TokenGrid tokens;
    json tile_info;
    if (o.tile_mode == "static") {
        const int res = o.resolution > 0 ? o.resolution : img.h;
        if (res % factor != 0)
            throw fvb::shape_error("resolution " + std::to_string(res) +
                                   " not divisible by required factor " + std::to_string(factor));
        img = fvb::resize_bilinear(img, res, res);
        tokens = fvb::forward(model, img);
        tile_info = "static";
    } else {
        const auto [rows, cols] = parse_grid(o.grid);
        const fvb::TilePlan p = fvb::plan(fvb::TileMode::dynamic, img.h, img.w, o.tile_size, rows,
                                          cols, parse_on_off(o.base), factor);
        tokens = fvb::encode_tiled(model, img, p);
        tile_info = {{"mode", "dynamic"},
                     {"tile_size", p.tile_size},
                     {"grid", {p.rows, p.cols}},
                     {"include_base", p.include_base}};
    }

    fvb::write_fvt(o.out, tokens.tokens);
    json sidecar;
    sidecar["grid"] = {tokens.gh, tokens.gw};
    sidecar["tokens"] = tokens.seq();
    sidecar["dim"] = tokens.dim();
    sidecar["encoder"] = cfg.name;
    sidecar["config_hash"] = fvb::config_hash(cfg);
    sidecar["seed"] = o.seed;
    sidecar["form"] = fvb::to_string(form);
    sidecar["multiscale"] = fvb::to_string(cfg.multiscale);
    sidecar["tile"] = tile_info;
    const std::string side_path = o.sidecar.empty() ? o.out + ".json" : o.sidecar;
    std::ofstream sf(side_path, std::ios::trunc);
    if (!sf) throw fvb::format_error("cannot write sidecar: " + side_path);
    sf << sidecar.dump(2) << "\n";
    std::cout << tokens.seq() << " tokens (grid " << tokens.gh << "x" << tokens.gw << ", dim "
              << tokens.dim() << ") -> " << o.out << "\n";
    return 0;
}

int cmd_fold_check(const std::string& manifest, const std::string& out_dir,
                   const std::string& csv_path, int probes) {
    const fvb::EncoderModel model = fvb::load_model(manifest);
    if (model.form == fvb::Form::inference)
        throw fvb::state_error("model is already in inference form");
    auto [folded, reports] = fvb::fold_model(model, probes);
    if (!out_dir.empty()) fvb::save_model(folded, out_dir);

    std::ostringstream csv;
    csv << "block_id,kind,max_abs_diff,probes\n";
    bool ok = true;
    for (const auto& r : reports) {
        csv << r.block_id << ',' << r.kind << ',' << r.max_abs_diff << ',' << r.probe_count
            << '\n';
        if (r.max_abs_diff > fvb::kFoldTolerance) ok = false;
    }
    if (csv_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(csv_path, std::ios::trunc);
        if (!f) throw fvb::format_error("cannot write CSV: " + csv_path);
        f << csv.str();
    }
    if (!ok) {
        std::cerr << "fold-check: at least one block exceeds tolerance "
                  << fvb::kFoldTolerance << "\n";
        return 1;
    }
    return 0;
}

int cmd_tile(const std::string& mode, int res, int tile_size, const std::string& grid,
             const std::string& base, int factor, const std::string& image,
             const std::string& out_dir) {
    const fvb::TileMode m = fvb::tile_mode_from_string(mode);
    fvb::TilePlan p;
    if (m == fvb::TileMode::static_res) {
        p = fvb::plan(m, res, res, 0, 0, 0, false, factor);
    } else {
        const auto [rows, cols] = parse_grid(grid);
        p = fvb::plan(m, res, res, tile_size, rows, cols, parse_on_off(base), factor);
    }
    json j;
    j["mode"] = fvb::to_string(p.mode);
    j["input_res"] = {p.input_h, p.input_w};
    if (p.mode == fvb::TileMode::dynamic) {
        j["tile_size"] = p.tile_size;
        j["grid"] = {p.rows, p.cols};
        j["include_base"] = p.include_base;
    }
    j["effective_tiles"] = p.effective_tiles();
    j["downsample_factor"] = factor;
    j["total_tokens"] = fvb::plan_token_count(p, factor);

    if (!image.empty()) {
        if (out_dir.empty()) throw fvb::usage_error("tile --image requires --out-dir");
        const fvb::Tensor img = load_image(image);
        const auto tiles = fvb::split(img, p);
        fs::create_directories(out_dir);
        json names = json::array();
        for (size_t i = 0; i < tiles.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "tile_%03zu.fvt", i);
            fvb::write_fvt((fs::path(out_dir) / name).string(), tiles[i]);
            names.push_back(name);
        }
        j["tiles"] = names;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_bench(const std::string& config, const std::string& res_list, const std::string& form,
              int warmup, int iters, int threads, uint64_t seed, const std::string& csv_path) {
    const fvb::EncoderConfig cfg = fvb::builtin_config(config);
    const fvb::EncoderModel model = build_in_form(cfg, seed, fvb::form_from_string(form));
    const auto records = fvb::sweep(model, parse_res_list(res_list), warmup, iters, threads);
    std::ostringstream csv;
    fvb::write_bench_csv_header(csv);
    for (const auto& r : records) fvb::write_bench_csv_row(csv, r);
    if (csv_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(csv_path, std::ios::trunc);
        if (!f) throw fvb::format_error("cannot write CSV: " + csv_path);
        f << csv.str();
        std::cout << csv.str();
    }
    return 0;
}

int cmd_ttft(const std::string& csv_path, const std::string& out_path) {
    const auto rows = fvb::read_ttft_csv_file(csv_path);
    std::ostringstream out;
    out << "encoder,llm,resolution,visual_tokens,enc_latency_ms,prefill_ms,ttft_ms,accuracy\n";
    int flagged = 0;
    for (const auto& r : rows) {
        const fvb::TtftPoint& p = r.point;
        char ttft_s[32];
        std::snprintf(ttft_s, sizeof ttft_s, "%.1f", p.ttft_ms);
        out << p.encoder << ',' << p.llm << ',' << p.resolution << ',' << p.visual_tokens << ','
            << fvb::format_double(p.enc_latency_ms) << ',' << fvb::format_double(p.prefill_ms)
            << ',' << ttft_s << ','
            << (p.accuracy ? fvb::format_double(*p.accuracy) : std::string()) << '\n';
        if (r.reported_ttft_ms) {
            const double rel = std::fabs(p.ttft_ms - *r.reported_ttft_ms) / *r.reported_ttft_ms;
            if (rel > 0.01) {
                ++flagged;
                std::cerr << "ttft: line " << r.line << ": component sum " << ttft_s
                          << " deviates " << rel * 100.0 << "% from reported "
                          << *r.reported_ttft_ms << "\n";
            }
        }
    }
    std::cout << out.str();
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::trunc);
        if (!f) throw fvb::format_error("cannot write CSV: " + out_path);
        f << out.str();
    }
    if (flagged > 0)
        std::cerr << "ttft: " << flagged << " row(s) deviate more than 1% from reported totals\n";
    return 0;
}

int cmd_pareto(const std::string& csv_path, const std::string& out_path,
               const std::string& svg_path, bool log_x) {
    const auto rows = fvb::read_ttft_csv_file(csv_path);
    std::vector<fvb::TtftPoint> points;
    for (const auto& r : rows) {
        if (!r.point.accuracy)
            throw fvb::format_error(csv_path + ": line " + std::to_string(r.line) +
                                    ": accuracy required for pareto");
        points.push_back(r.point);
    }
    const fvb::ParetoFrontier frontier = fvb::pareto_frontier(points);
    std::ostringstream out;
    fvb::write_frontier_csv(out, points, frontier);
    std::cout << out.str();
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::trunc);
        if (!f) throw fvb::format_error("cannot write CSV: " + out_path);
        f << out.str();
    }
    if (!svg_path.empty()) {
        std::ofstream f(svg_path, std::ios::trunc);
        if (!f) throw fvb::format_error("cannot write SVG: " + svg_path);
        f << fvb::render_pareto_svg(points, frontier, log_x);
    }
    std::cerr << "pareto: " << frontier.points.size() << " of " << points.size()
              << " points on the frontier\n";
    return 0;
}

int cmd_report(const std::string& csv_path, const std::string& out_dir, const std::string& config,
               const std::string& res_list, int warmup, int iters, int threads, bool log_x) {
    fs::create_directories(out_dir);

    // bench
    const fvb::EncoderConfig cfg = fvb::builtin_config(config);
    const fvb::EncoderModel model = build_in_form(cfg, 0, fvb::Form::inference);
    const auto records = fvb::sweep(model, parse_res_list(res_list), warmup, iters, threads);
    {
        std::ofstream f(fs::path(out_dir) / "bench.csv", std::ios::trunc);
        fvb::write_bench_csv_header(f);
        for (const auto& r : records) fvb::write_bench_csv_row(f, r);
    }

    // ttft + pareto from the measurement CSV
    const auto rows = fvb::read_ttft_csv_file(csv_path);
    {
        std::ofstream f(fs::path(out_dir) / "ttft.csv", std::ios::trunc);
        f << "encoder,llm,resolution,visual_tokens,enc_latency_ms,prefill_ms,ttft_ms,accuracy\n";
        for (const auto& r : rows) {
            char ttft_s[32];
            std::snprintf(ttft_s, sizeof ttft_s, "%.1f", r.point.ttft_ms);
            f << r.point.encoder << ',' << r.point.llm << ',' << r.point.resolution << ','
              << r.point.visual_tokens << ',' << fvb::format_double(r.point.enc_latency_ms) << ','
              << fvb::format_double(r.point.prefill_ms) << ',' << ttft_s << ','
              << (r.point.accuracy ? fvb::format_double(*r.point.accuracy) : std::string())
              << '\n';
        }
    }
    std::vector<fvb::TtftPoint> acc_points;
    for (const auto& r : rows)
        if (r.point.accuracy) acc_points.push_back(r.point);
    fvb::ParetoFrontier frontier;
    if (!acc_points.empty()) {
        frontier = fvb::pareto_frontier(acc_points);
        std::ofstream f(fs::path(out_dir) / "pareto.csv", std::ios::trunc);
        fvb::write_frontier_csv(f, acc_points, frontier);
        std::ofstream svg(fs::path(out_dir) / "pareto.svg", std::ios::trunc);
        svg << fvb::render_pareto_svg(acc_points, frontier, log_x);
    }

    std::ofstream md(fs::path(out_dir) / "report.md", std::ios::trunc);
    md << "# fvb report\n\n";
    md << "## Encoder\n\n";
    md << "| config | params (inference) | downsample | tokens @" << records.front().resolution
       << " |\n|---|---|---|---|\n";
    md << "| " << cfg.name << " | " << fvb::count_params(cfg, fvb::Form::inference) << " | "
       << cfg.downsample_factor() << " | " << records.front().tokens << " |\n\n";
    md << "## Latency sweep\n\n";
    md << "| res | tokens | flops | median ms | p90 ms | threads |\n|---|---|---|---|---|---|\n";
    for (const auto& r : records)
        md << "| " << r.resolution << " | " << r.tokens << " | " << r.flops << " | " << r.median_ms
           << " | " << r.p90_ms << " | " << r.threads << " |\n";
    md << "\n## TTFT points\n\n";
    md << "| encoder | llm | res | tokens | enc ms | prefill ms | ttft ms |\n"
          "|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        char ttft_s[32];
        std::snprintf(ttft_s, sizeof ttft_s, "%.1f", r.point.ttft_ms);
        md << "| " << r.point.encoder << " | " << r.point.llm << " | " << r.point.resolution
           << " | " << r.point.visual_tokens << " | " << r.point.enc_latency_ms << " | "
           << r.point.prefill_ms << " | " << ttft_s << " |\n";
    }
    if (!acc_points.empty()) {
        md << "\n## Pareto frontier (" << frontier.points.size() << " of " << acc_points.size()
           << " points)\n\n";
        for (const auto& p : frontier.points) {
            char ttft_s[32];
            std::snprintf(ttft_s, sizeof ttft_s, "%.1f", p.ttft_ms);
            md << "- " << p.encoder << "/" << p.llm << " @" << p.resolution << ": ttft " << ttft_s
               << " ms, accuracy " << *p.accuracy << "\n";
        }
    }
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid vision encoder and token/latency budgeting toolkit"};
    app.require_subcommand(1);

    // encode
    EncodeOptions enc;
    std::string run_config;
    auto* c_enc = app.add_subcommand("encode", "encode an image into visual tokens");
    c_enc->add_option("--run-config", run_config, "JSON run configuration");
    c_enc->add_option("--config", enc.encoder, "encoder config name");
    c_enc->add_option("--res", enc.resolution, "static input resolution");
    c_enc->add_option("--seed", enc.seed, "parameter seed");
    c_enc->add_option("--form", enc.form, "train|inference");
    c_enc->add_option("--multiscale", enc.multiscale, "none|avgpool|dwconv");
    c_enc->add_option("--tile-mode", enc.tile_mode, "static|dynamic");
    c_enc->add_option("--tile", enc.tile_size, "tile size (dynamic)");
    c_enc->add_option("--grid", enc.grid, "tile grid ROWSxCOLS (dynamic)");
    c_enc->add_option("--base", enc.base, "include base thumbnail: on|off (dynamic)");
    c_enc->add_option("--image", enc.image, "input image (PPM P6 or FVT1)");
    c_enc->add_option("--out", enc.out, "output token tensor (FVT1)");
    c_enc->add_option("--sidecar", enc.sidecar, "sidecar JSON path (default: OUT.json)");

    // fold-check
    std::string fc_manifest, fc_out_dir, fc_csv;
    int fc_probes = 8;
    auto* c_fold = app.add_subcommand("fold-check", "fold a train-form model and report per-block error");
    c_fold->add_option("--manifest", fc_manifest, "train-form model manifest")->required();
    c_fold->add_option("--out-dir", fc_out_dir, "directory for the folded model");
    c_fold->add_option("--csv", fc_csv, "fold report CSV (default: stdout)");
    c_fold->add_option("--probes", fc_probes, "probe inputs per block");

    // tokens
    std::string tk_family;
    int tk_res = 0;
    auto* c_tok = app.add_subcommand("tokens", "visual token count for a family at a resolution");
    c_tok->add_option("family", tk_family, "encoder family")->required();
    c_tok->add_option("res", tk_res, "input resolution")->required();

    // params
    std::string pc_config = "fastvithd", pc_form = "inference";
    auto* c_par = app.add_subcommand("params", "parameter count of a config");
    c_par->add_option("--config", pc_config, "encoder config name");
    c_par->add_option("--form", pc_form, "train|inference");

    // flops
    std::string fl_config = "fastvithd", fl_form = "inference";
    int fl_res = 0;
    auto* c_flo = app.add_subcommand("flops", "analytic MAC count of a forward pass");
    c_flo->add_option("--config", fl_config, "encoder config name");
    c_flo->add_option("--res", fl_res, "input resolution")->required();
    c_flo->add_option("--form", fl_form, "train|inference");

    // tile
    std::string ti_mode = "dynamic", ti_grid = "2x2", ti_base = "on", ti_image, ti_out_dir;
    int ti_res = 0, ti_tile = 1024, ti_factor = 64;
    auto* c_til = app.add_subcommand("tile", "plan (and optionally run) a tiling strategy");
    c_til->add_option("--mode", ti_mode, "static|dynamic");
    c_til->add_option("--res", ti_res, "input resolution (static mode)");
    c_til->add_option("--tile", ti_tile, "tile size");
    c_til->add_option("--grid", ti_grid, "grid ROWSxCOLS");
    c_til->add_option("--base", ti_base, "include base thumbnail: on|off");
    c_til->add_option("--factor", ti_factor, "encoder downsample factor");
    c_til->add_option("--image", ti_image, "image to split");
    c_til->add_option("--out-dir", ti_out_dir, "directory for tile tensors");

    // bench
    std::string be_config = "fastvithd", be_res = "256,512,768,1024", be_form = "inference",
                be_csv;
    int be_warmup = fvb::kBenchDefaultWarmup, be_iters = fvb::kBenchDefaultIters, be_threads = 1;
    uint64_t be_seed = 0;
    auto* c_ben = app.add_subcommand("bench", "wall-clock latency sweep");
    c_ben->add_option("--config", be_config, "encoder config name");
    c_ben->add_option("--res", be_res, "comma-separated resolutions");
    c_ben->add_option("--form", be_form, "train|inference");
    c_ben->add_option("--warmup", be_warmup, "untimed warmup passes");
    c_ben->add_option("--iters", be_iters, "timed passes (>= 3)");
    c_ben->add_option("--threads", be_threads, "worker threads inside the timed region");
    c_ben->add_option("--seed", be_seed, "parameter seed");
    c_ben->add_option("--csv", be_csv, "output CSV path");

    // ttft
    std::string tt_csv, tt_out;
    auto* c_ttf = app.add_subcommand("ttft", "recompute TTFT sums over a measurement CSV");
    c_ttf->add_option("--csv", tt_csv, "input CSV")->required();
    c_ttf->add_option("--out", tt_out, "output CSV path");

    // pareto
    std::string pa_csv, pa_out, pa_svg;
    bool pa_logx = false;
    auto* c_pareto = app.add_subcommand("pareto", "dominance-filter (ttft, accuracy) points");
    c_pareto->add_option("--csv", pa_csv, "input CSV")->required();
    c_pareto->add_option("--out", pa_out, "output CSV path");
    c_pareto->add_option("--svg", pa_svg, "scatter + frontier SVG path");
    c_pareto->add_flag("--log-x", pa_logx, "log-scale TTFT axis");

    // report
    std::string re_csv, re_out_dir, re_config = "fastvithd", re_res = "256";
    int re_warmup = 1, re_iters = 3, re_threads = 1;
    bool re_logx = false;
    auto* c_rep = app.add_subcommand("report", "bundle bench + ttft + pareto into one directory");
    c_rep->add_option("--csv", re_csv, "measurement CSV")->required();
    c_rep->add_option("--out-dir", re_out_dir, "output directory")->required();
    c_rep->add_option("--config", re_config, "encoder config to bench");
    c_rep->add_option("--res", re_res, "comma-separated bench resolutions");
    c_rep->add_option("--warmup", re_warmup, "bench warmup passes");
    c_rep->add_option("--iters", re_iters, "bench timed passes");
    c_rep->add_option("--threads", re_threads, "bench worker threads");
    c_rep->add_flag("--log-x", re_logx, "log-scale TTFT axis in the SVG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (*c_enc) {
            if (!run_config.empty()) {
                EncodeOptions merged;
                apply_run_config(run_config, merged);
                // explicit flags win over the JSON document
                EncodeOptions flags = enc;
                enc = merged;
                if (c_enc->count("--config")) enc.encoder = flags.encoder;
                if (c_enc->count("--res")) enc.resolution = flags.resolution;
                if (c_enc->count("--seed")) enc.seed = flags.seed;
                if (c_enc->count("--form")) enc.form = flags.form;
                if (c_enc->count("--multiscale")) enc.multiscale = flags.multiscale;
                if (c_enc->count("--tile-mode")) enc.tile_mode = flags.tile_mode;
                if (c_enc->count("--tile")) enc.tile_size = flags.tile_size;
                if (c_enc->count("--grid")) enc.grid = flags.grid;
                if (c_enc->count("--base")) enc.base = flags.base;
                if (c_enc->count("--image")) enc.image = flags.image;
                if (c_enc->count("--out")) enc.out = flags.out;
                if (c_enc->count("--sidecar")) enc.sidecar = flags.sidecar;
            }
            return cmd_encode(enc);
        }
        if (*c_fold) return cmd_fold_check(fc_manifest, fc_out_dir, fc_csv, fc_probes);
        if (*c_tok) {
            std::cout << fvb::visual_tokens(fvb::builtin_family(tk_family), tk_res) << "\n";
            return 0;
        }
        if (*c_par) {
            std::cout << fvb::count_params(fvb::builtin_config(pc_config),
                                           fvb::form_from_string(pc_form))
                      << "\n";
            return 0;
        }
        if (*c_flo) {
            std::cout << fvb::count_flops(fvb::builtin_config(fl_config), fl_res,
                                          fvb::form_from_string(fl_form))
                      << "\n";
            return 0;
        }
        if (*c_til)
            return cmd_tile(ti_mode, ti_res, ti_tile, ti_grid, ti_base, ti_factor, ti_image,
                            ti_out_dir);
        if (*c_ben)
            return cmd_bench(be_config, be_res, be_form, be_warmup, be_iters, be_threads, be_seed,
                             be_csv);
        if (*c_ttf) return cmd_ttft(tt_csv, tt_out);
        if (*c_pareto) return cmd_pareto(pa_csv, pa_out, pa_svg, pa_logx);
        if (*c_rep)
            return cmd_report(re_csv, re_out_dir, re_config, re_res, re_warmup, re_iters,
                              re_threads, re_logx);
    } catch (const fvb::usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fvb::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fvb::shape_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const fvb::state_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

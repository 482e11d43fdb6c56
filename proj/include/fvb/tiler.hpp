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

#ifndef FVB_TILER_HPP
#define FVB_TILER_HPP

#include <string>
#include <vector>

#include "fvb/encoder.hpp"

namespace fvb {

enum class TileMode { static_res, dynamic };

inline const char* to_string(TileMode m) {
    return m == TileMode::static_res ? "static" : "dynamic";
}

inline TileMode tile_mode_from_string(const std::string& s) {
    if (s == "static") return TileMode::static_res;
    if (s == "dynamic") return TileMode::dynamic;
    throw usage_error("unknown tile mode '" + s + "', expected static or dynamic");
}

// Resolution strategy for one image. Dynamic plans canonicalize the input to
// the rows*tile x cols*tile canvas; tiles come out row-major, the optional
// base thumbnail (the canonical image resized to one tile) is appended last.
struct TilePlan {
    TileMode mode = TileMode::static_res;
    int input_h = 0, input_w = 0;
    int tile_size = 0;    // dynamic only
    int rows = 0, cols = 0; // dynamic only
    bool include_base = true;

    int effective_tiles() const {
        return mode == TileMode::static_res ? 1 : rows * cols + (include_base ? 1 : 0);
    }
};

inline TilePlan plan(TileMode mode, int input_h, int input_w, int tile_size, int rows, int cols,
                     bool include_base, int downsample_factor) {
    if (downsample_factor < 1)
        throw shape_error("tile plan: downsample factor must be >= 1");
    TilePlan p;
    p.mode = mode;
    if (mode == TileMode::static_res) {
        if (input_h < 1 || input_w < 1)
            throw shape_error("tile plan: static mode requires a positive input resolution");
        if (input_h % downsample_factor != 0 || input_w % downsample_factor != 0)
            throw shape_error("tile plan: static resolution " + std::to_string(input_h) + "x" +
                              std::to_string(input_w) + " not divisible by factor " +
                              std::to_string(downsample_factor));
        p.input_h = input_h;
        p.input_w = input_w;
        p.include_base = false;
        return p;
    }
    if (rows < 1 || cols < 1)
        throw shape_error("tile plan: grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " has zero area");
    if (tile_size < 1 || tile_size % downsample_factor != 0)
        throw shape_error("tile plan: tile size " + std::to_string(tile_size) +
                          " not divisible by factor " + std::to_string(downsample_factor));
    p.tile_size = tile_size;
    p.rows = rows;
    p.cols = cols;
    p.include_base = include_base;
    p.input_h = rows * tile_size;
    p.input_w = cols * tile_size;
    return p;
}

// Static: the image itself. Dynamic: rows*cols crops of the canonicalized
// image in row-major order, plus the base thumbnail last when enabled.
inline std::vector<Tensor> split(const Tensor& image, const TilePlan& p) {
    if (p.mode == TileMode::static_res) {
        if (image.h != p.input_h || image.w != p.input_w)
            throw shape_error("split: image " + image.shape_str() + " does not match plan " +
                              std::to_string(p.input_h) + "x" + std::to_string(p.input_w));
        return {image};
    }
    const Tensor canon = resize_bilinear(image, p.input_h, p.input_w);
    std::vector<Tensor> tiles;
    tiles.reserve(p.effective_tiles());
    const int t = p.tile_size;
    for (int r = 0; r < p.rows; ++r)
        for (int cidx = 0; cidx < p.cols; ++cidx) {
            Tensor tile(canon.n, canon.c, t, t);
            for (int b = 0; b < canon.n; ++b)
                for (int ch = 0; ch < canon.c; ++ch)
                    for (int y = 0; y < t; ++y)
                        std::copy(canon.plane(b, ch) + static_cast<size_t>(r * t + y) * canon.w +
                                      cidx * t,
                                  canon.plane(b, ch) + static_cast<size_t>(r * t + y) * canon.w +
                                      cidx * t + t,
                                  tile.plane(b, ch) + static_cast<size_t>(y) * t);
            tiles.push_back(std::move(tile));
        }
    if (p.include_base) tiles.push_back(resize_bilinear(canon, t, t));
    return tiles;
}

// Inverse of the crop partition (base thumbnail excluded); used to check the
// partition property.
inline Tensor reassemble_tiles(const std::vector<Tensor>& tiles, const TilePlan& p) {
    if (p.mode != TileMode::dynamic)
        throw shape_error("reassemble_tiles: plan is not dynamic");
    if (tiles.size() < static_cast<size_t>(p.rows) * p.cols)
        throw shape_error("reassemble_tiles: expected at least " +
                          std::to_string(p.rows * p.cols) + " tiles, got " +
                          std::to_string(tiles.size()));
    const int t = p.tile_size;
    Tensor canon(tiles[0].n, tiles[0].c, p.input_h, p.input_w);
    for (int r = 0; r < p.rows; ++r)
        for (int cidx = 0; cidx < p.cols; ++cidx) {
            const Tensor& tile = tiles[static_cast<size_t>(r) * p.cols + cidx];
            for (int b = 0; b < tile.n; ++b)
                for (int ch = 0; ch < tile.c; ++ch)
                    for (int y = 0; y < t; ++y)
                        std::copy(tile.plane(b, ch) + static_cast<size_t>(y) * t,
                                  tile.plane(b, ch) + static_cast<size_t>(y) * t + t,
                                  canon.plane(b, ch) + static_cast<size_t>(r * t + y) * canon.w +
                                      cidx * t);
        }
    return canon;
}

inline int64_t plan_token_count(const TilePlan& p, int downsample_factor) {
    if (p.mode == TileMode::static_res)
        return static_cast<int64_t>(p.input_h / downsample_factor) *
               (p.input_w / downsample_factor);
    const int64_t per_tile = static_cast<int64_t>(p.tile_size / downsample_factor) *
                             (p.tile_size / downsample_factor);
    return p.effective_tiles() * per_tile;
}

// Encode each split piece and concatenate the token sequences in split
// order. The grid reported for a multi-tile result stacks the per-tile
// grids vertically.
inline TokenGrid encode_tiled(const EncoderModel& m, const Tensor& image, const TilePlan& p) {
    const int factor = m.config.downsample_factor();
    if (p.mode == TileMode::dynamic && p.tile_size % factor != 0)
        throw shape_error("encode_tiled: tile size " + std::to_string(p.tile_size) +
                          " not divisible by model factor " + std::to_string(factor));
    const std::vector<Tensor> tiles = split(image, p);
    std::vector<TokenGrid> grids;
    grids.reserve(tiles.size());
    for (const Tensor& tile : tiles) grids.push_back(forward(m, tile));

    if (grids.size() == 1) return grids[0];
    const int seq_per = grids[0].seq();
    const int dim = grids[0].dim();
    TokenGrid out;
    out.gw = grids[0].gw;
    out.gh = grids[0].gh * static_cast<int>(grids.size());
    out.tokens = Tensor(image.n, seq_per * static_cast<int>(grids.size()), dim, 1);
    for (size_t g = 0; g < grids.size(); ++g)
        for (int b = 0; b < image.n; ++b)
            std::copy(grids[g].tokens.plane(b, 0),
                      grids[g].tokens.plane(b, 0) + static_cast<size_t>(seq_per) * dim,
                      out.tokens.plane(b, static_cast<int>(g) * seq_per));
    return out;
}

} // namespace fvb

#endif // FVB_TILER_HPP

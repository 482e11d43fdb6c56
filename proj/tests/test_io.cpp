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

#include "fvb/io.hpp"
#include "fvb/manifest.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace fvb;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "fvb_io_test";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST(Fvt, RoundTripBitExact) {
    Rng rng(100);
    for (int iter = 0; iter < 20; ++iter) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 3);
        const int c = 1 + static_cast<int>(rng.next_u64() % 5);
        const int h = 1 + static_cast<int>(rng.next_u64() % 6);
        const int w = 1 + static_cast<int>(rng.next_u64() % 6);
        Tensor t(n, c, h, w);
        for (float& v : t.data) v = rng.uniform(-1e6f, 1e6f);
        const Tensor back = decode_fvt(encode_fvt(t), "mem");
        ASSERT_EQ(back.n, t.n);
        ASSERT_EQ(back.c, t.c);
        ASSERT_EQ(back.h, t.h);
        ASSERT_EQ(back.w, t.w);
        ASSERT_EQ(back.data, t.data); // bit-exact
    }
}

TEST(Fvt, HeaderLayout) {
    Tensor t(1, 2, 1, 1);
    t.data = {1.0f, 2.0f};
    const std::string bytes = encode_fvt(t);
    ASSERT_EQ(bytes.size(), 4u + 16u + 8u);
    EXPECT_EQ(bytes.substr(0, 4), "FVT1");
    // little-endian dims
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);
}

TEST(Fvt, BadMagicAndTruncation) {
    Tensor t(1, 1, 2, 2);
    const std::string good = encode_fvt(t);
    EXPECT_THROW(decode_fvt("XXXX" + good.substr(4), "m"), format_error);
    try {
        decode_fvt(good.substr(0, good.size() - 5), "m");
        FAIL() << "expected format_error";
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find(std::to_string(good.size() - 5)),
                  std::string::npos);
    }
    // zero dim in header
    std::string zero = good;
    zero[4] = zero[5] = zero[6] = zero[7] = 0;
    EXPECT_THROW(decode_fvt(zero, "m"), format_error);
    EXPECT_THROW(read_fvt("/nonexistent/path.fvt"), format_error);
}

TEST(Ppm, RoundTripAndComments) {
    const fs::path dir = temp_dir();
    Tensor img(1, 3, 4, 5);
    Rng rng(101);
    for (float& v : img.data) v = rng.uniform(0.0f, 1.0f);
    const std::string path = (dir / "img.ppm").string();
    write_ppm(path, img);
    const Tensor back = read_ppm(path);
    ASSERT_EQ(back.h, 4);
    ASSERT_EQ(back.w, 5);
    EXPECT_LE(max_abs_diff(back, img), 0.5f / 255.0f + 1e-6f); // 8-bit quantization

    std::ofstream f(dir / "c.ppm", std::ios::binary);
    f << "P6\n# a comment\n2 1\n255\n";
    const unsigned char px[6] = {255, 0, 0, 0, 255, 0};
    f.write(reinterpret_cast<const char*>(px), 6);
    f.close();
    const Tensor c = read_ppm((dir / "c.ppm").string());
    EXPECT_FLOAT_EQ(c.at(0, 0, 0, 0), 1.0f);
    EXPECT_FLOAT_EQ(c.at(0, 1, 0, 1), 1.0f);
}

TEST(Ppm, TruncationNamesByteOffset) {
    const fs::path dir = temp_dir();
    std::ofstream f(dir / "t.ppm", std::ios::binary);
    f << "P6\n4 4\n255\n";
    f << "abc"; // 3 of 48 pixel bytes
    f.close();
    try {
        read_ppm((dir / "t.ppm").string());
        FAIL() << "expected format_error";
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
    }
    std::ofstream g(dir / "m.ppm", std::ios::binary);
    g << "P6\n1 1\n65535\nxx";
    g.close();
    EXPECT_THROW(read_ppm((dir / "m.ppm").string()), format_error);
    std::ofstream h(dir / "x.ppm", std::ios::binary);
    h << "P5\n1 1\n255\nx";
    h.close();
    EXPECT_THROW(read_ppm((dir / "x.ppm").string()), format_error);
}

TEST(Manifest, SaveLoadRoundTrip) {
    EncoderConfig cfg = builtin_config("fastvithd");
    cfg.name = "tiny";
    cfg.stage_depths = {1, 1, 1, 1, 1};
    cfg.stage_dims = {8, 16, 32, 64, 128};
    cfg.projector_dim = 16;
    const EncoderModel m = build(cfg, 77);

    const fs::path dir = temp_dir() / "model";
    fs::remove_all(dir);
    save_model(m, dir.string());
    const EncoderModel back = load_model((dir / "manifest.json").string());

    EXPECT_EQ(back.form, Form::train);
    EXPECT_EQ(back.seed, 77u);
    EXPECT_EQ(back.config.stage_dims, cfg.stage_dims);
    EXPECT_EQ(param_count(back), param_count(m));

    // bit-identical parameters -> bit-identical forward
    Rng rng(102);
    Tensor x(1, 3, 64, 64);
    for (float& v : x.data) v = rng.uniform(-1.0f, 1.0f);
    EXPECT_EQ(forward(m, x).tokens.data, forward(back, x).tokens.data);

    // folded model round-trips too
    const EncoderModel folded = fold_model(m).first;
    const fs::path dir2 = temp_dir() / "model_inf";
    fs::remove_all(dir2);
    save_model(folded, dir2.string());
    const EncoderModel back2 = load_model((dir2 / "manifest.json").string());
    EXPECT_EQ(back2.form, Form::inference);
    EXPECT_EQ(forward(folded, x).tokens.data, forward(back2, x).tokens.data);
}

TEST(Manifest, RejectsCorruptInput) {
    const fs::path dir = temp_dir();
    EXPECT_THROW(load_model((dir / "missing.json").string()), format_error);
    std::ofstream f(dir / "garbage.json");
    f << "{not json";
    f.close();
    EXPECT_THROW(load_model((dir / "garbage.json").string()), format_error);
    std::ofstream g(dir / "wrong.json");
    g << R"({"format": "something-else"})";
    g.close();
    EXPECT_THROW(load_model((dir / "wrong.json").string()), format_error);
}

TEST(Manifest, ConfigHashStableAndSensitive) {
    const EncoderConfig a = builtin_config("fastvithd");
    EncoderConfig b = a;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.projector_dim = 512;
    EXPECT_NE(config_hash(a), config_hash(b));
}

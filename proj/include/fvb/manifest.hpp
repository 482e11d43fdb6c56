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

#ifndef FVB_MANIFEST_HPP
#define FVB_MANIFEST_HPP

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fvb/encoder.hpp"
#include "fvb/io.hpp"

namespace fvb {

using json = nlohmann::json;

// Model serialization: every tensor goes to its own FVT1 file next to
// manifest.json; the manifest carries block kind, form and the tensor file
// names. Vectors are stored as (rows, len, 1, 1) tensors.

inline json config_to_json(const EncoderConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["stage_depths"] = cfg.stage_depths;
    j["stage_dims"] = cfg.stage_dims;
    json kinds = json::array();
    for (auto k : cfg.stage_kinds) kinds.push_back(to_string(k));
    j["stage_kinds"] = kinds;
    j["stem_factor"] = cfg.stem_factor;
    j["ffn_ratio"] = cfg.ffn_ratio;
    j["head_dim"] = cfg.head_dim;
    j["multiscale"] = to_string(cfg.multiscale);
    j["projector_dim"] = cfg.projector_dim;
    return j;
}

inline EncoderConfig config_from_json(const json& j) {
    EncoderConfig cfg;
    try {
        cfg.name = j.at("name").get<std::string>();
        cfg.stage_depths = j.at("stage_depths").get<std::vector<int>>();
        cfg.stage_dims = j.at("stage_dims").get<std::vector<int>>();
        for (const auto& k : j.at("stage_kinds"))
            cfg.stage_kinds.push_back(stage_kind_from_string(k.get<std::string>()));
        cfg.stem_factor = j.at("stem_factor").get<int>();
        cfg.ffn_ratio = j.at("ffn_ratio").get<float>();
        cfg.head_dim = j.at("head_dim").get<int>();
        cfg.multiscale = multiscale_from_string(j.at("multiscale").get<std::string>());
        cfg.projector_dim = j.at("projector_dim").get<int>();
    } catch (const json::exception& e) {
        throw format_error(std::string("config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

// FNV-1a over the canonical config dump; stamped into sidecars so outputs
// are traceable to the architecture that produced them.
inline std::string config_hash(const EncoderConfig& cfg) {
    const std::string s = config_to_json(cfg).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

class TensorStore {
public:
    TensorStore(std::filesystem::path dir, bool writing) : dir_(std::move(dir)), writing_(writing) {
        if (writing_) std::filesystem::create_directories(dir_);
    }

    std::string put(const std::string& name, const Tensor& t) {
        const std::string file = name + ".fvt";
        write_fvt((dir_ / file).string(), t);
        return file;
    }

    Tensor get(const std::string& file) const { return read_fvt((dir_ / file).string()); }

private:
    std::filesystem::path dir_;
    bool writing_;
};

inline Tensor vectors_to_tensor(const std::vector<const std::vector<float>*>& rows) {
    Tensor t(static_cast<int>(rows.size()), static_cast<int>(rows[0]->size()), 1, 1);
    for (size_t r = 0; r < rows.size(); ++r)
        std::copy(rows[r]->begin(), rows[r]->end(),
                  t.data.begin() + r * rows[0]->size());
    return t;
}

inline std::vector<float> tensor_row(const Tensor& t, int r) {
    return std::vector<float>(t.data.begin() + static_cast<size_t>(r) * t.c,
                              t.data.begin() + static_cast<size_t>(r + 1) * t.c);
}

inline json save_conv(TensorStore& st, const std::string& name, const ConvParams& p) {
    json j;
    j["stride"] = p.stride;
    j["padding"] = p.padding;
    j["groups"] = p.groups;
    j["weight"] = st.put(name + ".weight", p.weight);
    Tensor b(1, static_cast<int>(p.bias.size()), 1, 1);
    b.data = p.bias;
    j["bias"] = st.put(name + ".bias", b);
    return j;
}

inline ConvParams load_conv(const TensorStore& st, const json& j) {
    ConvParams p;
    p.stride = j.at("stride").get<int>();
    p.padding = j.at("padding").get<int>();
    p.groups = j.at("groups").get<int>();
    p.weight = st.get(j.at("weight").get<std::string>());
    p.bias = st.get(j.at("bias").get<std::string>()).data;
    return p;
}

inline json save_bn(TensorStore& st, const std::string& name, const BnParams& p) {
    json j;
    j["eps"] = p.eps;
    j["tensors"] = st.put(name + ".bn", vectors_to_tensor({&p.gamma, &p.beta, &p.mean, &p.var}));
    return j;
}

inline BnParams load_bn(const TensorStore& st, const json& j) {
    BnParams p;
    p.eps = j.at("eps").get<float>();
    const Tensor t = st.get(j.at("tensors").get<std::string>());
    if (t.n != 4) throw format_error("batch-norm tensor must have 4 rows, got " + t.shape_str());
    p.gamma = tensor_row(t, 0);
    p.beta = tensor_row(t, 1);
    p.mean = tensor_row(t, 2);
    p.var = tensor_row(t, 3);
    return p;
}

inline json save_ln(TensorStore& st, const std::string& name, const LayerNormParams& p) {
    json j;
    j["eps"] = p.eps;
    j["tensors"] = st.put(name + ".ln", vectors_to_tensor({&p.gamma, &p.beta}));
    return j;
}

inline LayerNormParams load_ln(const TensorStore& st, const json& j) {
    LayerNormParams p;
    p.eps = j.at("eps").get<float>();
    const Tensor t = st.get(j.at("tensors").get<std::string>());
    if (t.n != 2) throw format_error("layer-norm tensor must have 2 rows, got " + t.shape_str());
    p.gamma = tensor_row(t, 0);
    p.beta = tensor_row(t, 1);
    return p;
}

inline json save_patch_embed(TensorStore& st, const std::string& name,
                             const PatchEmbedParams& p) {
    json j;
    j["kind"] = "patch_embed";
    j["form"] = to_string(p.form);
    if (p.form == Form::train) {
        json branches = json::array();
        for (size_t i = 0; i < p.branches.size(); ++i) {
            json b;
            b["conv"] = save_conv(st, name + ".branch" + std::to_string(i), p.branches[i].conv);
            b["bn"] = save_bn(st, name + ".branch" + std::to_string(i), p.branches[i].bn);
            branches.push_back(b);
        }
        j["branches"] = branches;
        j["pointwise"] = save_conv(st, name + ".pointwise", p.pointwise);
        j["pointwise_bn"] = save_bn(st, name + ".pointwise", *p.pointwise_bn);
    } else {
        j["folded_dw"] = save_conv(st, name + ".folded_dw", *p.folded_dw);
        j["folded_pw"] = save_conv(st, name + ".folded_pw", *p.folded_pw);
    }
    return j;
}

inline PatchEmbedParams load_patch_embed(const TensorStore& st, const json& j) {
    PatchEmbedParams p;
    p.form = form_from_string(j.at("form").get<std::string>());
    if (p.form == Form::train) {
        for (const auto& b : j.at("branches"))
            p.branches.push_back({load_conv(st, b.at("conv")), load_bn(st, b.at("bn"))});
        p.pointwise = load_conv(st, j.at("pointwise"));
        p.pointwise_bn = load_bn(st, j.at("pointwise_bn"));
    } else {
        p.folded_dw = load_conv(st, j.at("folded_dw"));
        p.folded_pw = load_conv(st, j.at("folded_pw"));
    }
    return p;
}

inline json save_convffn(TensorStore& st, const std::string& name, const ConvFfnParams& p) {
    json j;
    j["pre_dw"] = save_conv(st, name + ".pre_dw", p.pre_dw);
    j["pre_bn"] = save_bn(st, name + ".pre_dw", p.pre_bn);
    j["fc1"] = save_conv(st, name + ".fc1", p.fc1);
    j["fc2"] = save_conv(st, name + ".fc2", p.fc2);
    return j;
}

inline ConvFfnParams load_convffn(const TensorStore& st, const json& j) {
    ConvFfnParams p;
    p.pre_dw = load_conv(st, j.at("pre_dw"));
    p.pre_bn = load_bn(st, j.at("pre_bn"));
    p.fc1 = load_conv(st, j.at("fc1"));
    p.fc2 = load_conv(st, j.at("fc2"));
    return p;
}

} // namespace detail

inline void save_model(const EncoderModel& m, const std::string& dir) {
    detail::TensorStore st(dir, true);
    json j;
    j["format"] = "fvb-model";
    j["version"] = 1;
    j["form"] = to_string(m.form);
    j["seed"] = m.seed;
    j["config"] = config_to_json(m.config);
    j["config_hash"] = config_hash(m.config);

    json stem;
    stem["kind"] = "stem";
    stem["form"] = to_string(m.stem.form);
    stem["conv3"] = detail::save_conv(st, "stem.conv3", m.stem.conv3);
    if (m.stem.conv3_bn) stem["conv3_bn"] = detail::save_bn(st, "stem.conv3", *m.stem.conv3_bn);
    stem["unit"] = detail::save_patch_embed(st, "stem.unit", m.stem.unit);
    j["stem"] = stem;

    json stages = json::array();
    for (size_t i = 0; i < m.stages.size(); ++i) {
        const auto& stage = m.stages[i];
        const std::string sname = "stage" + std::to_string(i + 1);
        json js;
        js["kind"] = to_string(stage.kind);
        json blocks = json::array();
        if (stage.kind == StageKind::repmixer) {
            for (size_t b = 0; b < stage.rep_blocks.size(); ++b) {
                const std::string bname = sname + ".block" + std::to_string(b);
                const auto& blk = stage.rep_blocks[b];
                json jb;
                jb["kind"] = "repmixer";
                jb["form"] = to_string(blk.mixer.form);
                jb["mix_dw"] = detail::save_conv(st, bname + ".mix_dw", blk.mixer.mix_dw);
                if (blk.mixer.bn) jb["mix_bn"] = detail::save_bn(st, bname + ".mix_dw", *blk.mixer.bn);
                jb["ffn"] = detail::save_convffn(st, bname + ".ffn", blk.ffn);
                blocks.push_back(jb);
            }
        } else {
            for (size_t b = 0; b < stage.attn_blocks.size(); ++b) {
                const std::string bname = sname + ".block" + std::to_string(b);
                const auto& blk = stage.attn_blocks[b];
                json jb;
                jb["kind"] = "attention";
                jb["cpe"] = detail::save_conv(st, bname + ".cpe", blk.cpe);
                jb["norm"] = detail::save_ln(st, bname + ".norm", blk.norm);
                jb["heads"] = blk.attn.heads;
                jb["wq"] = detail::save_conv(st, bname + ".wq", blk.attn.wq);
                jb["wk"] = detail::save_conv(st, bname + ".wk", blk.attn.wk);
                jb["wv"] = detail::save_conv(st, bname + ".wv", blk.attn.wv);
                jb["wo"] = detail::save_conv(st, bname + ".wo", blk.attn.wo);
                jb["ffn"] = detail::save_convffn(st, bname + ".ffn", blk.ffn);
                blocks.push_back(jb);
            }
        }
        js["blocks"] = blocks;
        stages.push_back(js);
    }
    j["stages"] = stages;

    json pes = json::array();
    for (size_t i = 0; i < m.patch_embeds.size(); ++i)
        pes.push_back(detail::save_patch_embed(st, "patch_embed" + std::to_string(i + 1),
                                               m.patch_embeds[i]));
    j["patch_embeds"] = pes;

    if (m.multiscale) {
        json ms;
        ms["method"] = to_string(m.multiscale->method);
        ms["tap_stages"] = m.multiscale->tap_stages;
        ms["ratios"] = m.multiscale->ratios;
        json dws = json::array();
        for (size_t i = 0; i < m.multiscale->pool_dw.size(); ++i)
            dws.push_back(detail::save_conv(st, "multiscale.dw" + std::to_string(i),
                                            m.multiscale->pool_dw[i]));
        ms["pool_dw"] = dws;
        ms["proj"] = detail::save_conv(st, "multiscale.proj", m.multiscale->proj);
        j["multiscale"] = ms;
    }

    json proj;
    proj["fc1"] = detail::save_conv(st, "projector.fc1", m.projector.fc1);
    proj["fc2"] = detail::save_conv(st, "projector.fc2", m.projector.fc2);
    j["projector"] = proj;

    std::ofstream f(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
    if (!f) throw format_error("cannot write manifest in " + dir);
    f << j.dump(2) << "\n";
}

inline EncoderModel load_model(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw format_error("cannot open manifest: " + manifest_path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw format_error(manifest_path + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "fvb-model")
            throw format_error(manifest_path + ": not an fvb model manifest");
        const detail::TensorStore st(std::filesystem::path(manifest_path).parent_path(), false);

        EncoderModel m;
        m.form = form_from_string(j.at("form").get<std::string>());
        m.seed = j.at("seed").get<uint64_t>();
        m.config = config_from_json(j.at("config"));

        const json& stem = j.at("stem");
        m.stem.form = form_from_string(stem.at("form").get<std::string>());
        m.stem.conv3 = detail::load_conv(st, stem.at("conv3"));
        if (stem.contains("conv3_bn")) m.stem.conv3_bn = detail::load_bn(st, stem.at("conv3_bn"));
        m.stem.unit = detail::load_patch_embed(st, stem.at("unit"));

        for (const auto& js : j.at("stages")) {
            StageParams stage;
            stage.kind = stage_kind_from_string(js.at("kind").get<std::string>());
            for (const auto& jb : js.at("blocks")) {
                if (stage.kind == StageKind::repmixer) {
                    RepBlockParams blk;
                    blk.mixer.form = form_from_string(jb.at("form").get<std::string>());
                    blk.mixer.mix_dw = detail::load_conv(st, jb.at("mix_dw"));
                    if (jb.contains("mix_bn")) blk.mixer.bn = detail::load_bn(st, jb.at("mix_bn"));
                    blk.ffn = detail::load_convffn(st, jb.at("ffn"));
                    stage.rep_blocks.push_back(std::move(blk));
                } else {
                    AttnBlockParams blk;
                    blk.cpe = detail::load_conv(st, jb.at("cpe"));
                    blk.norm = detail::load_ln(st, jb.at("norm"));
                    blk.attn.heads = jb.at("heads").get<int>();
                    blk.attn.wq = detail::load_conv(st, jb.at("wq"));
                    blk.attn.wk = detail::load_conv(st, jb.at("wk"));
                    blk.attn.wv = detail::load_conv(st, jb.at("wv"));
                    blk.attn.wo = detail::load_conv(st, jb.at("wo"));
                    blk.ffn = detail::load_convffn(st, jb.at("ffn"));
                    stage.attn_blocks.push_back(std::move(blk));
                }
            }
            m.stages.push_back(std::move(stage));
        }

        for (const auto& jp : j.at("patch_embeds"))
            m.patch_embeds.push_back(detail::load_patch_embed(st, jp));

        if (j.contains("multiscale")) {
            MultiscaleParams ms;
            ms.method = multiscale_from_string(j.at("multiscale").at("method").get<std::string>());
            ms.tap_stages = j.at("multiscale").at("tap_stages").get<std::vector<int>>();
            ms.ratios = j.at("multiscale").at("ratios").get<std::vector<int>>();
            for (const auto& jd : j.at("multiscale").at("pool_dw"))
                ms.pool_dw.push_back(detail::load_conv(st, jd));
            ms.proj = detail::load_conv(st, j.at("multiscale").at("proj"));
            m.multiscale = std::move(ms);
        }

        m.projector.fc1 = detail::load_conv(st, j.at("projector").at("fc1"));
        m.projector.fc2 = detail::load_conv(st, j.at("projector").at("fc2"));
        return m;
    } catch (const json::exception& e) {
        throw format_error(manifest_path + ": " + e.what());
    }
}

} // namespace fvb

#endif // FVB_MANIFEST_HPP

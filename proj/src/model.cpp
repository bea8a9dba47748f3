// SPDX-License-Identifier: Apache-2.0
#include "scomcp/model.hpp"

#include <fstream>

#include <json.hpp>

#include "scomcp/errors.hpp"

namespace scomcp {

namespace {
constexpr char kMagic[8] = {'S', 'C', 'C', 'K', 'P', 'T', '0', '1'};
}

Model Model::init(const ModelConfig& cfg, uint64_t seed) {
    Model m;
    m.cfg = cfg;
    auto rng = make_rng({seed, 0x90de1});
    m.ext = extractor::make_extractor(m.params, cfg.grid, cfg.ext_hidden, rng);
    m.sel = selector::make_selector(m.params, cfg.grid, cfg.sel_d_attn, rng);
    m.cod = codec::make_codec(m.params, cfg.grid.C, cfg.cd_model, cfg.cd_blocks, cfg.cd_heads,
                              cfg.cd_ff, rng);
    m.fus = perception::make_fusion(m.params, cfg.grid, rng);
    m.det = perception::make_detect(m.params, cfg.grid, cfg.anchors, rng);
    m.anchors = perception::make_anchors(cfg.grid, cfg.anchor_w, cfg.anchor_l, cfg.anchor_h);
    m.gamma_thr = 1.0 / cfg.grid.hw();
    return m;
}

void Model::save(const std::string& path) const {
    nlohmann::json hdr;
    hdr["version"] = 1;
    hdr["grid"] = {{"h", cfg.grid.H}, {"w", cfg.grid.W}, {"c", cfg.grid.C}, {"cell", cfg.grid.cell}};
    hdr["ext_hidden"] = cfg.ext_hidden;
    hdr["sel_d_attn"] = cfg.sel_d_attn;
    hdr["cd_model"] = cfg.cd_model;
    hdr["cd_blocks"] = cfg.cd_blocks;
    hdr["cd_heads"] = cfg.cd_heads;
    hdr["cd_ff"] = cfg.cd_ff;
    hdr["anchors"] = cfg.anchors;
    hdr["anchor_w"] = cfg.anchor_w;
    hdr["anchor_l"] = cfg.anchor_l;
    hdr["anchor_h"] = cfg.anchor_h;
    hdr["p_bound"] = cfg.p_bound;
    hdr["gamma_thr"] = gamma_thr;
    hdr["trained_stage"] = trained_stage;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& name : params.names()) {
        const auto& t = params.get(name)->val;
        tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
    }
    hdr["tensors"] = tensors;
    const std::string hs = hdr.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint " + path);
    f.write(kMagic, 8);
    const uint32_t hl = static_cast<uint32_t>(hs.size());
    f.write(reinterpret_cast<const char*>(&hl), 4);
    f.write(hs.data(), hl);
    for (const auto& name : params.names()) {
        const auto& t = params.get(name)->val;
        f.write(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
    }
    if (!f) throw IoError("short write on checkpoint " + path);
}

Model Model::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::string(magic, 8) != std::string(kMagic, 8))
        throw IoError("bad checkpoint magic in " + path);
    uint32_t hl = 0;
    f.read(reinterpret_cast<char*>(&hl), 4);
    std::string hs(hl, '\0');
    f.read(hs.data(), hl);
    if (!f) throw IoError("truncated checkpoint header in " + path);
    const auto hdr = nlohmann::json::parse(hs);

    ModelConfig cfg;
    cfg.grid.H = hdr.at("grid").at("h").get<int>();
    cfg.grid.W = hdr.at("grid").at("w").get<int>();
    cfg.grid.C = hdr.at("grid").at("c").get<int>();
    cfg.grid.cell = hdr.at("grid").at("cell").get<double>();
    cfg.ext_hidden = hdr.at("ext_hidden").get<int>();
    cfg.sel_d_attn = hdr.at("sel_d_attn").get<int>();
    cfg.cd_model = hdr.at("cd_model").get<int>();
    cfg.cd_blocks = hdr.at("cd_blocks").get<int>();
    cfg.cd_heads = hdr.at("cd_heads").get<int>();
    cfg.cd_ff = hdr.at("cd_ff").get<int>();
    cfg.anchors = hdr.at("anchors").get<int>();
    cfg.anchor_w = hdr.at("anchor_w").get<double>();
    cfg.anchor_l = hdr.at("anchor_l").get<double>();
    cfg.anchor_h = hdr.at("anchor_h").get<double>();
    cfg.p_bound = hdr.at("p_bound").get<double>();

    Model m;
    m.cfg = cfg;
    for (const auto& tj : hdr.at("tensors")) {
        const int rows = tj.at("rows").get<int>();
        const int cols = tj.at("cols").get<int>();
        nn::Tensor t(rows, cols);
        f.read(reinterpret_cast<char*>(t.data()), t.size() * sizeof(double));
        m.params.add(tj.at("name").get<std::string>(), std::move(t));
    }
    if (!f) throw IoError("truncated checkpoint tensors in " + path);

    m.ext = extractor::attach_extractor(m.params, 3);
    m.sel = selector::attach_selector(m.params, cfg.sel_d_attn);
    m.cod = codec::attach_codec(m.params, cfg.grid.C, cfg.cd_model, cfg.cd_blocks, cfg.cd_heads,
                                cfg.cd_ff);
    m.fus = perception::attach_fusion(m.params);
    m.det = perception::attach_detect(m.params, cfg.anchors);
    m.anchors = perception::make_anchors(cfg.grid, cfg.anchor_w, cfg.anchor_l, cfg.anchor_h);
    m.gamma_thr = hdr.at("gamma_thr").get<double>();
    m.trained_stage = hdr.at("trained_stage").get<int>();
    return m;
}

}  // namespace scomcp

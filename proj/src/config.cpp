// SPDX-License-Identifier: Apache-2.0
#include "scomcp/config.hpp"

#include <fstream>
#include <sstream>

#include "scomcp/errors.hpp"

namespace scomcp::config {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
    Config c;
    c.text_ = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("bad section header at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
        c.kv_[section.empty() ? key : section + "." + key] = val;
    }
    return c;
}

std::string Config::get_str(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

double Config::get_num(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("bad numeric value for " + key + ": " + it->second);
    }
}

int Config::get_int(const std::string& key, int dflt) const {
    const double v = get_num(key, dflt);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw ConfigError("expected integer for " + key);
    return i;
}

bool Config::get_bool(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    if (it->second == "true" || it->second == "1" || it->second == "on") return true;
    if (it->second == "false" || it->second == "0" || it->second == "off") return false;
    throw ConfigError("bad boolean for " + key + ": " + it->second);
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw ConfigError("bad list value for " + key + ": " + tok);
        }
    }
    return out;
}

std::vector<std::string> Config::get_str_list(const std::string& key,
                                              const std::vector<std::string>& dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::vector<std::string> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

AppConfig parse_app_config(const Config& c) {
    AppConfig a;
    a.seed = static_cast<uint64_t>(c.get_num("run.seed", 1));

    auto& s = a.data.scene;
    s.world_x = c.get_num("scene.world_x", 64.0);
    s.world_y = c.get_num("scene.world_y", 32.0);
    s.min_objects = c.get_int("scene.min_objects", 4);
    s.max_objects = c.get_int("scene.max_objects", 10);
    s.min_gap = c.get_num("scene.min_gap", 1.0);
    s.mean_l = c.get_num("scene.mean_l", 4.6);
    s.mean_w = c.get_num("scene.mean_w", 1.9);
    s.mean_h = c.get_num("scene.mean_h", 1.6);
    s.size_jitter = c.get_num("scene.size_jitter", 0.15);
    s.occlusion_prob = c.get_num("scene.occlusion_prob", 0.9);
    s.max_collab_distance = c.get_num("scene.max_collab_distance", 70.0);
    s.max_retries = c.get_int("scene.max_retries", 1000);

    a.data.sensor.max_range = c.get_num("sensor.max_range", 60.0);
    a.data.sensor.angular_res_deg = c.get_num("sensor.angular_res_deg", 0.5);
    a.data.sensor.noise_std = c.get_num("sensor.noise_std", 0.02);

    a.data.count = c.get_int("data.count", 400);
    a.data.split_train = c.get_num("data.split_train", 0.4);
    a.data.split_val = c.get_num("data.split_val", 0.1);
    a.data.split_test = c.get_num("data.split_test", 0.5);

    a.model.grid.H = c.get_int("grid.h", 32);
    a.model.grid.W = c.get_int("grid.w", 64);
    a.model.grid.C = c.get_int("grid.c", 32);
    a.model.grid.cell = c.get_num("grid.cell", 1.0);
    a.model.ext_hidden = c.get_int("extractor.hidden", 32);
    a.model.sel_d_attn = c.get_int("selector.d_attn", 16);
    a.model.cd_model = c.get_int("codec.d_model", 64);
    a.model.cd_blocks = c.get_int("codec.blocks", 2);
    a.model.cd_heads = c.get_int("codec.heads", 4);
    a.model.cd_ff = c.get_int("codec.ff_mult", 4);
    a.model.anchors = 2;
    a.model.anchor_w = s.mean_w;
    a.model.anchor_l = s.mean_l;
    a.model.anchor_h = s.mean_h;
    a.model.p_bound = c.get_num("codec.p_bound", 1.0);

    auto& t = a.train;
    t.lr0 = c.get_num("train.lr", 1e-3);
    t.decay = c.get_num("train.decay", 0.6);
    t.decay_every = c.get_int("train.decay_every", 5);
    t.batch = c.get_int("train.batch", 4);
    t.epochs_stage0 = c.get_int("train.epochs_stage0", 20);
    t.epochs_stage1 = c.get_int("train.epochs_stage1", 8);
    t.epochs_stage2 = c.get_int("train.epochs_stage2", 10);
    t.epochs_stage3 = c.get_int("train.epochs_stage3", 6);
    t.pos_iou = c.get_num("train.pos_iou", 0.45);
    t.neg_iou = c.get_num("train.neg_iou", 0.30);
    t.weights.eta = c.get_num("loss.eta", 2.0);
    t.weights.gamma_mse = c.get_num("loss.gamma_mse", 1.0);
    t.weights.focal_alpha = c.get_num("loss.focal_alpha", 0.25);
    t.weights.focal_gamma = c.get_num("loss.focal_gamma", 2.0);
    t.snr_lo = c.get_num("channel.train_snr_lo", 0.0);
    t.snr_hi = c.get_num("channel.train_snr_hi", 20.0);
    t.equalize = c.get_bool("channel.equalize", true);
    t.cr_target = c.get_num("selector.cr_target", 1.4e-3);
    t.gamma_thr_train = c.get_num("selector.gamma_thr_train", -1.0);
    t.seed = a.seed;

    auto& e = a.eval;
    e.snrs = c.get_list("eval.snrs", e.snrs);
    e.channels = c.get_str_list("eval.channels", e.channels);
    e.schemes = c.get_str_list("eval.schemes", e.schemes);
    e.n_seeds = c.get_int("eval.seeds", 5);
    e.cr_sem = t.cr_target;
    // defaults derived from use parity: cr_classic = cr_sem * R_c * log2(Mc) / 8
    e.cr_classic16 = c.get_num("classic.cr_16qam", e.cr_sem * 0.5 * 4.0 / 8.0);
    e.cr_classic256 = c.get_num("classic.cr_256qam", e.cr_sem * 0.5 * 8.0 / 8.0);
    e.parity_tol = c.get_num("eval.parity_tol", 0.005);
    e.equalize = t.equalize;
    e.decode.score_thr = c.get_num("eval.score_thr", 0.0);
    e.decode.nms_iou = c.get_num("eval.nms_iou", 0.15);
    e.decode.pre_nms_topk = c.get_int("eval.pre_nms_topk", 512);
    e.decode.post_nms_keep = c.get_int("eval.post_nms_keep", 128);
    e.fec_block_bits = c.get_int("classic.fec_block_bits", 500);
    e.ablation_crs = c.get_list("eval.ablation_crs", e.ablation_crs);

    return a;
}

}  // namespace scomcp::config

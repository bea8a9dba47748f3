// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "scomcp/codec.hpp"
#include "scomcp/extractor.hpp"
#include "scomcp/perception.hpp"
#include "scomcp/selector.hpp"

namespace scomcp {

struct ModelConfig {
    extractor::GridSpec grid;
    int ext_hidden = 32;
    int sel_d_attn = 16;
    int cd_model = 64, cd_blocks = 2, cd_heads = 4, cd_ff = 4;
    int anchors = 2;
    double anchor_w = 1.9, anchor_l = 4.6, anchor_h = 1.6;
    double p_bound = 1.0;
};

// All trainable networks plus the calibrated selection threshold. Parameter
// names are prefixed ext. / sel. / codec.enc. / codec.dec. / fus. / det. so
// stage plans can freeze whole networks by prefix.
struct Model {
    ModelConfig cfg;
    nn::ParamStore params;
    extractor::ExtractorParams ext;
    selector::SelectorParams sel;
    codec::CodecParams cod;
    perception::FusionParams fus;
    perception::DetectParams det;
    perception::AnchorSet anchors;
    double gamma_thr = 0.0;   // operating threshold, set by stage-1 calibration
    int trained_stage = -1;   // highest completed training stage

    static Model init(const ModelConfig& cfg, uint64_t seed);

    // versioned binary checkpoint; the grid spec and architecture sizes live
    // in the JSON header
    void save(const std::string& path) const;
    static Model load(const std::string& path);

    uint64_t param_hash(const std::string& prefix) const { return params.hash_prefix(prefix); }
};

}  // namespace scomcp

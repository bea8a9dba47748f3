// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "scomcp/extractor.hpp"

namespace scomcp::perception {

using extractor::GridSpec;

struct FusionParams {
    nn::Var proj_w, proj_b;  // 1x1 conv C->C after the agent attention
};

struct DetectParams {
    nn::Var cls_w, cls_b;  // 1x1 conv C->A
    nn::Var reg_w, reg_b;  // 1x1 conv C->7A
    int A = 2;
};

FusionParams make_fusion(nn::ParamStore& store, const GridSpec& grid, std::mt19937_64& rng);
FusionParams attach_fusion(const nn::ParamStore& store);
DetectParams make_detect(nn::ParamStore& store, const GridSpec& grid, int anchors,
                         std::mt19937_64& rng);
DetectParams attach_detect(const nn::ParamStore& store, int anchors);

// Per-cell scaled dot-product attention over the {ego, collaborator} stack
// (query = ego); cells the collaborator did not cover attend over its zero
// padding. weights_out receives the [HW, 2] row-stochastic weights.
nn::Var fuse_attend(const nn::Var& ego, const nn::Var& collab, nn::Var* weights_out = nullptr);

// attention + learned 1x1 projection
nn::Var fuse(const nn::Var& ego, const nn::Var& collab, const FusionParams& p);

struct RawDetection {
    nn::Var cls;  // [HW, A] logits
    nn::Var reg;  // [HW, 7A]
};

RawDetection detect(const nn::Var& fused, const DetectParams& p);

// anchor grid: one size prior, two yaws (0 and pi/2) per cell
struct AnchorSet {
    GridSpec grid;
    int A = 2;
    double w = 0.0, l = 0.0, h = 0.0, z = 0.0;
    double diag = 0.0;  // sqrt(w^2 + l^2), offset normalizer
    Box7 anchor(int cell, int a) const {
        Box7 b;
        b.cx = grid.cell_cx(cell);
        b.cy = grid.cell_cy(cell);
        b.cz = z;
        b.w = w;
        b.l = l;
        b.h = h;
        b.yaw = a == 0 ? 0.0 : kPi / 2.0;
        return b;
    }
};

AnchorSet make_anchors(const GridSpec& grid, double mean_w, double mean_l, double mean_h);

// standard residual encoding: offsets / anchor diagonal, log size ratios,
// wrapped yaw offset
std::array<double, 7> encode_residual(const Box7& gt, const Box7& anchor, double diag);
Box7 decode_residual(const std::array<double, 7>& r, const Box7& anchor, double diag);

struct Detection {
    std::vector<Box7> boxes;
    std::vector<double> scores;  // descending
};

struct DecodeConfig {
    double score_thr = 0.0;  // 0 keeps the full ranked list for AP
    double nms_iou = 0.15;
    int pre_nms_topk = 512;
    int post_nms_keep = 128;
};

Detection decode_boxes(const nn::Tensor& cls_logits, const nn::Tensor& reg,
                       const AnchorSet& anchors, const DecodeConfig& cfg);

}  // namespace scomcp::perception

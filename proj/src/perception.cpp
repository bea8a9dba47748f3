// SPDX-License-Identifier: Apache-2.0
#include "scomcp/perception.hpp"

#include <algorithm>
#include <numeric>

namespace scomcp::perception {

FusionParams make_fusion(nn::ParamStore& store, const GridSpec& grid, std::mt19937_64& rng) {
    FusionParams p;
    p.proj_w = store.add("fus.proj.w", nn::he_init(grid.C, grid.C, grid.C, rng));
    p.proj_b = store.add("fus.proj.b", nn::Tensor::zeros(1, grid.C));
    return p;
}

FusionParams attach_fusion(const nn::ParamStore& store) {
    return {store.get("fus.proj.w"), store.get("fus.proj.b")};
}

DetectParams make_detect(nn::ParamStore& store, const GridSpec& grid, int anchors,
                         std::mt19937_64& rng) {
    DetectParams p;
    p.A = anchors;
    p.cls_w = store.add("det.cls.w", nn::he_init(anchors, grid.C, grid.C, rng));
    // classification bias starts at the focal prior logit(0.01)
    p.cls_b = store.add("det.cls.b", nn::Tensor::full(1, anchors, -std::log(99.0)));
    p.reg_w = store.add("det.reg.w", nn::he_init(7 * anchors, grid.C, grid.C, rng));
    p.reg_b = store.add("det.reg.b", nn::Tensor::zeros(1, 7 * anchors));
    return p;
}

DetectParams attach_detect(const nn::ParamStore& store, int anchors) {
    DetectParams p;
    p.A = anchors;
    p.cls_w = store.get("det.cls.w");
    p.cls_b = store.get("det.cls.b");
    p.reg_w = store.get("det.reg.w");
    p.reg_b = store.get("det.reg.b");
    return p;
}

nn::Var fuse_attend(const nn::Var& ego, const nn::Var& collab, nn::Var* weights_out) {
    if (!ego->val.same_shape(collab->val)) throw ContractViolation("fuse: grid mismatch");
    const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(ego->val.cols()));
    auto s_ee = nn::scale_const(nn::rowwise_dot(ego, ego), inv_sqrt_c);
    auto s_ec = nn::scale_const(nn::rowwise_dot(ego, collab), inv_sqrt_c);
    auto weights = nn::softmax_rows(nn::concat_cols(s_ee, s_ec));  // [HW, 2]
    if (weights_out) *weights_out = weights;
    auto w_e = nn::col_slice(weights, 0, 1);
    auto w_c = nn::col_slice(weights, 1, 2);
    return nn::add(nn::mul_colvec(ego, w_e), nn::mul_colvec(collab, w_c));
}

nn::Var fuse(const nn::Var& ego, const nn::Var& collab, const FusionParams& p) {
    auto att = fuse_attend(ego, collab);
    return nn::relu(nn::add_rowvec(nn::matmul_op(att, p.proj_w), p.proj_b));
}

RawDetection detect(const nn::Var& fused, const DetectParams& p) {
    RawDetection r;
    r.cls = nn::add_rowvec(nn::matmul_nt(fused, p.cls_w), p.cls_b);
    r.reg = nn::add_rowvec(nn::matmul_nt(fused, p.reg_w), p.reg_b);
    return r;
}

AnchorSet make_anchors(const GridSpec& grid, double mean_w, double mean_l, double mean_h) {
    AnchorSet a;
    a.grid = grid;
    a.A = 2;
    a.w = mean_w;
    a.l = mean_l;
    a.h = mean_h;
    a.z = mean_h / 2.0;
    a.diag = std::sqrt(mean_w * mean_w + mean_l * mean_l);
    return a;
}

std::array<double, 7> encode_residual(const Box7& gt, const Box7& anchor, double diag) {
    return {(gt.cx - anchor.cx) / diag, (gt.cy - anchor.cy) / diag, (gt.cz - anchor.cz) / anchor.h,
            std::log(gt.w / anchor.w),  std::log(gt.l / anchor.l),  std::log(gt.h / anchor.h),
            wrap_angle(gt.yaw - anchor.yaw)};
}

Box7 decode_residual(const std::array<double, 7>& r, const Box7& anchor, double diag) {
    Box7 b;
    b.cx = anchor.cx + r[0] * diag;
    b.cy = anchor.cy + r[1] * diag;
    b.cz = anchor.cz + r[2] * anchor.h;
    b.w = anchor.w * std::exp(r[3]);
    b.l = anchor.l * std::exp(r[4]);
    b.h = anchor.h * std::exp(r[5]);
    b.yaw = wrap_angle(anchor.yaw + r[6]);
    return b;
}

namespace {

struct Cand {
    double score;
    int cell, a;
};

bool aabb_overlap(const Box7& x, const Box7& y) {
    const double rx = (std::abs(x.w) + std::abs(x.l)) / 2.0;
    const double ry = (std::abs(y.w) + std::abs(y.l)) / 2.0;
    return std::abs(x.cx - y.cx) <= rx + ry && std::abs(x.cy - y.cy) <= rx + ry;
}

}  // namespace

Detection decode_boxes(const nn::Tensor& cls_logits, const nn::Tensor& reg,
                       const AnchorSet& anchors, const DecodeConfig& cfg) {
    const int hw = anchors.grid.hw();
    const int A = anchors.A;
    if (cls_logits.rows() != hw || cls_logits.cols() != A || reg.rows() != hw || reg.cols() != 7 * A)
        throw ContractViolation("decode_boxes: raw detection shape mismatch");

    std::vector<Cand> cands;
    cands.reserve(static_cast<size_t>(hw) * A);
    for (int i = 0; i < hw; ++i) {
        for (int a = 0; a < A; ++a) {
            const double x = cls_logits.at(i, a);
            const double score = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            if (score > cfg.score_thr) cands.push_back({score, i, a});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.cell * 2 + a.a < b.cell * 2 + b.a;  // deterministic tie-break
    });
    if (static_cast<int>(cands.size()) > cfg.pre_nms_topk) cands.resize(cfg.pre_nms_topk);

    std::vector<Box7> decoded(cands.size());
    for (size_t i = 0; i < cands.size(); ++i) {
        const Box7 anchor = anchors.anchor(cands[i].cell, cands[i].a);
        std::array<double, 7> r;
        for (int j = 0; j < 7; ++j) r[j] = reg.at(cands[i].cell, cands[i].a * 7 + j);
        decoded[i] = decode_residual(r, anchor, anchors.diag);
    }

    Detection out;
    std::vector<char> suppressed(cands.size(), 0);
    for (size_t i = 0; i < cands.size(); ++i) {
        if (suppressed[i]) continue;
        out.boxes.push_back(decoded[i]);
        out.scores.push_back(cands[i].score);
        if (static_cast<int>(out.boxes.size()) >= cfg.post_nms_keep) break;
        for (size_t j = i + 1; j < cands.size(); ++j) {
            if (suppressed[j] || !aabb_overlap(decoded[i], decoded[j])) continue;
            if (rotated_iou(decoded[i], decoded[j]) > cfg.nms_iou) suppressed[j] = 1;
        }
    }
    return out;
}

}  // namespace scomcp::perception

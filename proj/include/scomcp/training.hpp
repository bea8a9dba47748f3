// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "scomcp/perception.hpp"

namespace scomcp::training {

struct LossWeights {
    double eta = 2.0;         // regression weight (Eq.-22 style composite)
    double gamma_mse = 1.0;   // transmission MSE weight
    double focal_alpha = 0.25;
    double focal_gamma = 2.0;
};

// classification targets per anchor: 1 positive, 0 negative, -1 ignored
struct Targets {
    nn::Tensor cls;  // [HW, A]
    nn::Tensor reg;  // [HW, 7A], encoded residuals at positives
    nn::Tensor pos;  // [HW, A] positive mask
    int n_pos = 0;
};

// -alpha_t (1-p_t)^gamma log p_t summed over non-ignored anchors and
// normalized by the positive count (clamped to 1); 0 when all are ignored
nn::Var focal_loss(const nn::Var& logits, const nn::Tensor& targets, double alpha, double gamma_f);

// huber residuals summed per positive anchor, mean over positives;
// defined as 0 with no positives
nn::Var smooth_l1(const nn::Var& reg_pred, const nn::Tensor& reg_targets, const nn::Tensor& pos_mask);

nn::Var loss_per(const perception::RawDetection& raw, const Targets& t, const LossWeights& w);
nn::Var loss_trans(const perception::RawDetection& raw, const Targets& t, const nn::Var& f_hat,
                   const nn::Var& f, const LossWeights& w);

// BEV-IoU anchor matching; every ground-truth box additionally forces its
// best-IoU anchor positive
Targets assign_targets(const perception::AnchorSet& anchors, const scenes::BoxSet& gt,
                       double pos_iou, double neg_iou);

struct TrainConfig {
    double lr0 = 1e-3, decay = 0.6;
    int decay_every = 5;  // epochs per decay step
    int batch = 4;
    int epochs_stage0 = 8, epochs_stage1 = 4, epochs_stage2 = 6, epochs_stage3 = 4;
    double pos_iou = 0.45, neg_iou = 0.30;
    LossWeights weights;
    double snr_lo = 0.0, snr_hi = 20.0;  // per-sample training SNR range (dB)
    bool equalize = true;
    double cr_target = 1.4e-3;       // operating compression ratio
    double gamma_thr_train = -1.0;   // stage-1 training threshold; <0 means 1/(H*W)
    uint64_t seed = 1;
};

struct StagePlan {
    int stage = 0;
    std::vector<std::string> train_prefixes;
    std::vector<std::string> frozen_prefixes;
    int epochs = 0;
    bool use_channel = false;   // encode -> rayleigh -> decode in the loop
    bool use_selector = false;  // stage 0 shares the full map
    bool loss_trans = false;    // stage 2 adds the MSE term
};

StagePlan stage_plan(int stage, const TrainConfig& cfg);

int epochs_for_stage(int stage, const TrainConfig& cfg);

}  // namespace scomcp::training

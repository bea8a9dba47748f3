// SPDX-License-Identifier: Apache-2.0
#include "scomcp/training.hpp"

#include <algorithm>
#include <cmath>

namespace scomcp::training {

namespace {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid_stable(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

nn::Var focal_loss(const nn::Var& logits, const nn::Tensor& targets, double alpha, double gamma_f) {
    if (!logits->val.same_shape(targets)) throw ContractViolation("focal_loss: target shape mismatch");
    // summed over non-ignored anchors, normalized by the positive count
    // (PointPillars-style); without positives the normalizer clamps to 1
    int n_valid = 0, n_pos = 0;
    for (int64_t i = 0; i < targets.size(); ++i) {
        if (targets[i] >= 0.0) ++n_valid;
        if (targets[i] > 0.5) ++n_pos;
    }
    if (n_valid == 0) return nn::constant(nn::Tensor::zeros(1, 1));
    const int norm = std::max(1, n_pos);

    nn::Tensor out(1, 1);
    double acc = 0.0;
    for (int64_t i = 0; i < targets.size(); ++i) {
        if (targets[i] < 0.0) continue;
        const double x = logits->val[i];
        const double p = sigmoid_stable(x);
        if (targets[i] > 0.5)
            acc += alpha * std::pow(1.0 - p, gamma_f) * softplus(-x);
        else
            acc += (1.0 - alpha) * std::pow(p, gamma_f) * softplus(x);
    }
    out[0] = acc / norm;

    auto tg = std::make_shared<nn::Tensor>(targets);
    auto node = std::make_shared<nn::Node>();
    node->val = out;
    node->requires_grad = logits->requires_grad;
    if (node->requires_grad) {
        node->parents = {logits};
        node->backfn = [logits, tg, alpha, gamma_f, norm](nn::Node& n) {
            auto& g = logits->ensure_grad();
            const double scale = n.grad[0] / norm;
            for (int64_t i = 0; i < tg->size(); ++i) {
                if ((*tg)[i] < 0.0) continue;
                const double x = logits->val[i];
                const double p = sigmoid_stable(x);
                double d;
                if ((*tg)[i] > 0.5) {
                    const double logp = -softplus(-x);
                    d = alpha * gamma_f * p * std::pow(1.0 - p, gamma_f) * logp -
                        alpha * std::pow(1.0 - p, gamma_f + 1.0);
                } else {
                    const double log1mp = -softplus(x);
                    d = -(1.0 - alpha) * gamma_f * std::pow(p, gamma_f) * (1.0 - p) * log1mp +
                        (1.0 - alpha) * std::pow(p, gamma_f + 1.0);
                }
                g[i] += scale * d;
            }
        };
    }
    return node;
}

nn::Var smooth_l1(const nn::Var& reg_pred, const nn::Tensor& reg_targets, const nn::Tensor& pos_mask) {
    if (!reg_pred->val.same_shape(reg_targets)) throw ContractViolation("smooth_l1: target shape mismatch");
    const int A = pos_mask.cols();
    if (reg_pred->val.cols() != 7 * A || pos_mask.rows() != reg_pred->val.rows())
        throw ContractViolation("smooth_l1: mask shape mismatch");

    int n_pos = 0;
    for (int64_t i = 0; i < pos_mask.size(); ++i)
        if (pos_mask[i] > 0.5) ++n_pos;
    if (n_pos == 0) return nn::constant(nn::Tensor::zeros(1, 1));

    nn::Tensor out(1, 1);
    double acc = 0.0;
    const int R = reg_pred->val.rows();
    for (int r = 0; r < R; ++r) {
        for (int a = 0; a < A; ++a) {
            if (pos_mask.at(r, a) < 0.5) continue;
            for (int j = 0; j < 7; ++j) {
                const double d = reg_pred->val.at(r, a * 7 + j) - reg_targets.at(r, a * 7 + j);
                acc += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
            }
        }
    }
    out[0] = acc / n_pos;  // residuals summed per anchor, mean over positives

    auto tg = std::make_shared<nn::Tensor>(reg_targets);
    auto pm = std::make_shared<nn::Tensor>(pos_mask);
    auto node = std::make_shared<nn::Node>();
    node->val = out;
    node->requires_grad = reg_pred->requires_grad;
    if (node->requires_grad) {
        node->parents = {reg_pred};
        node->backfn = [reg_pred, tg, pm, n_pos, A](nn::Node& n) {
            auto& g = reg_pred->ensure_grad();
            const double scale = n.grad[0] / n_pos;
            const int R = reg_pred->val.rows();
            for (int r = 0; r < R; ++r) {
                for (int a = 0; a < A; ++a) {
                    if (pm->at(r, a) < 0.5) continue;
                    for (int j = 0; j < 7; ++j) {
                        const double d = reg_pred->val.at(r, a * 7 + j) - tg->at(r, a * 7 + j);
                        g.at(r, a * 7 + j) += scale * (std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0));
                    }
                }
            }
        };
    }
    return node;
}

nn::Var loss_per(const perception::RawDetection& raw, const Targets& t, const LossWeights& w) {
    auto cls = focal_loss(raw.cls, t.cls, w.focal_alpha, w.focal_gamma);
    auto reg = smooth_l1(raw.reg, t.reg, t.pos);
    return nn::add(cls, nn::scale_const(reg, w.eta));
}

nn::Var loss_trans(const perception::RawDetection& raw, const Targets& t, const nn::Var& f_hat,
                   const nn::Var& f, const LossWeights& w) {
    return nn::add(loss_per(raw, t, w), nn::scale_const(nn::mse(f_hat, f), w.gamma_mse));
}

Targets assign_targets(const perception::AnchorSet& anchors, const scenes::BoxSet& gt,
                       double pos_iou, double neg_iou) {
    if (pos_iou <= neg_iou) throw ContractViolation("assign_targets: pos_iou must exceed neg_iou");
    const int hw = anchors.grid.hw();
    const int A = anchors.A;
    Targets t;
    t.cls = nn::Tensor::zeros(hw, A);  // default negative
    t.reg = nn::Tensor::zeros(hw, 7 * A);
    t.pos = nn::Tensor::zeros(hw, A);

    if (gt.empty()) return t;

    // best IoU and matching gt per anchor, visiting only cells near each box
    nn::Tensor best_iou = nn::Tensor::zeros(hw, A);
    std::vector<int> best_gt(static_cast<size_t>(hw) * A, -1);
    std::vector<double> gt_best_iou(gt.size(), -1.0);
    std::vector<int> gt_best_anchor(gt.size(), -1);

    const auto& grid = anchors.grid;
    for (size_t gi = 0; gi < gt.size(); ++gi) {
        const Box7& g = gt[gi];
        const double radius = (std::hypot(g.w, g.l) + anchors.diag) / 2.0 + grid.cell;
        const int j0 = std::max(0, static_cast<int>((g.cx - radius + grid.x_extent() / 2.0) / grid.cell));
        const int j1 = std::min(grid.W - 1, static_cast<int>((g.cx + radius + grid.x_extent() / 2.0) / grid.cell));
        const int i0 = std::max(0, static_cast<int>((g.cy - radius + grid.y_extent() / 2.0) / grid.cell));
        const int i1 = std::min(grid.H - 1, static_cast<int>((g.cy + radius + grid.y_extent() / 2.0) / grid.cell));
        for (int i = i0; i <= i1; ++i) {
            for (int j = j0; j <= j1; ++j) {
                const int cell = i * grid.W + j;
                for (int a = 0; a < A; ++a) {
                    const double iou = rotated_iou(anchors.anchor(cell, a), g);
                    if (iou > best_iou.at(cell, a)) {
                        best_iou.at(cell, a) = iou;
                        best_gt[static_cast<size_t>(cell) * A + a] = static_cast<int>(gi);
                    }
                    if (iou > gt_best_iou[gi]) {
                        gt_best_iou[gi] = iou;
                        gt_best_anchor[gi] = cell * A + a;
                    }
                }
            }
        }
    }

    for (int cell = 0; cell < hw; ++cell) {
        for (int a = 0; a < A; ++a) {
            const double iou = best_iou.at(cell, a);
            if (iou >= pos_iou) {
                t.cls.at(cell, a) = 1.0;
                t.pos.at(cell, a) = 1.0;
            } else if (iou > neg_iou) {
                t.cls.at(cell, a) = -1.0;  // ignored band
            }
        }
    }
    // force each gt's best anchor positive
    for (size_t gi = 0; gi < gt.size(); ++gi) {
        if (gt_best_anchor[gi] < 0) continue;
        const int cell = gt_best_anchor[gi] / A;
        const int a = gt_best_anchor[gi] % A;
        t.cls.at(cell, a) = 1.0;
        t.pos.at(cell, a) = 1.0;
        best_gt[static_cast<size_t>(cell) * A + a] = static_cast<int>(gi);
    }

    for (int cell = 0; cell < hw; ++cell) {
        for (int a = 0; a < A; ++a) {
            if (t.pos.at(cell, a) < 0.5) continue;
            ++t.n_pos;
            const int gi = best_gt[static_cast<size_t>(cell) * A + a];
            const auto r = perception::encode_residual(gt[gi], anchors.anchor(cell, a), anchors.diag);
            for (int j = 0; j < 7; ++j) t.reg.at(cell, a * 7 + j) = r[j];
        }
    }
    return t;
}

StagePlan stage_plan(int stage, const TrainConfig& cfg) {
    StagePlan p;
    p.stage = stage;
    switch (stage) {
        case 0:
            p.train_prefixes = {"ext.", "fus.", "det."};
            p.frozen_prefixes = {"sel.", "codec."};
            p.epochs = cfg.epochs_stage0;
            break;
        case 1:
            p.train_prefixes = {"sel."};
            p.frozen_prefixes = {"ext.", "fus.", "det.", "codec."};
            p.epochs = cfg.epochs_stage1;
            p.use_selector = true;
            break;
        case 2:
            p.train_prefixes = {"codec."};
            p.frozen_prefixes = {"ext.", "sel.", "fus.", "det."};
            p.epochs = cfg.epochs_stage2;
            p.use_selector = true;
            p.use_channel = true;
            p.loss_trans = true;
            break;
        case 3:
            p.train_prefixes = {"ext.", "sel.", "codec.", "fus.", "det."};
            p.epochs = cfg.epochs_stage3;
            p.use_selector = true;
            p.use_channel = true;
            break;
        default:
            throw ConfigError("stage must be 0..3");
    }
    return p;
}

int epochs_for_stage(int stage, const TrainConfig& cfg) { return stage_plan(stage, cfg).epochs; }

}  // namespace scomcp::training

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "scomcp/config.hpp"
#include "scomcp/dataset.hpp"
#include "scomcp/evaluation.hpp"
#include "scomcp/model.hpp"
#include "scomcp/training.hpp"

namespace scomcp::runner {

struct PreparedScene {
    nn::Tensor raw_e, raw_j;  // pillar features, collaborator projected into the ego frame
    scenes::BoxSet gt;        // ego-frame ground truth inside the grid extent
    training::Targets targets;
    // caches for frozen-network stages / evaluation
    nn::Tensor M_e, M_j;  // extractor outputs
    nn::Tensor probs;     // selector keep probabilities
};

struct PreparedDataset {
    std::vector<PreparedScene> scenes;
};

PreparedDataset prepare(const std::vector<dataset::SceneRecord>& records, const Model& model,
                        const training::TrainConfig& tcfg);

void cache_features(const Model& model, PreparedDataset& ds);
void cache_probs(const Model& model, PreparedDataset& ds);  // requires cache_features

// threshold that hits mean K ~= max(1, cr_target * H * W) on the dataset's
// cached probabilities
double calibrate_gamma(const Model& model, PreparedDataset& ds, double cr_target);

struct EpochLog {
    int stage = 0, epoch = 0;
    double mean_loss = 0.0, lr = 0.0;
};

// Runs one Algorithm-1 stage (0 = bootstrap of extractor/fusion/detector).
// Enforces stage order, freezes by prefix, refreshes frozen caches, persists
// a checkpoint per epoch when run_dir is given, and calibrates gamma_thr on
// the validation split after stage 1.
std::vector<EpochLog> train_stage(Model& model, int stage, PreparedDataset& train,
                                  PreparedDataset& val, const training::TrainConfig& cfg,
                                  const std::string& run_dir = "");

// Full comparison sweep. Refuses to run when the Eq.-25 channel-use
// accounting of the compared transmission schemes diverges.
std::vector<evaluation::MetricsRow> evaluate(const Model& model, PreparedDataset& test,
                                             const config::EvalConfig& ecfg, uint64_t base_seed);

struct AblationRow {
    double cr_target = 0.0;
    double realized_cr = 0.0;
    double ap50_selector = 0.0, ap70_selector = 0.0;
    double ap50_random = 0.0, ap70_random = 0.0;
};

// Lossless-transmission CR sweep: learned selection vs a random mask with the
// same per-scene K (Fig.-9 style ablation).
std::vector<AblationRow> ablation_sweep(const Model& model, PreparedDataset& test,
                                        PreparedDataset& val, const std::vector<double>& crs,
                                        const config::EvalConfig& ecfg, uint64_t seed);

// mean token MSE of the codec across a dataset at one SNR (Rayleigh)
double codec_val_mse(const Model& model, PreparedDataset& ds, double snr_db, bool equalize,
                     uint64_t seed);

// single-scene detection for one scheme (shared by evaluate and the CLI)
perception::Detection run_scene_scheme(const Model& model, const PreparedScene& ps,
                                       const std::string& scheme, const channel::ChannelConfig& ch,
                                       const config::EvalConfig& ecfg, double gamma_scheme,
                                       int* k_out = nullptr);

}  // namespace scomcp::runner

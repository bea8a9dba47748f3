// SPDX-License-Identifier: Apache-2.0
#include "scomcp/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace scomcp::runner {

namespace {

using nn::Tensor;
using nn::Var;

Tensor zero_map(const extractor::GridSpec& g) { return Tensor::zeros(g.hw(), g.C); }

// masked full map: M (.) rep(mask)
Tensor apply_mask(const Tensor& M, const std::vector<uint8_t>& mask) {
    Tensor out = M;
    for (int r = 0; r < out.rows(); ++r)
        if (!mask[r])
            for (int c = 0; c < out.cols(); ++c) out.at(r, c) = 0.0;
    return out;
}

std::vector<int> mask_positions(const std::vector<uint8_t>& mask) {
    std::vector<int> pos;
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) pos.push_back(static_cast<int>(i));
    return pos;
}

Tensor gather_tensor(const Tensor& M, const std::vector<int>& pos) {
    Tensor F(static_cast<int>(pos.size()), M.cols());
    for (size_t i = 0; i < pos.size(); ++i)
        for (int c = 0; c < M.cols(); ++c) F.at(static_cast<int>(i), c) = M.at(pos[i], c);
    return F;
}

Tensor scatter_tensor(const Tensor& F, const std::vector<int>& pos, int hw) {
    Tensor out(hw, F.cols());
    for (size_t i = 0; i < pos.size(); ++i)
        for (int c = 0; c < F.cols(); ++c) out.at(pos[i], c) = F.at(static_cast<int>(i), c);
    return out;
}

}  // namespace

PreparedDataset prepare(const std::vector<dataset::SceneRecord>& records, const Model& model,
                        const training::TrainConfig& tcfg) {
    PreparedDataset ds;
    ds.scenes.reserve(records.size());
    const auto& grid = model.cfg.grid;
    const scenes::EvalRange range{-grid.x_extent() / 2.0, grid.x_extent() / 2.0,
                                  -grid.y_extent() / 2.0, grid.y_extent() / 2.0};
    for (const auto& rec : records) {
        PreparedScene ps;
        const auto collab_in_ego = scenes::project_points(rec.collab_cloud, "collab",
                                                          rec.scene.collab_pose, "ego",
                                                          rec.scene.ego_pose);
        ps.raw_e = extractor::rasterize(rec.ego_cloud, grid);
        ps.raw_j = extractor::rasterize(collab_in_ego, grid);
        ps.gt = scenes::ground_truth_boxes(rec.scene, range);
        ps.targets = training::assign_targets(model.anchors, ps.gt, tcfg.pos_iou, tcfg.neg_iou);
        ds.scenes.push_back(std::move(ps));
    }
    return ds;
}

void cache_features(const Model& model, PreparedDataset& ds) {
    for (auto& ps : ds.scenes) {
        ps.M_e = extractor::extract(nn::constant(ps.raw_e), model.cfg.grid, model.ext)->val;
        ps.M_j = extractor::extract(nn::constant(ps.raw_j), model.cfg.grid, model.ext)->val;
    }
}

void cache_probs(const Model& model, PreparedDataset& ds) {
    for (auto& ps : ds.scenes) {
        if (ps.M_j.size() == 0) throw ContractViolation("cache_probs: features not cached");
        ps.probs = selector::keep_probabilities_graph(nn::constant(ps.M_j), model.cfg.grid,
                                                      model.sel)->val;
    }
}

double calibrate_gamma(const Model& model, PreparedDataset& ds, double cr_target) {
    if (ds.scenes.empty()) throw ContractViolation("calibrate_gamma: empty dataset");
    const double target_k = std::max(1.0, cr_target * model.cfg.grid.hw());
    // bisect on the threshold; mean K is monotone non-increasing in gamma
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2.0;
        double mean_k = 0.0;
        for (const auto& ps : ds.scenes) {
            int k = 0;
            for (int64_t i = 0; i < ps.probs.size(); ++i)
                if (ps.probs[i] > mid) ++k;
            mean_k += k;
        }
        mean_k /= static_cast<double>(ds.scenes.size());
        if (mean_k > target_k)
            lo = mid;
        else
            hi = mid;
    }
    return (lo + hi) / 2.0;
}

namespace {

struct SampleGraph {
    Var loss;
    double loss_value = 0.0;
};

// Builds the per-sample Algorithm-1 data flow for the given stage plan.
SampleGraph build_sample(const Model& model, const PreparedScene& ps,
                         const training::StagePlan& plan, const training::TrainConfig& cfg,
                         double gamma_now, double snr_db, uint64_t channel_seed) {
    const auto& grid = model.cfg.grid;

    Var M_e, M_j;
    const bool ext_frozen =
        std::find(plan.train_prefixes.begin(), plan.train_prefixes.end(), "ext.") ==
        plan.train_prefixes.end();
    if (ext_frozen && ps.M_e.size() > 0) {
        M_e = nn::constant(ps.M_e);
        M_j = nn::constant(ps.M_j);
    } else {
        M_e = extractor::extract(nn::constant(ps.raw_e), grid, model.ext);
        M_j = extractor::extract(nn::constant(ps.raw_j), grid, model.ext);
    }

    Var collab_map;
    Var F, F_hat;
    if (!plan.use_selector) {
        collab_map = M_j;  // stage 0: lossless full-map sharing
    } else {
        const bool sel_frozen =
            std::find(plan.train_prefixes.begin(), plan.train_prefixes.end(), "sel.") ==
            plan.train_prefixes.end();
        Var probs;
        if (sel_frozen && ps.probs.size() > 0 && ext_frozen)
            probs = nn::constant(ps.probs);
        else
            probs = selector::keep_probabilities_graph(M_j, grid, model.sel);

        auto st = nn::ste_threshold(probs, gamma_now);
        auto masked = nn::mul_colvec(M_j, st);
        if (!plan.use_channel) {
            collab_map = masked;  // stage 1: lossless transmission
        } else {
            const auto mask = selector::threshold_mask(probs->val, gamma_now);
            const auto positions = mask_positions(mask);
            if (positions.empty()) {
                collab_map = nn::constant(zero_map(grid));
            } else {
                F = nn::gather_rows(masked, positions);
                auto z = codec::encode(F, model.cod, model.cfg.p_bound);
                auto z_hat = channel::rayleigh_var(z, snr_db, channel_seed, cfg.equalize);
                F_hat = codec::decode_tokens(z_hat, model.cod);
                collab_map = codec::decode_pad(F_hat, positions, grid.hw());
            }
        }
    }

    auto fused = perception::fuse(M_e, collab_map, model.fus);
    auto raw = perception::detect(fused, model.det);

    SampleGraph g;
    if (plan.loss_trans && F && F_hat)
        g.loss = training::loss_trans(raw, ps.targets, F_hat, F, cfg.weights);
    else
        g.loss = training::loss_per(raw, ps.targets, cfg.weights);
    g.loss_value = g.loss->val[0];
    return g;
}

}  // namespace

std::vector<EpochLog> train_stage(Model& model, int stage, PreparedDataset& train,
                                  PreparedDataset& val, const training::TrainConfig& cfg,
                                  const std::string& run_dir) {
    if (stage < 0 || stage > 3) throw ConfigError("train_stage: stage must be 0..3");
    if (model.trained_stage < stage - 1)
        throw StageOrderError("stage " + std::to_string(stage) + " requires completed stage " +
                              std::to_string(stage - 1) +
                              "; run `scomcp train --stage " + std::to_string(stage - 1) + "` first");

    const auto plan = training::stage_plan(stage, cfg);
    model.params.set_trainable_all(false);
    for (const auto& p : plan.train_prefixes) model.params.set_trainable_prefix(p, true);

    const bool ext_frozen = std::find(plan.train_prefixes.begin(), plan.train_prefixes.end(),
                                      "ext.") == plan.train_prefixes.end();
    const bool sel_frozen = std::find(plan.train_prefixes.begin(), plan.train_prefixes.end(),
                                      "sel.") == plan.train_prefixes.end();
    if (ext_frozen) {
        cache_features(model, train);
        cache_features(model, val);
    }
    if (ext_frozen && sel_frozen && plan.use_selector) {
        cache_probs(model, train);
        cache_probs(model, val);
    }

    const double gamma_train =
        cfg.gamma_thr_train > 0.0 ? cfg.gamma_thr_train : 1.0 / model.cfg.grid.hw();
    const double gamma_now = stage <= 1 ? gamma_train : model.gamma_thr;

    nn::Adam adam;
    std::vector<EpochLog> logs;
    std::ofstream log_file;
    if (!run_dir.empty()) log_file.open(run_dir + "/train_log.jsonl", std::ios::app);

    const int n = static_cast<int>(train.scenes.size());
    for (int epoch = 0; epoch < plan.epochs; ++epoch) {
        const double lr = cfg.lr0 * std::pow(cfg.decay, epoch / std::max(1, cfg.decay_every));
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        auto perm_rng = make_rng({cfg.seed, 0x5fa9, static_cast<uint64_t>(stage),
                                  static_cast<uint64_t>(epoch)});
        std::shuffle(order.begin(), order.end(), perm_rng);

        double loss_sum = 0.0;
        int batch_count = 0;
        for (int b = 0; b < n; b += cfg.batch) {
            const int bend = std::min(n, b + cfg.batch);
            for (int s = b; s < bend; ++s) {
                const uint64_t tags[4] = {cfg.seed, static_cast<uint64_t>(stage),
                                          static_cast<uint64_t>(epoch), static_cast<uint64_t>(order[s])};
                auto snr_rng = make_rng({tags[0], tags[1], tags[2], tags[3], 0x57a});
                std::uniform_real_distribution<double> snr_dist(cfg.snr_lo, cfg.snr_hi);
                const double snr = snr_dist(snr_rng);
                const uint64_t ch_seed = derive_seed({tags[0], tags[1], tags[2], tags[3], 0xc4});

                auto g = build_sample(model, train.scenes[order[s]], plan, cfg, gamma_now, snr, ch_seed);
                nn::backward(g.loss);
                loss_sum += g.loss_value;
            }
            adam.step(model.params, lr, 1.0 / (bend - b));
            ++batch_count;
        }

        EpochLog el;
        el.stage = stage;
        el.epoch = epoch;
        el.mean_loss = loss_sum / n;
        el.lr = lr;
        logs.push_back(el);
        if (log_file)
            log_file << "{\"stage\":" << stage << ",\"epoch\":" << epoch << ",\"loss\":" << el.mean_loss
                     << ",\"lr\":" << lr << "}\n";
        if (!run_dir.empty()) {
            model.trained_stage = std::max(model.trained_stage, stage - 1);  // not complete yet
            model.save(run_dir + "/ckpt_stage" + std::to_string(stage) + ".bin");
        }
    }

    model.trained_stage = std::max(model.trained_stage, stage);
    if (stage == 1) {
        // operating threshold fixed at the paper's average-CR working point
        cache_features(model, val);
        cache_probs(model, val);
        model.gamma_thr = calibrate_gamma(model, val, cfg.cr_target);
    }
    if (!run_dir.empty()) model.save(run_dir + "/ckpt_stage" + std::to_string(stage) + ".bin");
    return logs;
}

perception::Detection run_scene_scheme(const Model& model, const PreparedScene& ps,
                                       const std::string& scheme, const channel::ChannelConfig& ch,
                                       const config::EvalConfig& ecfg, double gamma_scheme,
                                       int* k_out) {
    const auto& grid = model.cfg.grid;
    Tensor collab;

    if (scheme == "upper_bound") {
        collab = ps.M_j;
        if (k_out) *k_out = grid.hw();
    } else if (scheme == "ego_only") {
        collab = zero_map(grid);
        if (k_out) *k_out = 0;
    } else {
        const auto mask = selector::threshold_mask(ps.probs, gamma_scheme);
        const auto positions = mask_positions(mask);
        if (k_out) *k_out = static_cast<int>(positions.size());
        if (positions.empty()) {
            collab = zero_map(grid);
        } else if (scheme == "scomcp") {
            const Tensor F = gather_tensor(ps.M_j, positions);
            auto z = codec::encode(nn::constant(F), model.cod, model.cfg.p_bound);
            auto z_hat = channel::apply_var(z, ch);
            auto f_hat = codec::decode_tokens(z_hat, model.cod);
            collab = scatter_tensor(f_hat->val, positions, grid.hw());
        } else if (scheme == "scomcp_lossless") {
            collab = apply_mask(ps.M_j, mask);
        } else if (scheme == "classic16" || scheme == "classic256") {
            const Tensor F = gather_tensor(ps.M_j, positions);
            classic::ClassicConfig ccfg;
            ccfg.mod_order = scheme == "classic16" ? 16 : 256;
            ccfg.fec_block_bits = ecfg.fec_block_bits;
            const Tensor F_hat = classic::transmit_classic(F, ccfg, ch);
            collab = scatter_tensor(F_hat, positions, grid.hw());
        } else {
            throw ConfigError("unknown scheme: " + scheme);
        }
    }

    auto fused = perception::fuse(nn::constant(ps.M_e), nn::constant(collab), model.fus);
    auto raw = perception::detect(fused, model.det);
    return perception::decode_boxes(raw.cls->val, raw.reg->val, model.anchors, ecfg.decode);
}

namespace {

struct SchemeEval {
    double ap50 = 0.0, ap70 = 0.0, realized_cr = 0.0;
};

SchemeEval eval_scheme_once(const Model& model, PreparedDataset& test, const std::string& scheme,
                            const channel::ChannelConfig& base_ch, const config::EvalConfig& ecfg,
                            double gamma_scheme, uint64_t cell_seed) {
    std::vector<perception::Detection> dets;
    std::vector<scenes::BoxSet> gts;
    dets.reserve(test.scenes.size());
    double k_sum = 0.0;
    for (size_t i = 0; i < test.scenes.size(); ++i) {
        channel::ChannelConfig ch = base_ch;
        ch.seed = derive_seed({cell_seed, static_cast<uint64_t>(i)});
        int k = 0;
        dets.push_back(run_scene_scheme(model, test.scenes[i], scheme, ch, ecfg, gamma_scheme, &k));
        gts.push_back(test.scenes[i].gt);
        k_sum += k;
    }
    SchemeEval e;
    e.ap50 = evaluation::average_precision(dets, gts, 0.5);
    e.ap70 = evaluation::average_precision(dets, gts, 0.7);
    e.realized_cr = k_sum / static_cast<double>(test.scenes.size()) / model.cfg.grid.hw();
    return e;
}

}  // namespace

std::vector<evaluation::MetricsRow> evaluate(const Model& model, PreparedDataset& test,
                                             const config::EvalConfig& ecfg, uint64_t base_seed) {
    const auto& grid = model.cfg.grid;
    const double s_m = static_cast<double>(grid.hw()) * grid.C;

    // Eq.-25 parity gate over the compared transmission schemes
    std::vector<std::pair<std::string, double>> uses;
    for (const auto& scheme : ecfg.schemes) {
        if (scheme == "scomcp")
            uses.push_back({scheme, s_m * ecfg.cr_sem});  // one complex symbol per element
        else if (scheme == "classic16")
            uses.push_back({scheme, classic::channel_uses(s_m, ecfg.cr_classic16, 0.5, 16)});
        else if (scheme == "classic256")
            uses.push_back({scheme, classic::channel_uses(s_m, ecfg.cr_classic256, 0.5, 256)});
    }
    for (size_t i = 1; i < uses.size(); ++i) {
        const double rel = std::abs(uses[i].second - uses[0].second) / uses[0].second;
        if (rel > ecfg.parity_tol)
            throw ConfigError("channel-use parity violated: " + uses[0].first + "=" +
                              std::to_string(uses[0].second) + " vs " + uses[i].first + "=" +
                              std::to_string(uses[i].second));
    }

    if (test.scenes.empty()) throw ContractViolation("evaluate: empty dataset");
    if (test.scenes[0].M_e.size() == 0) cache_features(model, test);
    if (test.scenes[0].probs.size() == 0) cache_probs(model, test);

    // per-scheme thresholds hitting the configured CR targets
    std::map<std::string, double> gamma_of;
    gamma_of["scomcp"] = model.gamma_thr;
    gamma_of["classic16"] = calibrate_gamma(model, test, ecfg.cr_classic16);
    gamma_of["classic256"] = calibrate_gamma(model, test, ecfg.cr_classic256);

    std::vector<evaluation::MetricsRow> rows;
    for (const auto& scheme : ecfg.schemes) {
        const bool channel_free = scheme == "upper_bound" || scheme == "ego_only";
        const double cfg_cr = scheme == "scomcp"      ? ecfg.cr_sem
                              : scheme == "classic16" ? ecfg.cr_classic16
                              : scheme == "classic256"
                                  ? ecfg.cr_classic256
                                  : 1.0;
        const double use_count =
            scheme == "scomcp"      ? s_m * ecfg.cr_sem
            : scheme == "classic16" ? classic::channel_uses(s_m, ecfg.cr_classic16, 0.5, 16)
            : scheme == "classic256"
                ? classic::channel_uses(s_m, ecfg.cr_classic256, 0.5, 256)
                : 0.0;

        if (channel_free) {
            channel::ChannelConfig ch;  // unused by these schemes
            const auto e = eval_scheme_once(model, test, scheme, ch, ecfg, 0.0, base_seed);
            for (const auto& ch_name : ecfg.channels)
                for (double snr : ecfg.snrs)
                    for (int sd = 0; sd < ecfg.n_seeds; ++sd) {
                        evaluation::MetricsRow r;
                        r.scheme = scheme;
                        r.channel = ch_name;
                        r.snr_db = snr;
                        r.cr = scheme == "upper_bound" ? 1.0 : 0.0;
                        r.channel_uses = use_count;
                        r.ap50 = e.ap50;
                        r.ap70 = e.ap70;
                        r.seed = derive_seed({base_seed, static_cast<uint64_t>(sd)});
                        rows.push_back(r);
                    }
            continue;
        }

        for (const auto& ch_name : ecfg.channels) {
            for (double snr : ecfg.snrs) {
                for (int sd = 0; sd < ecfg.n_seeds; ++sd) {
                    channel::ChannelConfig ch;
                    ch.kind = channel::kind_from_string(ch_name);
                    ch.snr_db = snr;
                    ch.equalize = ecfg.equalize;
                    const uint64_t cell_seed = derive_seed(
                        {base_seed, std::hash<std::string>{}(scheme + ch_name),
                         static_cast<uint64_t>(std::llround(snr * 10.0)), static_cast<uint64_t>(sd)});
                    const auto e = eval_scheme_once(model, test, scheme, ch, ecfg,
                                                    gamma_of.at(scheme), cell_seed);
                    evaluation::MetricsRow r;
                    r.scheme = scheme;
                    r.channel = ch_name;
                    r.snr_db = snr;
                    r.cr = e.realized_cr;
                    r.channel_uses = use_count;
                    r.ap50 = e.ap50;
                    r.ap70 = e.ap70;
                    r.seed = cell_seed;
                    rows.push_back(r);
                }
            }
        }
    }
    return rows;
}

std::vector<AblationRow> ablation_sweep(const Model& model, PreparedDataset& test,
                                        PreparedDataset& val, const std::vector<double>& crs,
                                        const config::EvalConfig& ecfg, uint64_t seed) {
    if (test.scenes.empty() || val.scenes.empty())
        throw ContractViolation("ablation_sweep: empty dataset");
    if (test.scenes[0].M_e.size() == 0) cache_features(model, test);
    if (test.scenes[0].probs.size() == 0) cache_probs(model, test);
    if (val.scenes[0].M_e.size() == 0) cache_features(model, val);
    if (val.scenes[0].probs.size() == 0) cache_probs(model, val);

    std::vector<AblationRow> rows;
    for (size_t ci = 0; ci < crs.size(); ++ci) {
        const double gamma_c = calibrate_gamma(model, val, crs[ci]);

        std::vector<perception::Detection> det_sel, det_rnd;
        std::vector<scenes::BoxSet> gts;
        double k_sum = 0.0;
        for (size_t i = 0; i < test.scenes.size(); ++i) {
            const auto& ps = test.scenes[i];
            const auto mask = selector::threshold_mask(ps.probs, gamma_c);
            const auto positions = mask_positions(mask);
            k_sum += static_cast<double>(positions.size());

            // learned selection, lossless sharing
            {
                auto fused = perception::fuse(nn::constant(ps.M_e),
                                              nn::constant(apply_mask(ps.M_j, mask)), model.fus);
                auto raw = perception::detect(fused, model.det);
                det_sel.push_back(
                    perception::decode_boxes(raw.cls->val, raw.reg->val, model.anchors, ecfg.decode));
            }
            // random mask with the same K
            {
                std::vector<uint8_t> rmask(mask.size(), 0);
                auto rng = make_rng({seed, 0xab1a, ci, i});
                std::vector<int> cells(mask.size());
                std::iota(cells.begin(), cells.end(), 0);
                std::shuffle(cells.begin(), cells.end(), rng);
                for (size_t k = 0; k < positions.size(); ++k) rmask[cells[k]] = 1;
                auto fused = perception::fuse(nn::constant(ps.M_e),
                                              nn::constant(apply_mask(ps.M_j, rmask)), model.fus);
                auto raw = perception::detect(fused, model.det);
                det_rnd.push_back(
                    perception::decode_boxes(raw.cls->val, raw.reg->val, model.anchors, ecfg.decode));
            }
            gts.push_back(ps.gt);
        }

        AblationRow r;
        r.cr_target = crs[ci];
        r.realized_cr = k_sum / static_cast<double>(test.scenes.size()) / model.cfg.grid.hw();
        r.ap50_selector = evaluation::average_precision(det_sel, gts, 0.5);
        r.ap70_selector = evaluation::average_precision(det_sel, gts, 0.7);
        r.ap50_random = evaluation::average_precision(det_rnd, gts, 0.5);
        r.ap70_random = evaluation::average_precision(det_rnd, gts, 0.7);
        rows.push_back(r);
    }
    return rows;
}

double codec_val_mse(const Model& model, PreparedDataset& ds, double snr_db, bool equalize,
                     uint64_t seed) {
    if (ds.scenes.empty()) throw ContractViolation("codec_val_mse: empty dataset");
    if (ds.scenes[0].M_e.size() == 0) cache_features(model, ds);
    if (ds.scenes[0].probs.size() == 0) cache_probs(model, ds);

    double acc = 0.0;
    int counted = 0;
    for (size_t i = 0; i < ds.scenes.size(); ++i) {
        const auto& ps = ds.scenes[i];
        const auto mask = selector::threshold_mask(ps.probs, model.gamma_thr);
        const auto positions = mask_positions(mask);
        if (positions.empty()) continue;
        const Tensor F = gather_tensor(ps.M_j, positions);
        auto z = codec::encode(nn::constant(F), model.cod, model.cfg.p_bound);
        auto z_hat = channel::rayleigh_var(z, snr_db, derive_seed({seed, i}), equalize);
        auto f_hat = codec::decode_tokens(z_hat, model.cod);
        double mse = 0.0;
        for (int64_t j = 0; j < F.size(); ++j) {
            const double d = f_hat->val[j] - F[j];
            mse += d * d;
        }
        acc += mse / static_cast<double>(F.size());
        ++counted;
    }
    if (counted == 0) return 0.0;
    return acc / counted;
}

}  // namespace scomcp::runner

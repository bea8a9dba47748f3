// SPDX-License-Identifier: Apache-2.0
// scomcp: dataset generation, staged training, evaluation sweeps and plots
// for the collaborative-perception semantic communication simulator.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scomcp/classic.hpp"
#include "scomcp/plots.hpp"
#include "scomcp/runner.hpp"

namespace fs = std::filesystem;
using namespace scomcp;

namespace {

constexpr const char* kVersion = "0.1.0";

uint64_t env_seed_override(uint64_t seed) {
    if (const char* s = std::getenv("SCOMCP_SEED")) return std::strtoull(s, nullptr, 10);
    return seed;
}

std::string out_root(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* s = std::getenv("SCOMCP_OUT")) return s;
    return "out";
}

std::string run_id(const std::string& config_text, uint64_t seed) {
    const uint64_t h = derive_seed({std::hash<std::string>{}(config_text), seed});
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const config::Config& cfg, uint64_t seed,
                    const std::vector<std::string>& artifacts) {
    fs::create_directories(dir);
    const std::string path = dir + "/manifest.json";
    nlohmann::json m;
    if (fs::exists(path)) {
        std::ifstream f(path);
        f >> m;
    } else {
        m["run_id"] = run_id(cfg.text(), seed);
        m["version"] = kVersion;
        m["entries"] = nlohmann::json::array();
    }
    nlohmann::json e;
    e["command"] = command;
    e["seed"] = seed;
    e["timestamp"] = static_cast<int64_t>(std::time(nullptr));
    e["config"] = cfg.text();
    e["artifacts"] = artifacts;
    m["entries"].push_back(e);
    std::ofstream f(path);
    f << m.dump(2) << "\n";
}

runner::PreparedDataset load_split(const std::string& data_dir, const std::string& split,
                                   const Model& model, const training::TrainConfig& tcfg) {
    const std::string path = data_dir + "/" + split + ".jsonl";
    if (!fs::exists(path)) throw IoError("dataset split missing: " + path + " (run gen-data first)");
    return runner::prepare(dataset::read_jsonl(path), model, tcfg);
}

int cmd_gen_data(const std::string& config_path, const std::string& out) {
    const auto cfg = config::Config::parse_file(config_path);
    auto app = config::parse_app_config(cfg);
    app.seed = env_seed_override(app.seed);
    const std::string dir = out_root(out) + "/dataset";
    auto paths = dataset::generate_dataset(app.data, app.seed, dir);
    write_manifest(dir, "gen-data", cfg, app.seed, paths);
    const auto sizes = dataset::split_sizes(app.data);
    std::cout << "dataset: " << dir << " (train " << sizes.train << ", val " << sizes.val
              << ", test " << sizes.test << ")\n";
    return 0;
}

int cmd_train(const std::string& config_path, int stage, const std::string& out, bool resume) {
    const auto cfg = config::Config::parse_file(config_path);
    auto app = config::parse_app_config(cfg);
    app.seed = env_seed_override(app.seed);
    app.train.seed = app.seed;
    const std::string root = out_root(out);
    const std::string run_dir = root + "/run";
    const std::string data_dir = root + "/dataset";
    fs::create_directories(run_dir);

    const std::string ckpt = run_dir + "/ckpt_stage" + std::to_string(stage) + ".bin";
    if (resume && fs::exists(ckpt)) {
        const Model done = Model::load(ckpt);
        if (done.trained_stage >= stage) {
            std::cout << "stage " << stage << " already trained (" << ckpt << "), skipping\n";
            return 0;
        }
    }

    Model model = [&] {
        if (stage == 0) return Model::init(app.model, app.seed);
        const std::string prev = run_dir + "/ckpt_stage" + std::to_string(stage - 1) + ".bin";
        if (!fs::exists(prev))
            throw StageOrderError("missing checkpoint " + prev + "; run `scomcp train --stage " +
                                  std::to_string(stage - 1) + "` first");
        return Model::load(prev);
    }();

    auto train_ds = load_split(data_dir, "train", model, app.train);
    auto val_ds = load_split(data_dir, "val", model, app.train);

    const auto logs = runner::train_stage(model, stage, train_ds, val_ds, app.train, run_dir);
    for (const auto& l : logs)
        std::cout << "stage " << l.stage << " epoch " << l.epoch << " loss " << l.mean_loss
                  << " lr " << l.lr << "\n";
    if (stage == 1) std::cout << "calibrated gamma_thr = " << model.gamma_thr << "\n";
    write_manifest(run_dir, "train --stage " + std::to_string(stage), cfg, app.seed,
                   {ckpt, run_dir + "/train_log.jsonl"});
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& out, const std::string& ckpt_flag,
             const std::vector<double>& snrs, const std::vector<std::string>& channels,
             const std::vector<std::string>& schemes) {
    const auto cfg = config::Config::parse_file(config_path);
    auto app = config::parse_app_config(cfg);
    app.seed = env_seed_override(app.seed);
    const std::string root = out_root(out);
    const std::string run_dir = root + "/run";
    const std::string data_dir = root + "/dataset";

    std::string ckpt = ckpt_flag.empty() ? run_dir + "/ckpt_stage3.bin" : ckpt_flag;
    if (!fs::exists(ckpt)) throw IoError("missing checkpoint " + ckpt);
    Model model = Model::load(ckpt);

    auto ecfg = app.eval;
    if (!snrs.empty()) ecfg.snrs = snrs;
    if (!channels.empty()) ecfg.channels = channels;
    if (!schemes.empty()) ecfg.schemes = schemes;

    auto test_ds = load_split(data_dir, "test", model, app.train);
    auto val_ds = load_split(data_dir, "val", model, app.train);

    const auto rows = runner::evaluate(model, test_ds, ecfg, app.seed);
    const std::string results = run_dir + "/results.jsonl";
    evaluation::append_rows(results, rows);
    evaluation::write_csv(run_dir + "/results.csv", evaluation::read_rows(results));

    const auto ab = runner::ablation_sweep(model, test_ds, val_ds, ecfg.ablation_crs, ecfg, app.seed);
    {
        std::ofstream f(run_dir + "/ablation.jsonl", std::ios::app);
        for (const auto& r : ab) {
            nlohmann::json j;
            j["cr_target"] = r.cr_target;
            j["realized_cr"] = r.realized_cr;
            j["ap50_selector"] = r.ap50_selector;
            j["ap70_selector"] = r.ap70_selector;
            j["ap50_random"] = r.ap50_random;
            j["ap70_random"] = r.ap70_random;
            f << j.dump() << "\n";
        }
    }
    std::cout << "wrote " << rows.size() << " metric rows to " << results << "\n";
    write_manifest(run_dir, "eval", cfg, app.seed,
                   {results, run_dir + "/results.csv", run_dir + "/ablation.jsonl"});
    return 0;
}

int cmd_plot(const std::string& results_path, const std::string& ablation_path,
             const std::string& out) {
    const std::string dir = out_root(out) + "/figures";
    if (!fs::exists(results_path)) {
        std::cerr << "warning: no results at " << results_path << "; nothing to plot\n";
        return 0;
    }
    const auto rows = evaluation::read_rows(results_path);
    if (rows.empty()) {
        std::cerr << "warning: empty results; nothing to plot\n";
        return 0;
    }
    fs::create_directories(dir);
    std::vector<std::string> artifacts;

    // re-emit the rows the curves are drawn from
    const std::string csv = dir + "/plot_rows.csv";
    evaluation::write_csv(csv, rows);
    artifacts.push_back(csv);

    for (const std::string metric : {"ap50", "ap70"}) {
        for (const std::string ch : {"awgn", "rayleigh"}) {
            std::map<std::string, std::map<double, std::pair<double, int>>> agg;  // scheme -> snr -> (sum, n)
            for (const auto& r : rows) {
                if (r.channel != ch) continue;
                auto& cell = agg[r.scheme][r.snr_db];
                cell.first += metric == "ap50" ? r.ap50 : r.ap70;
                cell.second += 1;
            }
            if (agg.empty()) continue;
            std::vector<plots::Series> series;
            for (const auto& [scheme, pts] : agg) {
                plots::Series s;
                s.label = scheme;
                for (const auto& [snr, sumn] : pts) {
                    s.x.push_back(snr);
                    s.y.push_back(sumn.first / sumn.second);
                }
                series.push_back(s);
            }
            const std::string path = dir + "/" + metric + "_" + ch + ".svg";
            plots::line_chart_svg(path, metric + " vs SNR (" + ch + ")", "SNR (dB)", metric, series);
            artifacts.push_back(path);
        }
    }

    if (!ablation_path.empty() && fs::exists(ablation_path)) {
        std::ifstream f(ablation_path);
        plots::Series sel50{"selector", {}, {}}, rnd50{"random mask", {}, {}};
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            sel50.x.push_back(j.at("cr_target").get<double>());
            sel50.y.push_back(j.at("ap50_selector").get<double>());
            rnd50.x.push_back(j.at("cr_target").get<double>());
            rnd50.y.push_back(j.at("ap50_random").get<double>());
        }
        if (!sel50.x.empty()) {
            const std::string path = dir + "/ablation_ap50_vs_cr.svg";
            plots::line_chart_svg(path, "ap50 vs CR (lossless)", "CR", "ap50", {sel50, rnd50});
            artifacts.push_back(path);
        }
    }

    std::cout << "figures in " << dir << "\n";
    for (const auto& a : artifacts) std::cout << "  " << a << "\n";
    return 0;
}

int cmd_baseline_ber(const std::string& config_path, const std::string& out, int mod_order,
                     const std::vector<double>& snrs_flag, int min_bits) {
    const auto cfg = config::Config::parse_file(config_path);
    auto app = config::parse_app_config(cfg);
    app.seed = env_seed_override(app.seed);
    const std::string dir = out_root(out) + "/ber";
    fs::create_directories(dir);

    std::vector<double> snrs = snrs_flag;
    if (snrs.empty())
        for (double s = 0.0; s <= 20.0; s += 2.0) snrs.push_back(s);

    classic::ClassicConfig ccfg;
    ccfg.mod_order = mod_order;
    ccfg.fec_block_bits = app.eval.fec_block_bits;
    auto fec = classic::make_fec(ccfg);
    const int m = static_cast<int>(std::round(std::log2(mod_order)));

    plots::Series uncoded{"uncoded", {}, {}}, coded{"coded r=1/2", {}, {}};
    std::ofstream jf(dir + "/ber.jsonl", std::ios::app);
    std::ofstream cf(dir + "/ber.csv");
    cf << "snr_db,mod_order,uncoded_ber,coded_ber\n";

    for (double snr : snrs) {
        // uncoded
        uint64_t err_u = 0, tot_u = 0;
        auto rng = make_rng({app.seed, 0xbe2, static_cast<uint64_t>(std::llround(snr * 10))});
        std::bernoulli_distribution bit(0.5);
        while (tot_u < static_cast<uint64_t>(min_bits)) {
            classic::Bits bits(5000 * m);
            for (auto& b : bits) b = bit(rng) ? 1 : 0;
            auto rx = channel::awgn(classic::qam_modulate(bits, mod_order), snr, rng());
            auto rbits = classic::qam_demodulate(rx, mod_order);
            for (size_t i = 0; i < bits.size(); ++i) err_u += bits[i] != rbits[i];
            tot_u += bits.size();
        }
        // coded
        uint64_t err_c = 0, tot_c = 0;
        while (tot_c < static_cast<uint64_t>(min_bits)) {
            classic::Bits info(fec->block_info_bits() * 8);
            for (auto& b : info) b = bit(rng) ? 1 : 0;
            auto codedb = fec->encode(info);
            const size_t n_coded = codedb.size();
            if (codedb.size() % m != 0) codedb.resize((codedb.size() / m + 1) * m, 0);
            auto rx = channel::awgn(classic::qam_modulate(codedb, mod_order), snr, rng());
            auto rbits = classic::qam_demodulate(rx, mod_order);
            rbits.resize(n_coded);
            auto rinfo = fec->decode(rbits);
            for (size_t i = 0; i < info.size(); ++i) err_c += info[i] != rinfo[i];
            tot_c += info.size();
        }
        const double ber_u = static_cast<double>(err_u) / tot_u;
        const double ber_c = static_cast<double>(err_c) / tot_c;
        uncoded.x.push_back(snr);
        uncoded.y.push_back(std::max(ber_u, 0.5 / tot_u));
        coded.x.push_back(snr);
        coded.y.push_back(std::max(ber_c, 0.5 / tot_c));
        nlohmann::json j;
        j["snr_db"] = snr;
        j["mod_order"] = mod_order;
        j["uncoded_ber"] = ber_u;
        j["coded_ber"] = ber_c;
        jf << j.dump() << "\n";
        cf << snr << "," << mod_order << "," << ber_u << "," << ber_c << "\n";
        std::cout << "snr " << snr << " dB: uncoded " << ber_u << ", coded " << ber_c << "\n";
    }
    plots::line_chart_svg(dir + "/ber.svg", std::to_string(mod_order) + "QAM BER over AWGN",
                          "Es/N0 (dB)", "BER", {uncoded, coded}, /*log_y=*/true);
    write_manifest(dir, "baseline-ber", cfg, app.seed,
                   {dir + "/ber.jsonl", dir + "/ber.csv", dir + "/ber.svg"});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"task-oriented semantic communication for V2V collaborative perception"};
    app.require_subcommand(1);

    std::string config_path, out, ckpt, results_path, ablation_path;
    int stage = 0;
    bool resume = false;
    int mod_order = 16;
    int min_bits = 100000;
    std::vector<double> snrs;
    std::vector<std::string> channels, schemes;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic scene dataset");
    gen->add_option("--config", config_path, "experiment config file")->required();
    gen->add_option("--out", out, "output root (default: $SCOMCP_OUT or ./out)");

    auto* train = app.add_subcommand("train", "run one training stage (0=bootstrap, 1..3 per the staged strategy)");
    train->add_option("--config", config_path)->required();
    train->add_option("--stage", stage, "training stage 0..3")->required()->check(CLI::Range(0, 3));
    train->add_option("--out", out);
    train->add_flag("--resume", resume, "skip the stage when its checkpoint is already complete");

    auto* eval = app.add_subcommand("eval", "comparison sweep over channels, SNRs and schemes");
    eval->add_option("--config", config_path)->required();
    eval->add_option("--out", out);
    eval->add_option("--ckpt", ckpt, "checkpoint (default: <out>/run/ckpt_stage3.bin)");
    eval->add_option("--snr", snrs, "SNR grid override (dB)");
    eval->add_option("--channel", channels, "channel kinds override");
    eval->add_option("--scheme", schemes, "scheme list override");

    auto* plot = app.add_subcommand("plot", "figures + CSV from a results file");
    plot->add_option("--results", results_path, "results.jsonl")->required();
    plot->add_option("--ablation", ablation_path, "ablation.jsonl");
    plot->add_option("--out", out);

    auto* ber = app.add_subcommand("baseline-ber", "BER sweep for the classic chain");
    ber->add_option("--config", config_path)->required();
    ber->add_option("--out", out);
    ber->add_option("--mod", mod_order, "modulation order (16 or 256)");
    ber->add_option("--snr", snrs, "SNR grid (dB)");
    ber->add_option("--min-bits", min_bits, "bits per point");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out);
        if (train->parsed()) return cmd_train(config_path, stage, out, resume);
        if (eval->parsed()) return cmd_eval(config_path, out, ckpt, snrs, channels, schemes);
        if (plot->parsed()) return cmd_plot(results_path, ablation_path, out);
        if (ber->parsed()) return cmd_baseline_ber(config_path, out, mod_order, snrs, min_bits);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const StageOrderError& e) {
        std::cerr << "stage order error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

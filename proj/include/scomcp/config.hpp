// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "scomcp/channel.hpp"
#include "scomcp/classic.hpp"
#include "scomcp/dataset.hpp"
#include "scomcp/model.hpp"
#include "scomcp/training.hpp"

namespace scomcp::config {

// Flat sectioned key=value grammar:
//   [section]
//   key = value        # trailing comments allowed
// Keys are addressed as "section.key".
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& dflt) const;
    double get_num(const std::string& key, double dflt) const;
    int get_int(const std::string& key, int dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& dflt) const;
    std::vector<std::string> get_str_list(const std::string& key,
                                          const std::vector<std::string>& dflt) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }
    std::string text() const { return text_; }

private:
    std::map<std::string, std::string> kv_;
    std::string text_;
};

struct EvalConfig {
    std::vector<double> snrs = {0, 5, 10, 15, 20};
    std::vector<std::string> channels = {"awgn", "rayleigh"};
    std::vector<std::string> schemes = {"scomcp", "classic16", "classic256", "upper_bound", "ego_only"};
    int n_seeds = 5;
    double cr_sem = 1.4e-3;
    double cr_classic16 = 3.5e-4;
    double cr_classic256 = 7e-4;
    double parity_tol = 0.005;
    bool equalize = true;
    perception::DecodeConfig decode;
    int fec_block_bits = 500;
    std::vector<double> ablation_crs = {4.9e-4, 1.4e-3, 4.4e-3, 1.3e-2, 3.9e-2};
};

struct AppConfig {
    uint64_t seed = 1;
    dataset::DataConfig data;
    ModelConfig model;
    training::TrainConfig train;
    EvalConfig eval;
};

AppConfig parse_app_config(const Config& c);

}  // namespace scomcp::config

// SPDX-License-Identifier: Apache-2.0
#include "scomcp/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "scomcp/errors.hpp"

namespace scomcp::evaluation {

double average_precision(const std::vector<Detection>& preds, const std::vector<BoxSet>& gts,
                         double iou_thr) {
    if (preds.size() != gts.size())
        throw ContractViolation("average_precision: scene count mismatch");

    size_t n_gt = 0;
    for (const auto& g : gts) n_gt += g.size();
    size_t n_pred = 0;
    for (const auto& p : preds) n_pred += p.boxes.size();
    if (n_gt == 0) return n_pred == 0 ? 1.0 : 0.0;
    if (n_pred == 0) return 0.0;

    struct Ranked {
        double score;
        int scene, idx;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(n_pred);
    for (size_t s = 0; s < preds.size(); ++s)
        for (size_t i = 0; i < preds[s].boxes.size(); ++i)
            ranked.push_back({preds[s].scores[i], static_cast<int>(s), static_cast<int>(i)});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

    std::vector<std::vector<char>> gt_used(gts.size());
    for (size_t s = 0; s < gts.size(); ++s) gt_used[s].assign(gts[s].size(), 0);

    std::vector<char> tp(ranked.size(), 0);
    for (size_t r = 0; r < ranked.size(); ++r) {
        const auto& box = preds[ranked[r].scene].boxes[ranked[r].idx];
        const auto& gt = gts[ranked[r].scene];
        double best = 0.0;
        int best_j = -1;
        for (size_t j = 0; j < gt.size(); ++j) {
            if (gt_used[ranked[r].scene][j]) continue;
            const double iou = rotated_iou(box, gt[j]);
            if (iou >= iou_thr && iou > best) {
                best = iou;
                best_j = static_cast<int>(j);
            }
        }
        if (best_j >= 0) {
            tp[r] = 1;
            gt_used[ranked[r].scene][best_j] = 1;
        }
    }

    // all-point interpolation: sum over recall steps of the precision envelope
    std::vector<double> precision(ranked.size()), recall(ranked.size());
    int n_tp = 0;
    for (size_t r = 0; r < ranked.size(); ++r) {
        n_tp += tp[r];
        precision[r] = static_cast<double>(n_tp) / static_cast<double>(r + 1);
        recall[r] = static_cast<double>(n_tp) / static_cast<double>(n_gt);
    }
    for (int r = static_cast<int>(ranked.size()) - 2; r >= 0; --r)
        precision[r] = std::max(precision[r], precision[r + 1]);

    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t r = 0; r < ranked.size(); ++r) {
        ap += (recall[r] - prev_recall) * precision[r];
        prev_recall = recall[r];
    }
    return ap;
}

double compression_ratio(const std::vector<uint8_t>& mask) {
    if (mask.empty()) throw ContractViolation("compression_ratio: empty mask");
    size_t ones = 0;
    for (uint8_t m : mask) ones += m ? 1 : 0;
    return static_cast<double>(ones) / static_cast<double>(mask.size());
}

std::string MetricsRow::to_json() const {
    nlohmann::json j;
    j["scheme"] = scheme;
    j["channel"] = channel;
    j["snr_db"] = snr_db;
    j["cr"] = cr;
    j["channel_uses"] = channel_uses;
    j["ap50"] = ap50;
    j["ap70"] = ap70;
    j["seed"] = seed;
    return j.dump();
}

MetricsRow MetricsRow::from_json(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    MetricsRow r;
    r.scheme = j.at("scheme").get<std::string>();
    r.channel = j.at("channel").get<std::string>();
    r.snr_db = j.at("snr_db").get<double>();
    r.cr = j.at("cr").get<double>();
    r.channel_uses = j.at("channel_uses").get<double>();
    r.ap50 = j.at("ap50").get<double>();
    r.ap70 = j.at("ap70").get<double>();
    r.seed = j.at("seed").get<uint64_t>();
    return r;
}

void append_rows(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw IoError("cannot open " + path);
    for (const auto& r : rows) f << r.to_json() << "\n";
}

std::vector<MetricsRow> read_rows(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::vector<MetricsRow> rows;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) rows.push_back(MetricsRow::from_json(line));
    return rows;
}

void write_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << "scheme,channel,snr_db,cr,channel_uses,ap50,ap70,seed\n";
    for (const auto& r : rows)
        f << r.scheme << "," << r.channel << "," << r.snr_db << "," << r.cr << ","
          << r.channel_uses << "," << r.ap50 << "," << r.ap70 << "," << r.seed << "\n";
}

}  // namespace scomcp::evaluation

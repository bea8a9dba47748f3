// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "scomcp/perception.hpp"
#include "scomcp/scenes.hpp"

namespace scomcp::evaluation {

using perception::Detection;
using scenes::BoxSet;

// re-exported from geometry: BEV IoU of oriented boxes
using scomcp::rotated_iou;

// All-point interpolated AP with global score-descending greedy matching;
// each ground-truth box is matched at most once, a match needs IoU >= thr.
// No ground truth: 1.0 with no predictions, else 0.0.
double average_precision(const std::vector<Detection>& preds, const std::vector<BoxSet>& gts,
                         double iou_thr);

double compression_ratio(const std::vector<uint8_t>& mask);

struct MetricsRow {
    std::string scheme;   // scomcp | classic16 | classic256 | upper_bound | ego_only
    std::string channel;  // awgn | rayleigh | none
    double snr_db = 0.0;
    double cr = 0.0;            // realized mean compression ratio
    double channel_uses = 0.0;  // Eq.-25 accounting at the configured CR
    double ap50 = 0.0;
    double ap70 = 0.0;
    uint64_t seed = 0;

    std::string to_json() const;
    static MetricsRow from_json(const std::string& line);
};

void append_rows(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_rows(const std::string& path);
void write_csv(const std::string& path, const std::vector<MetricsRow>& rows);

}  // namespace scomcp::evaluation

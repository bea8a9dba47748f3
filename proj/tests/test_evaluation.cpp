// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "scomcp/evaluation.hpp"

using namespace scomcp;
using namespace scomcp::evaluation;

namespace {

Box7 box(double cx, double cy, double w, double l, double yaw) {
    return Box7{cx, cy, 0.8, w, l, 1.6, yaw};
}

Detection det(std::vector<Box7> boxes, std::vector<double> scores) {
    Detection d;
    d.boxes = std::move(boxes);
    d.scores = std::move(scores);
    return d;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("rotated IoU: identical, disjoint, half-overlap square") {
    const Box7 a = box(0, 0, 1, 1, 0);
    CHECK(rotated_iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rotated_iou(a, box(5, 5, 1, 1, 0.3)) == 0.0);
    // unit squares offset by half a side: intersection 0.5, union 1.5
    CHECK(rotated_iou(a, box(0.5, 0, 1, 1, 0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(rotated_iou(a, box(0, 0, 0, 1, 0)), ContractViolation);
}

TEST_CASE("rotated IoU is symmetric and rigid-transform invariant") {
    auto rng = make_rng({1});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Box7 a = box(4 * u(rng), 4 * u(rng), 1 + u(rng), 2 + 2 * u(rng), (2 * u(rng) - 1) * kPi);
        const Box7 b = box(4 * u(rng), 4 * u(rng), 1 + u(rng), 2 + 2 * u(rng), (2 * u(rng) - 1) * kPi);
        const double iou = rotated_iou(a, b);
        CHECK(iou == doctest::Approx(rotated_iou(b, a)).epsilon(1e-12));
        CHECK(iou >= 0.0);
        CHECK(iou <= 1.0);

        // apply one rigid transform to both boxes
        const Pose rigid{3.0 * u(rng), -2.0 * u(rng), (2 * u(rng) - 1) * kPi};
        const Pose world{0, 0, 0};
        const double iou_t = rotated_iou(box_to_frame(a, rigid, world), box_to_frame(b, rigid, world));
        CHECK(std::abs(iou - iou_t) < 1e-9);
    }
}

TEST_CASE("rotated IoU agrees with the Monte-Carlo area oracle") {
    auto rng = make_rng({2});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const Box7 a = box(2 * u(rng), 2 * u(rng), 1 + u(rng), 2 + u(rng), (2 * u(rng) - 1) * kPi);
        const Box7 b = box(2 * u(rng), 2 * u(rng), 1 + u(rng), 2 + u(rng), (2 * u(rng) - 1) * kPi);
        const double exact = rotated_iou(a, b);
        const double mc = oracle::mc_iou(a, b, 200000, 1000 + trial);
        CHECK(std::abs(exact - mc) < 1e-2);
    }
}

TEST_CASE("average precision: canonical small cases") {
    const Box7 g = box(0, 0, 2, 4, 0.2);

    // one prediction right on the only ground truth
    CHECK(average_precision({det({g}, {0.9})}, {{g}}, 0.5) == doctest::Approx(1.0));

    // higher-scored false positive, lower-scored true positive: AP = 0.5
    const Box7 far = box(10, 10, 2, 4, 0.0);
    CHECK(average_precision({det({far, g}, {0.9, 0.8})}, {{g}}, 0.5) == doctest::Approx(0.5));

    // no ground truth
    CHECK(average_precision({det({}, {})}, {{}}, 0.5) == 1.0);
    CHECK(average_precision({det({far}, {0.9})}, {{}}, 0.5) == 0.0);
    // predictions below the IoU threshold never match
    CHECK(average_precision({det({box(1.8, 0, 2, 4, 0.2)}, {0.9})}, {{g}}, 0.7) == 0.0);
}

TEST_CASE("average precision equals the brute-force oracle on random instances") {
    auto rng = make_rng({3});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int inst = 0; inst < 300; ++inst) {
        const int n_scene = 1 + static_cast<int>(u(rng) * 2);
        std::vector<Detection> preds(n_scene);
        std::vector<scenes::BoxSet> gts(n_scene);
        for (int s = 0; s < n_scene; ++s) {
            const int n_gt = static_cast<int>(u(rng) * 5);      // up to 4
            const int n_pred = static_cast<int>(u(rng) * 7);    // up to 6
            for (int i = 0; i < n_gt; ++i)
                gts[s].push_back(box(8 * u(rng), 8 * u(rng), 1.5 + u(rng), 3 + u(rng), (2 * u(rng) - 1) * 3));
            for (int i = 0; i < n_pred; ++i) {
                // half the predictions hug some ground truth so matches occur
                if (n_gt > 0 && u(rng) < 0.5) {
                    const auto& g2 = gts[s][static_cast<size_t>(u(rng) * n_gt) % n_gt];
                    preds[s].boxes.push_back(box(g2.cx + 0.3 * u(rng), g2.cy + 0.3 * u(rng), g2.w, g2.l, g2.yaw));
                } else {
                    preds[s].boxes.push_back(box(8 * u(rng), 8 * u(rng), 1.5 + u(rng), 3 + u(rng), 0));
                }
                preds[s].scores.push_back(u(rng));
            }
        }
        const double fast = average_precision(preds, gts, 0.5);
        const double slow = oracle::ap_oracle(preds, gts, 0.5);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
}

TEST_CASE("compression ratio: zeros, ones and the paper operating point") {
    std::vector<uint8_t> none(100, 0), all(100, 1);
    CHECK(compression_ratio(none) == 0.0);
    CHECK(compression_ratio(all) == 1.0);
    std::vector<uint8_t> mask(10000, 0);
    for (int i = 0; i < 14; ++i) mask[i * 31] = 1;
    CHECK(compression_ratio(mask) == doctest::Approx(1.4e-3).epsilon(1e-12));
    CHECK_THROWS_AS(compression_ratio(std::vector<uint8_t>{}), ContractViolation);
}

TEST_CASE("metrics rows round-trip through jsonl and csv") {
    MetricsRow r;
    r.scheme = "scomcp";
    r.channel = "rayleigh";
    r.snr_db = 5.0;
    r.cr = 1.4e-3;
    r.channel_uses = 91.75;
    r.ap50 = 0.61;
    r.ap70 = 0.33;
    r.seed = 77;
    const auto back = MetricsRow::from_json(r.to_json());
    CHECK(back.scheme == r.scheme);
    CHECK(back.snr_db == r.snr_db);
    CHECK(back.ap70 == r.ap70);
    CHECK(back.seed == r.seed);

    const std::string dir = std::filesystem::temp_directory_path() / "scomcp_eval_test";
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/rows.jsonl";
    std::filesystem::remove(path);
    append_rows(path, {r, r});
    append_rows(path, {r});
    const auto rows = read_rows(path);
    CHECK(rows.size() == 3);
    write_csv(dir + "/rows.csv", rows);
    std::ifstream csv(dir + "/rows.csv");
    std::string line;
    int count = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++count;
    CHECK(count == 4);  // header + one line per row
}

}  // TEST_SUITE

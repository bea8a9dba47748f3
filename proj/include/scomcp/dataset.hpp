// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "scomcp/scenes.hpp"

namespace scomcp::dataset {

struct SceneRecord {
    scenes::Scene scene;
    scenes::PointCloud ego_cloud;     // ego frame
    scenes::PointCloud collab_cloud;  // collaborator frame
};

struct DataConfig {
    scenes::SceneConfig scene;
    scenes::SensorConfig sensor;
    int count = 400;
    double split_train = 0.4, split_val = 0.1, split_test = 0.5;
};

// deterministic record: per-scene seed plus fixed per-agent sensor sub-seeds
SceneRecord make_record(const scenes::SceneConfig& scfg, const scenes::SensorConfig& sensor,
                        uint64_t seed);

void write_jsonl(const std::string& path, const std::vector<SceneRecord>& records);
std::vector<SceneRecord> read_jsonl(const std::string& path);

struct SplitSizes {
    int train = 0, val = 0, test = 0;
};
// floor(count*train), floor(count*val), remainder to test
SplitSizes split_sizes(const DataConfig& cfg);

// writes train/val/test.jsonl under out_dir; returns produced file paths
std::vector<std::string> generate_dataset(const DataConfig& cfg, uint64_t seed,
                                          const std::string& out_dir);

}  // namespace scomcp::dataset

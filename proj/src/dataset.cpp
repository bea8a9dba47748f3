// SPDX-License-Identifier: Apache-2.0
#include "scomcp/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "scomcp/errors.hpp"
#include "scomcp/rng.hpp"

namespace scomcp::dataset {

namespace {

nlohmann::json pose_json(const Pose& p) { return nlohmann::json::array({p.x, p.y, p.yaw}); }

Pose pose_from(const nlohmann::json& j) { return {j.at(0), j.at(1), j.at(2)}; }

nlohmann::json cloud_json(const scenes::PointCloud& pc) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : pc.points) pts.push_back({p[0], p[1], p[2]});
    return pts;
}

scenes::PointCloud cloud_from(const nlohmann::json& j, const std::string& frame) {
    scenes::PointCloud pc;
    pc.frame = frame;
    for (const auto& p : j) pc.points.push_back({p.at(0), p.at(1), p.at(2)});
    return pc;
}

}  // namespace

SceneRecord make_record(const scenes::SceneConfig& scfg, const scenes::SensorConfig& sensor,
                        uint64_t seed) {
    SceneRecord r;
    r.scene = scenes::generate_scene(scfg, seed);
    scenes::SensorConfig ego_sensor = sensor;
    ego_sensor.seed = derive_seed({seed, 1});
    scenes::SensorConfig collab_sensor = sensor;
    collab_sensor.seed = derive_seed({seed, 2});
    r.ego_cloud = scenes::render_view(r.scene, r.scene.ego_pose, "ego", ego_sensor);
    r.collab_cloud = scenes::render_view(r.scene, r.scene.collab_pose, "collab", collab_sensor);
    return r;
}

void write_jsonl(const std::string& path, const std::vector<SceneRecord>& records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const auto& r : records) {
        nlohmann::json j;
        j["seed"] = r.scene.seed;
        j["world"] = {r.scene.world_x, r.scene.world_y};
        j["ego_pose"] = pose_json(r.scene.ego_pose);
        j["collab_pose"] = pose_json(r.scene.collab_pose);
        nlohmann::json objs = nlohmann::json::array();
        for (const auto& b : r.scene.objects)
            objs.push_back({b.cx, b.cy, b.cz, b.w, b.l, b.h, b.yaw});
        j["objects"] = objs;
        j["ego_points"] = cloud_json(r.ego_cloud);
        j["collab_points"] = cloud_json(r.collab_cloud);
        f << j.dump() << "\n";
    }
}

std::vector<SceneRecord> read_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::vector<SceneRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        SceneRecord r;
        r.scene.seed = j.at("seed").get<uint64_t>();
        r.scene.world_x = j.at("world").at(0).get<double>();
        r.scene.world_y = j.at("world").at(1).get<double>();
        r.scene.ego_pose = pose_from(j.at("ego_pose"));
        r.scene.collab_pose = pose_from(j.at("collab_pose"));
        for (const auto& bj : j.at("objects")) {
            Box7 b{bj.at(0), bj.at(1), bj.at(2), bj.at(3), bj.at(4), bj.at(5), bj.at(6)};
            r.scene.objects.push_back(b);
        }
        r.ego_cloud = cloud_from(j.at("ego_points"), "ego");
        r.collab_cloud = cloud_from(j.at("collab_points"), "collab");
        out.push_back(std::move(r));
    }
    return out;
}

SplitSizes split_sizes(const DataConfig& cfg) {
    SplitSizes s;
    s.train = static_cast<int>(cfg.count * cfg.split_train);
    s.val = static_cast<int>(cfg.count * cfg.split_val);
    s.test = cfg.count - s.train - s.val;
    if (s.test < 0) throw ConfigError("split ratios exceed 1");
    return s;
}

std::vector<std::string> generate_dataset(const DataConfig& cfg, uint64_t seed,
                                          const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const SplitSizes sizes = split_sizes(cfg);
    const std::array<std::pair<std::string, int>, 3> splits = {
        {{"train", sizes.train}, {"val", sizes.val}, {"test", sizes.test}}};

    std::vector<std::string> paths;
    int global = 0;
    for (const auto& [name, n] : splits) {
        std::vector<SceneRecord> records;
        records.reserve(n);
        for (int i = 0; i < n; ++i, ++global)
            records.push_back(make_record(cfg.scene, cfg.sensor, derive_seed({seed, 0xda7a, static_cast<uint64_t>(global)})));
        const std::string path = out_dir + "/" + name + ".jsonl";
        write_jsonl(path, records);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace scomcp::dataset

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scomcp/geometry.hpp"

namespace scomcp::scenes {

struct SceneConfig {
    double world_x = 64.0;  // world spans x in [-world_x/2, world_x/2]
    double world_y = 32.0;
    int min_objects = 4;
    int max_objects = 10;
    double min_gap = 1.0;  // BEV clearance between objects (m)
    double mean_l = 4.6, mean_w = 1.9, mean_h = 1.6;
    double size_jitter = 0.15;      // relative size spread
    double occlusion_prob = 0.9;    // P(scene contains an ego-occluded, collab-visible object)
    double max_collab_distance = 70.0;
    int max_retries = 1000;
};

struct SensorConfig {
    double max_range = 60.0;
    double angular_res_deg = 0.5;
    double noise_std = 0.02;  // range noise (m)
    uint64_t seed = 0;
};

struct PointCloud {
    std::vector<std::array<double, 3>> points;
    std::string frame;            // "ego", "collab", or "world"
    std::vector<int> hit_object;  // per-point source box index (render metadata)
};

struct Scene {
    std::vector<Box7> objects;  // world frame
    Pose ego_pose, collab_pose;
    double world_x = 0.0, world_y = 0.0;
    uint64_t seed = 0;
};

using BoxSet = std::vector<Box7>;

struct EvalRange {
    double x_min, x_max, y_min, y_max;
};

// Deterministic synthetic scene with non-overlapping boxes; with probability
// cfg.occlusion_prob the scene contains at least one object that is occluded
// from the ego but visible to the collaborator. Throws PlacementError when
// rejection sampling exceeds cfg.max_retries.
Scene generate_scene(const SceneConfig& cfg, uint64_t seed);

// BEV ray cast from `agent`; each ray samples the boundary of the nearest
// intersected box only. Points are expressed in the agent frame tagged
// `frame_tag`.
PointCloud render_view(const Scene& scene, const Pose& agent, const std::string& frame_tag,
                       const SensorConfig& sensor);

// Rigid 2D change of frame (rotation by yaw difference + translation); z kept.
PointCloud project_points(const PointCloud& pc, const std::string& from_tag, const Pose& from,
                          const std::string& to_tag, const Pose& to);

// Objects whose centers fall inside eval_range (closed interval), expressed
// in the ego frame.
BoxSet ground_truth_boxes(const Scene& scene, const EvalRange& range);

// Sensor-independent geometric visibility used by the generator: an object is
// visible from `viewer` if at least one probe ray (corners + center) reaches
// it before hitting any other object.
bool object_visible(const Scene& scene, size_t obj_idx, const Pose& viewer, double max_range);

}  // namespace scomcp::scenes

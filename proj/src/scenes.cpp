// SPDX-License-Identifier: Apache-2.0
#include "scomcp/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "scomcp/rng.hpp"

namespace scomcp::scenes {

namespace {

// distance along ray (org + t*dir) to the nearest edge of the box, or nullopt
std::optional<double> ray_box_hit(double ox, double oy, double dx, double dy, const Box7& b) {
    const Polygon poly = box_corners(b);
    double best = std::numeric_limits<double>::infinity();
    bool hit = false;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        const double ex = q.x - p.x, ey = q.y - p.y;
        const double den = dx * ey - dy * ex;
        if (std::abs(den) < 1e-12) continue;  // parallel
        const double t = ((p.x - ox) * ey - (p.y - oy) * ex) / den;
        const double u = (dx != 0.0 || dy != 0.0) ? ((p.x - ox) * dy - (p.y - oy) * dx) / den : 0.0;
        if (t > 1e-9 && u >= 0.0 && u <= 1.0) {
            hit = true;
            best = std::min(best, t);
        }
    }
    if (!hit) return std::nullopt;
    return best;
}

struct RayHit {
    double t;
    int obj;
};

std::optional<RayHit> nearest_hit(const Scene& scene, double ox, double oy, double dx, double dy,
                                  double max_range) {
    std::optional<RayHit> best;
    for (size_t k = 0; k < scene.objects.size(); ++k) {
        auto t = ray_box_hit(ox, oy, dx, dy, scene.objects[k]);
        if (t && *t <= max_range && (!best || *t < best->t)) best = RayHit{*t, static_cast<int>(k)};
    }
    return best;
}

bool clear_of_others(const Box7& cand, const std::vector<Box7>& placed, double gap) {
    Box7 inflated = cand;
    inflated.w += gap;
    inflated.l += gap;
    for (const auto& o : placed) {
        Box7 oi = o;
        oi.w += gap;
        oi.l += gap;
        if (intersection_area(inflated, oi) > 0.0) return false;
    }
    return true;
}

bool contains_agent(const Box7& b, const Pose& agent, double margin) {
    Box7 inflated = b;
    inflated.w += 2.0 * margin;
    inflated.l += 2.0 * margin;
    return point_in_convex(box_corners(inflated), agent.x, agent.y);
}

Box7 sample_box(const SceneConfig& cfg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Box7 b;
    b.l = cfg.mean_l * (1.0 + cfg.size_jitter * (2.0 * uni(rng) - 1.0));
    b.w = cfg.mean_w * (1.0 + cfg.size_jitter * (2.0 * uni(rng) - 1.0));
    b.h = cfg.mean_h * (1.0 + cfg.size_jitter * (2.0 * uni(rng) - 1.0));
    const double margin = std::max(b.l, b.w) / 2.0 + 0.5;
    const double hx = cfg.world_x / 2.0 - margin;
    const double hy = cfg.world_y / 2.0 - margin;
    b.cx = (2.0 * uni(rng) - 1.0) * hx;
    b.cy = (2.0 * uni(rng) - 1.0) * hy;
    b.cz = b.h / 2.0;
    // road-like headings: axis-aligned base plus jitter, canonical in (-pi/2, pi/2]
    const double base = uni(rng) < 0.5 ? 0.0 : kPi / 2.0;
    std::normal_distribution<double> jitter(0.0, 0.12);
    double yaw = base + jitter(rng);
    if (yaw > kPi / 2.0) yaw -= kPi;
    b.yaw = wrap_angle(yaw);
    return b;
}

}  // namespace

bool object_visible(const Scene& scene, size_t obj_idx, const Pose& viewer, double max_range) {
    const Box7& target = scene.objects[obj_idx];
    Polygon probes = box_corners(target);
    probes.push_back({target.cx, target.cy});
    for (const auto& p : probes) {
        const double dx = p.x - viewer.x, dy = p.y - viewer.y;
        const double dist = std::hypot(dx, dy);
        if (dist > max_range || dist < 1e-9) continue;
        auto hit = nearest_hit(scene, viewer.x, viewer.y, dx / dist, dy / dist, max_range);
        if (hit && hit->obj == static_cast<int>(obj_idx)) return true;
    }
    return false;
}

namespace {
Scene generate_scene_attempt(const SceneConfig& cfg, uint64_t seed, uint64_t attempt);
}

Scene generate_scene(const SceneConfig& cfg, uint64_t seed) {
    // rare geometries make the occlusion constraint unsatisfiable; retry the
    // whole scene with a derived sub-seed, deterministically
    constexpr int kSceneRetries = 40;
    for (int outer = 0;; ++outer) {
        try {
            return generate_scene_attempt(cfg, seed, static_cast<uint64_t>(outer));
        } catch (const PlacementError&) {
            if (outer + 1 >= kSceneRetries) throw;
        }
    }
}

namespace {

Scene generate_scene_attempt(const SceneConfig& cfg, uint64_t seed, uint64_t attempt) {
    auto rng = make_rng({seed, 0x5ce9e5, attempt});
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Scene scene;
    scene.world_x = cfg.world_x;
    scene.world_y = cfg.world_y;
    scene.seed = seed;

    scene.ego_pose.x = (2.0 * uni(rng) - 1.0) * 2.0;
    scene.ego_pose.y = (2.0 * uni(rng) - 1.0) * 2.0;
    scene.ego_pose.yaw = (2.0 * uni(rng) - 1.0) * 0.15;

    // collaborator within the world and within collaboration range
    for (int attempt = 0;; ++attempt) {
        if (attempt >= cfg.max_retries) throw PlacementError("generate_scene: collaborator placement failed");
        const double ang = (2.0 * uni(rng) - 1.0) * kPi;
        const double d = 8.0 + uni(rng) * std::min(cfg.max_collab_distance - 8.0,
                                                   std::min(cfg.world_x, cfg.world_y) / 2.0);
        const double cx = scene.ego_pose.x + d * std::cos(ang);
        const double cy = scene.ego_pose.y + d * std::sin(ang);
        if (std::abs(cx) > cfg.world_x / 2.0 - 1.0 || std::abs(cy) > cfg.world_y / 2.0 - 1.0) continue;
        scene.collab_pose = {cx, cy, wrap_angle((2.0 * uni(rng) - 1.0) * kPi)};
        break;
    }

    int n_objects = cfg.min_objects;
    if (cfg.max_objects > cfg.min_objects) {
        const int span = cfg.max_objects - cfg.min_objects + 1;
        n_objects += std::min(span - 1, static_cast<int>(uni(rng) * span));
    }

    for (int i = 0; i < n_objects; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
            Box7 b = sample_box(cfg, rng);
            if (!clear_of_others(b, scene.objects, cfg.min_gap)) continue;
            if (contains_agent(b, scene.ego_pose, 1.0) || contains_agent(b, scene.collab_pose, 1.0)) continue;
            scene.objects.push_back(b);
            placed = true;
            break;
        }
        if (!placed) throw PlacementError("generate_scene: object placement exceeded retry cap");
    }

    const bool want_occlusion = !scene.objects.empty() && uni(rng) < cfg.occlusion_prob;
    if (want_occlusion) {
        const double probe_range = std::hypot(cfg.world_x, cfg.world_y);
        // candidate targets must already be in the collaborator's view
        std::vector<size_t> candidates;
        for (size_t k = 0; k < scene.objects.size(); ++k) {
            const double d = std::hypot(scene.objects[k].cx - scene.ego_pose.x,
                                        scene.objects[k].cy - scene.ego_pose.y);
            if (d >= 6.0 && object_visible(scene, k, scene.collab_pose, probe_range))
                candidates.push_back(k);
        }
        if (candidates.empty()) throw PlacementError("generate_scene: no occludable target");
        bool achieved = false;
        for (int attempt = 0; attempt < cfg.max_retries && !achieved; ++attempt) {
            const size_t ti = candidates[static_cast<size_t>(uni(rng) * candidates.size()) % candidates.size()];
            const Box7& target = scene.objects[ti];
            const double dx = target.cx - scene.ego_pose.x, dy = target.cy - scene.ego_pose.y;
            const double dist = std::hypot(dx, dy);

            Box7 occ;
            occ.l = cfg.mean_l * (1.0 + cfg.size_jitter * (2.0 * uni(rng) - 1.0));
            occ.w = cfg.mean_w * (1.0 + cfg.size_jitter * (2.0 * uni(rng) - 1.0));
            occ.h = cfg.mean_h * (1.0 + cfg.size_jitter * (2.0 * uni(rng) - 1.0));
            const double u = 0.35 + 0.3 * uni(rng);
            occ.cx = scene.ego_pose.x + u * dx;
            occ.cy = scene.ego_pose.y + u * dy;
            occ.cz = occ.h / 2.0;
            // broadside to the ray so it shadows the target
            occ.yaw = wrap_angle(std::atan2(dy, dx) + kPi / 2.0);
            if (std::abs(occ.cx) > cfg.world_x / 2.0 - 1.0 || std::abs(occ.cy) > cfg.world_y / 2.0 - 1.0) continue;
            if (!clear_of_others(occ, scene.objects, cfg.min_gap)) continue;
            if (contains_agent(occ, scene.ego_pose, 1.0) || contains_agent(occ, scene.collab_pose, 1.0)) continue;

            scene.objects.push_back(occ);
            if (!object_visible(scene, ti, scene.ego_pose, probe_range) &&
                object_visible(scene, ti, scene.collab_pose, probe_range)) {
                achieved = true;
            } else {
                scene.objects.pop_back();
            }
        }
        if (!achieved) {
            // fall back: an existing object may already satisfy the condition
            for (size_t k = 0; k < scene.objects.size() && !achieved; ++k)
                achieved = !object_visible(scene, k, scene.ego_pose, probe_range) &&
                           object_visible(scene, k, scene.collab_pose, probe_range);
            if (!achieved) throw PlacementError("generate_scene: could not realize occlusion constraint");
        }
    }

    return scene;
}

}  // namespace

PointCloud render_view(const Scene& scene, const Pose& agent, const std::string& frame_tag,
                       const SensorConfig& sensor) {
    PointCloud pc;
    pc.frame = frame_tag;
    auto rng = make_rng({sensor.seed, 0x11da2});
    std::normal_distribution<double> noise(0.0, 1.0);

    const int n_rays = std::max(1, static_cast<int>(std::round(360.0 / sensor.angular_res_deg)));
    for (int i = 0; i < n_rays; ++i) {
        const double ang = agent.yaw - kPi + (2.0 * kPi * i) / n_rays;
        const double dx = std::cos(ang), dy = std::sin(ang);
        auto hit = nearest_hit(scene, agent.x, agent.y, dx, dy, sensor.max_range);
        if (!hit) continue;
        double t = hit->t;
        if (sensor.noise_std > 0.0) t += sensor.noise_std * noise(rng);
        const double wx = agent.x + t * dx;
        const double wy = agent.y + t * dy;
        const Box7& b = scene.objects[hit->obj];
        const double z = b.h * (0.3 + 0.4 * ((i * 2654435761u) % 97) / 96.0);  // deterministic z spread
        const Vec2 local = world_to_frame(agent, wx, wy);
        pc.points.push_back({local.x, local.y, z});
        pc.hit_object.push_back(hit->obj);
    }
    return pc;
}

PointCloud project_points(const PointCloud& pc, const std::string& from_tag, const Pose& from,
                          const std::string& to_tag, const Pose& to) {
    if (pc.frame != from_tag)
        throw ContractViolation("project_points: cloud frame '" + pc.frame + "' does not match '" + from_tag + "'");
    PointCloud out;
    out.frame = to_tag;
    out.points.reserve(pc.points.size());
    out.hit_object = pc.hit_object;
    for (const auto& p : pc.points) {
        const Vec2 w = frame_to_world(from, p[0], p[1]);
        const Vec2 q = world_to_frame(to, w.x, w.y);
        out.points.push_back({q.x, q.y, p[2]});
    }
    return out;
}

BoxSet ground_truth_boxes(const Scene& scene, const EvalRange& range) {
    BoxSet out;
    const Pose world{0.0, 0.0, 0.0};
    for (const auto& b : scene.objects) {
        const Box7 e = box_to_frame(b, world, scene.ego_pose);
        if (e.cx >= range.x_min && e.cx <= range.x_max && e.cy >= range.y_min && e.cy <= range.y_max)
            out.push_back(e);
    }
    return out;
}

}  // namespace scomcp::scenes

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "scomcp/errors.hpp"

namespace scomcp {

constexpr double kPi = 3.14159265358979323846;

// wrap to (-pi, pi]
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

struct Pose {
    double x = 0.0, y = 0.0, yaw = 0.0;
};

// Oriented 3D box; l runs along the heading, w lateral, yaw in (-pi, pi].
struct Box7 {
    double cx = 0.0, cy = 0.0, cz = 0.0;
    double w = 0.0, l = 0.0, h = 0.0;
    double yaw = 0.0;
};

struct Vec2 {
    double x = 0.0, y = 0.0;
};

using Polygon = std::vector<Vec2>;  // convex, counter-clockwise

Polygon box_corners(const Box7& b);
double polygon_area(const Polygon& p);
Polygon convex_clip(const Polygon& subject, const Polygon& clip);
bool point_in_convex(const Polygon& poly, double x, double y);

// BEV IoU of two oriented rectangles. Throws ContractViolation on zero-area boxes.
double rotated_iou(const Box7& a, const Box7& b);
double intersection_area(const Box7& a, const Box7& b);

// rigid 2D frame changes
inline Vec2 frame_to_world(const Pose& f, double px, double py) {
    const double c = std::cos(f.yaw), s = std::sin(f.yaw);
    return {f.x + c * px - s * py, f.y + s * px + c * py};
}
inline Vec2 world_to_frame(const Pose& f, double wx, double wy) {
    const double c = std::cos(f.yaw), s = std::sin(f.yaw);
    const double dx = wx - f.x, dy = wy - f.y;
    return {c * dx + s * dy, -s * dx + c * dy};
}

// express a box given in frame `from` in frame `to`
Box7 box_to_frame(const Box7& b, const Pose& from, const Pose& to);

}  // namespace scomcp

// SPDX-License-Identifier: Apache-2.0
#include "scomcp/geometry.hpp"

#include <algorithm>

namespace scomcp {

Polygon box_corners(const Box7& b) {
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    const double hl = b.l / 2.0, hw = b.w / 2.0;
    // CCW order for positive area
    const double local[4][2] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
    Polygon p(4);
    for (int i = 0; i < 4; ++i) {
        p[i].x = b.cx + c * local[i][0] - s * local[i][1];
        p[i].y = b.cy + s * local[i][0] + c * local[i][1];
    }
    return p;
}

double polygon_area(const Polygon& p) {
    const size_t n = p.size();
    if (n < 3) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const auto& a = p[i];
        const auto& b = p[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

// Sutherland-Hodgman; clip polygon must be convex and CCW
Polygon convex_clip(const Polygon& subject, const Polygon& clip) {
    Polygon out = subject;
    const size_t nc = clip.size();
    for (size_t e = 0; e < nc && !out.empty(); ++e) {
        const Vec2& a = clip[e];
        const Vec2& b = clip[(e + 1) % nc];
        const double ex = b.x - a.x, ey = b.y - a.y;
        Polygon in = std::move(out);
        out.clear();
        const size_t n = in.size();
        for (size_t i = 0; i < n; ++i) {
            const Vec2& p = in[i];
            const Vec2& q = in[(i + 1) % n];
            const double sp = ex * (p.y - a.y) - ey * (p.x - a.x);
            const double sq = ex * (q.y - a.y) - ey * (q.x - a.x);
            const bool pin = sp >= 0.0, qin = sq >= 0.0;
            if (pin) out.push_back(p);
            if (pin != qin) {
                const double t = sp / (sp - sq);
                out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
            }
        }
    }
    return out;
}

bool point_in_convex(const Polygon& poly, double x, double y) {
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        const double cr = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
        if (cr < 0.0) return false;
    }
    return true;
}

double intersection_area(const Box7& a, const Box7& b) {
    const Polygon pa = box_corners(a);
    const Polygon pb = box_corners(b);
    // quick axis-aligned reject
    auto aabb = [](const Polygon& p, double& x0, double& y0, double& x1, double& y1) {
        x0 = y0 = 1e300;
        x1 = y1 = -1e300;
        for (const auto& v : p) {
            x0 = std::min(x0, v.x);
            y0 = std::min(y0, v.y);
            x1 = std::max(x1, v.x);
            y1 = std::max(y1, v.y);
        }
    };
    double ax0, ay0, ax1, ay1, bx0, by0, bx1, by1;
    aabb(pa, ax0, ay0, ax1, ay1);
    aabb(pb, bx0, by0, bx1, by1);
    if (ax1 < bx0 || bx1 < ax0 || ay1 < by0 || by1 < ay0) return 0.0;
    const Polygon inter = convex_clip(pa, pb);
    return std::abs(polygon_area(inter));
}

double rotated_iou(const Box7& a, const Box7& b) {
    if (a.w <= 0.0 || a.l <= 0.0 || b.w <= 0.0 || b.l <= 0.0)
        throw ContractViolation("rotated_iou: degenerate zero-area box");
    const double inter = intersection_area(a, b);
    const double area_a = a.w * a.l, area_b = b.w * b.l;
    const double uni = area_a + area_b - inter;
    double iou = inter / uni;
    if (iou < 0.0) iou = 0.0;
    if (iou > 1.0) iou = 1.0;
    return iou;
}

Box7 box_to_frame(const Box7& b, const Pose& from, const Pose& to) {
    const Vec2 w = frame_to_world(from, b.cx, b.cy);
    const Vec2 p = world_to_frame(to, w.x, w.y);
    Box7 out = b;
    out.cx = p.x;
    out.cy = p.y;
    out.yaw = wrap_angle(b.yaw + from.yaw - to.yaw);
    return out;
}

}  // namespace scomcp

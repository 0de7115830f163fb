// SPDX-License-Identifier: Apache-2.0
#include "mploc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace mploc {

FloorPlan::FloorPlan(std::vector<Wall> walls) : walls_(std::move(walls)) {
    std::unordered_set<std::string> seen;
    for (const auto& w : walls_) {
        if (!(w.length() > 0.0)) {
            throw std::invalid_argument("FloorPlan: wall '" + w.id +
                                        "' has zero length");
        }
        if (!seen.insert(w.id).second) {
            throw std::invalid_argument("FloorPlan: duplicate wall id '" + w.id + "'");
        }
    }
}

const Wall& FloorPlan::wall(const std::string& id) const {
    for (const auto& w : walls_) {
        if (w.id == id) return w;
    }
    throw std::out_of_range("FloorPlan: unknown wall id '" + id + "'");
}

double normalize_angle(double angle) {
    double a = std::remainder(angle, 2.0 * M_PI); // [-pi, pi]
    if (a <= -M_PI) a = M_PI;                     // map -pi to +pi
    return a;
}

Vec2 mirror_point(const Vec2& p, const Wall& wall) {
    const Vec2 d = wall.b - wall.a;
    const double len2 = d.squaredNorm();
    if (!(len2 > 0.0)) {
        throw std::invalid_argument("mirror_point: wall '" + wall.id +
                                    "' is degenerate (zero length)");
    }
    const double t = (p - wall.a).dot(d) / len2;
    const Vec2 foot = wall.a + t * d;
    return 2.0 * foot - p;
}

std::vector<Anchor> generate_virtual_anchors(const FloorPlan& plan, const Anchor& pa,
                                             int max_order) {
    if (!pa.is_physical()) {
        throw std::invalid_argument("generate_virtual_anchors: anchor '" + pa.id +
                                    "' is not a physical anchor");
    }
    if (max_order < 0) {
        throw std::invalid_argument("generate_virtual_anchors: negative max_order");
    }

    std::vector<Anchor> result;
    std::vector<Anchor> frontier{pa};
    for (int order = 1; order <= max_order; ++order) {
        std::vector<Anchor> next;
        for (const auto& parent : frontier) {
            const std::string* last_wall =
                parent.wall_sequence.empty() ? nullptr : &parent.wall_sequence.back();
            for (const auto& w : plan.walls()) {
                if (last_wall && *last_wall == w.id) continue; // identity bounce
                Anchor va;
                va.position = mirror_point(parent.position, w);
                va.kind = AnchorKind::Virtual;
                va.order = order;
                va.parent_pa = pa.id;
                va.wall_sequence = parent.wall_sequence;
                va.wall_sequence.push_back(w.id);
                va.id = pa.id;
                for (const auto& wid : va.wall_sequence) va.id += "/" + wid;
                next.push_back(std::move(va));
            }
        }
        std::sort(next.begin(), next.end(), [](const Anchor& x, const Anchor& y) {
            return std::lexicographical_compare(
                x.wall_sequence.begin(), x.wall_sequence.end(),
                y.wall_sequence.begin(), y.wall_sequence.end());
        });
        result.insert(result.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return result;
}

double expected_distance(const Vec2& agent_pos, const Anchor& anchor) {
    return (agent_pos - anchor.position).norm();
}

namespace {

// Intersection of the segment from->to with the supporting line of the wall.
// Returns true and the wall parameter s (position = a + s*(b-a)) only if the
// segment genuinely crosses the line (endpoints on opposite sides).
bool crossing_point(const Vec2& from, const Vec2& to, const Wall& wall, double& s_out) {
    const Vec2 d = wall.b - wall.a;
    const Vec2 n{-d.y(), d.x()}; // wall normal (not normalized)
    const double h_from = n.dot(from - wall.a);
    const double h_to = n.dot(to - wall.a);
    const double denom = h_from - h_to;
    if (denom == 0.0) return false; // parallel or both on the line
    const double t = h_from / denom;
    if (t <= 0.0 || t >= 1.0) return false; // no strict crossing
    const Vec2 q = from + t * (to - from);
    s_out = (q - wall.a).dot(d) / d.squaredNorm();
    return true;
}

} // namespace

bool specular_visible(const Vec2& agent_pos, const Anchor& anchor, const FloorPlan& plan) {
    if (anchor.order == 0) return true;

    // Images of the parent PA through prefixes of the wall sequence;
    // images[k] is the k-times-mirrored position, images.back() == anchor.
    const int k = static_cast<int>(anchor.wall_sequence.size());
    std::vector<Vec2> images(static_cast<size_t>(k) + 1);
    // Recover the PA position by unwinding the last mirror repeatedly.
    images[static_cast<size_t>(k)] = anchor.position;
    for (int i = k - 1; i >= 0; --i) {
        const Wall& w = plan.wall(anchor.wall_sequence[static_cast<size_t>(i)]);
        images[static_cast<size_t>(i)] =
            mirror_point(images[static_cast<size_t>(i) + 1], w);
    }

    Vec2 target = agent_pos;
    for (int i = k; i >= 1; --i) {
        const Wall& w = plan.wall(anchor.wall_sequence[static_cast<size_t>(i - 1)]);
        double s = 0.0;
        if (!crossing_point(target, images[static_cast<size_t>(i)], w, s)) return false;
        if (!(s > 0.0 && s < 1.0)) return false; // strictly inside the segment
        target = w.a + s * (w.b - w.a);
    }
    return true;
}

bool in_field_of_view(const AgentPose& pose, const Vec2& anchor_pos, const FovConfig& fov) {
    const Vec2 to_anchor = anchor_pos - pose.position;
    if (to_anchor.squaredNorm() == 0.0) {
        throw std::invalid_argument("in_field_of_view: anchor coincides with agent position");
    }
    if (!fov.enabled) return true;
    const Vec2 heading{std::cos(pose.orientation), std::sin(pose.orientation)};
    const double cross = heading.x() * to_anchor.y() - heading.y() * to_anchor.x();
    const double dot = heading.dot(to_anchor);
    const double angle = std::abs(std::atan2(cross, dot));
    return angle <= fov.half_angle;
}

} // namespace mploc

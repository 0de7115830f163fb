// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mploc {

using Vec2 = Eigen::Vector2d;

/// One reflecting wall: a 2-D line segment with a stable identifier.
struct Wall {
    std::string id;
    Vec2 a{0.0, 0.0};
    Vec2 b{0.0, 0.0};

    double length() const { return (b - a).norm(); }
};

/// Known floor plan. Wall ids are unique and every segment has positive
/// length (checked by the constructor).
class FloorPlan {
public:
    FloorPlan() = default;
    explicit FloorPlan(std::vector<Wall> walls);

    const std::vector<Wall>& walls() const { return walls_; }
    bool empty() const { return walls_.empty(); }

    /// Wall lookup by id; throws std::out_of_range for unknown ids.
    const Wall& wall(const std::string& id) const;

private:
    std::vector<Wall> walls_;
};

enum class AnchorKind { Physical, Virtual };

/// A physical anchor (PA) or one of its mirror-image virtual anchors (VAs).
/// For a VA, wall_sequence lists the mirroring walls in application order:
/// position = mirror(...mirror(mirror(pa, w[0]), w[1])..., w[k-1]).
struct Anchor {
    std::string id;
    Vec2 position{0.0, 0.0};
    AnchorKind kind = AnchorKind::Physical;
    int order = 0;                          // 0 for PAs, >=1 for VAs
    std::string parent_pa;                  // generating PA id (self for PAs)
    std::vector<std::string> wall_sequence; // empty for PAs

    bool is_physical() const { return kind == AnchorKind::Physical; }
};

/// Agent ground-truth pose. Orientation is the heading angle from the +x
/// axis, normalized to (-pi, pi].
struct AgentPose {
    Vec2 position{0.0, 0.0};
    double orientation = 0.0; // radians
    Vec2 velocity{0.0, 0.0};
};

/// Body-induced field of view: a binary angular sector of the given
/// half-angle centered on the agent heading. half_angle = pi (or
/// enabled = false) means full visibility.
struct FovConfig {
    double half_angle = M_PI / 2.0; // radians, in (0, pi]
    bool enabled = true;
};

/// Normalize an angle to (-pi, pi].
double normalize_angle(double angle);

/// Reflect point p across the infinite line supporting the wall.
/// Involutive: applying twice returns p. Throws on zero-length walls.
Vec2 mirror_point(const Vec2& p, const Wall& wall);

/// All virtual anchors of order 1..max_order for one physical anchor,
/// over wall sequences with no immediate repetition. Output is ordered by
/// order, then lexicographically by wall-id sequence. Throws if pa is not
/// physical.
std::vector<Anchor> generate_virtual_anchors(const FloorPlan& plan, const Anchor& pa,
                                             int max_order);

/// Euclidean distance between an agent position and an anchor. For a
/// visible VA this equals the folded specular path length.
double expected_distance(const Vec2& agent_pos, const Anchor& anchor);

/// True iff the specular path exists: unfolding the VA's wall sequence,
/// every reflection point lies strictly inside its generating segment.
/// PAs are always visible. Blockage of one wall by another is not modeled.
bool specular_visible(const Vec2& agent_pos, const Anchor& anchor, const FloorPlan& plan);

/// FOV gate: true iff the angle between the agent heading and the direction
/// to anchor_pos is <= fov.half_angle (boundary inclusive), or the gate is
/// disabled. Throws if anchor_pos coincides with the agent position.
bool in_field_of_view(const AgentPose& pose, const Vec2& anchor_pos, const FovConfig& fov);

} // namespace mploc

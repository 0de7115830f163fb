// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mploc/geometry.hpp"

namespace mploc {

/// One candidate anchor at a position hypothesis.
struct CandidateEntry {
    std::string anchor_id;
    Vec2 anchor_position{0.0, 0.0};
    double distance = 0.0; // predicted range, meters
};

/// Candidate anchors visible at a position hypothesis, in anchor-list order.
struct CandidateSet {
    std::vector<CandidateEntry> entries;
};

struct AssociationPair {
    std::size_t measurement = 0; // index into the measurement list
    std::size_t candidate = 0;   // index into CandidateSet::entries
    std::string anchor_id;
    double error = 0.0; // |z - d|, meters
};

/// One-to-one measurement/anchor assignment. Pairs are sorted by measurement
/// index; every pair satisfies error < cutoff.
struct Association {
    std::vector<AssociationPair> pairs;
    std::vector<std::size_t> clutter;  // unassigned measurement indices, ascending
    std::vector<std::string> missed;   // unassigned anchor ids, candidate order
    double total_cost = 0.0;           // OSPA p=1 cost at the cutoff
};

/// Candidate anchors at `pose`: an anchor enters iff it passes the specular
/// visibility test and the FOV gate. Pass a disabled FovConfig to skip the
/// gate. A candidate coincident with the agent has no defined direction and
/// bypasses the FOV test.
CandidateSet build_candidates(const AgentPose& pose, const std::vector<Anchor>& anchors,
                              const FloorPlan& plan, const FovConfig& fov);

/// Exact OSPA (p=1) assignment of distance measurements to candidates with
/// cut-off `cutoff`: minimizes the sum of cut-off-truncated distance errors
/// over one-to-one pairings, with the cutoff charged per unmatched element
/// on the smaller side. Pairs whose error reaches the cutoff are reported
/// unassigned. Equal-cost solutions break toward the lexicographically
/// smallest (measurement index, candidate index) pairing. Requires
/// cutoff > 0.
Association ospa_associate(const std::vector<double>& measurements,
                           const CandidateSet& candidates, double cutoff);

} // namespace mploc

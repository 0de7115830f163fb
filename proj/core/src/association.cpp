// SPDX-License-Identifier: Apache-2.0
#include "mploc/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mploc {
namespace {

// Exact assignment by shortest augmenting paths with dual potentials.
// cost is a dense s x s row-major matrix; returns the column matched to
// each row. Deterministic for a given matrix.
std::vector<int> solve_assignment(const std::vector<double>& cost, int s) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(s) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(s) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(s) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(s) + 1, 0);

    for (int i = 1; i <= s; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(s) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(s) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= s; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur =
                    cost[static_cast<std::size_t>(i0 - 1) * s + (j - 1)] - u[static_cast<std::size_t>(i0)] -
                    v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= s; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> col_of_row(static_cast<std::size_t>(s), -1);
    for (int j = 1; j <= s; ++j) {
        if (p[static_cast<std::size_t>(j)] > 0) {
            col_of_row[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
        }
    }
    return col_of_row;
}

} // namespace

CandidateSet build_candidates(const AgentPose& pose, const std::vector<Anchor>& anchors,
                              const FloorPlan& plan, const FovConfig& fov) {
    CandidateSet out;
    for (const auto& anchor : anchors) {
        if (!specular_visible(pose.position, anchor, plan)) continue;
        const double d = expected_distance(pose.position, anchor);
        if (d > 0.0 && !in_field_of_view(pose, anchor.position, fov)) continue;
        out.entries.push_back({anchor.id, anchor.position, d});
    }
    return out;
}

Association ospa_associate(const std::vector<double>& measurements,
                           const CandidateSet& candidates, double cutoff) {
    if (!(cutoff > 0.0)) {
        throw std::invalid_argument("ospa_associate: cutoff must be > 0");
    }

    const int m = static_cast<int>(measurements.size());
    const int n = static_cast<int>(candidates.entries.size());
    Association out;
    if (m == 0 && n == 0) return out;

    const int s = std::max(m, n);

    // A tiny per-cell bias, totalling well under any meaningful cost
    // difference, makes the solver settle equal-cost ties on the
    // lexicographically smallest pairing: earlier measurements dominate
    // (geometric row weights) and lower candidate indices win within a row,
    // with the pad column ranked after every real candidate.
    const double eps = cutoff * 1e-12;
    const double base = static_cast<double>(n) + 3.0;

    std::vector<double> cost(static_cast<std::size_t>(s) * s, 0.0);
    double row_weight = eps / base;
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            double c;
            if (i < m && j < n) {
                c = std::min(std::abs(measurements[static_cast<std::size_t>(i)] -
                                      candidates.entries[static_cast<std::size_t>(j)].distance),
                             cutoff) +
                    row_weight * (j + 1);
            } else if (i < m) {
                c = cutoff + row_weight * (n + 1);
            } else {
                c = cutoff;
            }
            cost[static_cast<std::size_t>(i) * s + j] = c;
        }
        row_weight /= base;
    }

    const std::vector<int> col_of_row = solve_assignment(cost, s);

    std::vector<char> anchor_used(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < m; ++i) {
        const int j = col_of_row[static_cast<std::size_t>(i)];
        if (j >= 0 && j < n) {
            const double err = std::abs(measurements[static_cast<std::size_t>(i)] -
                                        candidates.entries[static_cast<std::size_t>(j)].distance);
            if (err < cutoff) {
                out.pairs.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                     candidates.entries[static_cast<std::size_t>(j)].anchor_id, err});
                anchor_used[static_cast<std::size_t>(j)] = 1;
                continue;
            }
        }
        out.clutter.push_back(static_cast<std::size_t>(i));
    }
    for (int j = 0; j < n; ++j) {
        if (!anchor_used[static_cast<std::size_t>(j)]) {
            out.missed.push_back(candidates.entries[static_cast<std::size_t>(j)].anchor_id);
        }
    }

    double total = 0.0;
    for (const auto& pair : out.pairs) total += pair.error;
    total += cutoff * (std::min(m, n) - static_cast<int>(out.pairs.size()));
    out.total_cost = total;
    return out;
}

} // namespace mploc

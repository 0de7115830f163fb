// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mploc/scenario.hpp"
#include "mploc/tracking.hpp"

namespace mploc {

struct StepRecord {
    std::uint32_t run = 0;
    std::uint32_t step = 0;
    Vec2 truth{0.0, 0.0};
    Vec2 estimate{0.0, 0.0};
    double error = 0.0; // meters
};

/// One row per extracted measurement: the anchor it was associated to (or
/// the literal "CLUTTER"), plus the generation-truth anchor nearest in delay
/// within the cut-off (empty when none), which makes the wrong-association
/// rate recomputable from the CSV alone.
struct AssociationRecord {
    std::uint32_t run = 0;
    std::uint32_t step = 0;
    std::uint32_t pa = 0;
    std::uint32_t measurement = 0;
    std::string anchor_id;
    std::string truth_anchor_id;
};

struct Summary {
    double rmse = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p95 = 0.0;
    double mean_associated = 0.0;   // associated measurements per step, all PAs
    double clutter_rate = 0.0;      // clutter measurements per snapshot
    double wrong_association_rate = 0.0; // wrong pairs / associated pairs
};

struct RunReport {
    std::vector<StepRecord> track;              // run-major, step-minor
    std::vector<AssociationRecord> associations; // same order, measurement-minor
    Summary summary;
    std::uint32_t runs = 0;
    std::uint32_t steps = 0;
};

/// Interpolated percentile (linear between order statistics), p in [0, 100].
double percentile(std::vector<double> values, double p);

/// The anchor set a PA stream tracks against: the PA itself followed by its
/// virtual anchors up to the scenario's va_order.
std::vector<Anchor> scenario_anchors(const Scenario& s, std::size_t pa_index);

/// Execute every Monte-Carlo run of the scenario. Per-run seeds derive from
/// the master seed by stable hashing, so the report is identical for any
/// thread count; threads <= 0 uses the hardware concurrency.
RunReport run_scenario(const Scenario& s, int threads = 0);

/// Write track.csv, summary.csv, and associations.csv into out_dir
/// (created if missing). Numeric fields are fixed-precision decimals.
void write_report(const RunReport& report, const std::string& out_dir);

} // namespace mploc

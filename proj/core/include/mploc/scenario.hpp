// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mploc/association.hpp"
#include "mploc/estimator.hpp"
#include "mploc/geometry.hpp"
#include "mploc/signal.hpp"
#include "mploc/tracking.hpp"

namespace mploc {

/// Fully validated simulation configuration. Files carry meters, degrees,
/// and nanoseconds; this struct is already converted to radians and seconds.
struct Scenario {
    FloorPlan plan;
    std::vector<Anchor> pas;
    int va_order = 1;
    std::vector<AgentPose> trajectory; // per-step ground truth
    double dt = 0.25;                  // step period, seconds

    PulseModel pulse = PulseModel::root_raised_cosine(0.6, 4e-9, 1e-9, 256);
    ScatterConfig scatter;
    NoiseConfig noise{1e-3};
    AmplitudeModel amplitude;

    EstimatorConfig estimator;
    double association_cutoff = 0.5; // d_c, meters
    bool use_fov_gate = true;        // apply the FOV gate in data association
    FovConfig fov;                   // physical body FOV (always applied in synthesis)

    TrackerConfig tracker;  // beta is derived from the pulse at run time
    double init_sigma = 0.1; // per-run initial position perturbation, meters

    int runs = 1;
    std::uint64_t seed = 1;
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings; // unknown keys and suspicious values
    bool ok() const { return errors.empty(); }
};

/// Load and validate a scenario file (JSON; schema documented in the README).
/// Defaults fill omitted optional fields. Unknown keys become warnings in
/// `report` when given; validation failures throw with the offending key
/// named (and are also listed in `report`).
Scenario load_scenario(const std::string& path, ValidationReport* report = nullptr);

/// Validate without constructing: collects every error and warning instead
/// of throwing on the first.
ValidationReport validate_scenario(const std::string& path);

} // namespace mploc

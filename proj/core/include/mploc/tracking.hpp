// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "mploc/association.hpp"
#include "mploc/estimator.hpp"
#include "mploc/geometry.hpp"
#include "mploc/signal.hpp"

namespace mploc {

/// EKF state over [px, py, vx, vy].
struct KalmanState {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
};

struct TrackerConfig {
    double dt = 1.0;          // step period, seconds
    double accel_noise = 0.5; // q, m/s^2, white-acceleration intensity
    double rho = 3.0;         // bandwidth deflation factor, >= 1
    double beta = 0.0;        // effective RMS bandwidth, Hz
    Eigen::Vector4d init_mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d init_covariance = Eigen::Matrix4d::Identity();
};

/// RMS bandwidth sqrt(sum f^2 P / sum P) of a sampled power spectrum.
double rms_bandwidth(const std::vector<double>& freq, const std::vector<double>& power);

/// Effective (RMS) bandwidth of the pulse, from the discrete power spectrum
/// of the zero-delay sampled pulse (zero-padded for a fine frequency grid).
double effective_bandwidth(const PulseModel& pulse);

/// CRLB-derived range standard deviation sigma = c / sqrt(8 pi^2 (beta/rho)^2 snr),
/// in meters. Requires snr > 0, beta > 0, rho >= 1.
double measurement_sigma(double snr, double beta, double rho);

/// Constant-velocity prediction: mean through F, covariance F P F^T + Q with
/// the discretized white-acceleration Q scaled by accel_noise^2.
KalmanState predict(const KalmanState& state, const TrackerConfig& cfg);

/// One stacked range observation for the EKF update.
struct RangeObservation {
    Vec2 anchor{0.0, 0.0};
    double range = 0.0; // measured, meters
    double sigma = 0.0; // standard deviation, meters
};

/// Stacked range-measurement EKF update in Joseph form. An observation whose
/// anchor coincides with the state mean has no measurement direction; it is
/// skipped and its index appended to `skipped` when given. An empty
/// observation list returns the state unchanged.
KalmanState update(const KalmanState& state, const std::vector<RangeObservation>& observations,
                   std::vector<std::size_t>* skipped = nullptr);

/// Association-driven update: one observation per associated pair, taking the
/// measured range from `measurements` and its sigma from `sigmas` (both
/// indexed by measurement index).
KalmanState update(const KalmanState& state, const std::vector<double>& measurements,
                   const Association& assoc, const CandidateSet& candidates,
                   const std::vector<double>& sigmas,
                   std::vector<std::size_t>* skipped = nullptr);

/// Per-PA inputs for one tracking run: the anchor set of PA j (the PA and
/// its virtual anchors) and one snapshot per time step.
struct PaStream {
    std::vector<Anchor> anchors;
    std::vector<Snapshot> snapshots; // one per step
};

struct TrackStep {
    KalmanState prior;     // after predict
    KalmanState posterior; // after the stacked update
    std::vector<CandidateSet> candidates;                      // per PA
    std::vector<std::vector<DistanceMeasurement>> measurements; // per PA
    std::vector<Association> associations;                     // per PA
    std::size_t skipped_observations = 0; // coincident-anchor skips
};

struct AgentTrack {
    std::vector<TrackStep> steps;
};

/// Full per-step chain: predict, candidates at the predicted position with
/// the true (known) orientation, per-PA delay estimation and association,
/// then one stacked update over all PAs' associated measurements. Module
/// errors are rethrown with step and PA context.
AgentTrack run_tracker(const std::vector<PaStream>& streams, const FloorPlan& plan,
                       const std::vector<double>& orientations, const FovConfig& fov,
                       const EstimatorConfig& estimator_cfg, double association_cutoff,
                       const TrackerConfig& cfg);

} // namespace mploc

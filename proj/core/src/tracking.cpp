// SPDX-License-Identifier: Apache-2.0
#include "mploc/tracking.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mploc/constants.hpp"

namespace mploc {

double rms_bandwidth(const std::vector<double>& freq, const std::vector<double>& power) {
    if (freq.size() != power.size() || freq.empty()) {
        throw std::invalid_argument("rms_bandwidth: freq and power must be non-empty and equal-length");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < freq.size(); ++k) {
        if (power[k] < 0.0) {
            throw std::invalid_argument("rms_bandwidth: negative power");
        }
        num += freq[k] * freq[k] * power[k];
        den += power[k];
    }
    if (!(den > 0.0)) {
        throw std::invalid_argument("rms_bandwidth: zero total power");
    }
    return std::sqrt(num / den);
}

double effective_bandwidth(const PulseModel& pulse) {
    const Eigen::VectorXd s = pulse.sample(0.0);
    if (!(s.squaredNorm() > 0.0)) {
        throw std::invalid_argument("effective_bandwidth: zero-energy pulse");
    }
    const int n = pulse.length();
    const int m = 4 * n; // zero-padded length, refines the frequency grid
    const double fs = 1.0 / pulse.sample_time();

    std::vector<double> freq(static_cast<std::size_t>(m));
    std::vector<double> power(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        double re = 0.0;
        double im = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ph = -2.0 * M_PI * static_cast<double>(k) * i / m;
            re += s[i] * std::cos(ph);
            im += s[i] * std::sin(ph);
        }
        const int ks = k <= m / 2 ? k : k - m;
        freq[static_cast<std::size_t>(k)] = fs * static_cast<double>(ks) / m;
        power[static_cast<std::size_t>(k)] = re * re + im * im;
    }
    return rms_bandwidth(freq, power);
}

double measurement_sigma(double snr, double beta, double rho) {
    if (!(snr > 0.0)) {
        throw std::invalid_argument("measurement_sigma: snr must be > 0");
    }
    if (!(beta > 0.0)) {
        throw std::invalid_argument("measurement_sigma: beta must be > 0");
    }
    if (!(rho >= 1.0)) {
        throw std::invalid_argument("measurement_sigma: rho must be >= 1");
    }
    const double b = beta / rho;
    return speed_of_light / std::sqrt(8.0 * M_PI * M_PI * b * b * snr);
}

KalmanState predict(const KalmanState& state, const TrackerConfig& cfg) {
    if (!(cfg.dt > 0.0)) {
        throw std::invalid_argument("predict: dt must be > 0");
    }
    if (cfg.accel_noise < 0.0) {
        throw std::invalid_argument("predict: accel_noise must be >= 0");
    }
    const double dt = cfg.dt;
    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    f(0, 2) = dt;
    f(1, 3) = dt;

    const double q2 = cfg.accel_noise * cfg.accel_noise;
    const double a = q2 * dt * dt * dt * dt / 4.0;
    const double b = q2 * dt * dt * dt / 2.0;
    const double c = q2 * dt * dt;
    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    q(0, 0) = a;
    q(1, 1) = a;
    q(0, 2) = b;
    q(2, 0) = b;
    q(1, 3) = b;
    q(3, 1) = b;
    q(2, 2) = c;
    q(3, 3) = c;

    KalmanState out;
    out.mean = f * state.mean;
    out.covariance = f * state.covariance * f.transpose() + q;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

KalmanState update(const KalmanState& state, const std::vector<RangeObservation>& observations,
                   std::vector<std::size_t>* skipped) {
    std::vector<const RangeObservation*> active;
    active.reserve(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const RangeObservation& obs = observations[i];
        if (!(obs.sigma > 0.0)) {
            throw std::invalid_argument("update: observation sigma must be > 0");
        }
        const Vec2 diff = state.mean.head<2>() - obs.anchor;
        if (diff.squaredNorm() == 0.0) {
            if (skipped != nullptr) skipped->push_back(i);
            continue;
        }
        active.push_back(&obs);
    }
    if (active.empty()) return state;

    const Eigen::Index k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd h(k, 4);
    Eigen::VectorXd innovation(k);
    Eigen::VectorXd rdiag(k);
    for (Eigen::Index row = 0; row < k; ++row) {
        const RangeObservation& obs = *active[static_cast<std::size_t>(row)];
        const Vec2 diff = state.mean.head<2>() - obs.anchor;
        const double range = diff.norm();
        h(row, 0) = diff.x() / range;
        h(row, 1) = diff.y() / range;
        h(row, 2) = 0.0;
        h(row, 3) = 0.0;
        innovation[row] = obs.range - range;
        rdiag[row] = obs.sigma * obs.sigma;
    }

    const Eigen::Matrix4d p = state.covariance;
    Eigen::MatrixXd s = h * p * h.transpose();
    s.diagonal() += rdiag;
    const Eigen::MatrixXd gain = s.ldlt().solve(h * p).transpose(); // P H^T S^-1

    KalmanState out;
    out.mean = state.mean + gain * innovation;
    const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - gain * h;
    Eigen::Matrix4d cov = ikh * p * ikh.transpose() + gain * rdiag.asDiagonal() * gain.transpose();
    out.covariance = 0.5 * (cov + cov.transpose());
    return out;
}

KalmanState update(const KalmanState& state, const std::vector<double>& measurements,
                   const Association& assoc, const CandidateSet& candidates,
                   const std::vector<double>& sigmas,
                   std::vector<std::size_t>* skipped) {
    if (sigmas.size() != measurements.size()) {
        throw std::invalid_argument("update: sigmas must parallel measurements");
    }
    std::vector<RangeObservation> observations;
    observations.reserve(assoc.pairs.size());
    for (const auto& pair : assoc.pairs) {
        if (pair.measurement >= measurements.size() ||
            pair.candidate >= candidates.entries.size()) {
            throw std::invalid_argument("update: association indexes outside inputs");
        }
        observations.push_back({candidates.entries[pair.candidate].anchor_position,
                                measurements[pair.measurement], sigmas[pair.measurement]});
    }
    return update(state, observations, skipped);
}

AgentTrack run_tracker(const std::vector<PaStream>& streams, const FloorPlan& plan,
                       const std::vector<double>& orientations, const FovConfig& fov,
                       const EstimatorConfig& estimator_cfg, double association_cutoff,
                       const TrackerConfig& cfg) {
    if (streams.empty()) {
        throw std::invalid_argument("run_tracker: at least one PA stream required");
    }
    const std::size_t n_steps = orientations.size();
    for (std::size_t j = 0; j < streams.size(); ++j) {
        if (streams[j].snapshots.size() != n_steps) {
            std::ostringstream msg;
            msg << "run_tracker: PA " << j << " has " << streams[j].snapshots.size()
                << " snapshots for " << n_steps << " steps";
            throw std::invalid_argument(msg.str());
        }
    }
    if (!(cfg.beta > 0.0)) {
        throw std::invalid_argument("run_tracker: beta must be > 0");
    }

    AgentTrack track;
    track.steps.reserve(n_steps);
    KalmanState state{cfg.init_mean, cfg.init_covariance};

    for (std::size_t n = 0; n < n_steps; ++n) {
        TrackStep step;
        state = predict(state, cfg);
        step.prior = state;

        AgentPose hypothesis;
        hypothesis.position = state.mean.head<2>();
        hypothesis.orientation = orientations[n];
        hypothesis.velocity = state.mean.tail<2>();

        std::vector<RangeObservation> stacked;
        for (std::size_t j = 0; j < streams.size(); ++j) {
            try {
                CandidateSet cand = build_candidates(hypothesis, streams[j].anchors, plan, fov);
                const Snapshot& snap = streams[j].snapshots[n];
                const std::vector<MpcEstimate> est =
                    estimate_mpcs(snap.samples, estimator_cfg, snap.pulse);
                std::vector<DistanceMeasurement> meas = to_distance_measurements(est);

                std::vector<double> z(meas.size());
                for (std::size_t i = 0; i < meas.size(); ++i) z[i] = meas[i].distance;
                Association assoc = ospa_associate(z, cand, association_cutoff);

                for (const auto& pair : assoc.pairs) {
                    stacked.push_back(
                        {cand.entries[pair.candidate].anchor_position, z[pair.measurement],
                         measurement_sigma(meas[pair.measurement].snr, cfg.beta, cfg.rho)});
                }

                step.candidates.push_back(std::move(cand));
                step.measurements.push_back(std::move(meas));
                step.associations.push_back(std::move(assoc));
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "run_tracker: step " << n << ", PA " << j << ": " << e.what();
                throw std::runtime_error(msg.str());
            }
        }

        std::vector<std::size_t> skipped;
        state = update(state, stacked, &skipped);
        step.skipped_observations = skipped.size();
        step.posterior = state;
        track.steps.push_back(std::move(step));
    }
    return track;
}

} // namespace mploc

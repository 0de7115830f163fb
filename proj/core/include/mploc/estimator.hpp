// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mploc/signal.hpp"

namespace mploc {

/// One extracted multipath component.
struct MpcEstimate {
    double delay = 0.0;                       // seconds, >= 0
    std::complex<double> amplitude{0.0, 0.0};
    double snr = 0.0;                         // linear power ratio
};

struct DistanceMeasurement {
    double distance = 0.0; // meters
    double snr = 0.0;      // linear
};

struct EstimatorConfig {
    /// l1 amplitude penalty weight (lambda >= 0). The penalty is subtracted
    /// from the concentrated log-likelihood, so positive values discourage
    /// the blown-up amplitude pairs produced by closely spaced delays.
    double l1_penalty = 0.0;
    /// Component-SNR acceptance threshold gamma, linear power ratio.
    double snr_threshold = 10.0;
    /// Delay search grid spacing = sample_time / grid_oversampling.
    int grid_oversampling = 8;
    int max_components = 10;
    /// Cyclic delay-refinement passes after each accepted component.
    int refine_iters = 2;
};

/// ML fit of complex amplitudes and noise variance for a fixed delay vector.
struct MlFit {
    Eigen::VectorXcd amplitudes;
    double noise_variance = 0.0; // ||r - S a||^2 / N
};

/// Least-squares amplitudes for the pulse matrix S(tau) = [s(tau_1)...],
/// plus the ML noise-variance estimate. Delays must be distinct enough for
/// S to have full column rank; a rank-deficient fit throws with the
/// offending delay pair named.
MlFit ml_amplitudes(const Eigen::VectorXcd& r, const std::vector<double>& delays,
                    const PulseModel& pulse);

/// Per-component SNR |alpha|^2 ||s(tau)||^2 / sigma_w^2. With unit-energy
/// pulses this reduces to |alpha|^2 / sigma_w^2. Throws if noise_variance
/// is zero (degenerate noiseless fit).
double component_snr(const std::complex<double>& amplitude, double delay,
                     double noise_variance, const PulseModel& pulse);

/// Sparsity-penalized deterministic ML extraction of MPC delays/amplitudes.
///
/// Greedy add-and-refine schedule: pick the best grid candidate against the
/// current residual, refine it to sub-grid precision, re-fit all amplitudes,
/// cyclically refine every delay against the penalized concentrated
/// log-likelihood, and stop once the newest component's SNR falls below the
/// threshold (the component is then dropped). Output is sorted by ascending
/// delay and is deterministic for a given input. Pure noise yields an empty
/// list.
std::vector<MpcEstimate> estimate_mpcs(const Eigen::VectorXcd& r,
                                       const EstimatorConfig& cfg,
                                       const PulseModel& pulse);

/// Distance measurements z = c * delay, order preserved.
std::vector<DistanceMeasurement>
to_distance_measurements(const std::vector<MpcEstimate>& estimates);

} // namespace mploc

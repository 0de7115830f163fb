// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mploc/geometry.hpp"
#include "mploc/rng.hpp"

namespace mploc {

/// Sampled unit-energy root-raised-cosine baseband pulse.
///
/// The analytic pulse is evaluated at arbitrary (off-grid) instants, so
/// delayed copies never go through waveform interpolation. The pulse peak
/// sits at an internal offset of 6 symbol durations, which keeps the left
/// tail inside the observation window for delays near zero. Normalization
/// is discrete: the sampled vector at zero delay has unit energy exactly.
class PulseModel {
public:
    /// Factory. roll_off in [0,1]; symbol_time, sample_time in seconds;
    /// length in samples. Requires length*sample_time >= 11*symbol_time so
    /// the zero-delay pulse (offset + right tail) fits the window.
    static PulseModel root_raised_cosine(double roll_off, double symbol_time,
                                         double sample_time, int length);

    /// Pulse value s(t). Peak near t = peak_offset().
    double evaluate(double t) const;

    /// Sampled pulse vector [s(0-tau), s(Ts-tau), ..., s((N-1)Ts-tau)].
    /// Unit energy when the pulse support lies inside the window; delays
    /// pushing support outside yield reduced-energy vectors.
    Eigen::VectorXd sample(double delay) const;

    double roll_off() const { return roll_off_; }
    double symbol_time() const { return symbol_time_; }
    double sample_time() const { return sample_time_; }
    int length() const { return length_; }
    double peak_offset() const { return offset_; }

private:
    PulseModel() = default;
    double raw(double t) const; // unnormalized RRC centered at t = 0

    double roll_off_ = 0.0;
    double symbol_time_ = 0.0;
    double sample_time_ = 0.0;
    int length_ = 0;
    double offset_ = 0.0;
    double scale_ = 1.0;
};

/// Point-source scattering: Poisson count, exponential excess-delay decay,
/// circularly-symmetric complex Gaussian coefficients whose variance follows
/// power0 * exp(-excess/delay_spread). onset is the earliest scatter delay;
/// when unset, synthesis uses the earliest deterministic MPC delay (the LOS).
struct ScatterConfig {
    double mean_count = 0.0;
    double delay_spread = 10e-9; // seconds
    double power0 = 0.0;         // mean power at zero excess delay
    std::optional<double> onset; // seconds
};

/// AWGN level as the per-sample variance sigma_w^2 = N0/Ts.
struct NoiseConfig {
    double variance = 0.0;
};

/// 1/d amplitude decay law, pinned to a component SNR at 1 m. The SNR is
/// referenced to the configured noise variance (or to 1 when noiseless).
struct AmplitudeModel {
    double snr_at_1m = 1000.0; // linear
};

struct TruthMpc {
    double delay = 0.0;                     // seconds
    std::complex<double> amplitude{0.0, 0.0};
    std::string anchor_id;                  // empty unless scene-generated
};

struct TruthScatterer {
    double delay = 0.0;
    std::complex<double> coefficient{0.0, 0.0};
};

struct SnapshotTruth {
    std::vector<TruthMpc> mpcs;
    std::vector<TruthScatterer> scatterers;
    double noise_variance = 0.0;
    std::uint64_t seed = 0;
};

/// One received complex baseband snapshot with its generation metadata.
struct Snapshot {
    Eigen::VectorXcd samples;
    PulseModel pulse;
    std::optional<SnapshotTruth> truth;
};

/// A deterministic multipath component for synthesis input.
struct Mpc {
    double delay = 0.0; // seconds, >= 0
    std::complex<double> amplitude{0.0, 0.0};
};

/// Synthesize r = sum_k alpha_k s(tau_k) + r_s + w. Same seed, same inputs,
/// identical output. Throws on negative delays or invalid configs.
Snapshot synthesize(const std::vector<Mpc>& mpcs, const ScatterConfig& scatter,
                    const NoiseConfig& noise, const PulseModel& pulse,
                    std::uint64_t seed);

/// Scene-driven synthesis: one MPC per anchor that passes both the specular
/// visibility test and the FOV gate, delay = distance/c, |alpha| following
/// the 1/d law, uniform random phase. Truth records the anchor id per MPC.
Snapshot snapshot_from_scene(const AgentPose& pose, const std::vector<Anchor>& anchors,
                             const FloorPlan& plan, const FovConfig& fov,
                             const AmplitudeModel& amps, const ScatterConfig& scatter,
                             const NoiseConfig& noise, const PulseModel& pulse,
                             std::uint64_t seed);

/// Versioned textual snapshot dump: metadata header plus interleaved
/// real/imag samples. load_snapshot inverts save_snapshot.
void save_snapshot(const Snapshot& snapshot, const std::string& path);
Snapshot load_snapshot(const std::string& path);

} // namespace mploc

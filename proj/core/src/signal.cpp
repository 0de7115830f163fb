// SPDX-License-Identifier: Apache-2.0
#include "mploc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mploc/constants.hpp"

namespace mploc {

PulseModel PulseModel::root_raised_cosine(double roll_off, double symbol_time,
                                          double sample_time, int length) {
    if (roll_off < 0.0 || roll_off > 1.0) {
        throw std::invalid_argument("PulseModel: roll_off must be in [0, 1]");
    }
    if (!(symbol_time > 0.0) || !(sample_time > 0.0)) {
        throw std::invalid_argument("PulseModel: symbol_time and sample_time must be > 0");
    }
    if (length <= 0) {
        throw std::invalid_argument("PulseModel: length must be > 0");
    }
    PulseModel p;
    p.roll_off_ = roll_off;
    p.symbol_time_ = symbol_time;
    p.sample_time_ = sample_time;
    p.length_ = length;
    p.offset_ = 6.0 * symbol_time;
    if (static_cast<double>(length) * sample_time < 11.0 * symbol_time) {
        throw std::invalid_argument(
            "PulseModel: window too short (need length*sample_time >= 11*symbol_time)");
    }

    double energy = 0.0;
    for (int i = 0; i < length; ++i) {
        const double v = p.raw(static_cast<double>(i) * sample_time - p.offset_);
        energy += v * v;
    }
    p.scale_ = 1.0 / std::sqrt(energy);
    return p;
}

double PulseModel::raw(double t) const {
    const double b = roll_off_;
    const double x = t / symbol_time_;
    const double inv_sqrt_tp = 1.0 / std::sqrt(symbol_time_);
    constexpr double eps = 1e-9;

    if (std::abs(x) < eps) {
        return inv_sqrt_tp * (1.0 - b + 4.0 * b / M_PI);
    }
    if (b > 0.0 && std::abs(std::abs(4.0 * b * x) - 1.0) < eps) {
        const double c1 = (1.0 + 2.0 / M_PI) * std::sin(M_PI / (4.0 * b));
        const double c2 = (1.0 - 2.0 / M_PI) * std::cos(M_PI / (4.0 * b));
        return inv_sqrt_tp * b / std::sqrt(2.0) * (c1 + c2);
    }
    const double num = std::sin(M_PI * x * (1.0 - b)) +
                       4.0 * b * x * std::cos(M_PI * x * (1.0 + b));
    const double den = M_PI * x * (1.0 - 16.0 * b * b * x * x);
    return inv_sqrt_tp * num / den;
}

double PulseModel::evaluate(double t) const { return scale_ * raw(t - offset_); }

Eigen::VectorXd PulseModel::sample(double delay) const {
    Eigen::VectorXd v(length_);
    for (int i = 0; i < length_; ++i) {
        v[i] = evaluate(static_cast<double>(i) * sample_time_ - delay);
    }
    return v;
}

namespace {

void validate_scatter(const ScatterConfig& scatter) {
    if (scatter.mean_count < 0.0) {
        throw std::invalid_argument("ScatterConfig: mean_count must be >= 0");
    }
    if (!(scatter.delay_spread > 0.0)) {
        throw std::invalid_argument("ScatterConfig: delay_spread must be > 0");
    }
    if (scatter.power0 < 0.0) {
        throw std::invalid_argument("ScatterConfig: power0 must be >= 0");
    }
}

// Shared synthesis core; the stream is owned by the caller so scene-driven
// generation can draw phases and scattering from one seed.
Snapshot synthesize_with(const std::vector<Mpc>& mpcs, const ScatterConfig& scatter,
                         const NoiseConfig& noise, const PulseModel& pulse,
                         RandomStream& rng, std::uint64_t seed) {
    validate_scatter(scatter);
    if (noise.variance < 0.0) {
        throw std::invalid_argument("NoiseConfig: variance must be >= 0");
    }

    const int n = pulse.length();
    Eigen::VectorXcd samples = Eigen::VectorXcd::Zero(n);

    SnapshotTruth truth;
    truth.noise_variance = noise.variance;
    truth.seed = seed;

    for (const auto& mpc : mpcs) {
        if (mpc.delay < 0.0) {
            throw std::invalid_argument("synthesize: negative MPC delay");
        }
        samples += mpc.amplitude * pulse.sample(mpc.delay).cast<std::complex<double>>();
        truth.mpcs.push_back({mpc.delay, mpc.amplitude, {}});
    }

    if (scatter.mean_count > 0.0 && scatter.power0 > 0.0) {
        double onset = 0.0;
        if (scatter.onset.has_value()) {
            onset = *scatter.onset;
        } else if (!mpcs.empty()) {
            onset = mpcs.front().delay;
            for (const auto& mpc : mpcs) onset = std::min(onset, mpc.delay);
        }
        if (onset < 0.0) {
            throw std::invalid_argument("ScatterConfig: negative onset");
        }
        const int count = rng.poisson(scatter.mean_count);
        for (int l = 0; l < count; ++l) {
            const double excess = rng.exponential(scatter.delay_spread);
            const double tau = onset + excess;
            const double var = scatter.power0 * std::exp(-excess / scatter.delay_spread);
            const std::complex<double> beta = rng.complex_normal(var);
            samples += beta * pulse.sample(tau).cast<std::complex<double>>();
            truth.scatterers.push_back({tau, beta});
        }
    }

    if (noise.variance > 0.0) {
        for (int i = 0; i < n; ++i) {
            samples[i] += rng.complex_normal(noise.variance);
        }
    }

    Snapshot snap{std::move(samples), pulse, std::move(truth)};
    return snap;
}

} // namespace

Snapshot synthesize(const std::vector<Mpc>& mpcs, const ScatterConfig& scatter,
                    const NoiseConfig& noise, const PulseModel& pulse,
                    std::uint64_t seed) {
    RandomStream rng(seed);
    return synthesize_with(mpcs, scatter, noise, pulse, rng, seed);
}

Snapshot snapshot_from_scene(const AgentPose& pose, const std::vector<Anchor>& anchors,
                             const FloorPlan& plan, const FovConfig& fov,
                             const AmplitudeModel& amps, const ScatterConfig& scatter,
                             const NoiseConfig& noise, const PulseModel& pulse,
                             std::uint64_t seed) {
    if (anchors.empty()) {
        throw std::invalid_argument("snapshot_from_scene: no anchors");
    }
    if (!(amps.snr_at_1m > 0.0)) {
        throw std::invalid_argument("AmplitudeModel: snr_at_1m must be > 0");
    }
    RandomStream rng(seed);
    const double ref_var = noise.variance > 0.0 ? noise.variance : 1.0;
    const double gain_1m = std::sqrt(amps.snr_at_1m * ref_var);

    std::vector<Mpc> mpcs;
    std::vector<std::string> ids;
    for (const auto& anchor : anchors) {
        const double d = expected_distance(pose.position, anchor);
        if (d == 0.0) continue; // coincident anchor carries no direction
        if (!specular_visible(pose.position, anchor, plan)) continue;
        if (!in_field_of_view(pose, anchor.position, fov)) continue;
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        const std::complex<double> alpha =
            (gain_1m / d) * std::complex<double>(std::cos(phase), std::sin(phase));
        mpcs.push_back({d / speed_of_light, alpha});
        ids.push_back(anchor.id);
    }

    Snapshot snap = synthesize_with(mpcs, scatter, noise, pulse, rng, seed);
    for (size_t k = 0; k < ids.size(); ++k) {
        snap.truth->mpcs[k].anchor_id = ids[k];
    }
    return snap;
}

void save_snapshot(const Snapshot& snapshot, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_snapshot: cannot open '" + path + "'");
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "mploc-snapshot 1\n";
    out << "roll_off " << snapshot.pulse.roll_off() << "\n";
    out << "symbol_time " << snapshot.pulse.symbol_time() << "\n";
    out << "sample_time " << snapshot.pulse.sample_time() << "\n";
    out << "length " << snapshot.pulse.length() << "\n";
    out << "seed " << (snapshot.truth ? snapshot.truth->seed : 0) << "\n";
    out << "samples\n";
    for (int i = 0; i < snapshot.samples.size(); ++i) {
        out << snapshot.samples[i].real() << " " << snapshot.samples[i].imag() << "\n";
    }
    if (!out) {
        throw std::runtime_error("save_snapshot: write failed for '" + path + "'");
    }
}

Snapshot load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_snapshot: cannot open '" + path + "'");
    }
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "mploc-snapshot" || version != 1) {
        throw std::runtime_error("load_snapshot: unsupported format in '" + path + "'");
    }
    double roll_off = 0.0, symbol_time = 0.0, sample_time = 0.0;
    int length = 0;
    std::uint64_t seed = 0;
    std::string key;
    for (int f = 0; f < 5; ++f) {
        in >> key;
        if (key == "roll_off") in >> roll_off;
        else if (key == "symbol_time") in >> symbol_time;
        else if (key == "sample_time") in >> sample_time;
        else if (key == "length") in >> length;
        else if (key == "seed") in >> seed;
        else throw std::runtime_error("load_snapshot: unexpected key '" + key + "'");
    }
    in >> key;
    if (key != "samples" || !in) {
        throw std::runtime_error("load_snapshot: malformed header in '" + path + "'");
    }
    Snapshot snap{Eigen::VectorXcd(),
                  PulseModel::root_raised_cosine(roll_off, symbol_time, sample_time, length),
                  std::nullopt};
    snap.samples.resize(length);
    for (int i = 0; i < length; ++i) {
        double re = 0.0, im = 0.0;
        in >> re >> im;
        snap.samples[i] = {re, im};
    }
    if (!in) {
        throw std::runtime_error("load_snapshot: truncated samples in '" + path + "'");
    }
    SnapshotTruth truth;
    truth.seed = seed;
    snap.truth = truth;
    return snap;
}

} // namespace mploc

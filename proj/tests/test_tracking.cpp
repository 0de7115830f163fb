// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <mploc/constants.hpp>
#include <mploc/rng.hpp>
#include <mploc/tracking.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace mploc;

namespace {

// Closed-form raised-cosine power spectrum of the RRC pulse; the oracle
// integrates it with Simpson's rule, independent of the DFT implementation.
double rc_power_spectrum(double f, double roll_off, double tp) {
    const double af = std::abs(f);
    const double lo = (1.0 - roll_off) / (2.0 * tp);
    const double hi = (1.0 + roll_off) / (2.0 * tp);
    if (af <= lo) return tp;
    if (af >= hi) return 0.0;
    return tp / 2.0 * (1.0 + std::cos(M_PI * tp / roll_off * (af - lo)));
}

double beta_closed_form(double roll_off, double tp) {
    const double hi = (1.0 + roll_off) / (2.0 * tp);
    const int n = 200000; // even
    const double h = 2.0 * hi / n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double f = -hi + i * h;
        const double s = rc_power_spectrum(f, roll_off, tp);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        num += w * f * f * s;
        den += w * s;
    }
    return std::sqrt(num / den);
}

// Linearized range-difference trilateration, exact for noiseless ranges.
Vec2 trilaterate(const std::vector<Vec2>& anchors, const std::vector<double>& ranges) {
    const std::size_t n = anchors.size();
    Eigen::MatrixXd a(n - 1, 2);
    Eigen::VectorXd b(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        a.row(i - 1) = 2.0 * (anchors[i] - anchors[0]).transpose();
        b[i - 1] = anchors[i].squaredNorm() - anchors[0].squaredNorm() +
                   ranges[0] * ranges[0] - ranges[i] * ranges[i];
    }
    return a.colPivHouseholderQr().solve(b);
}

bool is_spd(const Eigen::Matrix4d& p) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(p);
    return es.eigenvalues().minCoeff() > 0.0;
}

} // namespace

TEST_CASE("rms_bandwidth of a flat spectrum is B / (2 sqrt(3))") {
    const double b = 1e9;
    const int n = 100001;
    std::vector<double> freq(n), power(n, 1.0);
    for (int i = 0; i < n; ++i) freq[i] = -b / 2.0 + b * i / (n - 1.0);
    const double beta = rms_bandwidth(freq, power);
    CHECK(beta == doctest::Approx(b / (2.0 * std::sqrt(3.0))).epsilon(1e-3));
    CHECK(beta == doctest::Approx(288675134.59).epsilon(1e-3));
}

TEST_CASE("rms_bandwidth validates its inputs") {
    CHECK_THROWS_AS(rms_bandwidth({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(rms_bandwidth({1.0, 2.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(rms_bandwidth({1.0}, {-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(rms_bandwidth({1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("effective_bandwidth matches the closed-form spectrum oracle") {
    const auto pulse = PulseModel::root_raised_cosine(0.6, 4e-9, 1e-9, 256);
    const double beta = effective_bandwidth(pulse);
    const double want = beta_closed_form(0.6, 4e-9);
    CHECK(beta == doctest::Approx(want).epsilon(1e-3));
    // Frozen regression value for the default pulse.
    CHECK(beta == doctest::Approx(79.2078e6).epsilon(1e-3));
}

TEST_CASE("effective_bandwidth scales inversely with the symbol time") {
    const auto slow = PulseModel::root_raised_cosine(0.6, 4e-9, 1e-9, 256);
    const auto fast = PulseModel::root_raised_cosine(0.6, 2e-9, 0.5e-9, 512);
    const double ratio = effective_bandwidth(fast) / effective_bandwidth(slow);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("measurement_sigma formula, scaling, and guards") {
    // Reference point: beta = 100 MHz, snr = 100, rho = 1.
    const double s = measurement_sigma(100.0, 1e8, 1.0);
    const double want = speed_of_light / std::sqrt(8.0 * M_PI * M_PI * 1e16 * 100.0);
    CHECK(s == doctest::Approx(want).epsilon(1e-12));
    CHECK(s == doctest::Approx(0.0337).epsilon(2e-3));

    // Quadrupling the SNR halves sigma; rho multiplies it linearly.
    CHECK(measurement_sigma(400.0, 1e8, 1.0) == doctest::Approx(s / 2.0).epsilon(1e-12));
    CHECK(measurement_sigma(100.0, 1e8, 3.0) == doctest::Approx(3.0 * s).epsilon(1e-12));
    // Higher SNR within a snapshot yields a tighter measurement.
    CHECK(measurement_sigma(200.0, 1e8, 3.0) < measurement_sigma(50.0, 1e8, 3.0));

    CHECK_THROWS_AS(measurement_sigma(0.0, 1e8, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(measurement_sigma(100.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(measurement_sigma(100.0, 1e8, 0.5), std::invalid_argument);
}

TEST_CASE("predict propagates the mean through the CV model") {
    TrackerConfig cfg;
    cfg.dt = 1.0;
    cfg.accel_noise = 0.0;
    KalmanState st;
    st.mean << 0.0, 0.0, 1.0, -2.0;
    st.covariance = Eigen::Matrix4d::Identity();
    const auto out = predict(st, cfg);
    CHECK(out.mean[0] == doctest::Approx(1.0));
    CHECK(out.mean[1] == doctest::Approx(-2.0));
    CHECK(out.mean[2] == doctest::Approx(1.0));
    CHECK(out.mean[3] == doctest::Approx(-2.0));

    // q = 0: covariance is exactly F P F^T.
    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    f(0, 2) = 1.0;
    f(1, 3) = 1.0;
    const Eigen::Matrix4d want = f * st.covariance * f.transpose();
    CHECK((out.covariance - want).norm() < 1e-12);
}

TEST_CASE("predict adds the discretized white-acceleration noise") {
    TrackerConfig cfg;
    cfg.dt = 0.5;
    cfg.accel_noise = 2.0;
    KalmanState st;
    st.covariance = Eigen::Matrix4d::Zero();
    const auto out = predict(st, cfg);
    const double q2 = 4.0, dt = 0.5;
    CHECK(out.covariance(0, 0) == doctest::Approx(q2 * dt * dt * dt * dt / 4.0));
    CHECK(out.covariance(0, 2) == doctest::Approx(q2 * dt * dt * dt / 2.0));
    CHECK(out.covariance(2, 2) == doctest::Approx(q2 * dt * dt));
    CHECK(out.covariance(1, 1) == doctest::Approx(q2 * dt * dt * dt * dt / 4.0));
    CHECK(out.covariance(0, 1) == doctest::Approx(0.0));
    // Symmetric by construction.
    CHECK((out.covariance - out.covariance.transpose()).norm() < 1e-15);
}

TEST_CASE("update with no observations returns the state unchanged") {
    KalmanState st;
    st.mean << 3.0, -1.0, 0.4, 0.2;
    st.covariance = 2.0 * Eigen::Matrix4d::Identity();
    const auto out = update(st, std::vector<RangeObservation>{});
    CHECK(out.mean == st.mean);
    CHECK(out.covariance == st.covariance);
}

TEST_CASE("update moves the position toward a shorter measured range") {
    KalmanState st;
    st.mean << 0.0, 0.0, 0.0, 0.0;
    st.covariance = Eigen::Matrix4d::Identity();
    RangeObservation obs;
    obs.anchor = {10.0, 0.0};
    obs.range = 9.0; // predicted 10, so the agent is closer to the anchor
    obs.sigma = 0.5;
    const auto out = update(st, {obs});
    CHECK(out.mean[0] > 0.0);
    CHECK(std::abs(out.mean[1]) < 1e-12);
    // Variance along the measured direction shrinks.
    CHECK(out.covariance(0, 0) < st.covariance(0, 0));
    CHECK(is_spd(out.covariance));
}

TEST_CASE("update weights observations by their sigmas") {
    KalmanState st;
    st.covariance = Eigen::Matrix4d::Identity();
    RangeObservation tight, loose;
    tight.anchor = loose.anchor = {10.0, 0.0};
    tight.range = loose.range = 9.0;
    tight.sigma = 0.1;
    loose.sigma = 2.0;
    const auto a = update(st, {tight});
    const auto b = update(st, {loose});
    CHECK(a.mean[0] > b.mean[0]);
    CHECK(a.covariance(0, 0) < b.covariance(0, 0));
}

TEST_CASE("update validates sigma and skips coincident anchors") {
    KalmanState st;
    st.mean << 1.0, 2.0, 0.0, 0.0;
    RangeObservation bad;
    bad.anchor = {5.0, 5.0};
    bad.range = 5.0;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(update(st, {bad}), std::invalid_argument);

    RangeObservation coincident;
    coincident.anchor = {1.0, 2.0};
    coincident.range = 0.3;
    coincident.sigma = 0.5;
    RangeObservation fine;
    fine.anchor = {9.0, 2.0};
    fine.range = 8.2;
    fine.sigma = 0.5;
    std::vector<std::size_t> skipped;
    const auto out = update(st, {coincident, fine}, &skipped);
    REQUIRE(skipped.size() == 1);
    CHECK(skipped[0] == 0);
    // The remaining observation still updates the state.
    CHECK(out.mean[0] != st.mean[0]);
}

TEST_CASE("repeated updates converge to the trilateration fix") {
    const std::vector<Vec2> anchors{{0.0, 0.0}, {12.0, 0.0}, {0.0, 9.0}};
    const Vec2 truth{4.0, 3.0};
    std::vector<double> ranges;
    std::vector<RangeObservation> obs;
    for (const auto& a : anchors) {
        RangeObservation o;
        o.anchor = a;
        o.range = (truth - a).norm();
        // Tight sigma keeps the gain near one, so the relinearization
        // iterates like Gauss-Newton instead of stalling on a collapsed P.
        o.sigma = 1e-3;
        obs.push_back(o);
        ranges.push_back(o.range);
    }
    const Vec2 fix = trilaterate(anchors, ranges);
    CHECK((fix - truth).norm() < 1e-9);

    TrackerConfig cfg;
    cfg.dt = 0.1;
    cfg.accel_noise = 0.5;
    KalmanState st;
    st.mean << 5.5, 1.5, 0.0, 0.0; // ~2.1 m initial error
    st.covariance = Eigen::Vector4d(1.0, 1.0, 0.25, 0.25).asDiagonal();
    for (int it = 0; it < 10; ++it) {
        st = predict(st, cfg);
        st = update(st, obs);
    }
    CHECK((Vec2(st.mean[0], st.mean[1]) - fix).norm() < 0.01);
}

TEST_CASE("association-driven update consumes measured ranges by pair") {
    KalmanState st;
    st.mean << 0.0, 0.0, 0.0, 0.0;
    st.covariance = Eigen::Matrix4d::Identity();

    CandidateSet cands;
    CandidateEntry e;
    e.anchor_id = "a";
    e.anchor_position = {10.0, 0.0};
    e.distance = 10.0;
    cands.entries.push_back(e);
    e.anchor_id = "b";
    e.anchor_position = {0.0, 10.0};
    e.distance = 10.0;
    cands.entries.push_back(e);

    Association assoc;
    AssociationPair p;
    p.measurement = 1;
    p.candidate = 0;
    p.anchor_id = "a";
    p.error = 0.4;
    assoc.pairs.push_back(p);

    const std::vector<double> z{11.1, 9.6};
    const std::vector<double> sigmas{0.3, 0.3};
    const auto out = update(st, z, assoc, cands, sigmas);

    // Only measurement 1 participates: range 9.6 at anchor (10, 0).
    RangeObservation direct;
    direct.anchor = {10.0, 0.0};
    direct.range = 9.6;
    direct.sigma = 0.3;
    const auto want = update(st, {direct});
    CHECK((out.mean - want.mean).norm() < 1e-12);
    CHECK((out.covariance - want.covariance).norm() < 1e-12);
}

TEST_CASE("covariance stays SPD over many predict/update cycles") {
    TrackerConfig cfg;
    cfg.dt = 0.25;
    cfg.accel_noise = 0.7;
    KalmanState st;
    st.mean << 2.0, 1.0, 0.3, -0.1;
    st.covariance = Eigen::Vector4d(0.05, 0.05, 0.2, 0.2).asDiagonal();
    const std::vector<Vec2> anchors{{0.0, 0.0}, {15.0, 2.0}, {4.0, 12.0}};
    RandomStream rng(17);
    for (int it = 0; it < 2000; ++it) {
        st = predict(st, cfg);
        std::vector<RangeObservation> obs;
        for (const auto& a : anchors) {
            RangeObservation o;
            o.anchor = a;
            o.range = (Vec2(st.mean[0], st.mean[1]) - a).norm() + rng.normal(0.0, 0.1);
            o.sigma = rng.uniform(0.05, 0.5);
            obs.push_back(o);
        }
        st = update(st, obs);
        if (it % 100 == 0) {
            CHECK(is_spd(st.covariance));
            CHECK((st.covariance - st.covariance.transpose()).norm() < 1e-10);
        }
    }
    CHECK(is_spd(st.covariance));
}

TEST_CASE("filter consistency: ANEES over Monte Carlo runs stays in the 95% band") {
    // Ground truth follows the exact discrete CV model driven by white
    // acceleration; measurements are ranges to far anchors with Gaussian
    // noise. The normalized estimation error squared then has a chi-square
    // distribution with 4 degrees of freedom per run.
    const int runs = 100;
    const int steps = 40;
    const double dt = 0.5;
    const double q = 0.3;
    const double sigma_z = 0.3;
    const std::vector<Vec2> anchors{{400.0, 0.0}, {0.0, 400.0}, {-300.0, -300.0},
                                    {350.0, -250.0}};

    TrackerConfig cfg;
    cfg.dt = dt;
    cfg.accel_noise = q;

    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    f(0, 2) = dt;
    f(1, 3) = dt;

    double anees = 0.0;
    for (int run = 0; run < runs; ++run) {
        RandomStream rng(derive_seed(20260819, static_cast<std::uint64_t>(run)));
        Eigen::Vector4d truth;
        truth << 0.0, 0.0, 0.6, -0.4;

        KalmanState st;
        const Eigen::Vector4d sig0(0.3, 0.3, 0.2, 0.2);
        for (int i = 0; i < 4; ++i) st.mean[i] = truth[i] + sig0[i] * rng.normal();
        st.covariance = sig0.cwiseProduct(sig0).asDiagonal();

        for (int k = 0; k < steps; ++k) {
            const double ax = q * rng.normal();
            const double ay = q * rng.normal();
            truth = f * truth;
            truth[0] += 0.5 * dt * dt * ax;
            truth[1] += 0.5 * dt * dt * ay;
            truth[2] += dt * ax;
            truth[3] += dt * ay;

            st = predict(st, cfg);
            std::vector<RangeObservation> obs;
            for (const auto& a : anchors) {
                RangeObservation o;
                o.anchor = a;
                o.range = (Vec2(truth[0], truth[1]) - a).norm() + sigma_z * rng.normal();
                o.sigma = sigma_z;
                obs.push_back(o);
            }
            st = update(st, obs);
        }
        const Eigen::Vector4d err = st.mean - truth;
        anees += err.dot(st.covariance.ldlt().solve(err));
    }
    anees /= runs;
    // Two-sided 95% band for chi2(4)/4 averaged over 100 runs.
    CHECK(anees > 3.4648176536291464);
    CHECK(anees < 4.5730548196606495);
}

TEST_CASE("run_tracker validates stream shapes") {
    TrackerConfig cfg;
    cfg.beta = 0.0; // invalid: bandwidth required for measurement sigmas
    PaStream stream;
    CHECK_THROWS_AS(run_tracker({stream}, FloorPlan(), {0.0}, FovConfig{}, {}, 0.5, cfg),
                    std::invalid_argument);
    cfg.beta = 1e8;
    // Snapshot count must match the orientation count.
    stream.snapshots.resize(2, Snapshot{Eigen::VectorXcd::Zero(256),
                                        PulseModel::root_raised_cosine(0.6, 4e-9, 1e-9, 256),
                                        std::nullopt});
    CHECK_THROWS_AS(run_tracker({stream}, FloorPlan(), {0.0}, FovConfig{}, {}, 0.5, cfg),
                    std::invalid_argument);
}

TEST_CASE("run_tracker holds a static agent at a zero-innovation fixed point") {
    // Single PA, noiseless LOS-only snapshots, exact init: the innovation is
    // ~0 every step, so the position estimate must stay put.
    const auto pulse = PulseModel::root_raised_cosine(0.6, 4e-9, 1e-9, 256);
    const Vec2 agent{6.0, 4.0};
    Anchor pa;
    pa.id = "pa1";
    pa.position = {1.0, 1.0};
    pa.parent_pa = "pa1";
    const double d = (agent - pa.position).norm();

    const int steps = 10;
    PaStream stream;
    stream.anchors = {pa};
    for (int k = 0; k < steps; ++k) {
        stream.snapshots.push_back(
            synthesize({{d / speed_of_light, {1.0, 0.0}}}, {}, {}, pulse,
                       static_cast<std::uint64_t>(k)));
    }

    TrackerConfig cfg;
    cfg.dt = 0.25;
    cfg.accel_noise = 0.3;
    cfg.beta = effective_bandwidth(pulse);
    cfg.init_mean << agent.x(), agent.y(), 0.0, 0.0;
    cfg.init_covariance = Eigen::Vector4d(0.01, 0.01, 0.04, 0.04).asDiagonal();

    FovConfig fov;
    fov.enabled = false;
    const auto track = run_tracker({stream}, FloorPlan(), std::vector<double>(steps, 0.0),
                                   fov, {}, 0.5, cfg);
    REQUIRE(track.steps.size() == steps);
    for (const auto& step : track.steps) {
        CHECK((Vec2(step.posterior.mean[0], step.posterior.mean[1]) - agent).norm() < 1e-3);
        REQUIRE(step.associations.size() == 1);
        CHECK(step.associations[0].pairs.size() == 1);
        CHECK(step.associations[0].pairs[0].anchor_id == "pa1");
    }
}

TEST_CASE("run_tracker dead-reckons exactly when nothing associates") {
    // Pure-noise snapshots produce no measurements, so every posterior must
    // equal its prior and the track reduces to repeated prediction.
    const auto pulse = PulseModel::root_raised_cosine(0.6, 4e-9, 1e-9, 128);
    NoiseConfig noise;
    noise.variance = 1.0;
    const int steps = 6;
    PaStream stream;
    Anchor pa;
    pa.id = "pa1";
    pa.position = {20.0, 20.0};
    pa.parent_pa = "pa1";
    stream.anchors = {pa};
    for (int k = 0; k < steps; ++k) {
        stream.snapshots.push_back(synthesize({}, {}, noise, pulse,
                                              static_cast<std::uint64_t>(k + 1000)));
    }

    TrackerConfig cfg;
    cfg.dt = 0.5;
    cfg.accel_noise = 0.4;
    cfg.beta = effective_bandwidth(pulse);
    cfg.init_mean << 1.0, 2.0, 0.5, -0.25;
    cfg.init_covariance = Eigen::Vector4d(0.1, 0.1, 0.3, 0.3).asDiagonal();

    FovConfig fov;
    fov.enabled = false;
    const auto track = run_tracker({stream}, FloorPlan(), std::vector<double>(steps, 0.0),
                                   fov, {}, 0.5, cfg);
    REQUIRE(track.steps.size() == steps);

    KalmanState manual;
    manual.mean = cfg.init_mean;
    manual.covariance = cfg.init_covariance;
    for (const auto& step : track.steps) {
        manual = predict(manual, cfg);
        REQUIRE(step.measurements.size() == 1);
        CHECK(step.measurements[0].empty());
        CHECK(step.posterior.mean == step.prior.mean);
        CHECK((step.posterior.mean - manual.mean).norm() == 0.0);
        CHECK((step.posterior.covariance - manual.covariance).norm() == 0.0);
    }
}

TEST_CASE("run_tracker wraps module failures with step and PA context") {
    // A snapshot whose sample count disagrees with its pulse makes the
    // estimator throw inside the loop; the context must name step and PA.
    const auto pulse = PulseModel::root_raised_cosine(0.6, 4e-9, 1e-9, 128);
    PaStream stream;
    Anchor pa;
    pa.id = "pa1";
    pa.position = {5.0, 5.0};
    pa.parent_pa = "pa1";
    stream.anchors = {pa};
    stream.snapshots.push_back(Snapshot{Eigen::VectorXcd::Zero(64), pulse, std::nullopt});

    TrackerConfig cfg;
    cfg.beta = 1e8;
    FovConfig fov;
    fov.enabled = false;
    CHECK_THROWS_WITH_AS(run_tracker({stream}, FloorPlan(), {0.0}, fov, {}, 0.5, cfg),
                         doctest::Contains("step 0, PA 0"), std::runtime_error);
}

// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <mploc/association.hpp>
#include <mploc/estimator.hpp>
#include <mploc/geometry.hpp>
#include <mploc/rng.hpp>
#include <mploc/signal.hpp>
#include <mploc/tracking.hpp>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace {

using namespace mploc;

FloorPlan rect_room(double w, double h) {
    return FloorPlan({{"south", {0.0, 0.0}, {w, 0.0}},
                      {"east", {w, 0.0}, {w, h}},
                      {"north", {w, h}, {0.0, h}},
                      {"west", {0.0, h}, {0.0, 0.0}}});
}

Anchor make_pa(const Vec2& pos) {
    Anchor a;
    a.id = "pa1";
    a.position = pos;
    a.parent_pa = "pa1";
    return a;
}

void bm_virtual_anchors(benchmark::State& state) {
    const FloorPlan plan = rect_room(10.0, 8.0);
    const Anchor pa = make_pa({1.0, 1.5});
    const int order = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_virtual_anchors(plan, pa, order));
    }
}
BENCHMARK(bm_virtual_anchors)->Arg(1)->Arg(2)->Arg(3);

void bm_synthesize(benchmark::State& state) {
    const auto pulse = PulseModel::root_raised_cosine(
        0.6, 4e-9, 1e-9, static_cast<int>(state.range(0)));
    ScatterConfig scatter;
    scatter.mean_count = 3.0;
    scatter.delay_spread = 12e-9;
    scatter.power0 = 1e-3;
    NoiseConfig noise;
    noise.variance = 1e-3;
    const std::vector<Mpc> mpcs{{20e-9, {1.0, 0.2}}, {35e-9, {0.4, -0.3}},
                                {61e-9, {-0.2, 0.5}}};
    std::uint64_t seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthesize(mpcs, scatter, noise, pulse, seed++));
    }
}
BENCHMARK(bm_synthesize)->Arg(128)->Arg(256)->Arg(512);

void bm_estimate_mpcs(benchmark::State& state) {
    const auto pulse = PulseModel::root_raised_cosine(
        0.6, 4e-9, 1e-9, static_cast<int>(state.range(0)));
    NoiseConfig noise;
    noise.variance = 1.0;
    const std::vector<Mpc> mpcs{{22e-9, {25.0, 5.0}}, {40e-9, {-12.0, 14.0}},
                                {66e-9, {9.0, -10.0}}};
    const auto snap = synthesize(mpcs, {}, noise, pulse, 7);
    EstimatorConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_mpcs(snap.samples, cfg, pulse));
    }
}
BENCHMARK(bm_estimate_mpcs)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_ospa_associate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    RandomStream rng(11);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (auto& v : z) v = rng.uniform(0.0, 20.0);
    CandidateSet cands;
    for (int j = 0; j < n; ++j) {
        CandidateEntry e;
        e.anchor_id = "c" + std::to_string(j);
        e.distance = rng.uniform(0.0, 20.0);
        cands.entries.push_back(e);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(ospa_associate(z, cands, 0.5));
    }
}
BENCHMARK(bm_ospa_associate)->Arg(5)->Arg(10)->Arg(20);

void bm_predict_update(benchmark::State& state) {
    TrackerConfig cfg;
    cfg.dt = 0.25;
    cfg.accel_noise = 0.5;
    KalmanState st;
    st.covariance = Eigen::Vector4d(0.05, 0.05, 0.2, 0.2).asDiagonal();
    std::vector<RangeObservation> obs;
    for (const Vec2& a : {Vec2{0.0, 0.0}, Vec2{12.0, 0.0}, Vec2{0.0, 9.0},
                          Vec2{12.0, 9.0}}) {
        RangeObservation o;
        o.anchor = a;
        o.range = (Vec2(5.0, 4.0) - a).norm();
        o.sigma = 0.1;
        obs.push_back(o);
    }
    for (auto _ : state) {
        KalmanState next = update(predict(st, cfg), obs);
        benchmark::DoNotOptimize(next);
    }
}
BENCHMARK(bm_predict_update);

} // namespace

BENCHMARK_MAIN();

// SPDX-License-Identifier: Apache-2.0
#include "mploc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mploc/constants.hpp"
#include "mploc/rng.hpp"

namespace mploc {
namespace {

struct RunOutput {
    std::vector<StepRecord> track;
    std::vector<AssociationRecord> associations;
    std::size_t associated = 0;
    std::size_t clutter = 0;
    std::size_t wrong = 0;
};

struct SharedContext {
    const Scenario& s;
    std::vector<std::vector<Anchor>> anchor_sets; // per PA
    std::vector<double> orientations;             // per step, truth
    TrackerConfig tracker;                        // dt and beta filled
    FovConfig fov_da;                             // association-side gate
};

// The association is judged against generation truth: a pair is correct iff
// the truth MPC nearest in delay belongs to the paired anchor and lies
// within the cut-off distance.
std::string truth_anchor_for(const Snapshot& snap, double distance, double cutoff) {
    if (!snap.truth.has_value() || snap.truth->mpcs.empty()) return {};
    const double delay = distance / speed_of_light;
    const TruthMpc* best = nullptr;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const TruthMpc& mpc : snap.truth->mpcs) {
        const double gap = std::abs(mpc.delay - delay);
        if (gap < best_gap) {
            best_gap = gap;
            best = &mpc;
        }
    }
    if (best == nullptr || best_gap * speed_of_light > cutoff) return {};
    return best->anchor_id;
}

RunOutput execute_run(const SharedContext& ctx, std::uint32_t run) {
    const Scenario& s = ctx.s;
    const std::size_t n_steps = s.trajectory.size();
    const std::size_t n_pas = s.pas.size();

    std::vector<PaStream> streams(n_pas);
    for (std::size_t j = 0; j < n_pas; ++j) {
        streams[j].anchors = ctx.anchor_sets[j];
        streams[j].snapshots.reserve(n_steps);
        for (std::size_t n = 0; n < n_steps; ++n) {
            streams[j].snapshots.push_back(snapshot_from_scene(
                s.trajectory[n], streams[j].anchors, s.plan, s.fov, s.amplitude, s.scatter,
                s.noise, s.pulse, derive_seed(s.seed, run, n, j)));
        }
    }

    TrackerConfig tracker = ctx.tracker;
    RandomStream init_rng(derive_seed(s.seed, run, n_steps, 0));
    tracker.init_mean.setZero();
    tracker.init_mean[0] = s.trajectory.front().position.x() + init_rng.normal(0.0, s.init_sigma);
    tracker.init_mean[1] = s.trajectory.front().position.y() + init_rng.normal(0.0, s.init_sigma);
    tracker.init_covariance = Eigen::Matrix4d::Identity();
    tracker.init_covariance(0, 0) = s.init_sigma * s.init_sigma;
    tracker.init_covariance(1, 1) = s.init_sigma * s.init_sigma;

    const AgentTrack track = run_tracker(streams, s.plan, ctx.orientations, ctx.fov_da,
                                         s.estimator, s.association_cutoff, tracker);

    RunOutput out;
    out.track.reserve(n_steps);
    for (std::size_t n = 0; n < n_steps; ++n) {
        const TrackStep& step = track.steps[n];
        StepRecord rec;
        rec.run = run;
        rec.step = static_cast<std::uint32_t>(n);
        rec.truth = s.trajectory[n].position;
        rec.estimate = step.posterior.mean.head<2>();
        rec.error = (rec.estimate - rec.truth).norm();
        out.track.push_back(rec);

        for (std::size_t j = 0; j < n_pas; ++j) {
            const Association& assoc = step.associations[j];
            const auto& meas = step.measurements[j];
            const Snapshot& snap = streams[j].snapshots[n];

            std::vector<std::string> label(meas.size());
            std::vector<std::string> truth_label(meas.size());
            for (const auto& pair : assoc.pairs) {
                label[pair.measurement] = pair.anchor_id;
                const std::string truth =
                    truth_anchor_for(snap, meas[pair.measurement].distance, s.association_cutoff);
                truth_label[pair.measurement] = truth;
                ++out.associated;
                if (truth != pair.anchor_id) ++out.wrong;
            }
            for (const std::size_t i : assoc.clutter) {
                label[i] = "CLUTTER";
                truth_label[i] = truth_anchor_for(snap, meas[i].distance, s.association_cutoff);
                ++out.clutter;
            }
            for (std::size_t i = 0; i < meas.size(); ++i) {
                AssociationRecord arec;
                arec.run = run;
                arec.step = static_cast<std::uint32_t>(n);
                arec.pa = static_cast<std::uint32_t>(j);
                arec.measurement = static_cast<std::uint32_t>(i);
                arec.anchor_id = label[i];
                arec.truth_anchor_id = truth_label[i];
                out.associations.push_back(std::move(arec));
            }
        }
    }
    return out;
}

} // namespace

double percentile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw std::invalid_argument("percentile: empty input");
    }
    if (p < 0.0 || p > 100.0) {
        throw std::invalid_argument("percentile: p must be in [0, 100]");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p / 100.0;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<Anchor> scenario_anchors(const Scenario& s, std::size_t pa_index) {
    if (pa_index >= s.pas.size()) {
        throw std::out_of_range("scenario_anchors: pa_index out of range");
    }
    std::vector<Anchor> anchors{s.pas[pa_index]};
    std::vector<Anchor> vas = generate_virtual_anchors(s.plan, s.pas[pa_index], s.va_order);
    anchors.insert(anchors.end(), std::make_move_iterator(vas.begin()),
                   std::make_move_iterator(vas.end()));
    return anchors;
}

RunReport run_scenario(const Scenario& s, int threads) {
    if (s.trajectory.empty()) {
        throw std::invalid_argument("run_scenario: trajectory must be non-empty");
    }
    if (s.runs < 1) {
        throw std::invalid_argument("run_scenario: runs must be >= 1");
    }

    SharedContext ctx{s, {}, {}, s.tracker, FovConfig{}};
    ctx.anchor_sets.reserve(s.pas.size());
    for (std::size_t j = 0; j < s.pas.size(); ++j) {
        ctx.anchor_sets.push_back(scenario_anchors(s, j));
    }
    ctx.orientations.reserve(s.trajectory.size());
    for (const AgentPose& pose : s.trajectory) ctx.orientations.push_back(pose.orientation);
    ctx.tracker.dt = s.dt;
    ctx.tracker.beta = effective_bandwidth(s.pulse);
    ctx.fov_da = s.fov;
    ctx.fov_da.enabled = s.fov.enabled && s.use_fov_gate;

    const std::uint32_t runs = static_cast<std::uint32_t>(s.runs);
    std::vector<RunOutput> slots(runs);

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned want = threads <= 0 ? hw : static_cast<unsigned>(threads);
    const unsigned n_workers = static_cast<unsigned>(
        std::min<std::uint64_t>(want, static_cast<std::uint64_t>(runs)));

    std::atomic<std::uint32_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::uint32_t run = next.fetch_add(1);
            if (run >= runs) return;
            try {
                slots[run] = execute_run(ctx, run);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error == nullptr) {
                    std::ostringstream msg;
                    msg << "run_scenario: run " << run << ": " << e.what();
                    first_error = std::make_exception_ptr(std::runtime_error(msg.str()));
                }
                return;
            }
        }
    };

    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error != nullptr) std::rethrow_exception(first_error);

    RunReport report;
    report.runs = runs;
    report.steps = static_cast<std::uint32_t>(s.trajectory.size());
    std::size_t associated = 0;
    std::size_t clutter = 0;
    std::size_t wrong = 0;
    for (std::uint32_t r = 0; r < runs; ++r) {
        RunOutput& out = slots[r];
        report.track.insert(report.track.end(), out.track.begin(), out.track.end());
        report.associations.insert(report.associations.end(),
                                   std::make_move_iterator(out.associations.begin()),
                                   std::make_move_iterator(out.associations.end()));
        associated += out.associated;
        clutter += out.clutter;
        wrong += out.wrong;
    }

    std::vector<double> errors(report.track.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < report.track.size(); ++i) {
        errors[i] = report.track[i].error;
        sq += errors[i] * errors[i];
    }
    const double cells = static_cast<double>(runs) * static_cast<double>(report.steps);
    report.summary.rmse = std::sqrt(sq / static_cast<double>(errors.size()));
    report.summary.p50 = percentile(errors, 50.0);
    report.summary.p90 = percentile(errors, 90.0);
    report.summary.p95 = percentile(errors, 95.0);
    report.summary.mean_associated = static_cast<double>(associated) / cells;
    report.summary.clutter_rate =
        static_cast<double>(clutter) / (cells * static_cast<double>(s.pas.size()));
    report.summary.wrong_association_rate =
        associated == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(associated);
    return report;
}

void write_report(const RunReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("write_report: cannot create " + out_dir + ": " + ec.message());
    }

    const auto open = [&](const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) {
            throw std::runtime_error("write_report: cannot write " + path);
        }
        out << std::fixed << std::setprecision(9);
        return out;
    };

    {
        std::ofstream out = open("track.csv");
        out << "run,step,true_x,true_y,est_x,est_y,error\n";
        for (const StepRecord& rec : report.track) {
            out << rec.run << ',' << rec.step << ',' << rec.truth.x() << ',' << rec.truth.y()
                << ',' << rec.estimate.x() << ',' << rec.estimate.y() << ',' << rec.error << '\n';
        }
        if (!out.flush()) {
            throw std::runtime_error("write_report: failed writing track.csv in " + out_dir);
        }
    }
    {
        std::ofstream out = open("summary.csv");
        out << "metric,value\n";
        out << "rmse," << report.summary.rmse << '\n';
        out << "p50," << report.summary.p50 << '\n';
        out << "p90," << report.summary.p90 << '\n';
        out << "p95," << report.summary.p95 << '\n';
        out << "mean_associated," << report.summary.mean_associated << '\n';
        out << "clutter_rate," << report.summary.clutter_rate << '\n';
        out << "wrong_association_rate," << report.summary.wrong_association_rate << '\n';
        out << "runs," << report.runs << '\n';
        out << "steps," << report.steps << '\n';
        if (!out.flush()) {
            throw std::runtime_error("write_report: failed writing summary.csv in " + out_dir);
        }
    }
    {
        std::ofstream out = open("associations.csv");
        out << "run,step,pa,measurement,anchor_id,truth_anchor_id\n";
        for (const AssociationRecord& rec : report.associations) {
            out << rec.run << ',' << rec.step << ',' << rec.pa << ',' << rec.measurement << ','
                << rec.anchor_id << ',' << rec.truth_anchor_id << '\n';
        }
        if (!out.flush()) {
            throw std::runtime_error("write_report: failed writing associations.csv in " + out_dir);
        }
    }
}

} // namespace mploc

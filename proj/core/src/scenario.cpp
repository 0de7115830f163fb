// SPDX-License-Identifier: Apache-2.0
#include "mploc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mploc {
namespace {

using nlohmann::json;

struct Ctx {
    ValidationReport* report = nullptr;
    std::vector<std::string> errors;

    void error(const std::string& msg) { errors.push_back(msg); }
    void warn(const std::string& msg) {
        if (report != nullptr) report->warnings.push_back(msg);
    }
};

std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(Ctx& c, const json& obj, const std::string& path,
                std::initializer_list<const char*> known) {
    for (const auto& item : obj.items()) {
        bool found = false;
        for (const char* k : known) {
            if (item.key() == k) {
                found = true;
                break;
            }
        }
        if (!found) c.warn(join_path(path, item.key()) + ": unknown key ignored");
    }
}

const json* child(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double num_or(Ctx& c, const json& obj, const std::string& path, const char* key, double def) {
    const json* v = child(obj, key);
    if (v == nullptr) return def;
    if (!v->is_number()) {
        c.error(join_path(path, key) + ": expected a number");
        return def;
    }
    return v->get<double>();
}

int int_or(Ctx& c, const json& obj, const std::string& path, const char* key, int def) {
    const json* v = child(obj, key);
    if (v == nullptr) return def;
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
        c.error(join_path(path, key) + ": expected an integer");
        return def;
    }
    return v->get<int>();
}

bool bool_or(Ctx& c, const json& obj, const std::string& path, const char* key, bool def) {
    const json* v = child(obj, key);
    if (v == nullptr) return def;
    if (!v->is_boolean()) {
        c.error(join_path(path, key) + ": expected a boolean");
        return def;
    }
    return v->get<bool>();
}

bool vec2_field(Ctx& c, const json& obj, const std::string& path, const char* key, Vec2& out) {
    const json* v = child(obj, key);
    if (v == nullptr) {
        c.error(join_path(path, key) + ": required key missing");
        return false;
    }
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        c.error(join_path(path, key) + ": expected an array of two numbers");
        return false;
    }
    out = Vec2((*v)[0].get<double>(), (*v)[1].get<double>());
    return true;
}

std::string string_field(Ctx& c, const json& obj, const std::string& path, const char* key) {
    const json* v = child(obj, key);
    if (v == nullptr) {
        c.error(join_path(path, key) + ": required key missing");
        return {};
    }
    if (!v->is_string()) {
        c.error(join_path(path, key) + ": expected a string");
        return {};
    }
    return v->get<std::string>();
}

constexpr double deg_to_rad = M_PI / 180.0;

void parse_room(Ctx& c, const json& root, Scenario& s) {
    const json* room = child(root, "room");
    if (room == nullptr) {
        c.error("room: required key missing");
        return;
    }
    if (!room->is_object()) {
        c.error("room: expected an object");
        return;
    }
    check_keys(c, *room, "room", {"walls"});
    const json* walls_j = child(*room, "walls");
    if (walls_j == nullptr || !walls_j->is_array() || walls_j->empty()) {
        c.error("room.walls: expected a non-empty array");
        return;
    }
    std::vector<Wall> walls;
    for (std::size_t i = 0; i < walls_j->size(); ++i) {
        const json& w = (*walls_j)[i];
        std::ostringstream prefix;
        prefix << "room.walls[" << i << "]";
        if (!w.is_object()) {
            c.error(prefix.str() + ": expected an object");
            continue;
        }
        check_keys(c, w, prefix.str(), {"id", "a", "b"});
        Wall wall;
        wall.id = string_field(c, w, prefix.str(), "id");
        const bool a_ok = vec2_field(c, w, prefix.str(), "a", wall.a);
        const bool b_ok = vec2_field(c, w, prefix.str(), "b", wall.b);
        if (wall.id.empty() || !a_ok || !b_ok) continue;
        walls.push_back(std::move(wall));
    }
    if (walls.size() != walls_j->size()) return; // wall-level errors already recorded
    try {
        s.plan = FloorPlan(std::move(walls));
    } catch (const std::exception& e) {
        c.error(std::string("room.walls: ") + e.what());
    }
}

void parse_anchors(Ctx& c, const json& root, Scenario& s) {
    const json* anchors = child(root, "anchors");
    if (anchors == nullptr) {
        c.error("anchors: required key missing");
        return;
    }
    if (!anchors->is_array() || anchors->empty()) {
        c.error("anchors: expected a non-empty array");
        return;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < anchors->size(); ++i) {
        const json& a = (*anchors)[i];
        std::ostringstream prefix;
        prefix << "anchors[" << i << "]";
        if (!a.is_object()) {
            c.error(prefix.str() + ": expected an object");
            continue;
        }
        check_keys(c, a, prefix.str(), {"id", "position"});
        Anchor anchor;
        anchor.id = string_field(c, a, prefix.str(), "id");
        if (!vec2_field(c, a, prefix.str(), "position", anchor.position)) continue;
        if (anchor.id.empty()) continue;
        if (!seen.insert(anchor.id).second) {
            c.error(prefix.str() + ".id: duplicate anchor id \"" + anchor.id + "\"");
            continue;
        }
        anchor.kind = AnchorKind::Physical;
        anchor.order = 0;
        anchor.parent_pa = anchor.id;
        s.pas.push_back(std::move(anchor));
    }
}

void parse_trajectory(Ctx& c, const json& root, Scenario& s) {
    const json* t = child(root, "trajectory");
    if (t == nullptr) {
        c.error("trajectory: required key missing");
        return;
    }
    if (!t->is_object()) {
        c.error("trajectory: expected an object");
        return;
    }
    check_keys(c, *t, "trajectory", {"poses", "start", "end", "steps", "orientation_deg"});

    const double dt = s.dt > 0.0 ? s.dt : 1.0;

    if (const json* poses = child(*t, "poses"); poses != nullptr) {
        if (!poses->is_array() || poses->empty()) {
            c.error("trajectory.poses: expected a non-empty array");
            return;
        }
        std::vector<AgentPose> out;
        std::vector<bool> has_orient;
        for (std::size_t i = 0; i < poses->size(); ++i) {
            const json& p = (*poses)[i];
            std::ostringstream prefix;
            prefix << "trajectory.poses[" << i << "]";
            if (!p.is_object()) {
                c.error(prefix.str() + ": expected an object");
                return;
            }
            check_keys(c, p, prefix.str(), {"position", "orientation_deg"});
            AgentPose pose;
            if (!vec2_field(c, p, prefix.str(), "position", pose.position)) return;
            const bool has = child(p, "orientation_deg") != nullptr;
            pose.orientation =
                normalize_angle(num_or(c, p, prefix.str(), "orientation_deg", 0.0) * deg_to_rad);
            out.push_back(pose);
            has_orient.push_back(has);
        }
        // Defaults: heading follows the motion direction, velocity is the
        // forward difference; the last pose reuses the previous values.
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::size_t next = i + 1 < out.size() ? i + 1 : i;
            const std::size_t prev = i + 1 < out.size() ? i : (i > 0 ? i - 1 : i);
            const Vec2 diff = out[next].position - out[prev].position;
            out[i].velocity = diff / dt;
            if (!has_orient[i]) {
                out[i].orientation =
                    diff.squaredNorm() > 0.0 ? std::atan2(diff.y(), diff.x()) : 0.0;
            }
        }
        s.trajectory = std::move(out);
        return;
    }

    Vec2 start;
    Vec2 end;
    const bool start_ok = vec2_field(c, *t, "trajectory", "start", start);
    const bool end_ok = vec2_field(c, *t, "trajectory", "end", end);
    const int steps = int_or(c, *t, "trajectory", "steps", 0);
    if (!start_ok || !end_ok) return;
    if (steps < 2) {
        c.error("trajectory.steps: expected an integer >= 2");
        return;
    }
    const Vec2 span = end - start;
    double heading = span.squaredNorm() > 0.0 ? std::atan2(span.y(), span.x()) : 0.0;
    if (child(*t, "orientation_deg") != nullptr) {
        heading = normalize_angle(num_or(c, *t, "trajectory", "orientation_deg", 0.0) * deg_to_rad);
    }
    const Vec2 velocity = span / (static_cast<double>(steps - 1) * dt);
    for (int k = 0; k < steps; ++k) {
        AgentPose pose;
        pose.position = start + span * (static_cast<double>(k) / (steps - 1));
        pose.orientation = heading;
        pose.velocity = velocity;
        s.trajectory.push_back(pose);
    }
}

Scenario parse_scenario(Ctx& c, const json& root) {
    Scenario s;
    check_keys(c, root, "",
               {"room", "anchors", "va_order", "trajectory", "dt_s", "pulse", "scatter", "noise",
                "amplitude", "estimator", "association", "fov", "tracker", "runs", "seed"});

    s.dt = num_or(c, root, "", "dt_s", 0.25);
    if (!(s.dt > 0.0)) c.error("dt_s: must be > 0");

    parse_room(c, root, s);
    parse_anchors(c, root, s);
    parse_trajectory(c, root, s);

    s.va_order = int_or(c, root, "", "va_order", 1);
    if (s.va_order < 0) c.error("va_order: must be >= 0");

    if (const json* p = child(root, "pulse"); p != nullptr) {
        if (!p->is_object()) {
            c.error("pulse: expected an object");
        } else {
            check_keys(c, *p, "pulse", {"roll_off", "symbol_time_ns", "sample_time_ns", "length"});
            const double roll_off = num_or(c, *p, "pulse", "roll_off", 0.6);
            const double tp = num_or(c, *p, "pulse", "symbol_time_ns", 4.0);
            const double ts = num_or(c, *p, "pulse", "sample_time_ns", 1.0);
            const int length = int_or(c, *p, "pulse", "length", 256);
            try {
                s.pulse = PulseModel::root_raised_cosine(roll_off, tp * 1e-9, ts * 1e-9, length);
            } catch (const std::exception& e) {
                c.error(std::string("pulse: ") + e.what());
            }
        }
    }

    if (const json* sc = child(root, "scatter"); sc != nullptr) {
        if (!sc->is_object()) {
            c.error("scatter: expected an object");
        } else {
            check_keys(c, *sc, "scatter", {"mean_count", "delay_spread_ns", "power0"});
            s.scatter.mean_count = num_or(c, *sc, "scatter", "mean_count", 0.0);
            s.scatter.delay_spread = num_or(c, *sc, "scatter", "delay_spread_ns", 10.0) * 1e-9;
            s.scatter.power0 = num_or(c, *sc, "scatter", "power0", 0.0);
            if (s.scatter.mean_count < 0.0) c.error("scatter.mean_count: must be >= 0");
            if (!(s.scatter.delay_spread > 0.0)) c.error("scatter.delay_spread_ns: must be > 0");
            if (s.scatter.power0 < 0.0) c.error("scatter.power0: must be >= 0");
        }
    }

    if (const json* nz = child(root, "noise"); nz != nullptr) {
        if (!nz->is_object()) {
            c.error("noise: expected an object");
        } else {
            check_keys(c, *nz, "noise", {"variance"});
            s.noise.variance = num_or(c, *nz, "noise", "variance", 1e-3);
            if (s.noise.variance < 0.0) c.error("noise.variance: must be >= 0");
        }
    }

    if (const json* am = child(root, "amplitude"); am != nullptr) {
        if (!am->is_object()) {
            c.error("amplitude: expected an object");
        } else {
            check_keys(c, *am, "amplitude", {"snr_at_1m_db"});
            const double db = num_or(c, *am, "amplitude", "snr_at_1m_db", 30.0);
            s.amplitude.snr_at_1m = std::pow(10.0, db / 10.0);
        }
    }

    if (const json* est = child(root, "estimator"); est != nullptr) {
        if (!est->is_object()) {
            c.error("estimator: expected an object");
        } else {
            check_keys(c, *est, "estimator",
                       {"snr_threshold_db", "l1_penalty", "grid_oversampling", "max_components",
                        "refine_iters"});
            const double gdb = num_or(c, *est, "estimator", "snr_threshold_db", 10.0);
            s.estimator.snr_threshold = std::pow(10.0, gdb / 10.0);
            s.estimator.l1_penalty = num_or(c, *est, "estimator", "l1_penalty", 0.0);
            s.estimator.grid_oversampling = int_or(c, *est, "estimator", "grid_oversampling", 8);
            s.estimator.max_components = int_or(c, *est, "estimator", "max_components", 10);
            s.estimator.refine_iters = int_or(c, *est, "estimator", "refine_iters", 2);
            if (s.estimator.l1_penalty < 0.0) c.error("estimator.l1_penalty: must be >= 0");
            if (s.estimator.grid_oversampling < 1) {
                c.error("estimator.grid_oversampling: must be >= 1");
            }
            if (s.estimator.max_components < 0) c.error("estimator.max_components: must be >= 0");
            if (s.estimator.refine_iters < 0) c.error("estimator.refine_iters: must be >= 0");
        }
    }

    if (const json* as = child(root, "association"); as != nullptr) {
        if (!as->is_object()) {
            c.error("association: expected an object");
        } else {
            check_keys(c, *as, "association", {"cutoff_m", "use_fov_gate"});
            s.association_cutoff = num_or(c, *as, "association", "cutoff_m", 0.5);
            s.use_fov_gate = bool_or(c, *as, "association", "use_fov_gate", true);
            if (!(s.association_cutoff > 0.0)) c.error("association.cutoff_m: must be > 0");
        }
    }

    if (const json* fv = child(root, "fov"); fv != nullptr) {
        if (!fv->is_object()) {
            c.error("fov: expected an object");
        } else {
            check_keys(c, *fv, "fov", {"enabled", "half_angle_deg"});
            s.fov.enabled = bool_or(c, *fv, "fov", "enabled", true);
            const double deg = num_or(c, *fv, "fov", "half_angle_deg", 90.0);
            if (!(deg > 0.0) || deg > 180.0) {
                c.error("fov.half_angle_deg: must be in (0, 180]");
            } else {
                s.fov.half_angle = deg * deg_to_rad;
            }
        }
    }

    if (const json* tr = child(root, "tracker"); tr != nullptr) {
        if (!tr->is_object()) {
            c.error("tracker: expected an object");
        } else {
            check_keys(c, *tr, "tracker", {"accel_noise", "rho", "init_sigma_m"});
            s.tracker.accel_noise = num_or(c, *tr, "tracker", "accel_noise", 0.5);
            s.tracker.rho = num_or(c, *tr, "tracker", "rho", 3.0);
            s.init_sigma = num_or(c, *tr, "tracker", "init_sigma_m", 0.1);
            if (s.tracker.accel_noise < 0.0) c.error("tracker.accel_noise: must be >= 0");
            if (!(s.tracker.rho >= 1.0)) c.error("tracker.rho: must be >= 1");
            if (s.init_sigma < 0.0) c.error("tracker.init_sigma_m: must be >= 0");
        }
    }
    s.tracker.dt = s.dt;

    s.runs = int_or(c, root, "", "runs", 1);
    if (s.runs < 1) c.error("runs: must be >= 1");

    if (const json* sd = child(root, "seed"); sd != nullptr) {
        if (!sd->is_number_unsigned() && !(sd->is_number_integer() && sd->get<long long>() >= 0)) {
            c.error("seed: expected a non-negative integer");
        } else {
            s.seed = sd->get<std::uint64_t>();
        }
    }
    return s;
}

} // namespace

Scenario load_scenario(const std::string& path, ValidationReport* report) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("scenario: cannot open " + path);
    }
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("scenario: " + path + ": " + e.what());
    }
    if (!root.is_object()) {
        throw std::runtime_error("scenario: " + path + ": top level must be an object");
    }

    Ctx c{report, {}};
    Scenario s = parse_scenario(c, root);
    if (report != nullptr) {
        report->errors.insert(report->errors.end(), c.errors.begin(), c.errors.end());
    }
    if (!c.errors.empty()) {
        std::ostringstream msg;
        msg << "scenario: " << c.errors.front();
        if (c.errors.size() > 1) msg << " (and " << c.errors.size() - 1 << " more)";
        throw std::runtime_error(msg.str());
    }
    return s;
}

ValidationReport validate_scenario(const std::string& path) {
    ValidationReport report;
    try {
        load_scenario(path, &report);
    } catch (const std::exception& e) {
        if (report.errors.empty()) report.errors.push_back(e.what());
    }
    return report;
}

} // namespace mploc

#include "flexpos/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "flexpos/metrics.hpp"

#ifndef FLEXPOS_DATA_DIR
#define FLEXPOS_DATA_DIR "data"
#endif

namespace flexpos {

namespace {

constexpr double kCommandHeadroom = 1.25;
constexpr double kDivergenceFactor = 10.0;

double axis_extent(Axis axis) {
    static const WorkspaceExtents ext = workspace_extents(InverseJacobian::identified());
    const AxisExtent e = ext[axis];
    return std::max(std::abs(e.negative), std::abs(e.positive));
}

std::size_t sample_total(double duration, double fs) {
    return static_cast<std::size_t>(std::llround(duration * fs));
}

// Pads with the final (held, at rest) sample or truncates to n samples.
void fit_length(Trajectory& traj, std::size_t n) {
    const double dt = 1.0 / traj.sample_rate;
    if (traj.samples.size() > n) traj.samples.resize(n);
    TrajectorySample hold;
    if (!traj.samples.empty()) {
        hold = traj.samples.back();
        for (auto& a : hold.axis) a.vel = a.acc = 0.0;
    }
    while (traj.samples.size() < n) {
        hold.t = static_cast<double>(traj.samples.size()) * dt;
        traj.samples.push_back(hold);
    }
}

// Builds a task trajectory whose channels are independent single-axis profiles.
Trajectory combine(const std::array<Trajectory, 3>& parts, double fs, std::size_t n) {
    Trajectory out;
    out.space = TrajectorySpace::Task;
    out.sample_rate = fs;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i].t = static_cast<double>(i) / fs;
    for (std::size_t c = 0; c < 3; ++c) {
        Trajectory p = parts[c];
        fit_length(p, n);
        for (std::size_t i = 0; i < n; ++i) out.samples[i].axis[c] = p.samples[i].axis[0];
    }
    return out;
}

std::string key_for(Axis axis, const std::string& suffix) { return std::string(axis_name(axis)) + "." + suffix; }

// Axis-specific key wins over the shared one: "<prefix>.<axis>.<name>" then "<prefix>.<name>".
double axis_double(const Config& cfg, const std::string& prefix, Axis axis, const std::string& name, double fallback) {
    const double shared = cfg.get_double(prefix + "." + name, fallback);
    return cfg.get_double(prefix + "." + key_for(axis, name), shared);
}

TaskPose pose_from_list(const Config& cfg, const std::string& key, const TaskPose& fallback) {
    const auto v = cfg.find(key);
    if (!v) return fallback;
    Config tmp;
    tmp.set("v", *v);
    const auto items = tmp.get_list("v", {});
    if (items.size() != 3) throw ConfigError("key '" + key + "' expects three numbers (z, theta_x, theta_y)");
    std::array<double, 3> xyz{};
    for (std::size_t i = 0; i < 3; ++i) {
        Config one;
        one.set("x", items[i]);
        try {
            xyz[i] = one.get_double("x", 0.0);
        } catch (const ConfigError&) {
            throw ConfigError("key '" + key + "' expects three numbers, got '" + *v + "'");
        }
    }
    return {xyz[0], xyz[1], xyz[2]};
}

std::optional<double> try_hysteresis(const std::vector<double>& in, const std::vector<double>& out) {
    try {
        return hysteresis_width_percent(in, out);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

struct AxisRun {
    AxisRecord rec;
    bool diverged = false;
    std::string message;
};

AxisRun simulate_axis(const ExperimentConfig& cfg, ControllerKind kind, const Trajectory& traj, Axis axis) {
    const std::size_t i = axis_index(axis);
    const double dt = 1.0 / cfg.sample_rate;
    const AxisModel& plant = cfg.plant[i];
    ControllerConfig cc = cfg.control[i];
    cc.kind = kind;
    AxisController controller(cc, cfg.nominal[i], dt);

    BoucWenDisturbance bw;
    bw.alpha = cfg.disturbance.alpha;
    bw.beta = cfg.disturbance.beta;
    bw.gamma = cfg.disturbance.gamma;
    bw.n = cfg.disturbance.n;
    bw.scale = cfg.disturbance.scale * cc.u_limit;
    const double d_const = cfg.disturbance.constant * cc.u_limit;
    NoiseModel noise(cfg.noise.enabled ? cfg.noise.sigma[i] : 0.0, cfg.seed + i);
    const double limit = kDivergenceFactor * axis_extent(axis);

    const std::size_t n = traj.samples.size();
    AxisRun run;
    AxisRecord& r = run.rec;
    r.axis = axis;
    for (auto* v : {&r.desired, &r.measured, &r.true_pos, &r.u, &r.d, &r.d_hat, &r.s}) v->reserve(n);

    AxisState x;
    if (n > 0) {
        x.x1 = traj.samples[0].axis[i].pos;
        x.x2 = traj.samples[0].axis[i].vel;
    }
    controller.reset(x.x1, x.x2);
    // The hysteresis starts relaxed at the static command for the initial pose.
    double u_prev = cfg.nominal[i].k * x.x1 / cc.u_limit;

    for (std::size_t j = 0; j < n; ++j) {
        const AxisSample& des = traj.samples[j].axis[i];
        const double meas = measure(x, noise);
        const auto out = controller.update(meas, des);
        double d = 0.0;
        if (cfg.disturbance.enabled) {
            const double u_norm = out.u / cc.u_limit;
            d = bouc_wen_update(bw, u_norm, u_prev, dt) + d_const;
            u_prev = u_norm;
        }
        r.desired.push_back(des.pos);
        r.measured.push_back(meas);
        r.true_pos.push_back(x.x1);
        r.u.push_back(out.u);
        r.d.push_back(d);
        r.d_hat.push_back(out.d_hat);
        r.s.push_back(out.s);
        x = step(x, plant, out.u, d, dt);
        if (!std::isfinite(x.x1) || std::abs(x.x1) > limit) {
            run.diverged = true;
            run.message = std::string(axis_name(axis)) + " axis diverged at t = " + std::to_string((j + 1) * dt) +
                          " s under " + std::string(controller_name(kind));
            break;
        }
    }
    return run;
}

}  // namespace

std::string_view trajectory_name(TrajectoryKind kind) {
    switch (kind) {
        case TrajectoryKind::Zero: return "zero";
        case TrajectoryKind::Staircase: return "staircase";
        case TrajectoryKind::Sinusoid: return "sinusoid";
        case TrajectoryKind::Star: return "star";
        case TrajectoryKind::Logo: return "logo";
        case TrajectoryKind::Spiral: return "spiral";
    }
    return "?";
}

TrajectoryKind trajectory_from_name(std::string_view name) {
    for (auto k : {TrajectoryKind::Zero, TrajectoryKind::Staircase, TrajectoryKind::Sinusoid, TrajectoryKind::Star,
                   TrajectoryKind::Logo, TrajectoryKind::Spiral}) {
        if (trajectory_name(k) == name) return k;
    }
    throw ConfigError("unknown trajectory '" + std::string(name) +
                      "' (expected zero, staircase, sinusoid, star, logo or spiral)");
}

double default_command_limit(const AxisModel& model, Axis axis) {
    validate(model);
    return kCommandHeadroom * model.k * axis_extent(axis);
}

ExperimentConfig default_experiment_config() {
    ExperimentConfig cfg;
    for (Axis a : kAllAxes) {
        const std::size_t i = axis_index(a);
        cfg.plant[i] = model_from_tf(identified_plant(a));
        cfg.nominal[i] = cfg.plant[i];
        ControllerConfig& cc = cfg.control[i];
        cc.pid = default_pid_gains(cfg.nominal[i]);
        cc.smc = default_smc_gains(cfg.nominal[i]);
        cc.observer_gain = default_observer_gain(cfg.nominal[i]);
        cc.u_limit = default_command_limit(cfg.nominal[i], a);
        cfg.noise.sigma[i] = default_sensor_sigma(a);
    }
    // Tilted plane so the star moves all three axes.
    cfg.trajectory.star.plane.u = {10.0, 3000.0, 0.0};
    cfg.trajectory.star.plane.v = {10.0, 0.0, 3000.0};
    cfg.trajectory.star.period = 4.0;
    // Five turns out to a 3000 urad radius while z climbs 40 um.
    cfg.trajectory.spiral = {0.0, 3000.0 / (2.0 * std::numbers::pi * 5.0), 5.0, 40.0, 4.0};
    cfg.trajectory.polyline_file = std::filesystem::path(FLEXPOS_DATA_DIR) / "logo.txt";
    for (Axis a : kAllAxes) cfg.trajectory.sinusoid_amplitude[axis_index(a)] = 0.6 * axis_extent(a);
    if (const char* dir = std::getenv("FLEXPOS_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
    return cfg;
}

ExperimentConfig experiment_config_from(const Config& c) {
    ExperimentConfig cfg = default_experiment_config();

    const std::string axis_sel = c.get_string("experiment.axis", "all");
    if (axis_sel != "all") cfg.single_axis = axis_from_name(axis_sel);
    cfg.duration = c.get_double("experiment.duration", cfg.duration);
    cfg.sample_rate = c.get_double("experiment.sample_rate", cfg.sample_rate);
    cfg.seed = c.get_uint64("experiment.seed", cfg.seed);
    cfg.parallel = c.get_bool("experiment.parallel", cfg.parallel);
    cfg.output_dir = c.get_path("experiment.output_dir", cfg.output_dir);

    // Plant: identified defaults, optionally replaced from a file of plant.* keys, then per-key overrides.
    const std::string source = c.get_string("plant.source", "identified");
    Config plant_file;
    if (source == "file") {
        const auto path = c.get_path("plant.file");
        if (path.empty()) throw ConfigError("plant.source = file needs plant.file");
        if (!std::filesystem::exists(path)) throw ConfigError("plant file not found: " + path.string());
        plant_file = Config::load(path);
    } else if (source != "identified") {
        throw ConfigError("plant.source must be 'identified' or 'file'");
    }
    for (Axis a : kAllAxes) {
        const std::size_t i = axis_index(a);
        TransferFunction2 tf = identified_plant(a);
        for (const Config* src : std::array<const Config*, 2>{&plant_file, &c}) {
            tf.b0 = src->get_double("plant." + key_for(a, "b0"), tf.b0);
            tf.a1 = src->get_double("plant." + key_for(a, "a1"), tf.a1);
            tf.a0 = src->get_double("plant." + key_for(a, "a0"), tf.a0);
        }
        cfg.plant[i] = model_from_tf(tf);
        TransferFunction2 nom = tf;
        nom.b0 = c.get_double("nominal." + key_for(a, "b0"), nom.b0);
        nom.a1 = c.get_double("nominal." + key_for(a, "a1"), nom.a1);
        nom.a0 = c.get_double("nominal." + key_for(a, "a0"), nom.a0);
        cfg.nominal[i] = model_from_tf(nom);
    }

    std::vector<ControllerKind> kinds;
    for (const auto& name : c.get_list("controller.type", {"smc_ndo"})) kinds.push_back(controller_from_name(name));
    cfg.controllers = kinds;
    const std::string gain_set = c.get_string("controller.gains", "scaled");
    if (gain_set != "scaled" && gain_set != "published") throw ConfigError("controller.gains must be 'scaled' or 'published'");
    for (Axis a : kAllAxes) {
        const std::size_t i = axis_index(a);
        ControllerConfig& cc = cfg.control[i];
        const AxisModel& nom = cfg.nominal[i];
        if (gain_set == "published") {
            cc.pid = published_pid_gains();
            cc.smc = published_smc_gains();
            cc.observer_gain = kPublishedObserverGain;
        } else {
            cc.pid = default_pid_gains(nom);
            cc.smc = default_smc_gains(nom);
            cc.observer_gain = default_observer_gain(nom);
        }
        const std::string p = "controller";
        cc.pid.kp = axis_double(c, p, a, "pid.kp", cc.pid.kp);
        cc.pid.ki = axis_double(c, p, a, "pid.ki", cc.pid.ki);
        cc.pid.kd = axis_double(c, p, a, "pid.kd", cc.pid.kd);
        const double lim = axis_double(c, p, a, "pid.integral_limit", 0.0);
        if (lim > 0.0) cc.pid.integral_limit = lim;
        cc.smc.lambda_p = axis_double(c, p, a, "smc.lambda_p", cc.smc.lambda_p);
        cc.smc.lambda_i = axis_double(c, p, a, "smc.lambda_i", cc.smc.lambda_i);
        cc.smc.lambda_d = axis_double(c, p, a, "smc.lambda_d", cc.smc.lambda_d);
        cc.smc.a1 = axis_double(c, p, a, "smc.a1", cc.smc.a1);
        cc.smc.a2 = axis_double(c, p, a, "smc.a2", cc.smc.a2);
        cc.smc.epsilon = axis_double(c, p, a, "smc.epsilon", cc.smc.epsilon);
        cc.observer_gain = axis_double(c, p, a, "observer_gain", cc.observer_gain);
        cc.u_limit = axis_double(c, p, a, "u_limit", default_command_limit(nom, a));
    }

    DisturbanceConfig& d = cfg.disturbance;
    d.enabled = c.get_bool("disturbance.enabled", d.enabled);
    d.alpha = c.get_double("disturbance.alpha", d.alpha);
    d.beta = c.get_double("disturbance.beta", d.beta);
    d.gamma = c.get_double("disturbance.gamma", d.gamma);
    d.n = c.get_double("disturbance.n", d.n);
    d.scale = c.get_double("disturbance.scale", d.scale);
    d.constant = c.get_double("disturbance.constant", d.constant);

    cfg.noise.enabled = c.get_bool("noise.enabled", cfg.noise.enabled);
    for (Axis a : kAllAxes) {
        auto& sigma = cfg.noise.sigma[axis_index(a)];
        sigma = c.get_double("noise." + key_for(a, "sigma"), sigma);
    }

    TrajectoryConfig& t = cfg.trajectory;
    t.kind = trajectory_from_name(c.get_string("trajectory.type", std::string(trajectory_name(t.kind))));
    t.corner_fraction = c.get_double("trajectory.corner_fraction", t.corner_fraction);
    t.star.n_points = c.get_int("trajectory.star.points", t.star.n_points);
    t.star.radius = c.get_double("trajectory.star.radius", t.star.radius);
    t.star.inner_ratio = c.get_double("trajectory.star.inner_ratio", t.star.inner_ratio);
    t.star.period = c.get_double("trajectory.star.period", t.star.period);
    t.star.plane.origin = pose_from_list(c, "trajectory.star.origin", t.star.plane.origin);
    t.star.plane.u = pose_from_list(c, "trajectory.star.u", t.star.plane.u);
    t.star.plane.v = pose_from_list(c, "trajectory.star.v", t.star.plane.v);
    t.star.corner_fraction = t.corner_fraction;
    t.spiral.a = c.get_double("trajectory.spiral.a", t.spiral.a);
    t.spiral.b = c.get_double("trajectory.spiral.b", t.spiral.b);
    t.spiral.turns = c.get_double("trajectory.spiral.turns", t.spiral.turns);
    t.spiral.z_span = c.get_double("trajectory.spiral.z_span", t.spiral.z_span);
    t.spiral.period = c.get_double("trajectory.spiral.period", t.spiral.period);
    t.polyline_file = c.get_path("trajectory.polyline.file", t.polyline_file);
    t.polyline_period = c.get_double("trajectory.polyline.period", t.polyline_period);
    t.staircase_dwell = c.get_double("trajectory.staircase.dwell", t.staircase_dwell);
    t.staircase_steps = c.get_int("trajectory.staircase.steps", t.staircase_steps);
    t.sinusoid_frequency = c.get_double("trajectory.sinusoid.frequency", t.sinusoid_frequency);
    for (Axis a : kAllAxes) {
        const std::size_t i = axis_index(a);
        t.staircase_step[i] = c.get_double("trajectory.staircase." + key_for(a, "step"), t.staircase_step[i]);
        t.sinusoid_amplitude[i] =
            c.get_double("trajectory.sinusoid." + key_for(a, "amplitude"), t.sinusoid_amplitude[i]);
    }

    validate(cfg);
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    if (!(cfg.sample_rate > 0.0)) throw ConfigError("experiment.sample_rate must be positive");
    if (!(cfg.duration > 0.0)) throw ConfigError("experiment.duration must be positive");
    if (cfg.controllers.empty()) throw ConfigError("controller.type lists no controllers");
    for (std::size_t i = 0; i < 3; ++i) {
        try {
            validate(cfg.plant[i]);
            validate(cfg.nominal[i]);
        } catch (const InvalidModelError& e) {
            throw ConfigError(std::string("invalid plant: ") + e.what());
        }
        if (!(cfg.control[i].u_limit > 0.0)) throw ConfigError("controller.u_limit must be positive");
        if (!(cfg.noise.sigma[i] >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    }
    const auto& d = cfg.disturbance;
    if (d.enabled && !(d.alpha > 0.0 && d.n >= 1.0 && d.beta + d.gamma > 0.0 && d.scale >= 0.0)) {
        throw ConfigError("Bouc-Wen parameters need alpha > 0, n >= 1, beta + gamma > 0, scale >= 0");
    }
    const auto& t = cfg.trajectory;
    double f_max = 0.0;
    switch (t.kind) {
        case TrajectoryKind::Sinusoid: f_max = t.sinusoid_frequency; break;
        case TrajectoryKind::Star: f_max = 1.0 / t.star.period; break;
        case TrajectoryKind::Spiral: f_max = t.spiral.turns / t.spiral.period; break;
        case TrajectoryKind::Logo:
            if (!std::filesystem::exists(t.polyline_file)) {
                throw ConfigError("trajectory file not found: " + t.polyline_file.string());
            }
            f_max = 1.0 / t.polyline_period;
            break;
        case TrajectoryKind::Staircase:
        case TrajectoryKind::Zero: break;
    }
    if (!(cfg.sample_rate > 2.0 * f_max)) {
        throw ConfigError("sample_rate must exceed twice the trajectory's highest frequency");
    }
}

Trajectory build_trajectory(const ExperimentConfig& cfg) {
    const double fs = cfg.sample_rate;
    const std::size_t n = sample_total(cfg.duration, fs);
    const auto& t = cfg.trajectory;
    Trajectory traj;
    switch (t.kind) {
        case TrajectoryKind::Zero: traj = zero_trajectory(cfg.duration, fs); break;
        case TrajectoryKind::Star: traj = star(t.star, cfg.duration, fs); break;
        case TrajectoryKind::Spiral: traj = archimedean_spiral_3d(t.spiral, cfg.duration, fs); break;
        case TrajectoryKind::Logo:
            traj = polyline_logo(t.polyline_file, t.polyline_period, cfg.duration, fs, t.corner_fraction);
            break;
        case TrajectoryKind::Staircase: {
            std::array<Trajectory, 3> parts;
            for (std::size_t i = 0; i < 3; ++i) {
                parts[i] = staircase(t.staircase_step[i], t.staircase_dwell, t.staircase_steps, fs);
            }
            traj = combine(parts, fs, n);
            break;
        }
        case TrajectoryKind::Sinusoid: {
            std::array<Trajectory, 3> parts;
            const double cycles = cfg.duration * t.sinusoid_frequency;
            for (std::size_t i = 0; i < 3; ++i) {
                parts[i] = sinusoid(t.sinusoid_amplitude[i], t.sinusoid_frequency, cycles, fs);
            }
            traj = combine(parts, fs, n);
            break;
        }
    }
    fit_length(traj, n);
    return traj;
}

const AxisRecord& ExperimentRecord::axis(Axis a) const {
    for (const auto& r : axes) {
        if (r.axis == a) return r;
    }
    throw DomainError("record has no " + std::string(axis_name(a)) + " axis");
}

MetricsReport compute_metrics(const ExperimentRecord& record) {
    MetricsReport rep;
    for (const auto& r : record.axes) {
        AxisMetrics m;
        m.axis = r.axis;
        if (!r.desired.empty()) {
            m.rmse = rmse(r.true_pos, r.desired);
            m.rmse_measured = rmse(r.measured, r.desired);
            m.max_abs_error = max_abs_error(r.true_pos, r.desired);
            m.hysteresis_width_percent = try_hysteresis(r.desired, r.true_pos);
        }
        rep.axes.push_back(m);
    }
    return rep;
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg, ControllerKind controller) {
    validate(cfg);
    return run_experiment(cfg, controller, build_trajectory(cfg));
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg, ControllerKind controller, const Trajectory& traj) {
    validate(cfg);
    if (traj.space != TrajectorySpace::Task) throw ConfigError("experiments run on task-space trajectories");
    if (std::abs(traj.sample_rate - cfg.sample_rate) > 1e-9 * cfg.sample_rate) {
        throw ConfigError("trajectory sample rate differs from experiment.sample_rate");
    }
    std::vector<Axis> axes;
    if (cfg.single_axis) {
        axes.push_back(*cfg.single_axis);
    } else {
        axes.assign(kAllAxes.begin(), kAllAxes.end());
    }

    std::vector<AxisRun> runs(axes.size());
    if (cfg.parallel && axes.size() > 1) {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(axes.size());
        for (std::size_t k = 0; k < axes.size(); ++k) {
            workers.emplace_back([&, k] {
                try {
                    runs[k] = simulate_axis(cfg, controller, traj, axes[k]);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (std::size_t k = 0; k < axes.size(); ++k) runs[k] = simulate_axis(cfg, controller, traj, axes[k]);
    }

    ExperimentRecord rec;
    rec.controller = controller;
    rec.trajectory = cfg.trajectory.kind;
    rec.sample_rate = cfg.sample_rate;
    std::size_t n = traj.samples.size();
    std::string message;
    for (const auto& r : runs) {
        n = std::min(n, r.rec.desired.size());
        if (r.diverged && message.empty()) message = r.message;
    }
    rec.t.resize(n);
    for (std::size_t j = 0; j < n; ++j) rec.t[j] = static_cast<double>(j) / cfg.sample_rate;
    for (auto& r : runs) {
        AxisRecord a = std::move(r.rec);
        for (auto* v : {&a.desired, &a.measured, &a.true_pos, &a.u, &a.d, &a.d_hat, &a.s}) v->resize(n);
        rec.axes.push_back(std::move(a));
    }
    rec.metrics = compute_metrics(rec);
    if (!message.empty()) throw DivergenceError(message, std::move(rec));
    return rec;
}

Comparison run_comparison(const ExperimentConfig& cfg) {
    validate(cfg);
    const Trajectory traj = build_trajectory(cfg);
    Comparison cmp;
    for (ControllerKind kind : cfg.controllers) cmp.runs.push_back(run_experiment(cfg, kind, traj));
    for (const auto& a : cmp.runs) {
        for (const auto& b : cmp.runs) {
            if (a.controller == b.controller) continue;
            std::vector<double> per_axis;
            bool ok = true;
            for (std::size_t k = 0; k < a.metrics.axes.size(); ++k) {
                const double base = b.metrics.axes[k].rmse;
                if (!(base > 0.0)) {
                    ok = false;
                    break;
                }
                per_axis.push_back(improvement_percent(a.metrics.axes[k].rmse, base));
            }
            if (!ok) continue;
            const std::string key =
                std::string(controller_name(a.controller)) + "/" + std::string(controller_name(b.controller));
            cmp.improvement[key] = per_axis;
        }
    }
    for (auto& run : cmp.runs) {
        const std::string self(controller_name(run.controller));
        for (const auto& [key, v] : cmp.improvement) {
            if (key.compare(0, self.size() + 1, self + "/") == 0) run.metrics.improvement[key] = v;
        }
    }
    return cmp;
}

SysidConfig sysid_config_from(const Config& c) {
    SysidConfig s;
    s.sweep.f_start = c.get_double("sysid.f_start", s.sweep.f_start);
    s.sweep.f_end = c.get_double("sysid.f_end", s.sweep.f_end);
    s.sweep.duration = c.get_double("sysid.duration", s.sweep.duration);
    s.sweep.amplitude = c.get_double("sysid.amplitude", s.sweep.amplitude);
    s.sweep.sample_rate = c.get_double("experiment.sample_rate", s.sweep.sample_rate);
    const int seg = c.get_int("sysid.segment_length", static_cast<int>(std::llround(4.0 * s.sweep.sample_rate)));
    if (seg < 0) throw ConfigError("sysid.segment_length must be non-negative");
    s.welch.segment_length = static_cast<std::size_t>(seg);
    s.welch.overlap = c.get_double("sysid.overlap", s.welch.overlap);
    s.fit_f_min = c.get_double("sysid.fit_f_min", s.fit_f_min);
    s.fit_f_max = c.get_double("sysid.fit_f_max", s.sweep.f_end);
    s.noise_fraction = c.get_double("sysid.noise_fraction", s.noise_fraction);
    validate(s.sweep);
    if (!(s.noise_fraction >= 0.0)) throw ConfigError("sysid.noise_fraction must be non-negative");
    return s;
}

std::vector<SysidAxisResult> run_sysid(const ExperimentConfig& cfg, const SysidConfig& sys) {
    validate(sys.sweep);
    const auto u = linear_chirp(sys.sweep);
    std::vector<Axis> axes;
    if (cfg.single_axis) {
        axes.push_back(*cfg.single_axis);
    } else {
        axes.assign(kAllAxes.begin(), kAllAxes.end());
    }
    std::vector<SysidAxisResult> out;
    for (Axis a : axes) {
        const std::size_t i = axis_index(a);
        SysidAxisResult res;
        res.axis = a;
        res.truth = model_to_tf(cfg.plant[i]);
        auto y = simulate_open_loop(cfg.plant[i], u, sys.sweep.sample_rate);
        if (sys.noise_fraction > 0.0) {
            double peak = 0.0;
            for (double v : y) peak = std::max(peak, std::abs(v));
            NoiseModel noise(sys.noise_fraction * peak, cfg.seed + i);
            for (double& v : y) v += noise.sample();
        }
        res.frf = estimate_frf(u, y, sys.sweep.sample_rate, sys.welch);
        FitOptions fit;
        fit.f_min = sys.fit_f_min;
        fit.f_max = sys.fit_f_max;
        fit.delay_s = 0.5 / sys.sweep.sample_rate;  // zero-order-hold drive
        res.fit = fit_second_order(res.frf, fit);
        res.resonance = natural_frequency_hz(res.fit.tf);
        const auto band = res.frf.band(sys.fit_f_min, sys.fit_f_max);
        std::size_t peak = 0;
        for (std::size_t k = 1; k < band.size(); ++k) {
            if (band.magnitude[k] > band.magnitude[peak]) peak = k;
        }
        res.empirical_peak_hz = band.size() ? band.frequencies[peak] : 0.0;
        out.push_back(std::move(res));
    }
    return out;
}

std::vector<ResolutionAxisResult> resolution_metrics(const ExperimentRecord& record, const ExperimentConfig& cfg) {
    const auto& t = cfg.trajectory;
    const auto per = static_cast<std::size_t>(std::max<long long>(1, std::llround(t.staircase_dwell * cfg.sample_rate)));
    const std::size_t plateaus = 2 * static_cast<std::size_t>(std::max(0, t.staircase_steps)) + 1;
    std::vector<ResolutionAxisResult> out;
    for (const auto& r : record.axes) {
        ResolutionAxisResult res;
        res.axis = r.axis;
        res.step = t.staircase_step[axis_index(r.axis)];
        double ss = 0.0;
        std::size_t count = 0;
        for (std::size_t p = 0; p < plateaus; ++p) {
            const std::size_t begin = p * per + per / 2, end = std::min((p + 1) * per, r.measured.size());
            if (begin >= end) break;
            double mean = 0.0;
            for (std::size_t j = begin; j < end; ++j) mean += r.measured[j];
            mean /= static_cast<double>(end - begin);
            for (std::size_t j = begin; j < end; ++j) ss += (r.measured[j] - mean) * (r.measured[j] - mean);
            count += end - begin;
        }
        if (count == 0) throw DomainError("record too short for the staircase plateaus");
        res.plateau_sigma = std::sqrt(ss / static_cast<double>(count));
        res.resolved = std::abs(res.step) > 2.0 * res.plateau_sigma;
        out.push_back(res);
    }
    return out;
}

}  // namespace flexpos

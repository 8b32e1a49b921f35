#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexpos/config.hpp"
#include "flexpos/errors.hpp"
#include "flexpos/experiment.hpp"
#include "flexpos/kinematics.hpp"
#include "flexpos/outputs.hpp"

namespace fs = std::filesystem;
using namespace flexpos;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kDivergence = 2, kIo = 3 };

struct Common {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string output;
    bool allow_unused = false;
};

void add_common(CLI::App* sub, Common& opts) {
    sub->add_option("config", opts.config_file, "key = value configuration file");
    sub->add_option("-s,--set", opts.overrides, "override one key (key=value), repeatable");
    sub->add_option("-o,--output", opts.output, "output directory (default: FLEXPOS_OUTPUT_DIR or ./flexpos_out)");
    sub->add_flag("--allow-unused", opts.allow_unused, "warn instead of failing on unrecognised keys");
}

Config load_config(const Common& opts) {
    Config c = opts.config_file.empty() ? Config{} : Config::load(opts.config_file);
    for (const auto& o : opts.overrides) c.apply_override(o);
    if (!opts.output.empty()) c.set("experiment.output_dir", opts.output);
    return c;
}

void check_unused(const Config& c, const Common& opts) {
    const auto unused = c.unused_keys();
    if (unused.empty()) return;
    std::string list;
    for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
    if (!opts.allow_unused) throw ConfigError("unrecognised keys for this command: " + list);
    std::cerr << "warning: ignoring keys: " << list << "\n";
}

void print_written(const std::vector<fs::path>& files) {
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
}

void print_metrics(const ExperimentRecord& r) {
    std::printf("%-10s", std::string(controller_name(r.controller)).c_str());
    for (const auto& m : r.metrics.axes) {
        std::printf("  %s rmse %.6g", std::string(axis_name(m.axis)).c_str(), m.rmse);
        if (m.hysteresis_width_percent) std::printf(" hyst %.4g%%", *m.hysteresis_width_percent);
    }
    std::printf("\n");
}

void print_comparison(const Comparison& cmp) {
    for (const auto& r : cmp.runs) print_metrics(r);
    if (auto it = cmp.improvement.find("smc_ndo/pid"); it != cmp.improvement.end()) {
        std::printf("improvement smc_ndo/pid:");
        for (double v : it->second) std::printf(" %.2f%%", v);
        std::printf("\n");
    }
}

// Runs the comparison; on divergence the partial record is still written.
Comparison run_and_emit(const ExperimentConfig& cfg) {
    try {
        auto cmp = run_comparison(cfg);
        print_written(emit_comparison(cmp, cfg.output_dir));
        print_comparison(cmp);
        return cmp;
    } catch (const DivergenceError& e) {
        const auto dir = cfg.output_dir / "diverged";
        print_written(emit_outputs(e.partial(), dir));
        throw;
    }
}

int cmd_sysid(const Common& opts) {
    Config c = load_config(opts);
    auto cfg = experiment_config_from(c);
    auto sys = sysid_config_from(c);
    check_unused(c, opts);
    const auto results = run_sysid(cfg, sys);
    print_written(emit_sysid(results, cfg.output_dir));
    for (const auto& r : results) {
        std::printf("%-8s b0 %.6g a1 %.6g a0 %.6g  f_n %.4f Hz  residual %.3g\n",
                    std::string(axis_name(r.axis)).c_str(), r.fit.tf.b0, r.fit.tf.a1, r.fit.tf.a0,
                    r.resonance.natural_hz, r.fit.residual);
    }
    return kOk;
}

int cmd_track(const Common& opts) {
    Config c = load_config(opts);
    if (!c.has("controller.type")) c.set("controller.type", "pid,smc,smc_ndo");
    auto cfg = experiment_config_from(c);
    check_unused(c, opts);
    run_and_emit(cfg);
    return kOk;
}

int cmd_resolution(const Common& opts) {
    Config c = load_config(opts);
    if (!c.has("trajectory.type")) c.set("trajectory.type", "staircase");
    auto cfg = experiment_config_from(c);
    check_unused(c, opts);
    if (cfg.trajectory.kind != TrajectoryKind::Staircase) throw ConfigError("resolution requires trajectory.type = staircase");
    if (!c.has("experiment.duration")) {
        cfg.duration = (2 * cfg.trajectory.staircase_steps + 1) * cfg.trajectory.staircase_dwell;
    }
    validate(cfg);
    const auto traj = build_trajectory(cfg);
    for (ControllerKind kind : cfg.controllers) {
        const auto dir = cfg.controllers.size() > 1 ? cfg.output_dir / std::string(controller_name(kind)) : cfg.output_dir;
        const auto record = run_experiment(cfg, kind, traj);
        const auto res = resolution_metrics(record, cfg);
        print_written(emit_resolution(record, res, dir));
        print_metrics(record);
        for (const auto& r : res) {
            std::printf("  %-8s step %.4g  plateau sigma %.4g  %s\n", std::string(axis_name(r.axis)).c_str(), r.step,
                        r.plateau_sigma, r.resolved ? "resolved" : "not resolved");
        }
    }
    return kOk;
}

// Simultaneous peak amplitudes on all axes may exceed the actuator stroke.
bool sinusoid_feasible(const ExperimentConfig& cfg) {
    const auto jinv = InverseJacobian::identified();
    const auto& amp = cfg.trajectory.sinusoid_amplitude;
    for (int corner = 0; corner < 8; ++corner) {
        TaskPose p;
        for (Axis a : kAllAxes) {
            const std::size_t i = axis_index(a);
            const bool active = !cfg.single_axis || *cfg.single_axis == a;
            p[a] = active ? ((corner >> i) & 1 ? amp[i] : -amp[i]) : 0.0;
        }
        if (!feasible(inverse_kinematics(p, jinv))) return false;
    }
    return true;
}

int cmd_hysteresis(const Common& opts) {
    Config c = load_config(opts);
    if (!c.has("trajectory.type")) c.set("trajectory.type", "sinusoid");
    if (!c.has("controller.type")) c.set("controller.type", "open_loop,pid,smc,smc_ndo");
    auto cfg = experiment_config_from(c);
    check_unused(c, opts);
    if (!sinusoid_feasible(cfg)) {
        std::cerr << "note: the combined sinusoid amplitudes exceed the actuator stroke; axes are simulated independently\n";
    }
    run_and_emit(cfg);
    return kOk;
}

int cmd_workspace(const Common& opts) {
    Config c = load_config(opts);
    auto cfg = experiment_config_from(c);
    const auto file = c.get_path("kinematics.jacobian_file");
    const double stroke_half = c.get_double("kinematics.stroke_half", kDefaultStrokeHalf);
    check_unused(c, opts);
    if (!(stroke_half > 0.0)) throw ConfigError("kinematics.stroke_half must be positive");
    const auto jinv = file.empty() ? InverseJacobian::identified() : InverseJacobian::load(file);
    print_written(emit_workspace(jinv, stroke_half, cfg.output_dir));
    const auto ext = workspace_extents(jinv, stroke_half);
    for (Axis a : kAllAxes) {
        std::printf("%-8s %.4g .. %.4g\n", std::string(axis_name(a)).c_str(), ext[a].negative, ext[a].positive);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flexpos: piezo flexure stage control simulations"};
    app.require_subcommand(1);
    Common opts;
    struct Entry {
        const char* name;
        const char* help;
        int (*run)(const Common&);
    };
    const Entry entries[] = {
        {"sysid", "chirp identification and second-order fit per axis", cmd_sysid},
        {"track", "trajectory tracking comparison (star, logo, spiral, ...)", cmd_track},
        {"resolution", "staircase resolution test", cmd_resolution},
        {"hysteresis", "sinusoidal hysteresis loops, open loop vs controllers", cmd_hysteresis},
        {"workspace", "reachable workspace from the actuator stroke", cmd_workspace},
    };
    std::vector<std::pair<CLI::App*, int (*)(const Common&)>> subs;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_common(sub, opts);
        subs.emplace_back(sub, e.run);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        for (auto& [sub, run] : subs) {
            if (sub->parsed()) return run(opts);
        }
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kDivergence;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kDivergence;
    } catch (const FitError& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        return kDivergence;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const Error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kOk;
}

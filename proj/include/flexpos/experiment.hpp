#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexpos/axis_dynamics.hpp"
#include "flexpos/config.hpp"
#include "flexpos/control.hpp"
#include "flexpos/errors.hpp"
#include "flexpos/kinematics.hpp"
#include "flexpos/sysid.hpp"
#include "flexpos/trajectories.hpp"

namespace flexpos {

enum class TrajectoryKind { Zero, Staircase, Sinusoid, Star, Logo, Spiral };

std::string_view trajectory_name(TrajectoryKind kind);
TrajectoryKind trajectory_from_name(std::string_view name);

struct DisturbanceConfig {
    bool enabled = true;
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 0.5;
    double n = 1.0;
    /// Hysteresis amplitude as a fraction of the command limit. The Bouc-Wen
    /// input is the command normalised by the same limit.
    double scale = 0.5;
    /// Constant additive disturbance, as a fraction of the command limit.
    double constant = 0.0;
};

struct NoiseConfig {
    bool enabled = true;
    std::array<double, 3> sigma{};  // per task axis; defaults to default_sensor_sigma
};

struct TrajectoryConfig {
    TrajectoryKind kind = TrajectoryKind::Star;
    StarSpec star;
    SpiralSpec spiral;
    std::filesystem::path polyline_file;
    double polyline_period = 4.0;
    double corner_fraction = 0.02;
    std::array<double, 3> staircase_step{0.02, 0.9, 0.9};
    double staircase_dwell = 0.05;
    int staircase_steps = 3;
    std::array<double, 3> sinusoid_amplitude{};
    double sinusoid_frequency = 1.0;
};

struct ExperimentConfig {
    /// Run only `axis` when set; otherwise all three task axes.
    std::optional<Axis> single_axis;
    std::array<AxisModel, 3> plant{};
    /// Model used by the controller and observer (defaults to `plant`).
    std::array<AxisModel, 3> nominal{};
    std::vector<ControllerKind> controllers{ControllerKind::SmcNdo};
    /// Per-axis gains and command limit; `kind` is taken from `controllers`.
    std::array<ControllerConfig, 3> control{};
    DisturbanceConfig disturbance;
    NoiseConfig noise;
    TrajectoryConfig trajectory;
    double duration = 4.0;
    double sample_rate = 10000.0;
    std::uint64_t seed = 1;
    bool parallel = false;
    std::filesystem::path output_dir = "flexpos_out";
};

/// Defaults: identified plant, scaled gains, star trajectory, Bouc-Wen disturbance and sensor noise.
ExperimentConfig default_experiment_config();

/// Reads the recognised keys (see README) on top of the defaults.
ExperimentConfig experiment_config_from(const Config& cfg);

/// Throws ConfigError for inconsistent settings.
void validate(const ExperimentConfig& cfg);

/// Command limit giving 25% headroom over the static force for the pure-axis extent.
double default_command_limit(const AxisModel& model, Axis axis);

Trajectory build_trajectory(const ExperimentConfig& cfg);

struct AxisRecord {
    Axis axis = Axis::Z;
    std::vector<double> desired;
    std::vector<double> measured;
    std::vector<double> true_pos;
    std::vector<double> u;
    std::vector<double> d;
    std::vector<double> d_hat;
    std::vector<double> s;
};

struct AxisMetrics {
    Axis axis = Axis::Z;
    double rmse = 0.0;           // true position vs desired
    double rmse_measured = 0.0;  // sensor reading vs desired
    double max_abs_error = 0.0;
    std::optional<double> hysteresis_width_percent;  // absent for non-cyclic references
};

struct MetricsReport {
    std::vector<AxisMetrics> axes;
    /// "new/base" -> per-axis improvement_percent(rmse_new, rmse_base).
    std::map<std::string, std::vector<double>> improvement;
};

struct ExperimentRecord {
    ControllerKind controller = ControllerKind::SmcNdo;
    TrajectoryKind trajectory = TrajectoryKind::Star;
    double sample_rate = 10000.0;
    std::vector<double> t;
    std::vector<AxisRecord> axes;
    MetricsReport metrics;

    std::size_t samples() const noexcept { return t.size(); }
    const AxisRecord& axis(Axis a) const;
};

/// Recomputes per-axis metrics from the stored series.
MetricsReport compute_metrics(const ExperimentRecord& record);

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, ExperimentRecord partial)
        : NumericError(what), partial_(std::move(partial)) {}
    const ExperimentRecord& partial() const noexcept { return partial_; }

private:
    ExperimentRecord partial_;
};

/// Closed-loop simulation for one controller: measure, control (+observer),
/// saturate, step the plant with the disturbance. Deterministic given the seed.
ExperimentRecord run_experiment(const ExperimentConfig& cfg, ControllerKind controller);
ExperimentRecord run_experiment(const ExperimentConfig& cfg, ControllerKind controller, const Trajectory& traj);

struct Comparison {
    std::vector<ExperimentRecord> runs;
    std::map<std::string, std::vector<double>> improvement;  // all ordered pairs "a/b"
};

/// Runs every configured controller on the same trajectory and disturbance.
Comparison run_comparison(const ExperimentConfig& cfg);

struct SysidAxisResult {
    Axis axis = Axis::Z;
    TransferFunction2 truth;
    FrequencyResponse frf;
    SecondOrderFit fit;
    Resonance resonance;
    double empirical_peak_hz = 0.0;
};

struct SysidConfig {
    SweepSpec sweep;
    /// 4 s segments at 10 kHz: 0.25 Hz bins keep the leakage bias on the damping term well under 1%.
    WelchOptions welch{40000, 0.5, 1e-8};
    double fit_f_min = 2.0;
    double fit_f_max = 250.0;
    double noise_fraction = 0.0;  // sensor sigma as a fraction of the peak response
};

SysidConfig sysid_config_from(const Config& cfg);

/// Chirp, simulate, estimate, fit, for each requested axis.
std::vector<SysidAxisResult> run_sysid(const ExperimentConfig& cfg, const SysidConfig& sys);

struct ResolutionAxisResult {
    Axis axis = Axis::Z;
    double step = 0.0;
    /// Standard deviation of the measured position about each settled plateau.
    double plateau_sigma = 0.0;
    bool resolved = false;  // step exceeds twice the plateau spread
};

/// Staircase per axis; the settled second half of each plateau is scored.
std::vector<ResolutionAxisResult> resolution_metrics(const ExperimentRecord& record, const ExperimentConfig& cfg);

}  // namespace flexpos

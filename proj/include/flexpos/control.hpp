#pragma once

#include <optional>
#include <string_view>

#include "flexpos/axis_dynamics.hpp"
#include "flexpos/trajectories.hpp"

namespace flexpos {

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    /// Optional anti-windup clamp on |integral of e|.
    std::optional<double> integral_limit;
};

struct SmcGains {
    double lambda_p = 50.0;
    double lambda_i = 13e6;
    double lambda_d = 100.0;
    double a1 = 2.5;
    double a2 = 0.6;
    double epsilon = 1.0;  // tanh boundary-layer width
};

/// Observer state; d_hat = z + l * x2.
struct NdoState {
    double z = 0.0;
    double l = 100.0;
    double d_hat = 0.0;
    bool primed = false;
    double prev_x1 = 0.0;
    double prev_x2 = 0.0;
};

/// Error history shared by the PID and sliding-surface terms.
struct ControllerState {
    double e_int = 0.0;
    double e_prev = 0.0;
    double e_dot = 0.0;
    bool primed = false;
};

void validate(const PidGains& g);
void validate(const SmcGains& g);

/// Gains printed for the hardware experiments. They are not stable against the
/// identified plants at a 10 kHz loop rate; see `default_*_gains`.
PidGains published_pid_gains();
SmcGains published_smc_gains();
inline constexpr double kPublishedObserverGain = 100.0;

/// Per-axis gains scaled to the identified plant (see README "Controller gains").
PidGains default_pid_gains(const AxisModel& model);
SmcGains default_smc_gains(const AxisModel& model);
double default_observer_gain(const AxisModel& model);

/// e = x1 - x1_des
double tracking_error(double x1, double x1_des);

/// s = lambda_p e + lambda_i int(e) + lambda_d e'
double sliding_surface(double e, double e_int, double e_dot, const SmcGains& g);

/// Feeds one new error sample: trapezoidal integral, backward-difference rate.
void advance_error(ControllerState& ctl, double e, double dt);

/// Equivalent control plus tanh-smoothed switching control. `state` carries the
/// measured position and velocity estimate; `ctl` the error integral and rate.
double smc_control(const AxisState& state, const AxisSample& des, const ControllerState& ctl,
                   const AxisModel& model, const SmcGains& g, double d_hat);

/// Switching term alone: -a1 s - a2 tanh(s / epsilon).
double switching_control(double s, const SmcGains& g);

/// Advances `ctl` with e and returns u = -(kp e + ki int(e) + kd e').
double pid_control(double e, ControllerState& ctl, const PidGains& g, double dt);

/// Integrates the observer over the last interval (u held) to the state x.
/// Returns the updated observer; d_hat tracks d with rate l/m.
NdoState ndo_update(NdoState ndo, const AxisState& x, double u, const AxisModel& model, double dt);

/// Finite reaching-time bound for V = s^2/2 with beta1 = sqrt(2) a2, beta2 = 2 a1, alpha = 1/2.
double settling_time_bound(double a1, double a2, double s0);

enum class ControllerKind { OpenLoop, Pid, Smc, SmcNdo };

std::string_view controller_name(ControllerKind kind);
ControllerKind controller_from_name(std::string_view name);

struct ControllerConfig {
    ControllerKind kind = ControllerKind::SmcNdo;
    PidGains pid;
    SmcGains smc;
    double observer_gain = 1.0;
    double u_limit = 1.0;  // command saturation, symmetric
};

/// Sampled-data feedback loop for one axis: differentiates the measured
/// position, runs the selected law, and saturates the command.
class AxisController {
public:
    struct Output {
        double u = 0.0;      // saturated command
        double s = 0.0;      // sliding surface (0 for PID / open loop)
        double d_hat = 0.0;  // disturbance estimate (0 without observer)
    };

    AxisController(const ControllerConfig& config, const AxisModel& model, double dt);

    /// Seeds the velocity estimate and observer from a known initial state.
    void reset(double x1, double x2);
    Output update(double measured_x1, const AxisSample& des);

    const ControllerConfig& config() const noexcept { return config_; }
    const ControllerState& state() const noexcept { return ctl_; }
    const NdoState& observer() const noexcept { return ndo_; }

private:
    ControllerConfig config_;
    AxisModel model_;
    double dt_;
    ControllerState ctl_;
    NdoState ndo_;
    bool have_measurement_ = false;
    double prev_measured_ = 0.0;
    double velocity_ = 0.0;
    double last_u_ = 0.0;
};

}  // namespace flexpos

#include "flexpos/control.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "flexpos/errors.hpp"

namespace flexpos {

namespace {

// Scaled-gain design (see README "Controller gains").
constexpr double kSurfaceRate = 1000.0;          // lambda_d / m [1/s]
constexpr double kSurfaceNaturalSq = 13e6 / 100.0;  // lambda_i / lambda_d, as printed
constexpr double kSurfaceDamping = 1.0;
constexpr double kObserverRate = 1000.0;         // l / m [1/s]
constexpr double kPidIntegralFraction = 0.5;     // of the Routh limit c k / m
constexpr double kPidProportionalFraction = 0.05;  // of the stiffness k

}  // namespace

void validate(const PidGains& g) {
    if (!(g.kp >= 0.0 && g.ki >= 0.0 && g.kd >= 0.0)) throw ConfigError("PID gains must be non-negative");
    if (g.integral_limit && !(*g.integral_limit > 0.0)) throw ConfigError("PID integral limit must be positive");
}

void validate(const SmcGains& g) {
    if (!(g.lambda_p > 0.0 && g.lambda_i > 0.0 && g.lambda_d > 0.0)) {
        throw ConfigError("sliding-surface constants must be positive");
    }
    if (!(g.a1 > 0.0 && g.a2 > 0.0)) throw ConfigError("switching constants a1, a2 must be positive");
    if (!(g.epsilon > 0.0)) throw ConfigError("tanh boundary-layer width must be positive");
}

PidGains published_pid_gains() { return {50.0, 17.5e6, 0.0, std::nullopt}; }

SmcGains published_smc_gains() { return {}; }

PidGains default_pid_gains(const AxisModel& model) {
    validate(model);
    PidGains g;
    g.ki = kPidIntegralFraction * model.c * model.k / model.m;
    g.kp = kPidProportionalFraction * model.k;
    g.kd = 0.0;
    return g;
}

SmcGains default_smc_gains(const AxisModel& model) {
    validate(model);
    SmcGains g;
    g.lambda_d = kSurfaceRate * model.m;
    g.lambda_i = g.lambda_d * kSurfaceNaturalSq;
    g.lambda_p = g.lambda_d * 2.0 * kSurfaceDamping * std::sqrt(kSurfaceNaturalSq);
    g.a1 = 2.5;
    g.a2 = 0.6;
    g.epsilon = 1.0;
    return g;
}

double default_observer_gain(const AxisModel& model) {
    validate(model);
    return kObserverRate * model.m;
}

double tracking_error(double x1, double x1_des) { return x1 - x1_des; }

double sliding_surface(double e, double e_int, double e_dot, const SmcGains& g) {
    return g.lambda_p * e + g.lambda_i * e_int + g.lambda_d * e_dot;
}

void advance_error(ControllerState& ctl, double e, double dt) {
    if (!(dt > 0.0)) throw DomainError("controller step dt must be positive");
    if (!ctl.primed) {
        ctl.primed = true;
        ctl.e_prev = e;
        ctl.e_dot = 0.0;
        return;
    }
    ctl.e_int += 0.5 * (e + ctl.e_prev) * dt;
    ctl.e_dot = (e - ctl.e_prev) / dt;
    ctl.e_prev = e;
}

double switching_control(double s, const SmcGains& g) {
    return -g.a1 * s - g.a2 * std::tanh(s / g.epsilon);
}

double smc_control(const AxisState& state, const AxisSample& des, const ControllerState& ctl,
                   const AxisModel& model, const SmcGains& g, double d_hat) {
    const double e = tracking_error(state.x1, des.pos);
    const double s = sliding_surface(e, ctl.e_int, ctl.e_dot, g);
    const double u_eq = model.c * state.x2 + model.k * state.x1 + model.m * des.acc -
                        model.m * (g.lambda_i / g.lambda_d) * e - model.m * (g.lambda_p / g.lambda_d) * ctl.e_dot -
                        d_hat;
    return u_eq + switching_control(s, g);
}

double pid_control(double e, ControllerState& ctl, const PidGains& g, double dt) {
    advance_error(ctl, e, dt);
    if (g.integral_limit) ctl.e_int = std::clamp(ctl.e_int, -*g.integral_limit, *g.integral_limit);
    return -(g.kp * e + g.ki * ctl.e_int + g.kd * ctl.e_dot);
}

namespace {

// E[k] = int_0^1 e^{-b r} r^k dr for k = 0..3.
std::array<double, 4> exp_moments(double b) {
    std::array<double, 4> E{};
    if (b < 2.0) {
        for (int k = 0; k < 4; ++k) {
            double term = 1.0, sum = 0.0;
            for (int j = 0; j < 40; ++j) {
                sum += term / (k + j + 1);
                term *= -b / (j + 1);
            }
            E[k] = sum;
        }
        return E;
    }
    const double eb = std::exp(-b);
    E[0] = -std::expm1(-b) / b;
    for (int k = 1; k < 4; ++k) E[k] = (k * E[k - 1] - eb) / b;
    return E;
}

}  // namespace

NdoState ndo_update(NdoState ndo, const AxisState& x, double u, const AxisModel& model, double dt) {
    if (!(ndo.l > 0.0)) throw ConfigError("observer gain l must be positive");
    if (!(dt > 0.0)) throw DomainError("observer step dt must be positive");
    if (!ndo.primed) {
        ndo.primed = true;
        ndo.prev_x1 = x.x1;
        ndo.prev_x2 = x.x2;
        ndo.d_hat = ndo.z + ndo.l * x.x2;
        return ndo;
    }
    const double a = ndo.l / model.m;
    const double h = dt;
    const double decay = std::exp(-a * h);
    // Weighted moments M[n] = int_0^h e^{-a(h-t)} (t/h)^n dt.
    const auto E = exp_moments(a * h);
    const std::array<double, 4> M{h * E[0], h * (E[0] - E[1]), h * (E[0] - 2 * E[1] + E[2]),
                                  h * (E[0] - 3 * E[1] + 3 * E[2] - E[3])};
    // x2 is integrated by parts onto x1, which follows the cubic Hermite
    // interpolant through both samples and their velocities.
    const double J = ndo.prev_x1 * (2 * M[3] - 3 * M[2] + M[0]) + h * ndo.prev_x2 * (M[3] - 2 * M[2] + M[1]) +
                     x.x1 * (3 * M[2] - 2 * M[3]) + h * x.x2 * (M[3] - M[2]);
    const double w_x2 = x.x1 - decay * ndo.prev_x1 - a * J;
    const double forcing = (a - model.c / model.m) * w_x2 - model.k / model.m * J + u / model.m * M[0];
    ndo.z = decay * ndo.z - ndo.l * forcing;
    ndo.prev_x1 = x.x1;
    ndo.prev_x2 = x.x2;
    ndo.d_hat = ndo.z + ndo.l * x.x2;
    return ndo;
}

double settling_time_bound(double a1, double a2, double s0) {
    if (!(a1 > 0.0) || !(a2 > 0.0)) throw DomainError("switching constants must be positive");
    const double beta1 = std::sqrt(2.0) * a2;
    const double beta2 = 2.0 * a1;
    const double alpha = 0.5;
    const double v0 = 0.5 * s0 * s0;
    return 1.0 / (beta2 * (1.0 - alpha)) * std::log((beta2 * std::pow(v0, 1.0 - alpha) + beta1) / beta1);
}

std::string_view controller_name(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::OpenLoop: return "open_loop";
        case ControllerKind::Pid: return "pid";
        case ControllerKind::Smc: return "smc";
        case ControllerKind::SmcNdo: return "smc_ndo";
    }
    return "?";
}

ControllerKind controller_from_name(std::string_view name) {
    if (name == "open_loop") return ControllerKind::OpenLoop;
    if (name == "pid") return ControllerKind::Pid;
    if (name == "smc") return ControllerKind::Smc;
    if (name == "smc_ndo") return ControllerKind::SmcNdo;
    throw ConfigError("unknown controller '" + std::string(name) + "' (expected open_loop, pid, smc or smc_ndo)");
}

AxisController::AxisController(const ControllerConfig& config, const AxisModel& model, double dt)
    : config_(config), model_(model), dt_(dt) {
    validate(model_);
    if (!(dt_ > 0.0)) throw ConfigError("controller sample period must be positive");
    if (!(config_.u_limit > 0.0)) throw ConfigError("command limit must be positive");
    switch (config_.kind) {
        case ControllerKind::Pid: validate(config_.pid); break;
        case ControllerKind::SmcNdo:
            if (!(config_.observer_gain > 0.0)) throw ConfigError("observer gain l must be positive");
            [[fallthrough]];
        case ControllerKind::Smc: validate(config_.smc); break;
        case ControllerKind::OpenLoop: break;
    }
    ndo_.l = config_.observer_gain;
}

void AxisController::reset(double x1, double x2) {
    ctl_ = {};
    ndo_ = {};
    ndo_.l = config_.observer_gain;
    have_measurement_ = false;
    prev_measured_ = x1;
    velocity_ = x2;
    last_u_ = 0.0;
}

AxisController::Output AxisController::update(double measured_x1, const AxisSample& des) {
    if (have_measurement_) {
        velocity_ = (measured_x1 - prev_measured_) / dt_;
    }
    have_measurement_ = true;
    prev_measured_ = measured_x1;

    const double e = tracking_error(measured_x1, des.pos);
    const AxisState est{measured_x1, velocity_, 0.0};
    Output out;
    double u = 0.0;
    switch (config_.kind) {
        case ControllerKind::OpenLoop:
            u = model_.m * des.acc + model_.c * des.vel + model_.k * des.pos;
            break;
        case ControllerKind::Pid:
            u = pid_control(e, ctl_, config_.pid, dt_);
            break;
        case ControllerKind::Smc:
            advance_error(ctl_, e, dt_);
            u = smc_control(est, des, ctl_, model_, config_.smc, 0.0);
            out.s = sliding_surface(e, ctl_.e_int, ctl_.e_dot, config_.smc);
            break;
        case ControllerKind::SmcNdo:
            advance_error(ctl_, e, dt_);
            if (!ndo_.primed) ndo_.z = -ndo_.l * velocity_;
            ndo_ = ndo_update(ndo_, est, last_u_, model_, dt_);
            u = smc_control(est, des, ctl_, model_, config_.smc, ndo_.d_hat);
            out.s = sliding_surface(e, ctl_.e_int, ctl_.e_dot, config_.smc);
            out.d_hat = ndo_.d_hat;
            break;
    }
    u = std::clamp(u, -config_.u_limit, config_.u_limit);
    last_u_ = u;
    out.u = u;
    return out;
}

}  // namespace flexpos

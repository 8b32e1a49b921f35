#include "flexpos/axis_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flexpos/errors.hpp"

namespace flexpos {

std::string_view axis_name(Axis axis) {
    switch (axis) {
        case Axis::Z: return "z";
        case Axis::ThetaX: return "theta_x";
        case Axis::ThetaY: return "theta_y";
    }
    return "?";
}

Axis axis_from_name(std::string_view name) {
    if (name == "z") return Axis::Z;
    if (name == "theta_x" || name == "thx") return Axis::ThetaX;
    if (name == "theta_y" || name == "thy") return Axis::ThetaY;
    throw ConfigError("unknown axis '" + std::string(name) + "' (expected z, theta_x or theta_y)");
}

TransferFunction2 identified_plant(Axis axis) {
    switch (axis) {
        case Axis::Z: return {3.774e5, 58.44, 5.08e5};
        case Axis::ThetaX: return {5.792e5, 59.16, 1.186e6};
        case Axis::ThetaY: return {1.454e6, 76.13, 1.346e6};
    }
    throw ConfigError("unknown axis");
}

void validate(const TransferFunction2& tf) {
    if (!std::isfinite(tf.b0) || !std::isfinite(tf.a1) || !std::isfinite(tf.a0)) {
        throw InvalidModelError("transfer function has non-finite coefficients");
    }
    if (tf.b0 <= 0.0) throw InvalidModelError("transfer function gain b0 must be positive");
    if (tf.a0 <= 0.0) throw InvalidModelError("transfer function stiffness a0 must be positive");
    if (tf.a1 < 0.0) throw InvalidModelError("transfer function damping a1 must be non-negative");
}

void validate(const AxisModel& model) {
    if (!std::isfinite(model.m) || !std::isfinite(model.c) || !std::isfinite(model.k)) {
        throw InvalidModelError("axis model has non-finite parameters");
    }
    if (model.m <= 0.0) throw InvalidModelError("axis mass must be positive");
    if (model.k <= 0.0) throw InvalidModelError("axis stiffness must be positive");
    if (model.c < 0.0) throw InvalidModelError("axis damping must be non-negative");
}

AxisModel model_from_tf(const TransferFunction2& tf) {
    validate(tf);
    return {1.0 / tf.b0, tf.a1 / tf.b0, tf.a0 / tf.b0};
}

TransferFunction2 model_to_tf(const AxisModel& model) {
    validate(model);
    return {1.0 / model.m, model.c / model.m, model.k / model.m};
}

Resonance natural_frequency_hz(const TransferFunction2& tf) {
    validate(tf);
    const double wn = std::sqrt(tf.a0);
    Resonance r;
    r.natural_hz = wn / (2.0 * std::numbers::pi);
    r.zeta = tf.a1 / (2.0 * wn);
    if (r.zeta < 1.0 / std::numbers::sqrt2) {
        r.damped_peak_hz = r.natural_hz * std::sqrt(1.0 - 2.0 * r.zeta * r.zeta);
    }
    return r;
}

AxisState step(const AxisState& state, const AxisModel& model, double u, double d, double dt) {
    if (!(dt > 0.0)) throw DomainError("integration step dt must be positive");
    if (!std::isfinite(dt) || !std::isfinite(u) || !std::isfinite(d) || !std::isfinite(state.x1) ||
        !std::isfinite(state.x2)) {
        throw NumericError("non-finite input to axis integrator");
    }
    const double inv_m = 1.0 / model.m;
    const double force = u + d;
    auto accel = [&](double x1, double x2) { return (force - model.c * x2 - model.k * x1) * inv_m; };

    const double k1x = state.x2;
    const double k1v = accel(state.x1, state.x2);
    const double k2x = state.x2 + 0.5 * dt * k1v;
    const double k2v = accel(state.x1 + 0.5 * dt * k1x, k2x);
    const double k3x = state.x2 + 0.5 * dt * k2v;
    const double k3v = accel(state.x1 + 0.5 * dt * k2x, k3x);
    const double k4x = state.x2 + dt * k3v;
    const double k4v = accel(state.x1 + dt * k3x, k4x);

    AxisState next;
    next.x1 = state.x1 + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    next.x2 = state.x2 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    next.t = state.t + dt;
    return next;
}

double BoucWenDisturbance::bound() const {
    return std::pow(alpha / (beta + gamma), 1.0 / n);
}

double bouc_wen_update(BoucWenDisturbance& bw, double u, double u_prev, double dt) {
    if (!(dt > 0.0)) throw DomainError("Bouc-Wen step dt must be positive");
    const double du = u - u_prev;
    if (du != 0.0) {
        const double dir = du > 0.0 ? 1.0 : -1.0;
        // dh/du along the input path; the rate cancels for a rate-independent model.
        auto slope = [&](double h) {
            const double ah = std::abs(h);
            return bw.alpha - bw.beta * dir * std::pow(ah, bw.n - 1.0) * h - bw.gamma * std::pow(ah, bw.n);
        };
        const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(du) * bw.alpha / 0.02)));
        const double hu = du / substeps;
        double h = bw.h;
        for (int i = 0; i < substeps; ++i) {
            const double k1 = slope(h);
            const double k2 = slope(h + 0.5 * hu * k1);
            const double k3 = slope(h + 0.5 * hu * k2);
            const double k4 = slope(h + hu * k3);
            h += hu / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        bw.h = h;
    }
    return -bw.scale * bw.h;
}

NoiseModel::NoiseModel(double sigma_pos, std::uint64_t seed)
    : sigma_(sigma_pos), seed_(seed), engine_(seed) {
    if (!(sigma_pos >= 0.0)) throw DomainError("sensor noise sigma must be non-negative");
}

double NoiseModel::sample() {
    if (sigma_ == 0.0) return 0.0;
    return sigma_ * normal_(engine_);
}

double measure(const AxisState& state, NoiseModel& noise) {
    return state.x1 + noise.sample();
}

double default_sensor_sigma(Axis axis) {
    switch (axis) {
        case Axis::Z: return 0.004;
        case Axis::ThetaX: return 0.25;
        case Axis::ThetaY: return 0.23;
    }
    return 0.0;
}

}  // namespace flexpos

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "flexpos/axis_dynamics.hpp"
#include "flexpos/control.hpp"
#include "flexpos/errors.hpp"

using namespace flexpos;

namespace {

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct Decay {
    std::vector<double> t, log_err;
};

// Plant driven by a constant disturbance; the observer sees the exact state.
Decay ndo_decay(const AxisModel& model, double l, double d, double dt, int steps) {
    AxisState x;
    NdoState ndo;
    ndo.l = l;
    const double u = 0.0;
    ndo = ndo_update(ndo, x, u, model, dt);
    Decay out;
    for (int i = 0; i < steps; ++i) {
        x = step(x, model, u, d, dt);
        ndo = ndo_update(ndo, x, u, model, dt);
        const double err = std::abs(d - ndo.d_hat);
        // Decay window: stop well above the sampled-data floor.
        if (err < 1e-5 * std::abs(d)) break;
        out.t.push_back(x.t);
        out.log_err.push_back(std::log(err));
    }
    return out;
}

double ndo_sinusoid_error(const AxisModel& model, double l, double amp, double freq) {
    const double dt = 1e-4;
    AxisState x;
    NdoState ndo;
    ndo.l = l;
    ndo = ndo_update(ndo, x, 0.0, model, dt);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double d = amp * std::sin(2 * std::numbers::pi * freq * (x.t + 0.5 * dt));
        x = step(x, model, 0.0, d, dt);
        ndo = ndo_update(ndo, x, 0.0, model, dt);
        if (x.t > 0.5) worst = std::max(worst, std::abs(amp * std::sin(2 * std::numbers::pi * freq * x.t) - ndo.d_hat));
    }
    return worst;
}

struct Reach {
    double s0 = 0.0;
    double first_inside = -1.0;
    bool lyapunov_ok = true;
    bool stays_inside = true;
};

// Normalised axis (m = lambda_d = 1) so the surface obeys s' = d - a1 s - a2 tanh(s / eps).
Reach reach_boundary_layer(double e0, double edot0, double d) {
    const AxisModel model{1.0, 2.0, 50.0};
    SmcGains g;
    g.lambda_d = 1.0;
    g.lambda_p = 20.0;
    g.lambda_i = 100.0;
    const double dt = 1e-4;
    AxisState x{e0, edot0, 0.0};
    ControllerState ctl;
    ctl.primed = true;
    ctl.e_prev = e0;
    ctl.e_dot = edot0;
    const AxisSample des{};
    Reach r;
    double s = sliding_surface(e0, 0.0, edot0, g);
    r.s0 = s;
    double v_prev = 0.5 * s * s;
    for (int i = 0; i < 40000; ++i) {
        const double u = smc_control(x, des, ctl, model, g, 0.0);
        x = step(x, model, u, d, dt);
        // Exact rate from the state; trapezoid on the integral.
        ctl.e_int += 0.5 * (x.x1 + ctl.e_prev) * dt;
        ctl.e_prev = x.x1;
        ctl.e_dot = x.x2;
        s = sliding_surface(x.x1, ctl.e_int, ctl.e_dot, g);
        const double v = 0.5 * s * s;
        if (r.first_inside < 0.0) {
            if (std::abs(s) <= g.epsilon) r.first_inside = x.t;
            else if (v > v_prev * (1.0 + 1e-9)) r.lyapunov_ok = false;
        } else if (std::abs(s) > 2.0 * g.epsilon) {
            r.stays_inside = false;
        }
        v_prev = v;
    }
    return r;
}

}  // namespace

TEST_CASE("tracking error orientation") {
    CHECK(tracking_error(5.0, 5.0) == 0.0);
    CHECK(tracking_error(1.5, 1.0) == 0.5);
    CHECK(tracking_error(2.0, 1.0) > 0.0);
}

TEST_CASE("sliding surface") {
    const auto g = published_smc_gains();
    CHECK(sliding_surface(0.0, 0.0, 0.0, g) == 0.0);
    CHECK(sliding_surface(1e-3, 0.0, 0.0, g) == doctest::Approx(0.05));
    const double s = sliding_surface(0.2, -0.01, 3.0, g);
    CHECK(sliding_surface(0.2 * 3.5, -0.01 * 3.5, 3.0 * 3.5, g) == doctest::Approx(3.5 * s));
    CHECK(s == doctest::Approx(g.lambda_p * 0.2 + g.lambda_i * -0.01 + g.lambda_d * 3.0));
}

TEST_CASE("SMC law") {
    const auto model = model_from_tf(identified_plant(Axis::Z));
    const auto g = default_smc_gains(model);
    const AxisState x{12.0, 0.0, 0.0};
    const AxisSample des{12.0, 0.0, 0.0};
    ControllerState ctl;
    CHECK(smc_control(x, des, ctl, model, g, 0.0) == doctest::Approx(model.k * 12.0));
    // d_hat enters with a negative sign.
    CHECK(smc_control(x, des, ctl, model, g, 0.25) == doctest::Approx(model.k * 12.0 - 0.25));

    CHECK(switching_control(0.5, g) < 0.0);
    CHECK(switching_control(-0.5, g) > 0.0);
    CHECK(switching_control(0.0, g) == 0.0);
    CHECK(switching_control(2.0, g) == doctest::Approx(-g.a1 * 2.0 - g.a2 * std::tanh(2.0 / g.epsilon)));
}

TEST_CASE("PID law") {
    PidGains g{50.0, 0.0, 0.0, std::nullopt};
    ControllerState ctl;
    CHECK(pid_control(0.01, ctl, g, 1e-4) == doctest::Approx(-0.5));

    ControllerState zero;
    const auto pub = published_pid_gains();
    for (int i = 0; i < 10; ++i) CHECK(pid_control(0.0, zero, pub, 1e-4) == 0.0);

    ControllerState integ;
    PidGains pi{1.0, 100.0, 0.0, std::nullopt};
    double prev = std::abs(pid_control(0.1, integ, pi, 1e-3));
    for (int i = 0; i < 20; ++i) {
        const double u = std::abs(pid_control(0.1, integ, pi, 1e-3));
        CHECK(u > prev);
        prev = u;
    }

    ControllerState clamped;
    PidGains lim{0.0, 1.0, 0.0, 0.5};
    for (int i = 0; i < 100; ++i) pid_control(1.0, clamped, lim, 0.1);
    CHECK(clamped.e_int == doctest::Approx(0.5));
    CHECK_THROWS_AS(validate(PidGains{-1.0, 0.0, 0.0, std::nullopt}), ConfigError);
}

TEST_CASE("observer at rest stays at zero") {
    const auto model = model_from_tf(identified_plant(Axis::Z));
    NdoState ndo;
    ndo.l = default_observer_gain(model);
    for (int i = 0; i < 100; ++i) {
        ndo = ndo_update(ndo, {}, 0.0, model, 1e-4);
        CHECK(ndo.d_hat == 0.0);
    }
    NdoState bad;
    bad.l = 0.0;
    CHECK_THROWS_AS(ndo_update(bad, {}, 0.0, model, 1e-4), ConfigError);
}

TEST_CASE("observer error decays at rate l/m") {
    for (Axis a : kAllAxes) {
        const auto model = model_from_tf(identified_plant(a));
        for (double rate : {200.0, 1000.0, 3000.0}) {
            const auto decay = ndo_decay(model, rate * model.m, 0.3 * model.k, 1e-4, 100000);
            REQUIRE(decay.t.size() > 10);
            const double measured = -slope(decay.t, decay.log_err);
            CAPTURE(rate);
            CHECK(measured == doctest::Approx(rate).epsilon(0.02));
        }
    }
}

TEST_CASE("observer lag halves when the gain doubles") {
    const auto model = model_from_tf(identified_plant(Axis::Z));
    const double amp = 0.5 * model.k;
    const double e1 = ndo_sinusoid_error(model, 500.0 * model.m, amp, 2.0);
    const double e2 = ndo_sinusoid_error(model, 1000.0 * model.m, amp, 2.0);
    const double e4 = ndo_sinusoid_error(model, 2000.0 * model.m, amp, 2.0);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.2));
    CHECK(e2 / e4 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("settling time bound") {
    CHECK(settling_time_bound(2.5, 0.6, 0.0) == 0.0);
    const double expected = 0.4 * std::log((5.0 * std::sqrt(0.5) + std::sqrt(2.0) * 0.6) / (std::sqrt(2.0) * 0.6));
    CHECK(settling_time_bound(2.5, 0.6, 1.0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(settling_time_bound(2.5, 0.6, 1.0) == doctest::Approx(0.657).epsilon(1e-3));
    double prev = settling_time_bound(2.5, 0.1, 3.0);
    for (double a2 = 0.2; a2 < 5.0; a2 += 0.1) {
        const double t = settling_time_bound(2.5, a2, 3.0);
        CHECK(t < prev);
        prev = t;
    }
    CHECK_THROWS_AS(settling_time_bound(0.0, 0.6, 1.0), DomainError);
    CHECK_THROWS_AS(settling_time_bound(2.5, -0.6, 1.0), DomainError);
}

TEST_CASE("surface reaches the boundary layer within the bound") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> e(-0.5, 0.5), edot(-20.0, 20.0);
    const SmcGains g;
    int trials = 0;
    while (trials < 20) {
        const double e0 = e(rng), ed0 = edot(rng);
        // Bounded disturbance satisfying a2 > (lambda_d / m) sup |d|.
        const auto r = reach_boundary_layer(e0, ed0, 0.3 * g.a2);
        if (std::abs(r.s0) <= 1.5 * g.epsilon) continue;
        ++trials;
        CAPTURE(r.s0);
        REQUIRE(r.first_inside > 0.0);
        CHECK(r.first_inside <= settling_time_bound(g.a1, g.a2, r.s0));
        CHECK(r.lyapunov_ok);
        CHECK(r.stays_inside);
    }
}

TEST_CASE("controller output is deterministic") {
    const auto model = model_from_tf(identified_plant(Axis::ThetaX));
    ControllerConfig cfg;
    cfg.kind = ControllerKind::SmcNdo;
    cfg.smc = default_smc_gains(model);
    cfg.observer_gain = default_observer_gain(model);
    cfg.u_limit = 10.0;
    AxisController a(cfg, model, 1e-4), b(cfg, model, 1e-4);
    a.reset(0.0, 0.0);
    b.reset(0.0, 0.0);
    for (int i = 0; i < 500; ++i) {
        const double m = 3.0 * std::sin(0.01 * i) + 1e-3 * (i % 7);
        const AxisSample des{2.0 * std::sin(0.011 * i), 0.0, 0.0};
        const auto oa = a.update(m, des), ob = b.update(m, des);
        CHECK(oa.u == ob.u);
        CHECK(oa.d_hat == ob.d_hat);
        CHECK(oa.s == ob.s);
        CHECK(std::abs(oa.u) <= cfg.u_limit);
    }
}

TEST_CASE("controller names round trip") {
    for (auto k : {ControllerKind::OpenLoop, ControllerKind::Pid, ControllerKind::Smc, ControllerKind::SmcNdo}) {
        CHECK(controller_from_name(controller_name(k)) == k);
    }
    CHECK_THROWS_AS(controller_from_name("lqr"), ConfigError);
}

TEST_CASE("SMC holds a small sinusoid tighter than PID without disturbance") {
    const auto model = model_from_tf(identified_plant(Axis::Z));
    const double dt = 1e-4;
    auto run = [&](ControllerKind kind) {
        ControllerConfig cfg;
        cfg.kind = kind;
        cfg.pid = default_pid_gains(model);
        cfg.smc = default_smc_gains(model);
        cfg.observer_gain = default_observer_gain(model);
        cfg.u_limit = 1e3;
        AxisController ctl(cfg, model, dt);
        ctl.reset(0.0, 0.0);
        AxisState x;
        double worst = 0.0;
        const double w = 2 * std::numbers::pi * 10.0;
        for (int i = 0; i < 5000; ++i) {
            const double t = i * dt;
            const AxisSample des{10.0 * std::sin(w * t), 10.0 * w * std::cos(w * t), -10.0 * w * w * std::sin(w * t)};
            const auto out = ctl.update(x.x1, des);
            if (t > 0.3) worst = std::max(worst, std::abs(x.x1 - des.pos));
            x = step(x, model, out.u, 0.0, dt);
        }
        return worst;
    };
    CHECK(run(ControllerKind::Smc) < run(ControllerKind::Pid));
}

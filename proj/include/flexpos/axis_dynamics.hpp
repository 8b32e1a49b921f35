#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace flexpos {

/// Task-space motion axes of the stage. Z is in um, the tilts in urad.
enum class Axis { Z = 0, ThetaX = 1, ThetaY = 2 };

inline constexpr std::array<Axis, 3> kAllAxes{Axis::Z, Axis::ThetaX, Axis::ThetaY};

std::string_view axis_name(Axis axis);
Axis axis_from_name(std::string_view name);
inline constexpr std::size_t axis_index(Axis axis) { return static_cast<std::size_t>(axis); }

/// b0 / (s^2 + a1 s + a0)
struct TransferFunction2 {
    double b0 = 1.0;
    double a1 = 0.0;
    double a0 = 1.0;

    friend bool operator==(const TransferFunction2&, const TransferFunction2&) = default;
};

/// m q'' + c q' + k q = d + u
struct AxisModel {
    double m = 1.0;
    double c = 0.0;
    double k = 1.0;

    friend bool operator==(const AxisModel&, const AxisModel&) = default;
};

struct AxisState {
    double x1 = 0.0;  // position
    double x2 = 0.0;  // velocity
    double t = 0.0;
};

struct Resonance {
    double natural_hz = 0.0;
    double zeta = 0.0;
    /// Magnitude-peak frequency; empty when zeta >= 1/sqrt(2) (no peak).
    std::optional<double> damped_peak_hz;
};

/// Frequency-response fits identified on the three stage axes.
TransferFunction2 identified_plant(Axis axis);

void validate(const TransferFunction2& tf);
void validate(const AxisModel& model);

AxisModel model_from_tf(const TransferFunction2& tf);
TransferFunction2 model_to_tf(const AxisModel& model);

Resonance natural_frequency_hz(const TransferFunction2& tf);

/// Advances one fixed RK4 step with u and d held over the interval.
AxisState step(const AxisState& state, const AxisModel& model, double u, double d, double dt);

/// Rate-independent Bouc-Wen hysteresis driving an additive disturbance d = -scale * h.
struct BoucWenDisturbance {
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 0.5;
    double n = 1.0;
    double h = 0.0;
    double scale = 0.0;

    /// Upper bound on |h| reachable from h = 0.
    double bound() const;
};

/// Integrates the hysteresis state across the input change u_prev -> u and
/// returns the disturbance. The update is parameterised by the input path, so
/// dt only enters through the rate u' = (u - u_prev) / dt.
double bouc_wen_update(BoucWenDisturbance& bw, double u, double u_prev, double dt);

/// Seeded Gaussian position-sensor noise.
class NoiseModel {
public:
    explicit NoiseModel(double sigma_pos = 0.0, std::uint64_t seed = 0);

    double sigma() const noexcept { return sigma_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double sample();

private:
    double sigma_;
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

double measure(const AxisState& state, NoiseModel& noise);

/// Sensor noise reported as the stage resolution on each axis (um / urad).
double default_sensor_sigma(Axis axis);

}  // namespace flexpos

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "flexpos/kinematics.hpp"

namespace flexpos {

struct AxisSample {
    double pos = 0.0;
    double vel = 0.0;
    double acc = 0.0;
};

struct TrajectorySample {
    double t = 0.0;
    std::array<AxisSample, 3> axis{};  // indexed by axis_index(); channel 0 in single-axis space
};

enum class TrajectorySpace { Task, Actuator, SingleAxis };

struct Trajectory {
    TrajectorySpace space = TrajectorySpace::Task;
    double sample_rate = 10000.0;
    std::vector<TrajectorySample> samples;

    std::size_t channels() const { return space == TrajectorySpace::SingleAxis ? 1 : 3; }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
    TaskPose pose(std::size_t i) const;
    /// Per-channel series of one component: 0 = pos, 1 = vel, 2 = acc.
    std::vector<double> series(std::size_t channel, int component = 0) const;
};

/// Affine plane in task space: point (p, q) maps to origin + p * u + q * v.
struct TaskPlane {
    TaskPose origin{};
    TaskPose u{0.0, 1.0, 0.0};
    TaskPose v{0.0, 0.0, 1.0};

    TaskPose map(double p, double q) const { return origin + p * u + q * v; }
    /// Coordinate plane spanned by two task axes with unit scale.
    static TaskPlane coordinate(Axis first, Axis second);
};

/// Ascending then descending staircase on one axis; (2 n_steps + 1) plateaus
/// of dwell_s each. Each transition is a single-sample ramp.
Trajectory staircase(double step_size, double dwell_s, int n_steps, double sample_rate = 10000.0);

struct StarSpec {
    int n_points = 5;
    double radius = 1.0;       // outer radius in plane coordinates
    double inner_ratio = 0.381966;  // inner/outer radius; the regular {5/2} star by default
    double period = 4.0;
    TaskPlane plane{};
    double corner_fraction = 0.02;
};

/// Closed n-point star traversed once per period at constant path speed.
Trajectory star(const StarSpec& spec, double duration, double sample_rate = 10000.0);

/// Vertices in task units: 2 columns are (theta_x, theta_y) with z = 0, 3 columns are (z, theta_x, theta_y).
std::vector<TaskPose> load_polyline(const std::filesystem::path& path);

/// Constant-speed traversal of a polyline with quintic corner blends. A path whose
/// last vertex repeats the first is treated as closed and repeats every period;
/// an open path holds its final vertex after one period.
Trajectory polyline_trajectory(const std::vector<TaskPose>& vertices, double period, double duration,
                               double sample_rate = 10000.0, double corner_fraction = 0.02);

Trajectory polyline_logo(const std::filesystem::path& path_file, double period, double duration,
                         double sample_rate = 10000.0, double corner_fraction = 0.02);

struct SpiralSpec {
    double a = 0.0;        // start radius [urad]
    double b = 100.0;      // radial growth [urad/rad]
    double turns = 5.0;
    double z_span = 100.0; // total z travel [um], centred on zero
    double period = 10.0;
};

/// r(phi) = a + b phi in the (theta_x, theta_y) plane, z linear in phi.
Trajectory archimedean_spiral_3d(const SpiralSpec& spec, double duration, double sample_rate = 10000.0);

/// Single-axis A sin(2 pi f t) over the given number of cycles.
Trajectory sinusoid(double amplitude, double freq, double cycles, double sample_rate = 10000.0);

/// Single-axis or task-space trajectory held at zero.
Trajectory zero_trajectory(double duration, double sample_rate = 10000.0,
                           TrajectorySpace space = TrajectorySpace::Task);

/// Maps a task-space trajectory to actuator displacements (pos/vel/acc are linear in the pose).
Trajectory to_actuator_space(const Trajectory& task, const InverseJacobian& jinv);

/// True when every sample's actuator command is within stroke.
bool trajectory_feasible(const Trajectory& task, const InverseJacobian& jinv,
                         double stroke_half = kDefaultStrokeHalf);

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace flexpos

#pragma once

#include <array>
#include <filesystem>

#include <Eigen/Dense>

#include "flexpos/axis_dynamics.hpp"

namespace flexpos {

/// Platform pose in task space: z [um], theta_x [urad], theta_y [urad].
struct TaskPose {
    double z = 0.0;
    double theta_x = 0.0;
    double theta_y = 0.0;

    double& operator[](Axis axis);
    double operator[](Axis axis) const;

    Eigen::Vector3d vector() const { return {z, theta_x, theta_y}; }
    static TaskPose from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

    friend TaskPose operator+(const TaskPose& a, const TaskPose& b) {
        return {a.z + b.z, a.theta_x + b.theta_x, a.theta_y + b.theta_y};
    }
    friend TaskPose operator-(const TaskPose& a, const TaskPose& b) {
        return {a.z - b.z, a.theta_x - b.theta_x, a.theta_y - b.theta_y};
    }
    friend TaskPose operator*(double s, const TaskPose& p) {
        return {s * p.z, s * p.theta_x, s * p.theta_y};
    }
    friend bool operator==(const TaskPose&, const TaskPose&) = default;
};

/// Actuator displacements relative to mid-stroke [um].
struct ActuatorVector {
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;

    Eigen::Vector3d vector() const { return {a1, a2, a3}; }
    static ActuatorVector from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

/// Half of the 90 um actuator stroke, measured from mid-stroke.
inline constexpr double kDefaultStrokeHalf = 45.0;

/// Linear map task pose -> actuator displacement (rows: actuators,
/// columns: z, theta_x, theta_y).
class InverseJacobian {
public:
    explicit InverseJacobian(const Eigen::Matrix3d& matrix);

    /// Regression fit of the stage's finite-element motion study.
    static InverseJacobian identified();
    /// Plain-text 3x3 matrix, row-major, whitespace separated, '#' comments.
    static InverseJacobian load(const std::filesystem::path& path);

    const Eigen::Matrix3d& matrix() const noexcept { return matrix_; }
    double determinant() const { return matrix_.determinant(); }

private:
    Eigen::Matrix3d matrix_;
};

ActuatorVector inverse_kinematics(const TaskPose& pose, const InverseJacobian& jinv);

/// Throws SingularityError when the inverse Jacobian cannot be inverted.
TaskPose forward_kinematics(const ActuatorVector& a, const InverseJacobian& jinv);

bool feasible(const ActuatorVector& a, double stroke_half = kDefaultStrokeHalf);

struct AxisExtent {
    double negative = 0.0;
    double positive = 0.0;
};

/// Largest pure single-axis motions keeping every actuator within stroke.
struct WorkspaceExtents {
    AxisExtent z;
    AxisExtent theta_x;
    AxisExtent theta_y;

    const AxisExtent& operator[](Axis axis) const;
};

WorkspaceExtents workspace_extents(const InverseJacobian& jinv, double stroke_half = kDefaultStrokeHalf);

/// Task poses at the eight corners of the actuator stroke cube.
std::array<TaskPose, 8> workspace_vertices(const InverseJacobian& jinv,
                                           double stroke_half = kDefaultStrokeHalf);

}  // namespace flexpos

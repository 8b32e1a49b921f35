#include "flexpos/kinematics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "flexpos/errors.hpp"

namespace flexpos {

double& TaskPose::operator[](Axis axis) {
    switch (axis) {
        case Axis::Z: return z;
        case Axis::ThetaX: return theta_x;
        case Axis::ThetaY: return theta_y;
    }
    return z;
}

double TaskPose::operator[](Axis axis) const {
    return const_cast<TaskPose&>(*this)[axis];
}

const AxisExtent& WorkspaceExtents::operator[](Axis axis) const {
    switch (axis) {
        case Axis::Z: return z;
        case Axis::ThetaX: return theta_x;
        case Axis::ThetaY: return theta_y;
    }
    return z;
}

InverseJacobian::InverseJacobian(const Eigen::Matrix3d& matrix) : matrix_(matrix) {
    if (!matrix_.allFinite()) throw ConfigError("inverse Jacobian has non-finite entries");
}

InverseJacobian InverseJacobian::identified() {
    Eigen::Matrix3d m;
    m << -0.1909, 0.0001, 0.0110,
         -0.1877, -0.0095, -0.0053,
         -0.1875, 0.0093, -0.0056;
    return InverseJacobian(m);
}

InverseJacobian InverseJacobian::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open Jacobian file " + path.string());
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string token;
        while (fields >> token) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != token.size()) throw ParseError(path.string(), line_no, "not a number: '" + token + "'");
            values.push_back(v);
        }
    }
    if (values.size() != 9) {
        throw ParseError(path.string(), line_no, "expected 9 matrix entries, found " + std::to_string(values.size()));
    }
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = values[static_cast<std::size_t>(3 * r + c)];
    return InverseJacobian(m);
}

ActuatorVector inverse_kinematics(const TaskPose& pose, const InverseJacobian& jinv) {
    return ActuatorVector::from_vector(jinv.matrix() * pose.vector());
}

TaskPose forward_kinematics(const ActuatorVector& a, const InverseJacobian& jinv) {
    const Eigen::Matrix3d& m = jinv.matrix();
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0 || std::abs(m.determinant()) <= 1e-12 * scale * scale * scale) {
        throw SingularityError("inverse Jacobian is singular; forward kinematics undefined");
    }
    return TaskPose::from_vector(m.partialPivLu().solve(a.vector()));
}

bool feasible(const ActuatorVector& a, double stroke_half) {
    if (!(stroke_half > 0.0)) throw DomainError("stroke half-range must be positive");
    return std::abs(a.a1) <= stroke_half && std::abs(a.a2) <= stroke_half && std::abs(a.a3) <= stroke_half;
}

WorkspaceExtents workspace_extents(const InverseJacobian& jinv, double stroke_half) {
    if (!(stroke_half > 0.0)) throw DomainError("stroke half-range must be positive");
    WorkspaceExtents out;
    for (Axis axis : kAllAxes) {
        const double col_max = jinv.matrix().col(static_cast<int>(axis_index(axis))).cwiseAbs().maxCoeff();
        const double reach = col_max > 0.0 ? stroke_half / col_max : std::numeric_limits<double>::infinity();
        AxisExtent e{-reach, reach};
        switch (axis) {
            case Axis::Z: out.z = e; break;
            case Axis::ThetaX: out.theta_x = e; break;
            case Axis::ThetaY: out.theta_y = e; break;
        }
    }
    return out;
}

std::array<TaskPose, 8> workspace_vertices(const InverseJacobian& jinv, double stroke_half) {
    std::array<TaskPose, 8> out;
    for (int i = 0; i < 8; ++i) {
        ActuatorVector a{(i & 1) ? stroke_half : -stroke_half, (i & 2) ? stroke_half : -stroke_half,
                         (i & 4) ? stroke_half : -stroke_half};
        out[static_cast<std::size_t>(i)] = forward_kinematics(a, jinv);
    }
    return out;
}

}  // namespace flexpos

#include "flexpos/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "flexpos/csv.hpp"
#include "flexpos/errors.hpp"

namespace flexpos {

namespace {

using Vec3 = Eigen::Vector3d;

std::size_t sample_count(double duration, double sample_rate) {
    if (!(sample_rate > 0.0)) throw DomainError("sample rate must be positive");
    if (!(duration >= 0.0)) throw DomainError("duration must be non-negative");
    return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

Trajectory make(TrajectorySpace space, double sample_rate, std::size_t n) {
    Trajectory traj;
    traj.space = space;
    traj.sample_rate = sample_rate;
    traj.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) traj.samples[i].t = static_cast<double>(i) / sample_rate;
    return traj;
}

/// Polyline with quintic corner blends, parameterised by path length at constant speed.
class BlendedPolyline {
public:
    BlendedPolyline(std::vector<Vec3> points, bool closed, double corner_fraction) : closed_(closed) {
        // Vertices closer than a rounding tolerance are merged.
        double scale = 0.0;
        for (const Vec3& p : points) scale = std::max(scale, p.norm());
        const double tol = 1e-12 * std::max(scale, 1.0);
        for (const Vec3& p : points) {
            if (pts_.empty() || (p - pts_.back()).norm() > tol) pts_.push_back(p);
        }
        if (closed_ && pts_.size() > 1 && (pts_.back() - pts_.front()).norm() <= tol) pts_.pop_back();
        if (pts_.size() < 2) throw DomainError("polyline needs at least two distinct vertices");
        if (closed_ && pts_.size() < 3) closed_ = false;

        const std::size_t n = pts_.size();
        const std::size_t edges = closed_ ? n : n - 1;
        cum_.assign(edges + 1, 0.0);
        for (std::size_t j = 0; j < edges; ++j) {
            const Vec3 d = pts_[(j + 1) % n] - pts_[j];
            edge_len_.push_back(d.norm());
            dir_.push_back(d / d.norm());
            cum_[j + 1] = cum_[j] + edge_len_.back();
        }
        length_ = cum_.back();

        delta_.assign(n, 0.0);
        if (corner_fraction > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!closed_ && (i == 0 || i == n - 1)) continue;
                const std::size_t in = (i + edges - 1) % edges;
                const std::size_t out = i % edges;
                delta_[i] = std::min(0.5 * corner_fraction * length_,
                                     0.45 * std::min(edge_len_[in], edge_len_[out]));
            }
        }
    }

    double length() const { return length_; }
    bool closed() const { return closed_; }

    /// Position, velocity and acceleration at path coordinate s for path speed v.
    void eval(double s, double v, Vec3& p, Vec3& dp, Vec3& ddp) const {
        const std::size_t n = pts_.size();
        const std::size_t edges = dir_.size();
        if (closed_) {
            s = std::fmod(s, length_);
            if (s < 0.0) s += length_;
        } else {
            s = std::clamp(s, 0.0, length_);
        }
        std::size_t j = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), s) - cum_.begin());
        j = std::min(j == 0 ? 0 : j - 1, edges - 1);

        const std::size_t start_vertex = j;
        const std::size_t end_vertex = (j + 1) % n;
        if (delta_[start_vertex] > 0.0 && s - cum_[j] < delta_[start_vertex]) {
            blend(start_vertex, s - cum_[j] + delta_[start_vertex], v, p, dp, ddp);
            return;
        }
        if (delta_[end_vertex] > 0.0 && cum_[j + 1] - s < delta_[end_vertex]) {
            blend(end_vertex, s - (cum_[j + 1] - delta_[end_vertex]), v, p, dp, ddp);
            return;
        }
        p = pts_[j] + (s - cum_[j]) * dir_[j];
        dp = v * dir_[j];
        ddp.setZero();
    }

private:
    void blend(std::size_t vertex, double local_s, double v, Vec3& p, Vec3& dp, Vec3& ddp) const {
        const std::size_t edges = dir_.size();
        const Vec3& d_in = dir_[(vertex + edges - 1) % edges];
        const Vec3& d_out = dir_[vertex % edges];
        const double delta = delta_[vertex];
        const Vec3 p0 = pts_[vertex] - delta * d_in;
        const Vec3 p1 = pts_[vertex] + delta * d_out;
        const double T = 2.0 * delta / v;
        const Vec3 v0 = v * d_in;
        const Vec3 v1 = v * d_out;
        const double x = local_s / (2.0 * delta);
        const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;

        const double h0 = 1 - 10 * x3 + 15 * x4 - 6 * x5;
        const double h1 = x - 6 * x3 + 8 * x4 - 3 * x5;
        const double h3 = 10 * x3 - 15 * x4 + 6 * x5;
        const double h4 = -4 * x3 + 7 * x4 - 3 * x5;
        const double dh0 = -30 * x2 + 60 * x3 - 30 * x4;
        const double dh1 = 1 - 18 * x2 + 32 * x3 - 15 * x4;
        const double dh4 = -12 * x2 + 28 * x3 - 15 * x4;
        const double ddh0 = -60 * x + 180 * x2 - 120 * x3;
        const double ddh1 = -36 * x + 96 * x2 - 60 * x3;
        const double ddh4 = -24 * x + 84 * x2 - 60 * x3;

        p = h0 * p0 + h1 * T * v0 + h3 * p1 + h4 * T * v1;
        dp = (dh0 * (p0 - p1) + dh1 * T * v0 + dh4 * T * v1) / T;
        ddp = (ddh0 * (p0 - p1) + ddh1 * T * v0 + ddh4 * T * v1) / (T * T);
    }

    std::vector<Vec3> pts_;
    bool closed_;
    std::vector<double> edge_len_;
    std::vector<Vec3> dir_;
    std::vector<double> cum_;
    std::vector<double> delta_;
    double length_ = 0.0;
};

/// Samples a blended path at constant speed; `to_task` is the linear part of the
/// affine map from path coordinates to task space.
Trajectory sample_path(const BlendedPolyline& path, const Eigen::Matrix3d& to_task, const Vec3& offset,
                       double period, double duration, double sample_rate) {
    if (!(period > 0.0)) throw DomainError("trajectory period must be positive");
    const std::size_t n = sample_count(duration, sample_rate);
    Trajectory traj = make(TrajectorySpace::Task, sample_rate, n);
    const double v = path.length() / period;
    Vec3 p, dp, ddp;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = traj.samples[i].t;
        if (!path.closed() && t >= period) {
            path.eval(path.length(), v, p, dp, ddp);
            dp.setZero();
            ddp.setZero();
        } else {
            path.eval(v * t, v, p, dp, ddp);
        }
        const Vec3 pos = to_task * p + offset;
        const Vec3 vel = to_task * dp;
        const Vec3 acc = to_task * ddp;
        for (std::size_t c = 0; c < 3; ++c) {
            traj.samples[i].axis[c] = {pos[static_cast<int>(c)], vel[static_cast<int>(c)], acc[static_cast<int>(c)]};
        }
    }
    return traj;
}

}  // namespace

TaskPose Trajectory::pose(std::size_t i) const {
    const auto& s = samples.at(i);
    return {s.axis[0].pos, s.axis[1].pos, s.axis[2].pos};
}

std::vector<double> Trajectory::series(std::size_t channel, int component) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const AxisSample& a = s.axis.at(channel);
        out.push_back(component == 0 ? a.pos : component == 1 ? a.vel : a.acc);
    }
    return out;
}

TaskPlane TaskPlane::coordinate(Axis first, Axis second) {
    TaskPlane plane;
    plane.u = TaskPose{};
    plane.v = TaskPose{};
    plane.u[first] = 1.0;
    plane.v[second] = 1.0;
    return plane;
}

Trajectory staircase(double step_size, double dwell_s, int n_steps, double sample_rate) {
    if (!(dwell_s > 0.0)) throw DomainError("staircase dwell must be positive");
    if (n_steps < 0) throw DomainError("staircase step count must be non-negative");
    if (n_steps > 0 && step_size == 0.0) throw DomainError("staircase step size must be non-zero");
    const std::size_t per = std::max<std::size_t>(1, sample_count(dwell_s, sample_rate));
    const std::size_t plateaus = 2 * static_cast<std::size_t>(n_steps) + 1;
    Trajectory traj = make(TrajectorySpace::SingleAxis, sample_rate, per * plateaus);
    const double dt = 1.0 / sample_rate;
    const auto n = static_cast<std::size_t>(n_steps);
    auto level = [&](std::size_t j) { return step_size * static_cast<double>(j <= n ? j : 2 * n - j); };

    for (std::size_t j = 0; j < plateaus; ++j) {
        for (std::size_t i = j * per; i < (j + 1) * per; ++i) traj.samples[i].axis[0].pos = level(j);
    }
    for (std::size_t j = 1; j < plateaus; ++j) {
        const double jump = level(j) - level(j - 1);
        const std::size_t i = j * per;
        traj.samples[i - 1].axis[0].vel = jump / dt;
        traj.samples[i - 1].axis[0].acc += jump / (dt * dt);
        traj.samples[i].axis[0].acc -= jump / (dt * dt);
    }
    return traj;
}

Trajectory star(const StarSpec& spec, double duration, double sample_rate) {
    if (spec.n_points < 3) throw DomainError("a star needs at least 3 points");
    if (!(spec.radius > 0.0)) throw DomainError("star radius must be positive");
    if (!(spec.inner_ratio > 0.0 && spec.inner_ratio < 1.0)) throw DomainError("star inner ratio must be in (0, 1)");
    std::vector<Vec3> pts;
    const int vertices = 2 * spec.n_points;
    for (int k = 0; k < vertices; ++k) {
        const double ang = std::numbers::pi / 2.0 + k * std::numbers::pi / spec.n_points;
        const double r = (k % 2 == 0) ? spec.radius : spec.radius * spec.inner_ratio;
        pts.emplace_back(r * std::cos(ang), r * std::sin(ang), 0.0);
    }
    BlendedPolyline path(std::move(pts), true, spec.corner_fraction);
    Eigen::Matrix3d to_task = Eigen::Matrix3d::Zero();
    to_task.col(0) = spec.plane.u.vector();
    to_task.col(1) = spec.plane.v.vector();
    return sample_path(path, to_task, spec.plane.origin.vector(), spec.period, duration, sample_rate);
}

std::vector<TaskPose> load_polyline(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open polyline file " + path.string());
    std::vector<TaskPose> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::vector<double> vals;
        std::string token;
        while (fields >> token) {
            char* end = nullptr;
            const double v = std::strtod(token.c_str(), &end);
            if (end == token.c_str() || *end != '\0' || !std::isfinite(v)) {
                throw ParseError(path.string(), line_no, "not a number: '" + token + "'");
            }
            vals.push_back(v);
        }
        if (vals.empty()) continue;
        if (vals.size() != 2 && vals.size() != 3) {
            throw ParseError(path.string(), line_no, "expected 2 or 3 coordinates, found " + std::to_string(vals.size()));
        }
        if (width != 0 && vals.size() != width) {
            throw ParseError(path.string(), line_no, "mixed 2D and 3D vertices");
        }
        width = vals.size();
        out.push_back(width == 2 ? TaskPose{0.0, vals[0], vals[1]} : TaskPose{vals[0], vals[1], vals[2]});
    }
    if (out.size() < 2) throw ParseError(path.string(), line_no, "polyline needs at least 2 vertices");
    return out;
}

Trajectory polyline_trajectory(const std::vector<TaskPose>& vertices, double period, double duration,
                               double sample_rate, double corner_fraction) {
    if (vertices.size() < 2) throw DomainError("polyline needs at least 2 vertices");
    std::vector<Vec3> pts;
    for (const auto& v : vertices) pts.push_back(v.vector());
    const bool closed = vertices.size() > 2 && vertices.front() == vertices.back();
    BlendedPolyline path(std::move(pts), closed, corner_fraction);
    return sample_path(path, Eigen::Matrix3d::Identity(), Vec3::Zero(), period, duration, sample_rate);
}

Trajectory polyline_logo(const std::filesystem::path& path_file, double period, double duration,
                         double sample_rate, double corner_fraction) {
    return polyline_trajectory(load_polyline(path_file), period, duration, sample_rate, corner_fraction);
}

Trajectory archimedean_spiral_3d(const SpiralSpec& spec, double duration, double sample_rate) {
    if (!(spec.turns > 0.0)) throw DomainError("spiral needs a positive number of turns");
    if (!(spec.period > 0.0)) throw DomainError("spiral period must be positive");
    const std::size_t n = sample_count(duration, sample_rate);
    Trajectory traj = make(TrajectorySpace::Task, sample_rate, n);
    const double phi_end = 2.0 * std::numbers::pi * spec.turns;
    const double w = phi_end / spec.period;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = std::min(traj.samples[i].t, spec.period);
        const bool moving = traj.samples[i].t < spec.period;
        const double phi = w * t;
        const double r = spec.a + spec.b * phi;
        const double c = std::cos(phi), s = std::sin(phi);
        auto& out = traj.samples[i].axis;
        out[0].pos = -0.5 * spec.z_span + spec.z_span * phi / phi_end;
        out[1].pos = r * c;
        out[2].pos = r * s;
        if (moving) {
            const double rd = spec.b * w;
            out[0].vel = spec.z_span / spec.period;
            out[1].vel = rd * c - r * w * s;
            out[2].vel = rd * s + r * w * c;
            out[1].acc = -2.0 * rd * w * s - r * w * w * c;
            out[2].acc = 2.0 * rd * w * c - r * w * w * s;
        }
    }
    return traj;
}

Trajectory sinusoid(double amplitude, double freq, double cycles, double sample_rate) {
    if (!(freq > 0.0)) throw DomainError("sinusoid frequency must be positive");
    if (!(freq < 0.5 * sample_rate)) throw DomainError("sinusoid frequency must be below Nyquist");
    if (!(cycles > 0.0)) throw DomainError("sinusoid needs a positive number of cycles");
    const std::size_t n = sample_count(cycles / freq, sample_rate);
    Trajectory traj = make(TrajectorySpace::SingleAxis, sample_rate, n);
    const double w = 2.0 * std::numbers::pi * freq;
    for (auto& s : traj.samples) {
        const double ph = w * s.t;
        s.axis[0] = {amplitude * std::sin(ph), amplitude * w * std::cos(ph), -amplitude * w * w * std::sin(ph)};
    }
    return traj;
}

Trajectory zero_trajectory(double duration, double sample_rate, TrajectorySpace space) {
    return make(space, sample_rate, sample_count(duration, sample_rate));
}

Trajectory to_actuator_space(const Trajectory& task, const InverseJacobian& jinv) {
    if (task.space != TrajectorySpace::Task) throw DomainError("actuator mapping needs a task-space trajectory");
    Trajectory out = task;
    out.space = TrajectorySpace::Actuator;
    const Eigen::Matrix3d& m = jinv.matrix();
    for (auto& s : out.samples) {
        for (int comp = 0; comp < 3; ++comp) {
            Vec3 v;
            for (int c = 0; c < 3; ++c) {
                const AxisSample& a = s.axis[static_cast<std::size_t>(c)];
                v[c] = comp == 0 ? a.pos : comp == 1 ? a.vel : a.acc;
            }
            const Vec3 r = m * v;
            for (int c = 0; c < 3; ++c) {
                AxisSample& a = s.axis[static_cast<std::size_t>(c)];
                (comp == 0 ? a.pos : comp == 1 ? a.vel : a.acc) = r[c];
            }
        }
    }
    return out;
}

bool trajectory_feasible(const Trajectory& task, const InverseJacobian& jinv, double stroke_half) {
    if (task.space != TrajectorySpace::Task) throw DomainError("feasibility check needs a task-space trajectory");
    for (std::size_t i = 0; i < task.samples.size(); ++i) {
        if (!feasible(inverse_kinematics(task.pose(i), jinv), stroke_half)) return false;
    }
    return true;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    static const char* task_names[] = {"z", "theta_x", "theta_y"};
    static const char* act_names[] = {"a1", "a2", "a3"};
    const std::size_t ch = traj.channels();
    std::vector<std::string> header{"t"};
    for (const char* comp : {"pos", "vel", "acc"}) {
        for (std::size_t c = 0; c < ch; ++c) {
            std::string name = traj.space == TrajectorySpace::SingleAxis ? "x"
                               : traj.space == TrajectorySpace::Actuator ? act_names[c]
                                                                        : task_names[c];
            header.push_back(name + "_" + comp);
        }
    }
    csv::Writer w(path);
    w.header(header);
    std::vector<double> row(header.size());
    for (const auto& s : traj.samples) {
        row[0] = s.t;
        for (std::size_t c = 0; c < ch; ++c) {
            row[1 + c] = s.axis[c].pos;
            row[1 + ch + c] = s.axis[c].vel;
            row[1 + 2 * ch + c] = s.axis[c].acc;
        }
        w.row(row);
    }
    w.close();
}

}  // namespace flexpos

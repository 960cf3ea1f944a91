#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eclares {

/// Uniformly sampled states (columns) and zero-order-hold controls.
/// controls.cols() == states.cols() - 1.
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    Eigen::MatrixXd states;
    Eigen::MatrixXd controls;

    Eigen::Index size() const { return states.cols(); }
    Eigen::Index state_dim() const { return states.rows(); }
    Eigen::Index control_dim() const { return controls.rows(); }
    bool empty() const { return states.cols() == 0; }
    double time(Eigen::Index i) const { return t0 + static_cast<double>(i) * dt; }
    double end_time() const { return time(std::max<Eigen::Index>(0, size() - 1)); }
    double duration() const { return end_time() - t0; }

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("trajectory: dt must be positive");
        if (states.cols() == 0) throw std::invalid_argument("trajectory: no samples");
        if (controls.cols() != states.cols() - 1) throw std::invalid_argument("trajectory: expected one fewer control than states");
    }

    /// Linear interpolation in time, held constant outside [t0, end_time()].
    Eigen::VectorXd state_at(double t) const {
        if (size() == 1 || t <= t0) return states.col(0);
        const double s = (t - t0) / dt;
        const auto last = size() - 1;
        if (s >= static_cast<double>(last)) return states.col(last);
        const auto i = static_cast<Eigen::Index>(std::floor(s));
        const double a = s - static_cast<double>(i);
        if (a == 0.0) return states.col(i);
        return (1.0 - a) * states.col(i) + a * states.col(i + 1);
    }

    /// Zero-order-hold control active at time t (last control past the end).
    Eigen::VectorXd control_at(double t) const {
        if (controls.cols() == 0) return Eigen::VectorXd::Zero(controls.rows());
        const double s = (t - t0) / dt;
        const auto i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s + 1e-9)), 0, controls.cols() - 1);
        return controls.col(i);
    }
};

/// t, then one column per state component, then one per control component.
/// The final row has empty control cells.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& state_names = {},
                                 const std::vector<std::string>& control_names = {}) {
    os << "t";
    for (Eigen::Index i = 0; i < traj.state_dim(); ++i)
        os << ',' << (static_cast<std::size_t>(i) < state_names.size() ? state_names[static_cast<std::size_t>(i)] : "x" + std::to_string(i));
    for (Eigen::Index i = 0; i < traj.control_dim(); ++i)
        os << ',' << (static_cast<std::size_t>(i) < control_names.size() ? control_names[static_cast<std::size_t>(i)] : "u" + std::to_string(i));
    os << '\n';
    char buf[64];
    for (Eigen::Index k = 0; k < traj.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.6f", traj.time(k));
        os << buf;
        for (Eigen::Index i = 0; i < traj.state_dim(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.10g", traj.states(i, k));
            os << buf;
        }
        for (Eigen::Index i = 0; i < traj.control_dim(); ++i) {
            if (k < traj.controls.cols()) {
                std::snprintf(buf, sizeof buf, ",%.10g", traj.controls(i, k));
                os << buf;
            } else {
                os << ',';
            }
        }
        os << '\n';
    }
}

} // namespace eclares

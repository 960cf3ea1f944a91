#pragma once

// Error-state linear quadratic control for the quadrotor: a receding-horizon
// reference tracker and the back-to-base planner. Attitude errors use the
// three-parameter vector part of q_ref^* (x) q, which makes the reduced
// 12-state hover linearization controllable.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "eclares/trajectory.hpp"
#include "eclares/vehicle.hpp"

namespace eclares {

using ErrorVector = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat12x4 = Eigen::Matrix<double, 12, 4>;
using Mat4x12 = Eigen::Matrix<double, 4, 12>;

struct FullJacobians {
    Eigen::Matrix<double, 13, 13> A;
    Eigen::Matrix<double, 13, 4> B;
};

/// Analytic Jacobians of quadrotor_dynamics at (x, u).
inline FullJacobians quadrotor_jacobians(const QuadVector& x, const RotorCommand& u, const QuadrotorParams& p) {
    const Vec4 q = x.segment<4>(3);
    const Vec3 w = x.segment<3>(10);
    const Mat3 J = p.inertia_matrix();
    const Mat3 J_inv = J.inverse();
    const Eigen::Matrix4d alloc = rotor_allocation(p);
    const double thrust = alloc.row(0).dot(u);
    const Vec3 b(0.0, 0.0, thrust);
    const double s = q[0];
    const Vec3 v = q.tail<3>();

    FullJacobians jac;
    jac.A.setZero();
    jac.B.setZero();

    jac.A.block<3, 3>(0, 7) = Mat3::Identity();

    Vec4 w_quat;
    w_quat << 0.0, w;
    jac.A.block<4, 4>(3, 3) = 0.5 * quat_right(w_quat);
    jac.A.block<4, 3>(3, 10) = 0.5 * quat_left(q) * quat_embed();

    // d(R(q) b)/dq for the quadratic form of R(q)
    Eigen::Matrix<double, 3, 4> dRb;
    dRb.col(0) = 2.0 * s * b + 2.0 * v.cross(b);
    dRb.rightCols<3>() = -2.0 * b * v.transpose() + 2.0 * v.dot(b) * Mat3::Identity() + 2.0 * v * b.transpose() - 2.0 * s * hat(b);
    jac.A.block<3, 4>(7, 3) = dRb / p.mass;
    jac.B.block<3, 4>(7, 0) = rotation_matrix(q).col(2) * alloc.row(0) / p.mass;

    jac.A.block<3, 3>(10, 10) = J_inv * (-hat(w) * J + hat(J * w));
    jac.B.block<3, 4>(10, 0) = J_inv * alloc.bottomRows<3>();
    return jac;
}

/// G(q) = L(q) H, mapping attitude-error rates to quaternion rates.
inline Eigen::Matrix<double, 4, 3> attitude_jacobian(const Vec4& q) { return quat_left(q) * quat_embed(); }

/// Error state of x relative to x_ref: [dr, phi, dv, dw], phi = vec(q_ref^* (x) q)
/// with the sign chosen on the short arc.
inline ErrorVector state_error(const QuadVector& x, const QuadVector& x_ref) {
    ErrorVector z;
    z.segment<3>(0) = x.segment<3>(0) - x_ref.segment<3>(0);
    Vec4 dq = quat_multiply(quat_conjugate(x_ref.segment<4>(3)), x.segment<4>(3));
    if (dq[0] < 0.0) dq = -dq;
    z.segment<3>(3) = dq.tail<3>();
    z.segment<3>(6) = x.segment<3>(7) - x_ref.segment<3>(7);
    z.segment<3>(9) = x.segment<3>(10) - x_ref.segment<3>(10);
    return z;
}

/// Inverse of state_error: q = q_ref (x) [sqrt(1 - |phi|^2), phi].
inline QuadVector compose_error(const QuadVector& x_ref, const ErrorVector& z) {
    QuadVector x;
    x.segment<3>(0) = x_ref.segment<3>(0) + z.segment<3>(0);
    Vec3 phi = z.segment<3>(3);
    if (phi.squaredNorm() > 1.0) phi.normalize();
    Vec4 dq;
    dq << std::sqrt(std::max(0.0, 1.0 - phi.squaredNorm())), phi;
    x.segment<4>(3) = quat_multiply(x_ref.segment<4>(3), dq).normalized();
    x.segment<3>(7) = x_ref.segment<3>(7) + z.segment<3>(6);
    x.segment<3>(10) = x_ref.segment<3>(10) + z.segment<3>(9);
    return x;
}

struct LinearModel {
    Mat12 A;
    Mat12x4 B;
};

/// Reduced error-state linearization about a hover equilibrium.
inline LinearModel linearize(const QuadVector& x_eq, const RotorCommand& u_eq, const QuadrotorParams& p) {
    const Vec4 q = x_eq.segment<4>(3);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw std::invalid_argument("linearize: equilibrium attitude is not a unit quaternion");
    const FullJacobians jac = quadrotor_jacobians(x_eq, u_eq, p);
    Eigen::Matrix<double, 13, 12> E = Eigen::Matrix<double, 13, 12>::Zero();
    E.block<3, 3>(0, 0) = Mat3::Identity();
    E.block<4, 3>(3, 3) = attitude_jacobian(q);
    E.block<6, 6>(7, 6) = Eigen::Matrix<double, 6, 6>::Identity();
    LinearModel m;
    m.A = E.transpose() * jac.A * E;
    m.B = E.transpose() * jac.B;
    return m;
}

/// Zero-order-hold discretization.
inline LinearModel discretize(const LinearModel& c, double dt) {
    Eigen::Matrix<double, 16, 16> M = Eigen::Matrix<double, 16, 16>::Zero();
    M.topLeftCorner<12, 12>() = c.A * dt;
    M.topRightCorner<12, 4>() = c.B * dt;
    const Eigen::Matrix<double, 16, 16> E = M.exp();
    return LinearModel{E.topLeftCorner<12, 12>(), E.topRightCorner<12, 4>()};
}

inline QuadVector hover_state(const Vec3& position) { return QuadrotorState::at_rest(position).vector(); }

struct TrackingConfig {
    double dt = 0.05;      ///< control period, s
    double horizon = 2.0;  ///< T_N, s
    double position_weight = 20.0;
    double attitude_weight = 1.0;
    double velocity_weight = 2.0;
    double angular_velocity_weight = 0.05;
    double control_weight = 1.0;
    double thrust_min = 0.0;  ///< per rotor command
    double thrust_max = 2.5;

    int steps() const { return static_cast<int>(std::llround(horizon / dt)); }

    Mat12 state_weight() const {
        ErrorVector d;
        d << Vec3::Constant(position_weight), Vec3::Constant(attitude_weight), Vec3::Constant(velocity_weight),
            Vec3::Constant(angular_velocity_weight);
        return d.asDiagonal();
    }

    Eigen::Matrix4d control_weight_matrix() const { return Eigen::Matrix4d::Identity() * control_weight; }

    void validate() const {
        if (!(dt > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("tracking: dt and horizon must be positive");
        if (std::abs(horizon / dt - std::round(horizon / dt)) > 1e-9) throw std::invalid_argument("tracking: horizon must be a multiple of dt");
        if (!(position_weight > 0.0 && attitude_weight > 0.0 && velocity_weight > 0.0 && angular_velocity_weight > 0.0))
            throw std::invalid_argument("tracking: state weights must be positive");
        if (!(control_weight > 0.0)) throw std::invalid_argument("tracking: control weight must be positive");
        if (!(thrust_max > thrust_min)) throw std::invalid_argument("tracking: thrust_max must exceed thrust_min");
    }

    bool operator==(const TrackingConfig&) const = default;
};

/// Finite-horizon LQR gains for a time-invariant model. Entry k holds the
/// quantities used at stage k, derived from the cost-to-go at k + 1.
struct LqrSchedule {
    std::vector<Mat4x12> gain;          ///< K_k
    std::vector<Mat4x12> feedforward;   ///< (R + B'P_{k+1}B)^-1 B'
    std::vector<Mat12> closed_loop;     ///< A - B K_k
    Mat12 stage_weight;
    Mat12 terminal_weight;

    int steps() const { return static_cast<int>(gain.size()); }
};

inline LqrSchedule lqr_schedule(const LinearModel& d, const Mat12& Q, const Eigen::Matrix4d& R, const Mat12& Qf, int steps) {
    LqrSchedule s;
    s.stage_weight = Q;
    s.terminal_weight = Qf;
    s.gain.resize(static_cast<std::size_t>(steps));
    s.feedforward.resize(static_cast<std::size_t>(steps));
    s.closed_loop.resize(static_cast<std::size_t>(steps));
    Mat12 P = Qf;
    for (int k = steps - 1; k >= 0; --k) {
        const Eigen::Matrix4d S = R + d.B.transpose() * P * d.B;
        const Eigen::LDLT<Eigen::Matrix4d> ldlt(S);
        const Mat4x12 G = ldlt.solve(d.B.transpose());
        const Mat4x12 K = G * P * d.A;
        const Mat12 Acl = d.A - d.B * K;
        P = Q + d.A.transpose() * P * Acl;
        P = 0.5 * (P + P.transpose()).eval();
        s.gain[static_cast<std::size_t>(k)] = K;
        s.feedforward[static_cast<std::size_t>(k)] = G;
        s.closed_loop[static_cast<std::size_t>(k)] = Acl;
    }
    return s;
}

/// Quadratic tracking policy pi(chi, x_ref): solves the horizon problem on the
/// reduced hover model and applies the first control plus hover feedforward.
class TrackingController {
public:
    TrackingController(QuadrotorParams quad, TrackingConfig cfg) : quad_(quad), cfg_(cfg) {
        quad_.validate();
        cfg_.validate();
        hover_ = RotorCommand::Constant(quad_.hover_command());
        continuous_ = linearize(hover_state(Vec3::Zero()), hover_, quad_);
        discrete_ = discretize(continuous_, cfg_.dt);
        const Mat12 Q = cfg_.state_weight();
        schedule_ = lqr_schedule(discrete_, Q, cfg_.control_weight_matrix(), Q, cfg_.steps());
    }

    const QuadrotorParams& quad() const { return quad_; }
    const TrackingConfig& config() const { return cfg_; }
    const LinearModel& continuous_model() const { return continuous_; }
    const LinearModel& discrete_model() const { return discrete_; }
    const LqrSchedule& schedule() const { return schedule_; }
    const RotorCommand& hover() const { return hover_; }

    RotorCommand clamp(const RotorCommand& u, bool* saturated = nullptr) const {
        const RotorCommand c = u.cwiseMax(cfg_.thrust_min).cwiseMin(cfg_.thrust_max);
        if (saturated) *saturated = (c.array() != u.array()).any();
        return c;
    }

    /// `reference` holds 13-component quadrotor states; samples past its end
    /// repeat the final state.
    RotorCommand track_step(const QuadVector& x, const Trajectory& reference, double t_now, bool* saturated = nullptr) const {
        if (reference.state_dim() != 13) throw std::invalid_argument("track_step: reference must hold quadrotor states");
        const int n = schedule_.steps();
        // Error coordinates about a hover origin at the robot's position.
        const QuadVector origin = hover_state(x.segment<3>(0));
        auto ref_error = [&](int k) { return state_error(reference.state_at(t_now + k * cfg_.dt), origin); };

        ErrorVector p = -schedule_.terminal_weight * ref_error(n);
        for (int k = n - 1; k >= 1; --k)
            p = -schedule_.stage_weight * ref_error(k) + schedule_.closed_loop[static_cast<std::size_t>(k)].transpose() * p;
        const ErrorVector z0 = state_error(x, origin);
        const Eigen::Vector4d w = -schedule_.gain[0] * z0 - schedule_.feedforward[0] * p;
        return clamp(hover_ + w, saturated);
    }

    /// Feedback about a known feasible trajectory sample: u_ff - K (x - x_ref).
    RotorCommand follow(const QuadVector& x, const QuadVector& x_ref, const RotorCommand& u_ff, bool* saturated = nullptr) const {
        const ErrorVector z = state_error(x, x_ref);
        return clamp(u_ff - schedule_.gain[0] * z, saturated);
    }

private:
    QuadrotorParams quad_;
    TrackingConfig cfg_;
    RotorCommand hover_;
    LinearModel continuous_;
    LinearModel discrete_;
    LqrSchedule schedule_;
};

struct B2bConfig {
    double horizon = 5.0;                      ///< T_B, s
    std::array<double, 3> charger{0.0, 0.0, 1.0}; ///< charging station position, at rest, level
    double arrival_position_tolerance = 0.3;   ///< m
    double arrival_velocity_tolerance = 0.3;   ///< m/s
    // Stage weights of the error state. Kept light on position and heavy on
    // attitude so that long returns spread over the horizon with small tilts.
    double position_weight = 0.001;
    double attitude_weight = 50.0;
    double velocity_weight = 0.1;
    double angular_velocity_weight = 0.05;
    double terminal_weight = 50.0;             ///< terminal weight = this times the tracking state weight

    Mat12 state_weight() const {
        ErrorVector d;
        d << Vec3::Constant(position_weight), Vec3::Constant(attitude_weight), Vec3::Constant(velocity_weight),
            Vec3::Constant(angular_velocity_weight);
        return d.asDiagonal();
    }

    Vec3 charger_position() const { return Vec3(charger[0], charger[1], charger[2]); }
    QuadVector charger_state() const { return hover_state(charger_position()); }

    void validate(double dt) const {
        if (!(horizon > 0.0)) throw std::invalid_argument("b2b: horizon must be positive");
        if (std::abs(horizon / dt - std::round(horizon / dt)) > 1e-9) throw std::invalid_argument("b2b: horizon must be a multiple of the tracking dt");
        if (!(arrival_position_tolerance > 0.0 && arrival_velocity_tolerance > 0.0))
            throw std::invalid_argument("b2b: arrival tolerances must be positive");
        if (!(terminal_weight > 0.0)) throw std::invalid_argument("b2b: terminal weight must be positive");
        if (!(position_weight > 0.0 && attitude_weight > 0.0 && velocity_weight > 0.0 && angular_velocity_weight > 0.0))
            throw std::invalid_argument("b2b: state weights must be positive");
    }

    int steps(double dt) const { return static_cast<int>(std::llround(horizon / dt)); }

    bool operator==(const B2bConfig&) const = default;
};

/// True when x is inside the charger's arrival ball (position and speed).
inline bool within_arrival(const QuadVector& x, const B2bConfig& cfg) {
    return (x.segment<3>(0) - cfg.charger_position()).norm() <= cfg.arrival_position_tolerance &&
           x.segment<3>(7).norm() <= cfg.arrival_velocity_tolerance;
}

struct B2bPlan {
    Trajectory trajectory; ///< 13-component states, rotor commands
    double cost = 0.0;     ///< quadratic objective of the linear plan
};

/// Back-to-base solver: regulates the reduced linear model to the charger state
/// with clamped controls, then maps the plan back to full quadrotor states.
class BackToBasePlanner {
public:
    BackToBasePlanner(const TrackingController& tracker, B2bConfig cfg) : tracker_(tracker), cfg_(cfg) {
        cfg_.validate(tracker_.config().dt);
        schedule_ = lqr_schedule(tracker_.discrete_model(), cfg_.state_weight(), tracker_.config().control_weight_matrix(),
                                 cfg_.terminal_weight * tracker_.config().state_weight(), cfg_.steps(tracker_.config().dt));
    }

    const B2bConfig& config() const { return cfg_; }

    B2bPlan solve(const QuadVector& start, double t0 = 0.0) const {
        if (!start.allFinite()) throw std::invalid_argument("b2b: start state must be finite");
        const LinearModel& d = tracker_.discrete_model();
        const Mat12 Q = schedule_.stage_weight;
        const Eigen::Matrix4d R = tracker_.config().control_weight_matrix();
        const QuadVector goal = cfg_.charger_state();
        const int n = schedule_.steps();

        B2bPlan plan;
        plan.trajectory.t0 = t0;
        plan.trajectory.dt = tracker_.config().dt;
        plan.trajectory.states.resize(13, n + 1);
        plan.trajectory.controls.resize(4, n);

        ErrorVector z = state_error(start, goal);
        plan.trajectory.states.col(0) = start;
        for (int k = 0; k < n; ++k) {
            const RotorCommand u = tracker_.clamp(tracker_.hover() - schedule_.gain[static_cast<std::size_t>(k)] * z);
            const Eigen::Vector4d w = u - tracker_.hover();
            plan.cost += z.dot(Q * z) + w.dot(R * w);
            z = d.A * z + d.B * w;
            plan.trajectory.controls.col(k) = u;
            plan.trajectory.states.col(k + 1) = compose_error(goal, z);
        }
        plan.cost += z.dot(schedule_.terminal_weight * z);
        return plan;
    }

private:
    const TrackingController& tracker_;
    B2bConfig cfg_;
    LqrSchedule schedule_;
};

inline B2bPlan solve_b2b(const QuadVector& start, const B2bConfig& cfg, const TrackingController& tracker, double t0 = 0.0) {
    return BackToBasePlanner(tracker, cfg).solve(start, t0);
}

/// Lifts a planar double-integrator trajectory (x, y, vx, vy) to level
/// quadrotor states at a fixed altitude with hover commands.
inline Trajectory lift_reference(const Trajectory& planar, double altitude, double hover_command) {
    if (planar.state_dim() != 4) throw std::invalid_argument("lift_reference: expected planar (x, y, vx, vy) states");
    Trajectory out;
    out.t0 = planar.t0;
    out.dt = planar.dt;
    out.states.resize(13, planar.size());
    for (Eigen::Index k = 0; k < planar.size(); ++k) {
        QuadrotorState s;
        s.position = Vec3(planar.states(0, k), planar.states(1, k), altitude);
        s.velocity = Vec3(planar.states(2, k), planar.states(3, k), 0.0);
        out.states.col(k) = s.vector();
    }
    out.controls = Eigen::MatrixXd::Constant(4, std::max<Eigen::Index>(0, planar.size() - 1), hover_command);
    return out;
}

} // namespace eclares

#pragma once

// Rigid-body quadrotor with quaternion attitude (scalar first), a battery
// discharge model, and the classical RK4 integrator.
//
// State x = [r (3), q (4), v (3), w (3)]; control u = 4 rotor thrust commands.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

namespace eclares {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using QuadVector = Eigen::Matrix<double, 13, 1>;
using RotorCommand = Eigen::Vector4d;

inline Mat3 hat(const Vec3& x) {
    Mat3 m;
    m << 0.0, -x.z(), x.y(),
         x.z(), 0.0, -x.x(),
         -x.y(), x.x(), 0.0;
    return m;
}

/// L(q) with q (x) p = L(q) p.
inline Mat4 quat_left(const Vec4& q) {
    Mat4 m;
    const double s = q[0];
    const Vec3 v = q.tail<3>();
    m(0, 0) = s;
    m.block<1, 3>(0, 1) = -v.transpose();
    m.block<3, 1>(1, 0) = v;
    m.block<3, 3>(1, 1) = s * Mat3::Identity() + hat(v);
    return m;
}

/// R(p) with q (x) p = R(p) q.
inline Mat4 quat_right(const Vec4& p) {
    Mat4 m;
    const double s = p[0];
    const Vec3 v = p.tail<3>();
    m(0, 0) = s;
    m.block<1, 3>(0, 1) = -v.transpose();
    m.block<3, 1>(1, 0) = v;
    m.block<3, 3>(1, 1) = s * Mat3::Identity() - hat(v);
    return m;
}

inline Vec4 quat_multiply(const Vec4& q, const Vec4& p) { return quat_left(q) * p; }

inline Vec4 quat_conjugate(const Vec4& q) { return Vec4(q[0], -q[1], -q[2], -q[3]); }

/// Embeds a 3-vector as a pure quaternion.
inline Eigen::Matrix<double, 4, 3> quat_embed() {
    Eigen::Matrix<double, 4, 3> H = Eigen::Matrix<double, 4, 3>::Zero();
    H.bottomRows<3>() = Mat3::Identity();
    return H;
}

/// Rotation matrix of q, written as a homogeneous quadratic in q.
inline Mat3 rotation_matrix(const Vec4& q) {
    const double s = q[0];
    const Vec3 v = q.tail<3>();
    return (s * s - v.squaredNorm()) * Mat3::Identity() + 2.0 * v * v.transpose() + 2.0 * s * hat(v);
}

struct QuadrotorParams {
    double mass = 0.5;                                  ///< kg
    std::array<double, 3> inertia{2.3e-3, 2.3e-3, 4.0e-3}; ///< principal moments, kg m^2
    double arm_length = 0.175;                          ///< m, centre to rotor
    double thrust_coefficient = 1.0;                    ///< N per unit command
    double moment_coefficient = 0.0245;                 ///< N m per unit command (yaw drag)
    double gravity = 9.81;

    Mat3 inertia_matrix() const { return Eigen::Vector3d(inertia[0], inertia[1], inertia[2]).asDiagonal(); }

    double hover_command() const { return mass * gravity / (4.0 * thrust_coefficient); }

    void validate() const {
        if (!(mass > 0.0)) throw std::invalid_argument("quadrotor: mass must be positive");
        for (double j : inertia)
            if (!(j > 0.0)) throw std::invalid_argument("quadrotor: inertia must be positive-definite");
        if (!(arm_length > 0.0) || !(thrust_coefficient > 0.0) || !(moment_coefficient >= 0.0) || !(gravity >= 0.0))
            throw std::invalid_argument("quadrotor: rotor geometry and gravity must be positive");
    }

    bool operator==(const QuadrotorParams&) const = default;
};

/// X-configuration mixer. Rotors sit at (+d,+d), (-d,+d), (-d,-d), (+d,-d)
/// with d = arm / sqrt(2); rotors 1 and 3 produce positive yaw drag.
/// Returns [total thrust; body torque] as a linear map of the commands.
inline Eigen::Matrix4d rotor_allocation(const QuadrotorParams& p) {
    const double kf = p.thrust_coefficient;
    const double d = p.arm_length / std::sqrt(2.0) * kf;
    const double km = p.moment_coefficient;
    Eigen::Matrix4d m;
    m << kf, kf, kf, kf,
         d, d, -d, -d,
         -d, d, d, -d,
         km, -km, km, -km;
    return m;
}

struct QuadrotorState {
    Vec3 position = Vec3::Zero();
    Vec4 attitude = Vec4(1.0, 0.0, 0.0, 0.0);
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();

    QuadVector vector() const {
        QuadVector x;
        x << position, attitude, velocity, angular_velocity;
        return x;
    }

    static QuadrotorState from_vector(const QuadVector& x) {
        return QuadrotorState{x.segment<3>(0), x.segment<4>(3), x.segment<3>(7), x.segment<3>(10)};
    }

    static QuadrotorState at_rest(const Vec3& position) { return QuadrotorState{position}; }
};

/// x' = [v, 1/2 L(q) H w, F_world / m, J^-1 (tau - w x J w)]
inline QuadVector quadrotor_dynamics(const QuadVector& x, const RotorCommand& u, const QuadrotorParams& p) {
    const Vec4 q = x.segment<4>(3);
    const Vec3 v = x.segment<3>(7);
    const Vec3 w = x.segment<3>(10);
    const Mat3 J = p.inertia_matrix();

    const Vec4 wrench = rotor_allocation(p) * u;
    const Vec3 force = rotation_matrix(q) * Vec3(0.0, 0.0, wrench[0]) - Vec3(0.0, 0.0, p.mass * p.gravity);
    const Vec3 torque = wrench.tail<3>();

    QuadVector dx;
    dx.segment<3>(0) = v;
    dx.segment<4>(3) = 0.5 * quat_left(q) * quat_embed() * w;
    dx.segment<3>(7) = force / p.mass;
    dx.segment<3>(10) = J.inverse() * (torque - hat(w) * J * w);
    return dx;
}

struct BatteryParams {
    double capacity = 1.0;            ///< rated capacity (normalized)
    double efficiency = 0.95;         ///< coulombic efficiency
    double discharge_gain = 1.944e-3; ///< k_d in alpha(s) = k_d s

    void validate() const {
        if (!(capacity > 0.0) || !(efficiency > 0.0 && efficiency <= 1.0) || !(discharge_gain > 0.0))
            throw std::invalid_argument("battery: capacity, efficiency in (0, 1] and discharge gain must be positive");
    }

    /// Discharge gain that makes a full charge last `seconds` of hover.
    static double gain_for_hover(const QuadrotorParams& quad, double capacity, double efficiency, double seconds) {
        const double h = quad.hover_command();
        return capacity / (efficiency * 4.0 * h * h * seconds);
    }

    bool operator==(const BatteryParams&) const = default;
};

/// e' = -eta / C * alpha(|u|^2), alpha(s) = k_d s.
inline double battery_rate(double soc, const RotorCommand& u, const BatteryParams& p) {
    if (!(soc >= 0.0 && soc <= 1.0)) throw std::invalid_argument("battery: state of charge must lie in [0, 1]");
    return -p.efficiency / p.capacity * p.discharge_gain * u.squaredNorm();
}

/// One classical RK4 step with the control held constant.
template <class State, class Control, class Derivative>
State rk4_step(Derivative&& f, const State& x, const Control& u, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4: dt must be positive");
    const State k1 = f(x, u);
    const State k2 = f(State(x + 0.5 * dt * k1), u);
    const State k3 = f(State(x + 0.5 * dt * k2), u);
    const State k4 = f(State(x + dt * k3), u);
    State next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if constexpr (std::is_arithmetic_v<State>) {
        if (!std::isfinite(next)) throw std::runtime_error("rk4: non-finite state");
    } else {
        if (!next.allFinite()) throw std::runtime_error("rk4: non-finite state");
    }
    return next;
}

/// Robot state plus state of charge.
struct SystemState {
    QuadVector robot = QuadrotorState{}.vector();
    double soc = 1.0;

    Vec3 position() const { return robot.segment<3>(0); }
    Vec3 velocity() const { return robot.segment<3>(7); }
};

using SystemVector = Eigen::Matrix<double, 14, 1>;

/// RK4 on the augmented robot + battery system, then quaternion
/// renormalization and SoC clamped at zero.
inline SystemState step_system(const SystemState& chi, const RotorCommand& u, const QuadrotorParams& quad,
                               const BatteryParams& battery, double dt) {
    auto f = [&](const SystemVector& z, const RotorCommand& uu) {
        SystemVector dz;
        dz.head<13>() = quadrotor_dynamics(z.head<13>(), uu, quad);
        dz[13] = -battery.efficiency / battery.capacity * battery.discharge_gain * uu.squaredNorm();
        return dz;
    };
    SystemVector z;
    z << chi.robot, chi.soc;
    const SystemVector next = rk4_step(f, z, u, dt);
    SystemState out;
    out.robot = next.head<13>();
    out.robot.segment<4>(3).normalize();
    out.soc = std::clamp(next[13], 0.0, 1.0);
    return out;
}

/// RK4 on the robot alone with renormalization.
inline QuadVector step_quadrotor(const QuadVector& x, const RotorCommand& u, const QuadrotorParams& p, double dt) {
    QuadVector next = rk4_step([&](const QuadVector& s, const RotorCommand& c) { return quadrotor_dynamics(s, c, p); }, x, u, dt);
    next.segment<4>(3).normalize();
    return next;
}

} // namespace eclares

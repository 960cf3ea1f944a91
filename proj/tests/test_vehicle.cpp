#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eclares/vehicle.hpp"

using namespace eclares;

namespace {

Vec4 random_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return Vec4(n(rng), n(rng), n(rng), n(rng));
}

QuadVector hover_at(const Vec3& p) { return QuadrotorState::at_rest(p).vector(); }

} // namespace

TEST(Hat, Examples) {
    EXPECT_EQ(hat(Vec3::Zero()), Mat3::Zero());
    EXPECT_EQ(hat(Vec3(1, 0, 0)) * Vec3(0, 1, 0), Vec3(0, 0, 1));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    for (int i = 0; i < 20; ++i) {
        const Vec3 x(n(rng), n(rng), n(rng)), y(n(rng), n(rng), n(rng));
        EXPECT_EQ(hat(x).transpose(), Mat3(-hat(x)));
        EXPECT_LT((hat(x) * y - x.cross(y)).norm(), 1e-14);
    }
}

TEST(QuatLeft, Examples) {
    EXPECT_EQ(quat_left(Vec4(1, 0, 0, 0)), Mat4::Identity());
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
        const Vec4 q = random_quat(rng), p = random_quat(rng);
        EXPECT_EQ(quat_left(q) * Vec4(1, 0, 0, 0), q);
        EXPECT_NEAR((quat_left(q) * p).norm(), q.norm() * p.norm(), 1e-12);
        EXPECT_LT((quat_left(q) * p - quat_right(p) * q).norm(), 1e-12);
    }
    // i * j = k in the Hamilton convention
    EXPECT_EQ(quat_multiply(Vec4(0, 1, 0, 0), Vec4(0, 0, 1, 0)), Vec4(0, 0, 0, 1));
}

TEST(RotationMatrix, MatchesEigen) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Vec4 q = random_quat(rng).normalized();
        const Eigen::Quaterniond e(q[0], q[1], q[2], q[3]);
        EXPECT_LT((rotation_matrix(q) - e.toRotationMatrix()).norm(), 1e-12);
    }
}

TEST(QuadrotorDynamics, Examples) {
    const QuadrotorParams p;
    const QuadVector x = hover_at(Vec3(1, 2, 3));
    EXPECT_LT(quadrotor_dynamics(x, RotorCommand::Constant(p.hover_command()), p).norm(), 1e-10);

    const QuadVector fall = quadrotor_dynamics(x, RotorCommand::Zero(), p);
    EXPECT_LT((fall.segment<3>(7) - Vec3(0, 0, -p.gravity)).norm(), 1e-15);

    QuadVector spin = x;
    spin.segment<3>(10) = Vec3(0, 0, 1);
    const QuadVector ds = quadrotor_dynamics(spin, RotorCommand::Constant(p.hover_command()), p);
    EXPECT_LT((ds.segment<4>(3) - Vec4(0, 0, 0, 0.5)).norm(), 1e-15);
    EXPECT_LT(ds.segment<3>(0).norm() + ds.segment<3>(7).norm(), 1e-12);
}

TEST(QuadrotorDynamics, AllocationProducesExpectedWrench) {
    const QuadrotorParams p;
    const Eigen::Matrix4d M = rotor_allocation(p);
    // total thrust row is the sum of the rotor thrusts
    EXPECT_NEAR(M.row(0).sum(), 4.0 * p.thrust_coefficient, 1e-15);
    EXPECT_NE(M.determinant(), 0.0);
}

TEST(BatteryRate, Examples) {
    const BatteryParams b;
    EXPECT_EQ(battery_rate(0.5, RotorCommand::Zero(), b), 0.0);
    const RotorCommand u(1.0, 1.2, 0.8, 1.1);
    const double r = battery_rate(0.5, u, b);
    EXPECT_LT(r, 0.0);
    EXPECT_NEAR(r, -b.efficiency / b.capacity * b.discharge_gain * u.squaredNorm(), 1e-18);
    EXPECT_NEAR(battery_rate(0.5, RotorCommand(2.0 * u), b), 4.0 * r, 1e-18);
    EXPECT_THROW(battery_rate(1.5, u, b), std::invalid_argument);

    // constant u: linear decline, integrated exactly by RK4
    const QuadrotorParams p;
    SystemState s;
    s.robot = hover_at(Vec3(0, 0, 1));
    for (int k = 0; k < 100; ++k) s = step_system(s, u, p, b, 0.05);
    EXPECT_NEAR(s.soc, 1.0 + 5.0 * r, 1e-12);
}

TEST(BatteryParams, GainForHover) {
    const QuadrotorParams p;
    BatteryParams b;
    b.discharge_gain = BatteryParams::gain_for_hover(p, b.capacity, b.efficiency, 90.0);
    EXPECT_NEAR(-1.0 / battery_rate(1.0, RotorCommand::Constant(p.hover_command()), b), 90.0, 1e-9);
}

TEST(Rk4, Examples) {
    auto zero = [](const QuadVector&, int) { return QuadVector::Zero().eval(); };
    const QuadVector x = QuadVector::Random();
    EXPECT_EQ(rk4_step(zero, x, 0, 0.1), x);

    auto expo = [](double y, int) { return y; };
    EXPECT_NEAR(rk4_step(expo, 1.0, 0, 0.1), std::exp(0.1), 1e-7); // local error h^5/120
    EXPECT_NEAR(rk4_step(expo, 1.0, 0, 0.1), 1.1051708333333333, 1e-15);
    EXPECT_THROW(rk4_step(expo, 1.0, 0, 0.0), std::invalid_argument);
    auto blow = [](double, int) { return std::numeric_limits<double>::infinity(); };
    EXPECT_THROW(rk4_step(blow, 1.0, 0, 0.1), std::runtime_error);
}

TEST(Rk4, ObservedFourthOrder) {
    auto expo = [](double y, int) { return y; };
    auto error = [&](double dt) {
        double y = 1.0;
        const int n = static_cast<int>(std::llround(1.0 / dt));
        for (int i = 0; i < n; ++i) y = rk4_step(expo, y, 0, dt);
        return std::abs(y - std::exp(1.0));
    };
    const double e1 = error(0.1), e2 = error(0.05), e3 = error(0.025);
    EXPECT_GE(std::log2(e1 / e2), 3.8);
    EXPECT_GE(std::log2(e2 / e3), 3.8);
}

TEST(Quadrotor, QuaternionNormPreservedWhileTumbling) {
    QuadrotorParams p;
    p.inertia = {0.0023, 0.0031, 0.0047};
    QuadVector x = hover_at(Vec3(0, 0, 1));
    x.segment<3>(10) = Vec3(3.0, -2.0, 5.0);
    const RotorCommand u = RotorCommand::Constant(p.hover_command());
    double drift = 0.0;
    for (int k = 0; k < 10000; ++k) {
        x = step_quadrotor(x, u, p, 0.001);
        drift = std::max(drift, std::abs(x.segment<4>(3).norm() - 1.0));
    }
    EXPECT_LT(drift, 1e-6);
}

TEST(Quadrotor, AngularMomentumConservedWithoutTorque) {
    QuadrotorParams p;
    p.inertia = {0.0023, 0.0031, 0.0047};
    QuadVector x = hover_at(Vec3(0, 0, 1));
    x.segment<3>(10) = Vec3(1.0, 2.0, -0.5);
    const Mat3 J = p.inertia_matrix();
    const double h0 = (J * x.segment<3>(10)).norm();
    for (int k = 0; k < 1000; ++k) x = step_quadrotor(x, RotorCommand::Zero(), p, 0.001);
    EXPECT_LT(std::abs((J * x.segment<3>(10)).norm() - h0) / h0, 1e-4);
}

TEST(StepSystem, SocMonotoneAndClamped) {
    const QuadrotorParams p;
    BatteryParams b;
    b.discharge_gain = BatteryParams::gain_for_hover(p, 1.0, b.efficiency, 2.0);
    SystemState s;
    s.robot = hover_at(Vec3(0, 0, 1));
    double prev = s.soc;
    for (int k = 0; k < 100; ++k) {
        s = step_system(s, RotorCommand::Constant(p.hover_command()), p, b, 0.05);
        ASSERT_LE(s.soc, prev);
        ASSERT_GE(s.soc, 0.0);
        prev = s.soc;
    }
    EXPECT_EQ(s.soc, 0.0);
    EXPECT_NEAR(s.robot.segment<4>(3).norm(), 1.0, 1e-12);
}

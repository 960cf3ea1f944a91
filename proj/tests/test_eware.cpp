#include <cmath>

#include <gtest/gtest.h>

#include "eclares/eware.hpp"

using namespace eclares;

namespace {

Trajectory constant_reference(const QuadVector& x, double t0, double duration, double dt) {
    const auto n = static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;
    Trajectory t;
    t.t0 = t0;
    t.dt = dt;
    t.states = x.replicate(1, n);
    t.controls = Eigen::MatrixXd::Zero(4, n - 1);
    return t;
}

// Slow straight-line reference away from the charger, at flight altitude.
Trajectory line_reference(const Vec3& from, const Vec3& velocity, double t0, double duration, double dt) {
    const auto n = static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;
    Trajectory t;
    t.t0 = t0;
    t.dt = dt;
    t.states.resize(13, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        QuadrotorState s;
        s.position = from + velocity * (k * dt);
        s.velocity = velocity;
        t.states.col(k) = s.vector();
    }
    t.controls = Eigen::MatrixXd::Zero(4, n - 1);
    return t;
}

CandidateTrajectory synthetic(double soc_dip, const Vec3& terminal) {
    CandidateTrajectory c;
    c.dt = 0.05;
    c.controls = Eigen::MatrixXd::Zero(4, 2);
    SystemState a, b, d;
    a.robot = hover_state(Vec3(0.5, 0.5, 1));
    b.robot = hover_state(Vec3(0.3, 0.3, 1));
    b.soc = soc_dip;
    d.robot = hover_state(terminal);
    d.soc = 0.5;
    c.states = {a, b, d};
    return c;
}

class Eware : public ::testing::Test {
protected:
    QuadrotorParams quad;
    BatteryParams battery{1.0, 0.95, BatteryParams::gain_for_hover(QuadrotorParams{}, 1.0, 0.95, 90.0)};
    TrackingController tracker{quad, TrackingConfig{}};
    B2bConfig b2b;
    EwareConfig cfg;
    EwareFilter filter{tracker, battery, b2b, cfg};
};

} // namespace

TEST_F(Eware, CandidateDurationAndSampling) {
    SystemState chi;
    chi.robot = b2b.charger_state();
    const Trajectory ref = line_reference(b2b.charger_position(), Vec3(0.2, 0.1, 0), 4.0, 10.0, 0.2);
    const CandidateTrajectory c = filter.build_candidate(chi, ref, 4.0);
    EXPECT_EQ(c.controls.cols(), 140); // (T_N + T_B) / dt = (2 + 5) / 0.05
    EXPECT_EQ(c.size(), 141u);
    EXPECT_DOUBLE_EQ(c.start, 4.0);
    EXPECT_DOUBLE_EQ(c.switch_time, 6.0);
    EXPECT_DOUBLE_EQ(c.end, 11.0);
    EXPECT_DOUBLE_EQ(c.end - c.start, 7.0);
    EXPECT_EQ(c.dt, 0.05);
    EXPECT_EQ(c.switch_index, 40);
    EXPECT_FALSE(c.is_hold);

    // Paper-scale constants: T_N = 2 s, T_B = 10 s give 12 s.
    B2bConfig paper = b2b;
    paper.horizon = 10.0;
    const EwareFilter pf(tracker, battery, paper, cfg);
    const CandidateTrajectory pc = pf.build_candidate(chi, ref, 4.0);
    EXPECT_DOUBLE_EQ(pc.end - pc.start, 12.0);
    EXPECT_EQ(pc.controls.cols(), 240);
}

TEST_F(Eware, SingleRolloutIsContinuousAtTheSwitch) {
    SystemState chi;
    chi.robot = b2b.charger_state();
    const Trajectory ref = line_reference(b2b.charger_position(), Vec3(0.2, 0.1, 0), 0.0, 10.0, 0.2);
    const CandidateTrajectory c = filter.build_candidate(chi, ref, 0.0);
    // Every state is the RK4 step of its predecessor under the recorded control.
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
        const SystemState next = step_system(c.states[k], c.controls.col(static_cast<Eigen::Index>(k)), quad, battery, c.dt);
        ASSERT_EQ(next.robot, c.states[k + 1].robot) << "sample " << k;
        ASSERT_EQ(next.soc, c.states[k + 1].soc);
    }
    EXPECT_EQ(filter.build_candidate(chi, ref, 0.0), c); // deterministic
}

TEST_F(Eware, StationaryCaseStaysInBallWithHoverDrain) {
    SystemState chi;
    chi.robot = b2b.charger_state();
    const Trajectory ref = constant_reference(b2b.charger_state(), 0.0, 10.0, 0.2);
    const CandidateTrajectory c = filter.build_candidate(chi, ref, 0.0);
    for (const SystemState& s : c.states) EXPECT_TRUE(within_arrival(s.robot, b2b));
    const double hover_drain = -battery_rate(1.0, tracker.hover(), battery) * (c.end - c.start);
    EXPECT_NEAR(1.0 - c.terminal().soc, hover_drain, 1e-9);
    EXPECT_TRUE(filter.validate(c).valid);
}

TEST_F(Eware, ReferenceUnderrun) {
    SystemState chi;
    chi.robot = b2b.charger_state();
    const Trajectory short_ref = constant_reference(b2b.charger_state(), 0.0, 1.0, 0.2);
    try {
        filter.build_candidate(chi, short_ref, 0.0);
        FAIL() << "expected an underrun";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "reference underrun");
    }
    const Trajectory late = constant_reference(b2b.charger_state(), 3.0, 10.0, 0.2);
    EXPECT_THROW(filter.build_candidate(chi, late, 0.0), std::runtime_error);
}

TEST(ValidateCandidate, Examples) {
    const B2bConfig b2b;
    const EwareConfig cfg;
    const Verdict energy = validate_candidate(synthetic(-0.01, Vec3(0, 0, 1)), b2b, cfg);
    EXPECT_FALSE(energy.valid);
    EXPECT_EQ(energy.reason, "energy");
    EXPECT_DOUBLE_EQ(energy.min_soc, -0.01);

    const Verdict below_reserve = validate_candidate(synthetic(0.004, Vec3(0, 0, 1)), b2b, cfg);
    EXPECT_EQ(below_reserve.reason, "energy");

    const Verdict far = validate_candidate(synthetic(0.5, Vec3(1, 0, 1)), b2b, cfg);
    EXPECT_FALSE(far.valid);
    EXPECT_EQ(far.reason, "arrival");
    EXPECT_NEAR(far.terminal_distance, 1.0, 1e-15);

    // energy is reported first when both conditions fail
    EXPECT_EQ(validate_candidate(synthetic(0.0, Vec3(1, 0, 1)), b2b, cfg).reason, "energy");

    const Verdict ok = validate_candidate(synthetic(0.5, Vec3(0.1, 0.1, 1)), b2b, cfg);
    EXPECT_TRUE(ok.valid);
    EXPECT_EQ(ok.reason, "ok");
}

TEST_F(Eware, FullBatteryNextToChargerIsValid) {
    SystemState chi;
    chi.robot = hover_state(b2b.charger_position() + Vec3(0.2, 0.2, 0.0));
    const Trajectory ref = line_reference(chi.position(), Vec3(0.2, 0.2, 0), 0.0, 10.0, 0.2);
    const CandidateTrajectory c = filter.build_candidate(chi, ref, 0.0);
    const Verdict v = filter.validate(c);
    EXPECT_TRUE(v.valid) << v.reason << " distance " << v.terminal_distance;
    EXPECT_GT(v.min_soc, 0.9);
}

TEST_F(Eware, LowBatteryIsRejectedForEnergy) {
    SystemState chi;
    chi.robot = hover_state(Vec3(1.5, 1.5, 1.0));
    chi.soc = 0.05; // about 4.5 s of hover left, the candidate lasts 7 s
    const Trajectory ref = line_reference(chi.position(), Vec3(0.1, 0, 0), 0.0, 10.0, 0.2);
    const Verdict v = filter.validate(filter.build_candidate(chi, ref, 0.0));
    EXPECT_FALSE(v.valid);
    EXPECT_EQ(v.reason, "energy");
}

TEST(Commit, Examples) {
    CommittedTrajectory previous{synthetic(0.5, Vec3(0, 0, 1)), 2.0};
    const CandidateTrajectory cand = synthetic(0.7, Vec3(0.1, 0, 1));
    const Verdict yes{true, "ok"};
    const Verdict no{false, "arrival"};

    const CommittedTrajectory a = commit(yes, cand, previous, 4.0);
    EXPECT_EQ(a.trajectory, cand);
    EXPECT_EQ(a.commit_time, 4.0);

    const CommittedTrajectory b = commit(no, cand, previous, 4.0);
    EXPECT_EQ(b, previous);
    const CommittedTrajectory c = commit(no, synthetic(0.1, Vec3(3, 0, 1)), b, 6.0);
    EXPECT_EQ(c, previous);
}

TEST_F(Eware, IterateCommitsOrKeepsAndAudits) {
    SystemState chi;
    chi.robot = b2b.charger_state();
    const CommittedTrajectory hold{filter.hold_candidate(chi, 0.0), 0.0};
    EXPECT_TRUE(hold.trajectory.is_hold);
    EXPECT_TRUE(filter.validate(hold.trajectory).valid);

    const Trajectory ref = line_reference(chi.position(), Vec3(0.2, 0.1, 0), 0.0, 10.0, 0.2);
    EwareAudit audit;
    const CommittedTrajectory next = filter.iterate(chi, ref, 0.0, hold, &audit);
    EXPECT_TRUE(audit.valid);
    EXPECT_EQ(audit.reason, "ok");
    EXPECT_FALSE(next.trajectory.is_hold);
    EXPECT_GE(audit.elapsed_ms, 0.0);
    EXPECT_LT(audit.elapsed_ms, 200.0);

    chi.soc = 0.02;
    const CommittedTrajectory kept = filter.iterate(chi, ref, 0.0, next, &audit);
    EXPECT_FALSE(audit.valid);
    EXPECT_EQ(audit.reason, "energy");
    EXPECT_EQ(kept, next);
}

TEST_F(Eware, FollowReplaysTheCommittedRollout) {
    SystemState chi;
    chi.robot = b2b.charger_state();
    const Trajectory ref = line_reference(chi.position(), Vec3(0.2, 0.1, 0), 2.0, 10.0, 0.2);
    const CommittedTrajectory com{filter.build_candidate(chi, ref, 2.0), 2.0};
    SystemState s = chi;
    for (std::size_t k = 0; k + 1 < com.trajectory.size(); ++k) {
        s = step_system(s, filter.follow(com, s.robot, 2.0 + k * 0.05), quad, battery, 0.05);
        ASSERT_LT((s.robot - com.trajectory.states[k + 1].robot).norm(), 1e-9);
    }
    EXPECT_TRUE(within_arrival(s.robot, b2b));
}

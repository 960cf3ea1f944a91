#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "eclares/clarity.hpp"
#include "eclares/vehicle.hpp"

using namespace eclares;

namespace {

ClarityParams params(double C, double Q, double R) { return ClarityParams{C, Q, R}; }

// Independent oracle: RK4 on the clarity ODE with a fine fixed step.
double rk4_clarity(double q0, double t, const ClarityParams& p, double h = 1e-4) {
    const auto f = [&](double q, int) { return p.sensing_gain * p.sensing_gain / p.measurement_noise * (1 - q) * (1 - q) - p.process_noise * q * q; };
    const int n = static_cast<int>(std::ceil(t / h));
    const double step = t / n;
    double q = q0;
    for (int i = 0; i < n; ++i) q = rk4_step(f, q, 0, step);
    return q;
}

} // namespace

TEST(ClarityRate, Examples) {
    EXPECT_DOUBLE_EQ(clarity_rate(0.0, params(1, 1, 1)), 1.0);
    EXPECT_DOUBLE_EQ(clarity_rate(1.0, params(0, 1, 1)), -1.0);
    EXPECT_DOUBLE_EQ(clarity_rate(0.5, params(1, 1, 1)), 0.0);
}

TEST(ClarityRate, RejectsInvalidInput) {
    EXPECT_THROW(clarity_rate(-0.1, params(1, 1, 1)), std::invalid_argument);
    EXPECT_THROW(clarity_rate(1.1, params(1, 1, 1)), std::invalid_argument);
    EXPECT_THROW(clarity_rate(0.5, params(1, 1, 0)), std::invalid_argument);
    EXPECT_THROW(clarity_rate(0.5, params(1, -1, 1)), std::invalid_argument);
    EXPECT_THROW(clarity_rate(0.5, params(-1, 1, 1)), std::invalid_argument);
}

TEST(MaxClarity, Examples) {
    EXPECT_DOUBLE_EQ(max_clarity(params(1, 1, 1)), 0.5);
    EXPECT_NEAR(max_clarity(params(1, 0.25, 1)), 2.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(max_clarity(params(0, 1, 1)), 0.0);
    EXPECT_DOUBLE_EQ(max_clarity(params(1, 0, 1)), 1.0);
    EXPECT_DOUBLE_EQ(max_clarity(params(0, 0, 1)), 1.0); // frozen-information convention
}

TEST(ClosedForm, Examples) {
    for (double q0 : {0.0, 0.3, 1.0}) EXPECT_EQ(clarity_closed_form(0.0, q0, params(1, 1, 1)), q0);
    EXPECT_NEAR(clarity_closed_form(std::log(2.0) / 2.0, 0.0, params(1, 1, 1)), 0.25, 1e-12);
    EXPECT_NEAR(rk4_clarity(0.0, std::log(2.0) / 2.0, params(1, 1, 1)), 0.25, 1e-10);
    EXPECT_NEAR(clarity_closed_form(100.0, 0.2, params(1, 1, 1)), 0.5, 1e-9);
}

TEST(ClosedForm, SingularBranches) {
    // Q = 0: 1 - (1 - q0) / (1 + (C^2/R)(1 - q0) t)
    EXPECT_NEAR(clarity_closed_form(2.0, 0.2, params(1, 0, 0.5)), 1.0 - 0.8 / (1.0 + 2.0 * 0.8 * 2.0), 1e-14);
    // C = 0: q0 / (1 + Q q0 t)
    EXPECT_NEAR(clarity_closed_form(3.0, 0.6, params(0, 0.5, 1)), 0.6 / (1.0 + 0.5 * 0.6 * 3.0), 1e-14);
    // C = Q = 0: frozen
    EXPECT_EQ(clarity_closed_form(7.0, 0.42, params(0, 0, 1)), 0.42);
}

TEST(ClosedForm, MatchesRk4OnGrid) {
    for (double q0 : {0.0, 0.2, 0.5, 0.9})
        for (double Q : {0.0, 0.1, 1.0})
            for (double R : {0.5, 1.0})
                for (double C : {0.0, 1.0})
                    for (double t : {0.1, 1.0, 5.0, 10.0}) {
                        const ClarityParams p = params(C, Q, R);
                        EXPECT_NEAR(clarity_closed_form(t, q0, p), rk4_clarity(q0, t, p, 1e-3), 1e-6)
                            << "q0=" << q0 << " Q=" << Q << " R=" << R << " C=" << C << " t=" << t;
                    }
}

TEST(ClosedForm, MonotoneTowardAsymptoteAndBounded) {
    for (double Q : {0.0, 0.1, 1.0})
        for (double C : {0.0, 0.5, 2.0})
            for (double q0 : {0.0, 0.3, 0.7, 1.0}) {
                const ClarityParams p = params(C, Q, 1.0);
                const double q_inf = max_clarity(p);
                double prev = q0;
                for (double t = 0.05; t <= 20.0; t += 0.05) {
                    const double q = clarity_closed_form(t, q0, p);
                    ASSERT_GE(q, 0.0);
                    ASSERT_LE(q, 1.0);
                    if (q0 < q_inf) {
                        ASSERT_GE(q, prev - 1e-15);
                    } else if (q0 > q_inf) {
                        ASSERT_LE(q, prev + 1e-15);
                    }
                    prev = q;
                }
            }
}

TEST(TimeToClarity, Examples) {
    EXPECT_EQ(time_to_clarity(0.6, 0.3, params(1, 1, 1)), 0.0);
    EXPECT_EQ(time_to_clarity(0.6, 0.3, params(0.2, 3, 0.7)), 0.0);
    const double t = time_to_clarity(0.0, 0.25, params(1, 1, 1));
    EXPECT_NEAR(t, std::log(2.0) / 2.0, 1e-12);
    EXPECT_NEAR(rk4_clarity(0.0, t, params(1, 1, 1)), 0.25, 1e-10);
    EXPECT_THROW(time_to_clarity(0.0, 0.5, params(1, 1, 1)), UnreachableClarity);
    EXPECT_THROW(time_to_clarity(0.0, 0.1, params(0, 1, 1)), UnreachableClarity);
}

TEST(TimeToClarity, RoundTrip) {
    for (double Q : {0.0, 0.01, 0.1, 1.0, 10.0})
        for (double C : {0.3, 1.0, 3.0})
            for (double R : {0.5, 1.0, 2.0}) {
                const ClarityParams p = params(C, Q, R);
                const double q_inf = max_clarity(p);
                for (double a = 0.0; a < 1.0; a += 0.1)
                    for (double b = a + 0.05; b < 1.0; b += 0.1) {
                        const double q0 = a * (q_inf - 1e-3);
                        const double q1 = b * (q_inf - 1e-3);
                        const double t = time_to_clarity(q0, q1, p);
                        EXPECT_NEAR(clarity_closed_form(t, q0, p), q1, 1e-9) << "Q=" << Q << " C=" << C << " R=" << R << " q0=" << q0 << " q1=" << q1;
                    }
            }
}

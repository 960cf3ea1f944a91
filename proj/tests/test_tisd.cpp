#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "eclares/tisd.hpp"

using namespace eclares;

namespace {

CellField field(const DomainSpec& d, double Q, double q, double target) {
    CellField f;
    f.domain = d;
    const std::size_t n = d.cell_count();
    f.values.assign(n, 0.0);
    f.process_noise.assign(n, Q);
    f.clarity.assign(n, q);
    f.target_clarity.assign(n, target);
    return f;
}

double sum(const Tisd& t) { return std::accumulate(t.density.begin(), t.density.end(), 0.0); }

} // namespace

TEST(UniformTisd, Examples) {
    const Tisd four = uniform_tisd(DomainSpec{{0.4, 0.4}, 0.2});
    ASSERT_EQ(four.density.size(), 4u);
    for (double p : four.density) EXPECT_DOUBLE_EQ(p, 0.25);
    EXPECT_EQ(uniform_tisd(DomainSpec{{0.2, 0.2}, 0.2}).density, std::vector<double>{1.0});
    EXPECT_NEAR(sum(uniform_tisd(DomainSpec{{2.0, 1.4}, 0.2})), 1.0, 1e-12);
}

TEST(GenTisd, IdenticalCellsGiveUniform) {
    const DomainSpec d{{2.0, 2.0}, 0.2};
    const Tisd t = gen_tisd(field(d, 0.1, 0.1, 0.5));
    EXPECT_FALSE(t.targets_satisfied);
    for (double p : t.density) EXPECT_NEAR(p, 0.01, 1e-15);
}

TEST(GenTisd, TargetsMetGivesFlaggedUniform) {
    const DomainSpec d{{1.0, 1.0}, 0.2};
    const Tisd t = gen_tisd(field(d, 0.0, 0.7, 0.6));
    EXPECT_TRUE(t.targets_satisfied);
    for (double p : t.density) EXPECT_DOUBLE_EQ(p, 1.0 / 25.0);
}

TEST(GenTisd, TwoCellExample) {
    const DomainSpec d{{0.4, 0.2}, 0.2};
    CellField f = field(d, 1.0, 0.0, 0.4);
    f.clarity = {0.0, 0.25};
    const Tisd t = gen_tisd(f, 0.05);
    const double a = std::log(5.0) / 2.0, b = std::log(2.5) / 2.0;
    EXPECT_NEAR(t.density[0], a / (a + b), 1e-12);
    EXPECT_NEAR(t.density[1], b / (a + b), 1e-12);
    EXPECT_NEAR(t.density[0], 0.6372, 5e-5);
    EXPECT_NEAR(t.density[1], 0.3628, 5e-5);
}

TEST(GenTisd, TargetClippedBelowMaximum) {
    // target 0.49 is capped at q_inf - eps = 0.45; raw times stay finite.
    const DomainSpec d{{0.4, 0.2}, 0.2};
    CellField f = field(d, 1.0, 0.0, 0.49);
    f.clarity = {0.0, 0.3};
    const Tisd t = gen_tisd(f, 0.05);
    const double a = time_to_clarity(0.0, 0.45, f.params(0, true));
    const double b = time_to_clarity(0.3, 0.45, f.params(1, true));
    EXPECT_NEAR(t.density[0], a / (a + b), 1e-12);
    EXPECT_THROW(gen_tisd(f, 0.0), std::invalid_argument);
}

TEST(GenTisd, Properties) {
    const DomainSpec d{{1.0, 1.0}, 0.2};
    CellField f = field(d, 0.05, 0.0, 0.6);
    for (std::size_t c = 0; c < f.size(); ++c) f.clarity[c] = 0.03 * static_cast<double>(c);
    const Tisd t = gen_tisd(f);
    EXPECT_NEAR(sum(t), 1.0, 1e-9);
    for (std::size_t c = 0; c < f.size(); ++c) {
        EXPECT_GE(t.density[c], 0.0);
        if (f.clarity[c] >= 0.6) EXPECT_EQ(t.density[c], 0.0);
        if (c > 0 && f.clarity[c - 1] < 0.6) EXPECT_GT(t.density[c - 1], t.density[c]); // larger deficit, larger weight
    }

    // Invariant under uniform rescaling of raw times: scaling Q and C^2 together
    // by s scales every observation time by 1/s.
    CellField g = f;
    for (double& q : g.process_noise) q *= 4.0;
    g.sensing_gain = 2.0;
    const Tisd u = gen_tisd(g);
    for (std::size_t c = 0; c < f.size(); ++c) EXPECT_NEAR(u.density[c], t.density[c], 1e-12);
}

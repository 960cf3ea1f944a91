#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eclares/clarity.hpp"
#include "eclares/domain.hpp"

namespace eclares {

/// The single pseudo-random source shared by a mission.
using Rng = std::mt19937_64;

/// Per-cell stochastic environment together with the robot's clarity about it.
struct CellField {
    DomainSpec domain;
    std::vector<double> values;         ///< m_c, true quantity of interest
    std::vector<double> process_noise;  ///< Q_c
    std::vector<double> clarity;        ///< q_c
    std::vector<double> target_clarity; ///< target q_c
    double measurement_noise = 1.0;     ///< R, shared by all cells
    double sensing_gain = 1.0;          ///< C while a cell is inside the footprint

    std::size_t size() const { return values.size(); }
    double cell_area() const { return domain.cell_volume(); }

    ClarityParams params(std::size_t c, bool observed) const {
        return ClarityParams{observed ? sensing_gain : 0.0, process_noise[c], measurement_noise};
    }

    double max_clarity_of(std::size_t c) const { return max_clarity(params(c, true)); }

    void validate() const {
        domain.validate();
        const std::size_t n = domain.cell_count();
        if (values.size() != n || process_noise.size() != n || clarity.size() != n || target_clarity.size() != n)
            throw std::invalid_argument("field: per-cell arrays must all have one entry per cell");
        if (!(measurement_noise > 0.0)) throw std::invalid_argument("field: measurement noise must be positive");
        if (!(sensing_gain > 0.0)) throw std::invalid_argument("field: sensing gain must be positive");
        for (std::size_t c = 0; c < n; ++c) {
            if (!(process_noise[c] >= 0.0))
                throw std::invalid_argument("field: process noise of cell " + std::to_string(c) + " is negative");
            if (!(clarity[c] >= 0.0 && clarity[c] <= 1.0))
                throw std::invalid_argument("field: clarity of cell " + std::to_string(c) + " outside [0, 1]");
            const double q_inf = max_clarity_of(c);
            if (!(target_clarity[c] >= 0.0) || !(target_clarity[c] < q_inf)) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "field: target clarity %.6g of cell %zu must be below its maximum attainable clarity %.6g",
                              target_clarity[c], c, q_inf);
                throw std::invalid_argument(buf);
            }
        }
    }
};

struct SensorModel {
    double footprint_radius = 0.25; ///< metres, disc over cell centres

    void validate() const {
        if (!(footprint_radius >= 0.0)) throw std::invalid_argument("sensor: footprint radius must be non-negative");
    }
    bool operator==(const SensorModel&) const = default;
};

struct Measurement {
    std::size_t cell;
    double value;
};

/// Euler-Maruyama step of m_c' = w_c, w_c ~ N(0, Q_c). Draws one standard
/// normal per cell in index order when dt > 0.
inline void step_environment(CellField& field, double dt, Rng& rng) {
    if (!(dt >= 0.0)) throw std::invalid_argument("environment: dt must be non-negative");
    if (dt == 0.0) return;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t c = 0; c < field.values.size(); ++c) {
        const double z = normal(rng);
        field.values[c] += std::sqrt(field.process_noise[c] * dt) * z;
    }
}

/// Cells whose centres lie within the footprint radius of the projected
/// position. Only the first `domain.axes()` components of `position` are used.
/// Returned indices are sorted.
inline std::vector<std::size_t> sensor_footprint(const Eigen::Ref<const Eigen::VectorXd>& position, const DomainSpec& domain,
                                                 const SensorModel& sensor) {
    const std::size_t s = domain.axes();
    if (static_cast<std::size_t>(position.size()) < s) throw std::invalid_argument("footprint: position has too few components");
    const double r = sensor.footprint_radius;
    const double h = domain.cell_size;

    std::vector<std::size_t> lo(s), hi(s);
    for (std::size_t i = 0; i < s; ++i) {
        const double p = position[static_cast<Eigen::Index>(i)];
        const long n = static_cast<long>(domain.cells_along(i));
        // centre of cell j is (j + 0.5) h; one cell of slack, the distance test decides
        const long a = std::max(0L, static_cast<long>(std::ceil((p - r) / h - 0.5)) - 1);
        const long b = std::min(n - 1, static_cast<long>(std::floor((p + r) / h - 0.5)) + 1);
        if (a > b) return {};
        lo[i] = static_cast<std::size_t>(a);
        hi[i] = static_cast<std::size_t>(b);
    }

    std::vector<std::size_t> cells;
    std::vector<std::size_t> idx = lo;
    const double r2 = r * r;
    while (true) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            const double d = (static_cast<double>(idx[i]) + 0.5) * h - position[static_cast<Eigen::Index>(i)];
            d2 += d * d;
        }
        if (d2 <= r2) cells.push_back(domain.cell_index(idx));

        std::size_t axis = 0;
        while (axis < s && idx[axis] == hi[axis]) {
            idx[axis] = lo[axis];
            ++axis;
        }
        if (axis == s) break;
        ++idx[axis];
    }
    std::sort(cells.begin(), cells.end());
    return cells;
}

/// Advances every cell's clarity over dt with the closed form: C = sensing gain
/// for observed cells, C = 0 (pure decay) otherwise. `observed` must be sorted.
inline void update_clarity_field(CellField& field, const std::vector<std::size_t>& observed, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("clarity field: dt must be positive");
    auto next = observed.begin();
    for (std::size_t c = 0; c < field.clarity.size(); ++c) {
        const bool seen = next != observed.end() && *next == c;
        if (seen) ++next;
        field.clarity[c] = clarity_closed_form(dt, field.clarity[c], field.params(c, seen));
    }
}

/// y_c = m_c + v_c with v_c ~ N(0, R), one draw per observed cell in the given order.
inline std::vector<Measurement> measure(const CellField& field, const std::vector<std::size_t>& observed, Rng& rng) {
    std::vector<Measurement> out;
    out.reserve(observed.size());
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sigma = std::sqrt(field.measurement_noise);
    for (std::size_t c : observed) out.push_back({c, field.values[c] + sigma * normal(rng)});
    return out;
}

/// Synthetic stochastic environment: a low-noise background with circular
/// high-noise patches placed at random.
struct EnvironmentGenerator {
    double background_noise = 0.0;   ///< Q outside patches
    double patch_noise = 0.0;        ///< Q inside patches
    int patch_count = 0;
    double patch_radius = 0.4;       ///< metres
    double value_mean = 35.0;        ///< initial m_c mean
    double value_spread = 1.0;       ///< initial m_c standard deviation
    double initial_clarity = 0.0;
    double target_fraction = 0.8;    ///< target = fraction * q_inf when target_clarity <= 0
    double target_clarity = 0.0;     ///< fixed target for every cell when positive
    double measurement_noise = 1.0;
    double sensing_gain = 1.0;

    bool operator==(const EnvironmentGenerator&) const = default;
};

/// Draw order: patch centres (axis by axis, patch by patch), then one normal
/// per cell for the initial values.
inline CellField make_field(const DomainSpec& domain, const EnvironmentGenerator& gen, Rng& rng) {
    domain.validate();
    const std::size_t n = domain.cell_count();
    const std::size_t s = domain.axes();

    std::vector<Eigen::VectorXd> centres;
    for (int k = 0; k < gen.patch_count; ++k) {
        Eigen::VectorXd p(static_cast<Eigen::Index>(s));
        for (std::size_t i = 0; i < s; ++i) {
            std::uniform_real_distribution<double> u(0.0, domain.lengths[i]);
            p[static_cast<Eigen::Index>(i)] = u(rng);
        }
        centres.push_back(std::move(p));
    }

    CellField f;
    f.domain = domain;
    f.measurement_noise = gen.measurement_noise;
    f.sensing_gain = gen.sensing_gain;
    f.values.resize(n);
    f.process_noise.assign(n, gen.background_noise);
    f.clarity.assign(n, gen.initial_clarity);
    f.target_clarity.resize(n);

    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t c = 0; c < n; ++c) {
        const Eigen::VectorXd x = domain.cell_center(c);
        for (const auto& p : centres)
            if ((x - p).norm() <= gen.patch_radius) f.process_noise[c] = gen.patch_noise;
        f.values[c] = gen.value_mean + gen.value_spread * normal(rng);
        f.target_clarity[c] = gen.target_clarity > 0.0 ? gen.target_clarity : gen.target_fraction * f.max_clarity_of(c);
    }
    f.validate();
    return f;
}

/// cell_index, x_center, y_center, m, Q, q, q_target
inline void write_field_csv(std::ostream& os, const CellField& f) {
    os << "cell_index,x_center,y_center,m,Q,q,q_target\n";
    char buf[256];
    for (std::size_t c = 0; c < f.size(); ++c) {
        const Eigen::VectorXd p = f.domain.cell_center(c);
        const double y = p.size() > 1 ? p[1] : 0.0;
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.10g,%.10g,%.10g,%.10g\n", c, p[0], y, f.values[c], f.process_noise[c],
                      f.clarity[c], f.target_clarity[c]);
        os << buf;
    }
}

} // namespace eclares

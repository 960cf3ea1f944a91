#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "eclares/clarity.hpp"
#include "eclares/domain.hpp"
#include "eclares/env_grid.hpp"

namespace eclares {

/// Target information spatial distribution: a normalized per-cell density.
struct Tisd {
    std::vector<double> density;
    DomainSpec domain;
    /// Set when every cell already met its target and the uniform fallback was used.
    bool targets_satisfied = false;
};

inline Tisd uniform_tisd(const DomainSpec& domain) {
    domain.validate();
    const std::size_t n = domain.cell_count();
    return Tisd{std::vector<double>(n, 1.0 / static_cast<double>(n)), domain, false};
}

/// Per cell: the observation time needed to lift the current clarity to the
/// target, with the target capped epsilon below q_inf; normalized to sum 1.
inline Tisd gen_tisd(const CellField& field, double epsilon = 0.05) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("tisd: epsilon must be positive");
    const std::size_t n = field.size();
    std::vector<double> raw(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        const ClarityParams p = field.params(c, true);
        const double target = std::min(field.target_clarity[c], max_clarity(p) - epsilon);
        if (target > field.clarity[c]) raw[c] = time_to_clarity(field.clarity[c], target, p);
    }
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (!(total > 0.0)) {
        Tisd t = uniform_tisd(field.domain);
        t.targets_satisfied = true;
        return t;
    }
    for (double& w : raw) w /= total;
    return Tisd{std::move(raw), field.domain, false};
}

/// cell_index, x_center, y_center, phi
inline void write_tisd_csv(std::ostream& os, const Tisd& t) {
    os << "cell_index,x_center,y_center,phi\n";
    char buf[160];
    for (std::size_t c = 0; c < t.density.size(); ++c) {
        const Eigen::VectorXd p = t.domain.cell_center(c);
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.10g\n", c, p[0], p.size() > 1 ? p[1] : 0.0, t.density[c]);
        os << buf;
    }
}

} // namespace eclares

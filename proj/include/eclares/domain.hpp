#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eclares {

/// Rectangular domain [0, L_1] x ... x [0, L_s] split into cubic cells.
///
/// Cells are indexed with axis 0 varying fastest:
/// index = i_0 + n_0 * (i_1 + n_1 * (i_2 + ...)).
struct DomainSpec {
    std::vector<double> lengths{2.0, 2.0};
    double cell_size = 0.2;

    void validate() const {
        if (lengths.empty()) throw std::invalid_argument("domain: at least one axis is required");
        if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw std::invalid_argument("domain: cell_size must be positive");
        for (std::size_t i = 0; i < lengths.size(); ++i) {
            const double L = lengths[i];
            if (!(L > 0.0) || !std::isfinite(L))
                throw std::invalid_argument("domain: length of axis " + std::to_string(i) + " must be positive");
            const double n = L / cell_size;
            if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
                throw std::invalid_argument("domain: length of axis " + std::to_string(i) + " is not a multiple of cell_size");
        }
    }

    std::size_t axes() const { return lengths.size(); }

    std::size_t cells_along(std::size_t axis) const {
        return static_cast<std::size_t>(std::llround(lengths[axis] / cell_size));
    }

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (std::size_t i = 0; i < axes(); ++i) n *= cells_along(i);
        return n;
    }

    double cell_volume() const { return std::pow(cell_size, static_cast<double>(axes())); }

    double volume() const {
        double v = 1.0;
        for (double L : lengths) v *= L;
        return v;
    }

    std::vector<std::size_t> cell_coords(std::size_t index) const {
        std::vector<std::size_t> c(axes());
        for (std::size_t i = 0; i < axes(); ++i) {
            const std::size_t n = cells_along(i);
            c[i] = index % n;
            index /= n;
        }
        return c;
    }

    std::size_t cell_index(const std::vector<std::size_t>& coords) const {
        std::size_t index = 0;
        for (std::size_t i = axes(); i-- > 0;) index = index * cells_along(i) + coords[i];
        return index;
    }

    Eigen::VectorXd cell_center(std::size_t index) const {
        Eigen::VectorXd p(static_cast<Eigen::Index>(axes()));
        const auto c = cell_coords(index);
        for (std::size_t i = 0; i < axes(); ++i) p[static_cast<Eigen::Index>(i)] = (static_cast<double>(c[i]) + 0.5) * cell_size;
        return p;
    }

    bool contains(const Eigen::Ref<const Eigen::VectorXd>& p) const {
        for (std::size_t i = 0; i < axes(); ++i) {
            const double x = p[static_cast<Eigen::Index>(i)];
            if (x < 0.0 || x > lengths[i]) return false;
        }
        return true;
    }

    bool operator==(const DomainSpec&) const = default;
};

} // namespace eclares

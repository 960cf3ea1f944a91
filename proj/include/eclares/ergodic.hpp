#pragma once

// Spectral ergodic metric and projection-free first-order trajectory
// optimization on double-integrator dynamics.
//
// Basis: f_k(p) = (1 / h_k) prod_i cos(k_i pi p_i / L_i), normalized so that
// the integral of f_k^2 over the domain is 1. Weights Lambda_k = (1 + |k|^2)^(-(s+1)/2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eclares/domain.hpp"
#include "eclares/tisd.hpp"
#include "eclares/trajectory.hpp"

namespace eclares {

using MultiIndex = std::vector<int>;

inline double basis_normalizer(const MultiIndex& k, const DomainSpec& domain) {
    double h2 = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i) h2 *= k[i] == 0 ? domain.lengths[i] : 0.5 * domain.lengths[i];
    return std::sqrt(h2);
}

/// f_k at `point`; components are clamped into [0, L_i].
inline double basis_eval(const Eigen::Ref<const Eigen::VectorXd>& point, const MultiIndex& k, const DomainSpec& domain) {
    if (k.size() != domain.axes() || static_cast<std::size_t>(point.size()) < domain.axes())
        throw std::invalid_argument("basis: multi-index and point must match the domain dimension");
    double v = 1.0 / basis_normalizer(k, domain);
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double L = domain.lengths[i];
        const double x = std::clamp(point[static_cast<Eigen::Index>(i)], 0.0, L);
        v *= std::cos(k[i] * std::numbers::pi * x / L);
    }
    return v;
}

/// Precomputed multi-indices, normalizers and Sobolev weights for one domain
/// and truncation. Index order has axis 0 varying fastest.
class SpectralBasis {
public:
    SpectralBasis(DomainSpec domain, int max_index) : domain_(std::move(domain)), max_index_(max_index) {
        domain_.validate();
        if (max_index_ < 0) throw std::invalid_argument("basis: max_index must be non-negative");
        const std::size_t s = domain_.axes();
        const std::size_t per_axis = static_cast<std::size_t>(max_index_) + 1;
        std::size_t m = 1;
        for (std::size_t i = 0; i < s; ++i) m *= per_axis;

        indices_.reserve(m);
        normalizers_.resize(static_cast<Eigen::Index>(m));
        weights_.resize(static_cast<Eigen::Index>(m));
        const double exponent = -0.5 * (static_cast<double>(s) + 1.0);
        for (std::size_t j = 0; j < m; ++j) {
            MultiIndex k(s);
            std::size_t r = j;
            double norm2 = 0.0;
            for (std::size_t i = 0; i < s; ++i) {
                k[i] = static_cast<int>(r % per_axis);
                r /= per_axis;
                norm2 += static_cast<double>(k[i] * k[i]);
            }
            normalizers_[static_cast<Eigen::Index>(j)] = basis_normalizer(k, domain_);
            weights_[static_cast<Eigen::Index>(j)] = std::pow(1.0 + norm2, exponent);
            indices_.push_back(std::move(k));
        }
    }

    const DomainSpec& domain() const { return domain_; }
    int max_index() const { return max_index_; }
    std::size_t size() const { return indices_.size(); }
    const MultiIndex& index(std::size_t j) const { return indices_[j]; }
    const Eigen::VectorXd& normalizers() const { return normalizers_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    /// All basis values at `point`, and optionally their spatial gradients
    /// (one row per axis). Clamped components get a zero derivative.
    void evaluate(const Eigen::Ref<const Eigen::VectorXd>& point, Eigen::Ref<Eigen::VectorXd> values,
                  Eigen::MatrixXd* gradients = nullptr) const {
        const std::size_t s = domain_.axes();
        const int per_axis = max_index_ + 1;
        Eigen::MatrixXd c(per_axis, static_cast<Eigen::Index>(s));
        Eigen::MatrixXd d(per_axis, static_cast<Eigen::Index>(s));
        for (std::size_t i = 0; i < s; ++i) {
            const double L = domain_.lengths[i];
            const double raw = point[static_cast<Eigen::Index>(i)];
            const double x = std::clamp(raw, 0.0, L);
            const bool inside = raw == x;
            for (int k = 0; k < per_axis; ++k) {
                const double w = k * std::numbers::pi / L;
                c(k, static_cast<Eigen::Index>(i)) = std::cos(w * x);
                d(k, static_cast<Eigen::Index>(i)) = inside ? -w * std::sin(w * x) : 0.0;
            }
        }
        for (std::size_t j = 0; j < indices_.size(); ++j) {
            const MultiIndex& k = indices_[j];
            double v = 1.0;
            for (std::size_t i = 0; i < s; ++i) v *= c(k[i], static_cast<Eigen::Index>(i));
            const double inv_h = 1.0 / normalizers_[static_cast<Eigen::Index>(j)];
            values[static_cast<Eigen::Index>(j)] = v * inv_h;
            if (gradients) {
                for (std::size_t a = 0; a < s; ++a) {
                    double g = inv_h;
                    for (std::size_t i = 0; i < s; ++i) g *= i == a ? d(k[i], static_cast<Eigen::Index>(i)) : c(k[i], static_cast<Eigen::Index>(i));
                    (*gradients)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = g;
                }
            }
        }
    }

private:
    DomainSpec domain_;
    int max_index_;
    std::vector<MultiIndex> indices_;
    Eigen::VectorXd normalizers_;
    Eigen::VectorXd weights_;
};

/// Discrete density as point masses at cell centres: phi_k = sum_c phi_c f_k(centre_c).
inline Eigen::VectorXd tisd_coefficients(const Tisd& tisd, const SpectralBasis& basis) {
    if (!(tisd.domain == basis.domain())) throw std::invalid_argument("tisd coefficients: domain mismatch");
    const auto m = static_cast<Eigen::Index>(basis.size());
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd f(m);
    for (std::size_t c = 0; c < tisd.density.size(); ++c) {
        if (tisd.density[c] == 0.0) continue;
        basis.evaluate(tisd.domain.cell_center(c), f);
        coeffs += tisd.density[c] * f;
    }
    return coeffs;
}

/// Time average of the basis along the trajectory; the first `axes` state
/// components are the position.
inline Eigen::VectorXd trajectory_coefficients(const Trajectory& traj, const SpectralBasis& basis) {
    if (traj.empty()) throw std::invalid_argument("trajectory coefficients: empty trajectory");
    const auto s = static_cast<Eigen::Index>(basis.domain().axes());
    if (traj.state_dim() < s) throw std::invalid_argument("trajectory coefficients: state has fewer components than the domain");
    const auto m = static_cast<Eigen::Index>(basis.size());
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd f(m);
    for (Eigen::Index j = 0; j < traj.size(); ++j) {
        basis.evaluate(traj.states.col(j).head(s), f);
        coeffs += f;
    }
    return coeffs / static_cast<double>(traj.size());
}

struct ErgodicSpectrum {
    int max_index = 0;
    Eigen::VectorXd lambda;
    Eigen::VectorXd traj_coeffs;
    Eigen::VectorXd tisd_coeffs;
    Eigen::VectorXd normalizers;
};

inline ErgodicSpectrum make_spectrum(const SpectralBasis& basis, Eigen::VectorXd traj_coeffs, Eigen::VectorXd tisd_coeffs) {
    return ErgodicSpectrum{basis.max_index(), basis.weights(), std::move(traj_coeffs), std::move(tisd_coeffs), basis.normalizers()};
}

/// Phi = sum_k Lambda_k (c_k - phi_k)^2
inline double ergodic_metric(const ErgodicSpectrum& s) {
    if (s.traj_coeffs.size() != s.tisd_coeffs.size() || s.lambda.size() != s.traj_coeffs.size())
        throw std::invalid_argument("ergodic metric: coefficient vectors differ in length");
    return (s.lambda.array() * (s.traj_coeffs - s.tisd_coeffs).array().square()).sum();
}

/// c_b * sum over samples and position axes of max(x - L, 0)^2 + min(x, 0)^2.
inline double boundary_penalty(const Trajectory& traj, const DomainSpec& domain, double weight) {
    double total = 0.0;
    const auto s = static_cast<Eigen::Index>(domain.axes());
    for (Eigen::Index j = 0; j < traj.size(); ++j) {
        for (Eigen::Index i = 0; i < s; ++i) {
            const double x = traj.states(i, j);
            const double L = domain.lengths[static_cast<std::size_t>(i)];
            const double over = std::max(x - L, 0.0);
            const double under = std::min(x, 0.0);
            total += over * over + under * under;
        }
    }
    return weight * total;
}

struct PtoConfig {
    double horizon = 10.0;          ///< T_H, s
    double dt = 0.2;                ///< s
    int fourier_max_index = 10;     ///< K per axis
    double control_weight = 1e-3;   ///< scalar R on accelerations
    double boundary_weight = 10.0;  ///< c_b
    int max_iterations = 200;
    double tolerance = 1e-9;        ///< stop when the relative decrease falls below this
    double initial_step = 1.0;
    double armijo_slope = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 40;
    double spiral_amplitude = 0.1;  ///< m/s^2, initial guess

    int steps() const { return static_cast<int>(std::llround(horizon / dt)); }

    void validate() const {
        if (!(dt > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("pto: horizon and dt must be positive");
        if (std::abs(horizon / dt - std::round(horizon / dt)) > 1e-9) throw std::invalid_argument("pto: horizon must be a multiple of dt");
        if (!(control_weight > 0.0)) throw std::invalid_argument("pto: control weight must be positive");
        if (!(boundary_weight > 0.0)) throw std::invalid_argument("pto: boundary weight must be positive");
        if (fourier_max_index < 0) throw std::invalid_argument("pto: fourier_max_index must be non-negative");
        if (max_iterations < 0) throw std::invalid_argument("pto: max_iterations must be non-negative");
        if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("pto: shrink must lie in (0, 1)");
        if (!(initial_step > 0.0)) throw std::invalid_argument("pto: initial_step must be positive");
    }

    bool operator==(const PtoConfig&) const = default;
};

/// Planar (or s-axis) double integrator: state (position, velocity), control acceleration.
inline Eigen::VectorXd double_integrator_dynamics(const Eigen::Ref<const Eigen::VectorXd>& state,
                                                  const Eigen::Ref<const Eigen::VectorXd>& accel) {
    const auto s = accel.size();
    if (state.size() != 2 * s) throw std::invalid_argument("double integrator: state must be (position, velocity)");
    Eigen::VectorXd d(2 * s);
    d.head(s) = state.tail(s);
    d.tail(s) = accel;
    return d;
}

/// Objective of the discrete ergodic problem over a fixed start state:
/// Phi + J_b + dt/2 sum u' R u, with x_{k+1} = x_k + f(x_k, u_k) dt.
class ErgodicObjective {
public:
    ErgodicObjective(const SpectralBasis& basis, Eigen::VectorXd tisd_coeffs, Eigen::VectorXd x0, PtoConfig cfg)
        : basis_(basis), phi_(std::move(tisd_coeffs)), x0_(std::move(x0)), cfg_(cfg) {
        const auto s = static_cast<Eigen::Index>(basis_.domain().axes());
        if (x0_.size() != 2 * s) throw std::invalid_argument("pto: start state must be (position, velocity)");
    }

    Eigen::Index axes() const { return static_cast<Eigen::Index>(basis_.domain().axes()); }

    Trajectory rollout(const Eigen::MatrixXd& controls) const {
        const auto s = axes();
        Trajectory t;
        t.dt = cfg_.dt;
        t.controls = controls;
        t.states.resize(2 * s, controls.cols() + 1);
        t.states.col(0) = x0_;
        for (Eigen::Index k = 0; k < controls.cols(); ++k) {
            t.states.col(k + 1) = t.states.col(k) + double_integrator_dynamics(t.states.col(k), controls.col(k)) * cfg_.dt;
        }
        return t;
    }

    double metric(const Trajectory& t) const {
        return ergodic_metric(make_spectrum(basis_, trajectory_coefficients(t, basis_), phi_));
    }

    /// Total objective; when `grad` is given it receives d objective / d controls.
    double evaluate(const Eigen::MatrixXd& controls, Eigen::MatrixXd* grad = nullptr) const {
        const auto s = axes();
        const Trajectory t = rollout(controls);
        const Eigen::Index n = t.size();
        const auto m = static_cast<Eigen::Index>(basis_.size());

        Eigen::MatrixXd values(m, n);
        std::vector<Eigen::MatrixXd> grads;
        if (grad) grads.assign(static_cast<std::size_t>(n), Eigen::MatrixXd(s, m));
        for (Eigen::Index j = 0; j < n; ++j)
            basis_.evaluate(t.states.col(j).head(s), values.col(j), grad ? &grads[static_cast<std::size_t>(j)] : nullptr);

        const Eigen::VectorXd diff = values.rowwise().mean() - phi_;
        const double phi_metric = (basis_.weights().array() * diff.array().square()).sum();

        const DomainSpec& dom = basis_.domain();
        double boundary = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < s; ++i) {
                const double x = t.states(i, j);
                const double over = std::max(x - dom.lengths[static_cast<std::size_t>(i)], 0.0);
                const double under = std::min(x, 0.0);
                boundary += over * over + under * under;
            }
        boundary *= cfg_.boundary_weight;

        const double effort = 0.5 * cfg_.dt * cfg_.control_weight * controls.squaredNorm();
        const double total = phi_metric + boundary + effort;
        if (!grad) return total;

        // Adjoint sweep through x_{k+1} = A x_k + B u_k.
        const Eigen::VectorXd w = (2.0 / static_cast<double>(n)) * (basis_.weights().array() * diff.array()).matrix();
        grad->resize(s, controls.cols());
        Eigen::VectorXd lam_p = Eigen::VectorXd::Zero(s);
        Eigen::VectorXd lam_v = Eigen::VectorXd::Zero(s);
        for (Eigen::Index j = n - 1; j >= 1; --j) {
            Eigen::VectorXd g = grads[static_cast<std::size_t>(j)] * w;
            for (Eigen::Index i = 0; i < s; ++i) {
                const double x = t.states(i, j);
                const double L = dom.lengths[static_cast<std::size_t>(i)];
                g[i] += 2.0 * cfg_.boundary_weight * (std::max(x - L, 0.0) + std::min(x, 0.0));
            }
            // lambda_j = g_j + A' lambda_{j+1}
            const Eigen::VectorXd new_p = g + lam_p;
            const Eigen::VectorXd new_v = cfg_.dt * lam_p + lam_v;
            lam_p = new_p;
            lam_v = new_v;
            // d/du_{j-1} = B' lambda_j + dt R u_{j-1}
            grad->col(j - 1) = cfg_.dt * lam_v + cfg_.dt * cfg_.control_weight * controls.col(j - 1);
        }
        return total;
    }

private:
    const SpectralBasis& basis_;
    Eigen::VectorXd phi_;
    Eigen::VectorXd x0_;
    PtoConfig cfg_;
};

struct PtoResult {
    Trajectory trajectory;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double initial_metric = 0.0;
    double final_metric = 0.0;
    int iterations = 0;
};

/// Rotating low-amplitude acceleration: a slowly growing loop around x0.
inline Eigen::MatrixXd spiral_controls(Eigen::Index axes, const PtoConfig& cfg) {
    const int n = cfg.steps();
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(axes, n);
    const double omega = 4.0 * std::numbers::pi / cfg.horizon;
    for (int k = 0; k < n; ++k) {
        const double t = k * cfg.dt;
        const double a = cfg.spiral_amplitude * (1.0 + t / cfg.horizon);
        u(0, k) = a * std::cos(omega * t);
        if (axes > 1) u(1, k) = a * std::sin(omega * t);
    }
    return u;
}

/// Gradient descent on the control sequence with Armijo backtracking.
/// `initial_controls` defaults to the spiral guess.
inline PtoResult pto_optimize(const Eigen::VectorXd& x0, const Tisd& tisd, const PtoConfig& cfg,
                              const Eigen::MatrixXd* initial_controls = nullptr) {
    cfg.validate();
    const auto s = static_cast<Eigen::Index>(tisd.domain.axes());
    const SpectralBasis basis(tisd.domain, cfg.fourier_max_index);
    const ErgodicObjective objective(basis, tisd_coefficients(tisd, basis), x0, cfg);

    Eigen::MatrixXd u = initial_controls ? *initial_controls : spiral_controls(s, cfg);
    if (u.rows() != s || u.cols() != cfg.steps()) throw std::invalid_argument("pto: initial controls have the wrong shape");

    PtoResult r;
    Eigen::MatrixXd g;
    double f = objective.evaluate(u, &g);
    if (!std::isfinite(f)) throw std::runtime_error("pto: non-finite objective for the initial guess");
    r.initial_objective = f;
    r.initial_metric = objective.metric(objective.rollout(u));

    double step = cfg.initial_step;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const double g2 = g.squaredNorm();
        if (!(g2 > 0.0)) break;
        bool accepted = false;
        double trial_f = f;
        Eigen::MatrixXd trial;
        for (int b = 0; b < cfg.max_backtracks; ++b) {
            trial = u - step * g;
            trial_f = objective.evaluate(trial);
            if (std::isfinite(trial_f) && trial_f <= f - cfg.armijo_slope * step * g2) {
                accepted = true;
                break;
            }
            step *= cfg.shrink;
        }
        if (!accepted) break;
        const double decrease = f - trial_f;
        u = std::move(trial);
        f = objective.evaluate(u, &g);
        if (!std::isfinite(f)) throw std::runtime_error("pto: objective became non-finite (exploding controls)");
        r.iterations = it + 1;
        step /= cfg.shrink; // let the step grow back after a success
        if (decrease <= cfg.tolerance * std::max(1.0, std::abs(f))) break;
    }

    r.trajectory = objective.rollout(u);
    r.final_objective = f;
    r.final_metric = objective.metric(r.trajectory);
    return r;
}

} // namespace eclares

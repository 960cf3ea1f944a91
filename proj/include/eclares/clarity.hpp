#pragma once

// Scalar clarity dynamics for a single quantity of interest observed through
// a gated sensor (sensing gain C), with process noise Q and measurement noise R:
//
//     dq/dt = C^2 / R * (1 - q)^2 - Q * q^2
//
// Clarity lives in [0, 1]; 0 means unknown, 1 means perfectly known.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace eclares {

/// Thrown when a requested clarity lies at or above the maximum attainable one.
class UnreachableClarity : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ClarityParams {
    double sensing_gain = 1.0;      ///< C, dimensionless
    double process_noise = 0.0;     ///< Q, quantity^2 / s
    double measurement_noise = 1.0; ///< R, quantity^2

    void validate() const {
        if (!(measurement_noise > 0.0) || !std::isfinite(measurement_noise))
            throw std::invalid_argument("clarity: measurement noise R must be positive");
        if (!(process_noise >= 0.0) || !std::isfinite(process_noise))
            throw std::invalid_argument("clarity: process noise Q must be non-negative");
        if (!(sensing_gain >= 0.0) || !std::isfinite(sensing_gain))
            throw std::invalid_argument("clarity: sensing gain C must be non-negative");
    }

    /// k = C / sqrt(Q R); only meaningful when both C and Q are positive.
    double ratio() const { return sensing_gain / std::sqrt(process_noise * measurement_noise); }
};

namespace detail {

inline void check_clarity(double q, const char* what) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument(std::string("clarity: ") + what + " must lie in [0, 1]");
}

inline double clamp_unit(double q) { return std::clamp(q, 0.0, 1.0); }

} // namespace detail

inline double clarity_rate(double q, const ClarityParams& p) {
    p.validate();
    detail::check_clarity(q, "q");
    const double gain = p.sensing_gain * p.sensing_gain / p.measurement_noise;
    return gain * (1.0 - q) * (1.0 - q) - p.process_noise * q * q;
}

/// Maximum attainable clarity q_inf = k / (k + 1).
///
/// With C = 0 and Q = 0 nothing is gained and nothing decays; that case
/// returns 1 by convention (information is frozen, never degraded).
inline double max_clarity(const ClarityParams& p) {
    p.validate();
    if (p.process_noise == 0.0) return 1.0;
    if (p.sensing_gain == 0.0) return 0.0;
    const double k = p.ratio();
    return k / (k + 1.0);
}

/// Exact solution of the clarity ODE for constant C over [0, t].
inline double clarity_closed_form(double t, double q0, const ClarityParams& p) {
    p.validate();
    detail::check_clarity(q0, "q0");
    if (!(t >= 0.0)) throw std::invalid_argument("clarity: t must be non-negative");
    if (t == 0.0) return q0;

    const double C = p.sensing_gain;
    const double Q = p.process_noise;
    const double R = p.measurement_noise;

    if (C == 0.0 && Q == 0.0) return q0;
    if (C == 0.0) return detail::clamp_unit(q0 / (1.0 + Q * q0 * t));
    if (Q == 0.0) {
        const double a = C * C / R;
        return detail::clamp_unit(1.0 - (1.0 - q0) / (1.0 + a * (1.0 - q0) * t));
    }

    // q = q_inf (1 + 2 g1 / (g2 + g3 e^{2kQt})), rewritten with e^{-2kQt} so
    // large t underflows to q_inf instead of overflowing. g3 < 0 for q0 in [0,1],
    // and the denominator stays strictly negative.
    const double k = C / std::sqrt(Q * R);
    const double q_inf = k / (k + 1.0);
    const double g1 = q_inf - q0;
    const double g2 = g1 * (k - 1.0);
    const double g3 = (k - 1.0) * q0 - k;
    const double y = std::exp(-2.0 * k * Q * t);
    return detail::clamp_unit(q_inf + 2.0 * q_inf * g1 * y / (g2 * y + g3));
}

/// Observation time needed to raise clarity from q0 to q1.
///
/// Zero when q1 <= q0. Throws UnreachableClarity when q1 >= q_inf.
inline double time_to_clarity(double q0, double q1, const ClarityParams& p) {
    p.validate();
    detail::check_clarity(q0, "q0");
    detail::check_clarity(q1, "q1");
    if (q1 <= q0) return 0.0;

    const double q_inf = max_clarity(p);
    const double C = p.sensing_gain;
    const double Q = p.process_noise;
    const double R = p.measurement_noise;
    // C = 0 never gains information, whatever the q_inf convention says.
    if (q1 >= q_inf || C == 0.0) throw UnreachableClarity("clarity: target is at or above the maximum attainable clarity");

    double t = 0.0;
    if (Q == 0.0) {
        const double a = C * C / R;
        t = (q1 - q0) / (a * (1.0 - q0) * (1.0 - q1));
    } else {
        const double k = C / std::sqrt(Q * R);
        const double g1 = q_inf - q0;
        const double g2 = g1 * (k - 1.0);
        const double g3 = (k - 1.0) * q0 - k;
        const double d = q1 - q_inf;
        const double y = -d * g3 / (d * g2 - 2.0 * q_inf * g1);
        t = -std::log(y) / (2.0 * k * Q);
    }
    if (std::isfinite(t) && t >= 0.0) return t;

    // Bisection on the forward map; it is monotone in t below q_inf.
    constexpr double t_max = 1e6;
    double lo = 0.0;
    double hi = t_max;
    if (clarity_closed_form(hi, q0, p) < q1) throw UnreachableClarity("clarity: target not reached within the search horizon");
    for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (clarity_closed_form(mid, q0, p) < q1 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace eclares

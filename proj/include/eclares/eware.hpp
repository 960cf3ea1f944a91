#pragma once

// Energy-aware trajectory filter. A candidate is T_N seconds of ergodic
// tracking followed by T_B seconds of back-to-base flight, rolled through the
// nonlinear robot + battery model in one pass. Only candidates that keep the
// state of charge above the reserve and end at the charger are committed;
// otherwise the previous committed trajectory stays in force.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eclares/tracking.hpp"
#include "eclares/trajectory.hpp"
#include "eclares/vehicle.hpp"

namespace eclares {

struct EwareConfig {
    bool enabled = true;
    double soc_reserve = 0.005; ///< minimum SoC at every candidate sample

    void validate() const {
        if (!(soc_reserve >= 0.0 && soc_reserve < 1.0)) throw std::invalid_argument("eware: soc_reserve must lie in [0, 1)");
    }

    bool operator==(const EwareConfig&) const = default;
};

struct CandidateTrajectory {
    double start = 0.0;       ///< tau_j
    double switch_time = 0.0; ///< tau_j + T_N
    double end = 0.0;         ///< tau_j + T_N + T_B
    double dt = 0.0;
    int switch_index = 0;     ///< sample index of the switch time
    bool is_hold = false;     ///< hold-at-charger trajectory
    std::vector<SystemState> states; ///< one more than controls
    Eigen::MatrixXd controls;        ///< 4 x (states - 1)

    std::size_t size() const { return states.size(); }
    const SystemState& terminal() const { return states.back(); }
    double time(std::size_t i) const { return start + static_cast<double>(i) * dt; }

    bool operator==(const CandidateTrajectory& o) const {
        if (start != o.start || switch_time != o.switch_time || end != o.end || dt != o.dt || switch_index != o.switch_index ||
            is_hold != o.is_hold || states.size() != o.states.size() || controls.rows() != o.controls.rows() ||
            controls.cols() != o.controls.cols() || controls != o.controls)
            return false;
        for (std::size_t i = 0; i < states.size(); ++i)
            if (states[i].robot != o.states[i].robot || states[i].soc != o.states[i].soc) return false;
        return true;
    }
};

struct CommittedTrajectory {
    CandidateTrajectory trajectory;
    double commit_time = 0.0;

    bool operator==(const CommittedTrajectory&) const = default;
};

struct Verdict {
    bool valid = false;
    std::string reason; ///< "ok", "energy" or "arrival"
    double min_soc = 0.0;
    double terminal_distance = 0.0;
    double terminal_speed = 0.0;
};

/// Energy condition first, then arrival at the charger.
inline Verdict validate_candidate(const CandidateTrajectory& cand, const B2bConfig& b2b, const EwareConfig& cfg) {
    if (cand.states.empty()) throw std::invalid_argument("eware: empty candidate");
    Verdict v;
    v.min_soc = cand.states.front().soc;
    for (const SystemState& s : cand.states) v.min_soc = std::min(v.min_soc, s.soc);
    const QuadVector& xf = cand.terminal().robot;
    v.terminal_distance = (xf.segment<3>(0) - b2b.charger_position()).norm();
    v.terminal_speed = xf.segment<3>(7).norm();
    if (v.min_soc < cfg.soc_reserve) {
        v.reason = "energy";
    } else if (!within_arrival(xf, b2b)) {
        v.reason = "arrival";
    } else {
        v.valid = true;
        v.reason = "ok";
    }
    return v;
}

inline CommittedTrajectory commit(const Verdict& verdict, const CandidateTrajectory& cand, const CommittedTrajectory& previous,
                                  double now) {
    if (!verdict.valid) return previous;
    return CommittedTrajectory{cand, now};
}

struct EwareAudit {
    double tau = 0.0;
    bool valid = false;
    std::string reason;
    double min_soc = 0.0;
    double terminal_distance = 0.0;
    double elapsed_ms = 0.0; ///< wall-clock build + validate time
};

/// Candidate construction and validation against fixed vehicle, battery,
/// tracking and back-to-base settings.
class EwareFilter {
public:
    EwareFilter(const TrackingController& tracker, const BatteryParams& battery, B2bConfig b2b, EwareConfig cfg)
        : tracker_(tracker), battery_(battery), b2b_cfg_(b2b), cfg_(cfg), planner_(tracker, b2b) {
        battery_.validate();
        cfg_.validate();
    }

    const B2bConfig& b2b() const { return b2b_cfg_; }
    const EwareConfig& config() const { return cfg_; }
    const BackToBasePlanner& planner() const { return planner_; }
    int tracking_steps() const { return tracker_.config().steps(); }
    int b2b_steps() const { return b2b_cfg_.steps(tracker_.config().dt); }

    /// Rolls chi forward from tau: tracking the ergodic reference (13-component
    /// quadrotor states) for T_N, then the back-to-base plan anchored at the
    /// reference state at tau + T_N.
    CandidateTrajectory build_candidate(const SystemState& chi, const Trajectory& ergodic, double tau) const {
        if (!chi.robot.allFinite() || !std::isfinite(chi.soc)) throw std::invalid_argument("eware: non-finite system state");
        if (ergodic.state_dim() != 13) throw std::invalid_argument("eware: ergodic reference must hold quadrotor states");
        const double dt = tracker_.config().dt;
        const int nn = tracking_steps();
        const int nb = b2b_steps();
        const double t_switch = tau + nn * dt;
        const double slack = 1e-9 * std::max(1.0, std::abs(t_switch));
        if (ergodic.empty() || ergodic.t0 > tau + slack || ergodic.end_time() < t_switch - slack)
            throw std::runtime_error("reference underrun");

        const QuadVector anchor = ergodic.state_at(t_switch);
        const B2bPlan plan = planner_.solve(anchor, t_switch);

        CandidateTrajectory c;
        c.start = tau;
        c.switch_time = t_switch;
        c.end = t_switch + nb * dt;
        c.dt = dt;
        c.switch_index = nn;
        c.states.reserve(static_cast<std::size_t>(nn + nb + 1));
        c.controls.resize(4, nn + nb);
        c.states.push_back(chi);
        SystemState s = chi;
        for (int k = 0; k < nn + nb; ++k) {
            const double t = tau + k * dt;
            const RotorCommand u = k < nn ? tracker_.track_step(s.robot, ergodic, t) : tracker_.track_step(s.robot, plan.trajectory, t);
            s = step_system(s, u, tracker_.quad(), battery_, dt);
            c.controls.col(k) = u;
            c.states.push_back(s);
        }
        return c;
    }

    /// Hold at the charger for T_N + T_B, regulating to the charger state.
    CandidateTrajectory hold_candidate(const SystemState& chi, double tau) const {
        const double dt = tracker_.config().dt;
        const int nn = tracking_steps();
        const int nb = b2b_steps();
        const QuadVector goal = b2b_cfg_.charger_state();
        CandidateTrajectory c;
        c.start = tau;
        c.switch_time = tau + nn * dt;
        c.end = c.switch_time + nb * dt;
        c.dt = dt;
        c.switch_index = nn;
        c.is_hold = true;
        c.controls.resize(4, nn + nb);
        c.states.push_back(chi);
        SystemState s = chi;
        for (int k = 0; k < nn + nb; ++k) {
            const RotorCommand u = tracker_.follow(s.robot, goal, tracker_.hover());
            s = step_system(s, u, tracker_.quad(), battery_, dt);
            c.controls.col(k) = u;
            c.states.push_back(s);
        }
        return c;
    }

    Verdict validate(const CandidateTrajectory& cand) const { return validate_candidate(cand, b2b_cfg_, cfg_); }

    /// One filter iteration: build, validate and commit, with an audit record.
    CommittedTrajectory iterate(const SystemState& chi, const Trajectory& ergodic, double tau, const CommittedTrajectory& previous,
                                EwareAudit* audit = nullptr) const {
        const auto t0 = std::chrono::steady_clock::now();
        const CandidateTrajectory cand = build_candidate(chi, ergodic, tau);
        const Verdict v = validate(cand);
        const auto t1 = std::chrono::steady_clock::now();
        if (audit) {
            audit->tau = tau;
            audit->valid = v.valid;
            audit->reason = v.reason;
            audit->min_soc = v.min_soc;
            audit->terminal_distance = v.terminal_distance;
            audit->elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        return commit(v, cand, previous, tau);
    }

    /// Control that follows a committed trajectory `elapsed` seconds after its
    /// start: its recorded control plus feedback on the deviation. Past the
    /// end it regulates to the final state.
    RotorCommand follow(const CommittedTrajectory& com, const QuadVector& x, double now) const {
        const CandidateTrajectory& c = com.trajectory;
        const auto last = static_cast<long long>(c.controls.cols());
        const long long idx = std::llround((now - c.start) / c.dt);
        if (idx >= last || idx < 0) return tracker_.follow(x, c.terminal().robot, tracker_.hover());
        const auto i = static_cast<std::size_t>(idx);
        return tracker_.follow(x, c.states[i].robot, c.controls.col(static_cast<Eigen::Index>(idx)));
    }

private:
    const TrackingController& tracker_;
    BatteryParams battery_;
    B2bConfig b2b_cfg_;
    EwareConfig cfg_;
    BackToBasePlanner planner_;
};

} // namespace eclares

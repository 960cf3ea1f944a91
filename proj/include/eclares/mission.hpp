#pragma once

// Two-rate mission loop: ergodic replanning every T_H, the energy-aware filter
// every T_E, tracking and simulation at the control rate, recharging at the
// charger, and the uniform-TISD and lawnmower baselines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eclares/clarity.hpp"
#include "eclares/domain.hpp"
#include "eclares/env_grid.hpp"
#include "eclares/ergodic.hpp"
#include "eclares/eware.hpp"
#include "eclares/tisd.hpp"
#include "eclares/tracking.hpp"
#include "eclares/trajectory.hpp"
#include "eclares/vehicle.hpp"

namespace eclares {

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Method { clarity_tisd, uniform_tisd, lawnmower };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::clarity_tisd: return "clarity_tisd";
    case Method::uniform_tisd: return "uniform_tisd";
    case Method::lawnmower: return "lawnmower";
    }
    return "unknown";
}

inline Method parse_method(const std::string& s) {
    if (s == "clarity_tisd") return Method::clarity_tisd;
    if (s == "uniform_tisd") return Method::uniform_tisd;
    if (s == "lawnmower") return Method::lawnmower;
    throw ConfigError("unknown method '" + s + "' (expected clarity_tisd, uniform_tisd or lawnmower)");
}

enum class Phase { explore, b2b, charging };

inline std::string to_string(Phase p) {
    switch (p) {
    case Phase::explore: return "explore";
    case Phase::b2b: return "b2b";
    case Phase::charging: return "charging";
    }
    return "unknown";
}

/// q_d = mean over cells of max(0, target - clarity).
inline double mean_clarity_deficit(const CellField& field) {
    if (field.size() == 0) throw std::invalid_argument("mean_clarity_deficit: empty field");
    double total = 0.0;
    for (std::size_t c = 0; c < field.size(); ++c) total += std::max(0.0, field.target_clarity[c] - field.clarity[c]);
    return total / static_cast<double>(field.size());
}

// ---------------------------------------------------------------- lawnmower

/// Boustrophedon sweep over the first two axes: lines at y = i * spacing,
/// traversed alternately left-to-right and right-to-left, then the whole
/// pass in reverse, repeated cyclically.
class LawnmowerPattern {
public:
    LawnmowerPattern(const DomainSpec& domain, double spacing) {
        domain.validate();
        if (domain.axes() != 2) throw std::invalid_argument("lawnmower: planar domains only");
        const double lx = domain.lengths[0];
        const double ly = domain.lengths[1];
        if (!(spacing > 0.0) || spacing > std::min(lx, ly) + 1e-12) throw std::invalid_argument("lawnmower: spacing must lie in (0, min extent]");
        const int lines = static_cast<int>(std::floor(ly / spacing + 1e-9)) + 1;
        std::vector<Eigen::Vector2d> pass;
        for (int i = 0; i < lines; ++i) {
            const double y = i * spacing;
            const bool forward = i % 2 == 0;
            pass.emplace_back(forward ? 0.0 : lx, y);
            pass.emplace_back(forward ? lx : 0.0, y);
        }
        lines_ = lines;
        waypoints_ = pass;
        for (auto it = pass.rbegin() + 1; it != pass.rend(); ++it) waypoints_.push_back(*it);
        arclength_.assign(waypoints_.size(), 0.0);
        for (std::size_t i = 1; i < waypoints_.size(); ++i) arclength_[i] = arclength_[i - 1] + (waypoints_[i] - waypoints_[i - 1]).norm();
        pass_length_ = arclength_[pass.size() - 1];
    }

    int lines() const { return lines_; }
    const std::vector<Eigen::Vector2d>& waypoints() const { return waypoints_; }
    double cycle_length() const { return arclength_.back(); }
    double pass_length() const { return pass_length_; }

    /// Position and unit direction at arclength s (taken modulo the cycle).
    std::pair<Eigen::Vector2d, Eigen::Vector2d> at(double s) const {
        const double L = cycle_length();
        s = std::fmod(s, L);
        if (s < 0.0) s += L;
        auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
        std::size_t i = static_cast<std::size_t>(std::distance(arclength_.begin(), it));
        i = std::clamp<std::size_t>(i, 1, waypoints_.size() - 1);
        const Eigen::Vector2d a = waypoints_[i - 1];
        const Eigen::Vector2d b = waypoints_[i];
        const double seg = arclength_[i] - arclength_[i - 1];
        const Eigen::Vector2d dir = seg > 0.0 ? Eigen::Vector2d((b - a) / seg) : Eigen::Vector2d::Zero();
        return {a + dir * (s - arclength_[i - 1]), dir};
    }

private:
    int lines_ = 0;
    std::vector<Eigen::Vector2d> waypoints_;
    std::vector<double> arclength_;
    double pass_length_ = 0.0;
};

/// Constant-speed sweep reference (x, y, vx, vy) sampled every dt, cycling
/// for `duration` (one forward pass when duration <= 0).
inline Trajectory lawnmower_path(const DomainSpec& domain, double spacing, double speed, double dt = 0.2, double duration = 0.0) {
    if (!(speed > 0.0) || !(dt > 0.0)) throw std::invalid_argument("lawnmower: speed and dt must be positive");
    const LawnmowerPattern pattern(domain, spacing);
    if (!(duration > 0.0)) duration = pattern.pass_length() / speed;
    const auto n = static_cast<Eigen::Index>(std::ceil(duration / dt - 1e-9)) + 1;
    Trajectory t;
    t.dt = dt;
    t.states.resize(4, n);
    t.controls = Eigen::MatrixXd::Zero(2, n - 1);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto [p, d] = pattern.at(speed * static_cast<double>(k) * dt);
        t.states.col(k) << p, speed * d;
    }
    return t;
}

/// One T_H window of the lawnmower baseline: straight transit from the
/// current position to the resume point, then along the sweep.
struct LawnmowerWindow {
    double t0 = 0.0;
    double transit_time = 0.0;
    double start_arclength = 0.0;

    double progress_at(double t, double speed) const { return start_arclength + speed * std::max(0.0, t - t0 - transit_time); }
};

inline Trajectory lawnmower_window(const LawnmowerPattern& pattern, const Eigen::Vector2d& from, double progress, double speed, double t0,
                                   double dt, double horizon, LawnmowerWindow* window = nullptr) {
    const Eigen::Vector2d resume = pattern.at(progress).first;
    const double dist = (resume - from).norm();
    const double transit = dist / speed;
    const Eigen::Vector2d transit_dir = dist > 0.0 ? Eigen::Vector2d((resume - from) / dist) : Eigen::Vector2d::Zero();
    const auto n = static_cast<Eigen::Index>(std::llround(horizon / dt)) + 1;
    Trajectory t;
    t.t0 = t0;
    t.dt = dt;
    t.states.resize(4, n);
    t.controls = Eigen::MatrixXd::Zero(2, n - 1);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double tau = static_cast<double>(k) * dt;
        if (tau < transit) {
            t.states.col(k) << from + transit_dir * speed * tau, speed * transit_dir;
        } else {
            const auto [p, d] = pattern.at(progress + speed * (tau - transit));
            t.states.col(k) << p, speed * d;
        }
    }
    if (window) *window = LawnmowerWindow{t0, transit, progress};
    return t;
}

// ------------------------------------------------------------------ config

struct MissionConfig {
    DomainSpec domain;
    EnvironmentGenerator environment;
    SensorModel sensor;
    QuadrotorParams vehicle;
    BatteryParams battery;
    PtoConfig ergodic;        ///< horizon is T_H
    double tisd_epsilon = 0.05;
    TrackingConfig tracking;  ///< horizon is T_N, dt is the control period
    B2bConfig b2b;            ///< horizon is T_B
    EwareConfig eware;
    double eware_period = 2.0; ///< T_E
    Method method = Method::clarity_tisd;
    double lawnmower_spacing = 0.6;
    double lawnmower_speed = 0.3;
    double duration = 300.0;
    double altitude = 1.0;       ///< flight altitude of lifted references
    double recharge_dwell = 5.0; ///< time spent at the charger before the battery swap completes
    double log_period = 0.5;
    std::uint64_t seed = 1;
    std::vector<double> snapshot_times;

    static bool multiple_of(double a, double b) {
        const double r = a / b;
        return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
    }

    void validate() const {
        auto wrap = [](auto&& f) {
            try {
                f();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        };
        wrap([&] { domain.validate(); });
        wrap([&] { sensor.validate(); });
        wrap([&] { vehicle.validate(); });
        wrap([&] { battery.validate(); });
        wrap([&] { ergodic.validate(); });
        wrap([&] { tracking.validate(); });
        wrap([&] { b2b.validate(tracking.dt); });
        wrap([&] { eware.validate(); });
        if (domain.axes() != 2) throw ConfigError("domain: missions are planar (two lengths)");
        const double dt = tracking.dt;
        const double th = ergodic.horizon, te = eware_period, tn = tracking.horizon;
        if (!(te > 0.0)) throw ConfigError("eware: period T_E must be positive");
        if (!(te < th)) throw ConfigError("rule T_E < T_H violated: the committed trajectory must update faster than the ergodic replan");
        if (!(tn <= te + 1e-12)) throw ConfigError("rule T_N <= T_E violated: each ergodic window must cover the tracking segment of every candidate");
        if (!multiple_of(th, te)) throw ConfigError("rule T_H multiple of T_E violated");
        for (auto [v, name] : {std::pair{th, "T_H"}, {te, "T_E"}, {ergodic.dt, "ergodic dt"}})
            if (!multiple_of(v, dt)) throw ConfigError(std::string("rule ") + name + " multiple of the tracking dt violated");
        if (!(duration >= 0.0) || !multiple_of(duration, dt)) throw ConfigError("mission: duration must be a non-negative multiple of the tracking dt");
        if (!(log_period > 0.0) || !multiple_of(log_period, dt)) throw ConfigError("mission: log_period must be a positive multiple of the tracking dt");
        if (!(recharge_dwell >= 0.0) || !multiple_of(recharge_dwell, dt)) throw ConfigError("mission: recharge_dwell must be a non-negative multiple of the tracking dt");
        if (!std::isfinite(altitude)) throw ConfigError("mission: altitude must be finite");
        if (!(tisd_epsilon > 0.0)) throw ConfigError("mission: tisd_epsilon must be positive");
        if (!(lawnmower_speed > 0.0)) throw ConfigError("mission: lawnmower_speed must be positive");
        if (!(lawnmower_spacing > 0.0) || lawnmower_spacing > std::min(domain.lengths[0], domain.lengths[1]) + 1e-12)
            throw ConfigError("mission: lawnmower_spacing must lie in (0, min domain extent]");
        for (double s : snapshot_times)
            if (!(s >= 0.0) || !multiple_of(s, dt)) throw ConfigError("mission: snapshot times must be non-negative multiples of the tracking dt");
        const auto& g = environment;
        if (!(g.background_noise >= 0.0 && g.patch_noise >= 0.0)) throw ConfigError("environment: process noise must be non-negative");
        if (g.patch_count < 0 || !(g.patch_radius >= 0.0)) throw ConfigError("environment: patch_count and patch_radius must be non-negative");
        if (!(g.measurement_noise > 0.0)) throw ConfigError("environment: measurement_noise must be positive");
        if (!(g.sensing_gain >= 0.0)) throw ConfigError("environment: sensing_gain must be non-negative");
        if (!(g.initial_clarity >= 0.0 && g.initial_clarity <= 1.0)) throw ConfigError("environment: initial_clarity must lie in [0, 1]");
        if (!(g.target_fraction > 0.0 && g.target_fraction < 1.0)) throw ConfigError("environment: target_fraction must lie in (0, 1)");
        if (!(g.target_clarity >= 0.0 && g.target_clarity < 1.0)) throw ConfigError("environment: target_clarity must lie in [0, 1)");
        if (!(g.value_spread >= 0.0) || !std::isfinite(g.value_mean)) throw ConfigError("environment: value_mean must be finite and value_spread non-negative");
        // Per-cell well-posedness (target below the attainable clarity) needs
        // the generated field; checked by make_mission_field.
    }

    bool operator==(const MissionConfig&) const = default;
};

/// Generates the environment and re-raises per-cell violations as
/// configuration errors.
inline CellField make_mission_field(const MissionConfig& cfg, Rng& rng) {
    try {
        return make_field(cfg.domain, cfg.environment, rng);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

/// Validates everything, including the generated field for cfg.seed.
inline void validate_mission(const MissionConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    (void)make_mission_field(cfg, rng);
}

// ------------------------------------------------------------------ metrics

struct MetricsRow {
    double t = 0.0;
    double q_d = 0.0;
    double soc = 0.0;
    Vec3 position = Vec3::Zero();
    double dist_to_charger = 0.0;
    Phase phase = Phase::explore;
    std::string event;
};

struct ReplanRecord {
    double t = 0.0;
    double metric_before = 0.0;
    double metric_after = 0.0;
    double objective_before = 0.0;
    double objective_after = 0.0;
    int iterations = 0;
    bool targets_satisfied = false;
    double elapsed_ms = 0.0;
};

struct LandingRecord {
    double t = 0.0;
    double soc = 0.0;
    double distance = 0.0;
    double speed = 0.0;
};

struct FieldSnapshot {
    double t = 0.0;
    CellField field;
};

struct MeasurementRecord {
    double t = 0.0;
    std::size_t cell = 0;
    double value = 0.0;
};

struct MetricsLog {
    std::vector<MetricsRow> rows;
    std::vector<ReplanRecord> replans;
    std::vector<EwareAudit> audits;
    std::vector<LandingRecord> landings;
    std::vector<FieldSnapshot> snapshots;
    std::vector<MeasurementRecord> measurements;
    bool crashed = false;
    double crash_time = 0.0;
    double min_soc = 1.0;                ///< over every simulated step
    double min_soc_outside_charger = 1.0; ///< over steps outside the arrival ball
    bool soc_monotone_outside_charging = true;
};

/// Raised when the filter rejects a candidate from the charger with a fresh
/// battery: no mission can start under such settings.
class FatalConfigurationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// --------------------------------------------------------------- simulation

class MissionRunner {
public:
    explicit MissionRunner(MissionConfig cfg)
        : cfg_((cfg.validate(), std::move(cfg))),
          tracker_(cfg_.vehicle, cfg_.tracking),
          filter_(tracker_, cfg_.battery, cfg_.b2b, cfg_.eware),
          basis_(cfg_.domain, cfg_.ergodic.fourier_max_index),
          pattern_(cfg_.domain, cfg_.lawnmower_spacing) {}

    MissionRunner(const MissionRunner&) = delete;
    MissionRunner& operator=(const MissionRunner&) = delete;

    MetricsLog run() {
        const double dt = cfg_.tracking.dt;
        auto ticks = [&](double v) { return static_cast<long long>(std::llround(v / dt)); };
        const long long n_total = ticks(cfg_.duration);
        const long long n_h = ticks(cfg_.ergodic.horizon);
        const long long n_e = ticks(cfg_.eware_period);
        const long long n_n = ticks(cfg_.tracking.horizon);
        const long long n_log = ticks(cfg_.log_period);
        const long long n_dwell = ticks(cfg_.recharge_dwell);
        const bool eware_on = cfg_.eware.enabled;
        const Vec3 charger = cfg_.b2b.charger_position();

        Rng rng(cfg_.seed);
        field_ = make_mission_field(cfg_, rng);
        chi_ = SystemState{cfg_.b2b.charger_state(), 1.0};
        committed_ = CommittedTrajectory{filter_.hold_candidate(chi_, 0.0), 0.0};
        phase_ = Phase::explore;
        log_ = MetricsLog{};
        plan_.reset();
        lawn_progress_ = 0.0;

        std::vector<long long> snapshot_ticks;
        for (double s : cfg_.snapshot_times) snapshot_ticks.push_back(ticks(s));
        auto take_snapshots = [&](long long i) {
            for (long long s : snapshot_ticks)
                if (s == i) log_.snapshots.push_back(FieldSnapshot{static_cast<double>(i) * dt, field_});
        };

        std::string pending_event = "start";
        auto add_event = [&](const std::string& e) { pending_event += pending_event.empty() ? e : ";" + e; };
        auto write_row = [&](long long i) {
            MetricsRow r;
            r.t = static_cast<double>(i) * dt;
            r.q_d = mean_clarity_deficit(field_);
            r.soc = chi_.soc;
            r.position = chi_.position();
            r.dist_to_charger = (chi_.position() - charger).norm();
            r.phase = phase_;
            r.event = pending_event;
            pending_event.clear();
            log_.rows.push_back(std::move(r));
        };

        write_row(0);
        take_snapshots(0);
        log_.min_soc = chi_.soc;

        bool replan_now = false;
        long long charge_end = -1;
        for (long long i = 0; i < n_total; ++i) {
            const double t = static_cast<double>(i) * dt;

            if (phase_ == Phase::charging && i >= charge_end) {
                chi_.soc = 1.0;
                chi_.robot = cfg_.b2b.charger_state();
                committed_ = CommittedTrajectory{filter_.hold_candidate(chi_, t), t};
                phase_ = Phase::explore;
                replan_now = true;
                add_event("recharged");
            }

            if (phase_ != Phase::charging) {
                if (i % n_h == 0 || replan_now) {
                    replan(t);
                    replan_now = false;
                    add_event("replan");
                }
                if (eware_on && i % n_e == 0) {
                    EwareAudit audit;
                    const CommittedTrajectory next = filter_.iterate(chi_, *reference_, t, committed_, &audit);
                    log_.audits.push_back(audit);
                    if (!audit.valid && committed_.trajectory.is_hold)
                        throw FatalConfigurationError("eware rejected the first candidate from the charger with a fresh battery (reason: " +
                                                      audit.reason + "); the back-to-base horizon or energy settings are infeasible");
                    committed_ = next;
                    add_event(audit.valid ? "commit" : "reject_" + audit.reason);
                }
            }

            const double soc_before = chi_.soc;
            if (phase_ != Phase::charging) {
                const RotorCommand u = eware_on ? filter_.follow(committed_, chi_.robot, t) : tracker_.track_step(chi_.robot, *reference_, t);
                chi_ = step_system(chi_, u, cfg_.vehicle, cfg_.battery, dt);
                if (chi_.soc > soc_before) log_.soc_monotone_outside_charging = false;
            }
            const double t_next = static_cast<double>(i + 1) * dt;
            const double dist = (chi_.position() - charger).norm();
            log_.min_soc = std::min(log_.min_soc, chi_.soc);
            if (dist > cfg_.b2b.arrival_position_tolerance) log_.min_soc_outside_charger = std::min(log_.min_soc_outside_charger, chi_.soc);

            if (phase_ != Phase::charging && eware_on) {
                const long long commit_tick = std::llround(committed_.trajectory.start / dt);
                const bool in_tail = !committed_.trajectory.is_hold && (i - commit_tick) >= n_n;
                phase_ = in_tail ? Phase::b2b : Phase::explore;
                if (phase_ == Phase::b2b && within_arrival(chi_.robot, cfg_.b2b)) {
                    log_.landings.push_back(LandingRecord{t_next, chi_.soc, dist, chi_.velocity().norm()});
                    chi_.robot = cfg_.b2b.charger_state();
                    phase_ = Phase::charging;
                    charge_end = i + 1 + n_dwell;
                    add_event("landing");
                }
            }
            if (cfg_.method == Method::lawnmower && phase_ == Phase::explore && (!eware_on || !committed_.trajectory.is_hold))
                lawn_progress_ = lawn_window_.progress_at(t_next, cfg_.lawnmower_speed);

            std::vector<std::size_t> observed;
            if (phase_ != Phase::charging) observed = sensor_footprint(chi_.position().head(2), cfg_.domain, cfg_.sensor);
            update_clarity_field(field_, observed, dt);
            for (const Measurement& m : measure(field_, observed, rng)) log_.measurements.push_back(MeasurementRecord{t_next, m.cell, m.value});
            step_environment(field_, dt, rng);

            const bool crash = chi_.soc <= 0.0 && dist > cfg_.b2b.arrival_position_tolerance;
            if (crash) {
                log_.crashed = true;
                log_.crash_time = t_next;
                add_event("crash");
            }
            if ((i + 1) % n_log == 0 || crash) write_row(i + 1);
            take_snapshots(i + 1);
            if (crash) break;
        }
        return log_;
    }

    const MissionConfig& config() const { return cfg_; }
    /// Log accumulated so far; complete after run() returns, partial if it threw.
    const MetricsLog& partial_log() const { return log_; }
    const TrackingController& tracker() const { return tracker_; }
    const EwareFilter& filter() const { return filter_; }
    const CommittedTrajectory& committed() const { return committed_; }
    const CellField& field() const { return field_; }

private:
    void replan(double t) {
        const auto start = std::chrono::steady_clock::now();
        Eigen::VectorXd x0(4);
        x0 << chi_.robot[0], chi_.robot[1], chi_.robot[7], chi_.robot[8];
        for (int i = 0; i < 2; ++i) x0[i] = std::clamp(x0[i], 0.0, cfg_.domain.lengths[static_cast<std::size_t>(i)]);

        ReplanRecord rec;
        rec.t = t;
        Trajectory planar;
        if (cfg_.method == Method::lawnmower) {
            planar = lawnmower_window(pattern_, x0.head(2), lawn_progress_, cfg_.lawnmower_speed, t, cfg_.ergodic.dt, cfg_.ergodic.horizon,
                                      &lawn_window_);
            const Tisd tisd = uniform_tisd(cfg_.domain);
            const Eigen::VectorXd phi = tisd_coefficients(tisd, basis_);
            rec.metric_before = rec.metric_after = ergodic_metric(make_spectrum(basis_, trajectory_coefficients(planar, basis_), phi));
        } else {
            const Tisd tisd = cfg_.method == Method::clarity_tisd ? gen_tisd(field_, cfg_.tisd_epsilon) : uniform_tisd(cfg_.domain);
            rec.targets_satisfied = tisd.targets_satisfied;
            std::optional<Eigen::MatrixXd> warm;
            if (plan_) {
                // Shift the unexecuted part of the previous plan and pad with zero acceleration.
                const auto shift = static_cast<Eigen::Index>(std::floor((t - plan_->t0) / cfg_.ergodic.dt + 1e-9));
                const Eigen::Index m = plan_->controls.cols();
                if (shift >= 0 && shift < m) {
                    warm = Eigen::MatrixXd::Zero(2, cfg_.ergodic.steps());
                    warm->leftCols(m - shift) = plan_->controls.rightCols(m - shift);
                }
            }
            const PtoResult r = pto_optimize(x0, tisd, cfg_.ergodic, warm ? &*warm : nullptr);
            planar = r.trajectory;
            planar.t0 = t;
            rec.metric_before = r.initial_metric;
            rec.metric_after = r.final_metric;
            rec.objective_before = r.initial_objective;
            rec.objective_after = r.final_objective;
            rec.iterations = r.iterations;
        }
        plan_ = planar;
        reference_ = lift_reference(planar, cfg_.altitude, cfg_.vehicle.hover_command());
        rec.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        log_.replans.push_back(rec);
    }

    MissionConfig cfg_;
    TrackingController tracker_;
    EwareFilter filter_;
    SpectralBasis basis_;
    LawnmowerPattern pattern_;

    CellField field_;
    SystemState chi_;
    CommittedTrajectory committed_;
    Phase phase_ = Phase::explore;
    MetricsLog log_;
    std::optional<Trajectory> plan_;
    std::optional<Trajectory> reference_;
    LawnmowerWindow lawn_window_;
    double lawn_progress_ = 0.0;
};

inline MetricsLog run_mission(const MissionConfig& cfg) { return MissionRunner(cfg).run(); }

} // namespace eclares

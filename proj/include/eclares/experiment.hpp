#pragma once

// Runs presets or single configurations and writes their outputs:
//   <out>/<variant>/metrics.csv        t, q_d, soc, x, y, z, dist_to_charger, phase, event
//   <out>/<variant>/measurements.csv   t, cell_index, y
//   <out>/<variant>/field_t<T>.csv     clarity snapshots (cell_index, x_center, y_center, m, Q, q, q_target)
//   <out>/<variant>/config.yaml        resolved configuration
//   <out>/<variant>/summary.json       replans, filter statistics, landings, status
//   <out>/<variant>/eware_audit.log    one line per filter iteration (includes wall-clock time)
//   <out>/comparison.csv               t, then q_d per variant
//   <out>/soc_distance.csv             variant, t, dist_to_charger, soc

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eclares/config_io.hpp"
#include "eclares/mission.hpp"

namespace eclares {

namespace fs = std::filesystem;

/// Mission failed during simulation (not a configuration problem).
class MissionRuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void write_metrics_csv(std::ostream& os, const MetricsLog& log) {
    os << "t,q_d,soc,x,y,z,dist_to_charger,phase,event\n";
    char buf[256];
    for (const MetricsRow& r : log.rows) {
        std::snprintf(buf, sizeof buf, "%.3f,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,", r.t, r.q_d, r.soc, r.position.x(), r.position.y(),
                      r.position.z(), r.dist_to_charger);
        os << buf << to_string(r.phase) << ',' << r.event << '\n';
    }
}

inline void write_measurements_csv(std::ostream& os, const MetricsLog& log) {
    os << "t,cell_index,y\n";
    char buf[128];
    for (const MeasurementRecord& m : log.measurements) {
        std::snprintf(buf, sizeof buf, "%.3f,%zu,%.10g\n", m.t, m.cell, m.value);
        os << buf;
    }
}

inline void write_audit_log(std::ostream& os, const MetricsLog& log) {
    char buf[256];
    for (const EwareAudit& a : log.audits) {
        std::snprintf(buf, sizeof buf, "tau=%.3f verdict=%s reason=%s min_soc=%.6f terminal_distance=%.6f elapsed_ms=%.3f\n", a.tau,
                      a.valid ? "commit" : "reject", a.reason.c_str(), a.min_soc, a.terminal_distance, a.elapsed_ms);
        os << buf;
    }
}

struct EwareTiming {
    std::size_t iterations = 0;
    std::size_t commits = 0;
    double mean_ms = 0.0;
    double max_ms = 0.0;
};

inline EwareTiming eware_timing(const MetricsLog& log) {
    EwareTiming t;
    t.iterations = log.audits.size();
    for (const EwareAudit& a : log.audits) {
        t.commits += a.valid ? 1 : 0;
        t.mean_ms += a.elapsed_ms;
        t.max_ms = std::max(t.max_ms, a.elapsed_ms);
    }
    if (t.iterations) t.mean_ms /= static_cast<double>(t.iterations);
    return t;
}

inline nlohmann::json summary_json(const std::string& variant, const MissionConfig& cfg, const MetricsLog& log, const std::string& status,
                                   const std::string& error = "") {
    nlohmann::json j;
    j["variant"] = variant;
    j["method"] = to_string(cfg.method);
    j["eware_enabled"] = cfg.eware.enabled;
    j["seed"] = cfg.seed;
    j["duration"] = cfg.duration;
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    j["final_q_d"] = log.rows.empty() ? nlohmann::json() : nlohmann::json(log.rows.back().q_d);
    j["min_soc"] = log.min_soc;
    j["crashed"] = log.crashed;
    if (log.crashed) j["crash_time"] = log.crash_time;
    nlohmann::json replans = nlohmann::json::array();
    for (const ReplanRecord& r : log.replans)
        replans.push_back({{"t", r.t},
                           {"metric_before", r.metric_before},
                           {"metric_after", r.metric_after},
                           {"objective_before", r.objective_before},
                           {"objective_after", r.objective_after},
                           {"iterations", r.iterations},
                           {"targets_satisfied", r.targets_satisfied},
                           {"elapsed_ms", r.elapsed_ms}});
    j["replans"] = replans;
    const EwareTiming t = eware_timing(log);
    j["eware"] = {{"iterations", t.iterations}, {"commits", t.commits}, {"rejects", t.iterations - t.commits}, {"mean_ms", t.mean_ms}, {"max_ms", t.max_ms}};
    nlohmann::json landings = nlohmann::json::array();
    for (const LandingRecord& l : log.landings) landings.push_back({{"t", l.t}, {"soc", l.soc}, {"distance", l.distance}, {"speed", l.speed}});
    j["landings"] = landings;
    return j;
}

inline std::string snapshot_name(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "field_t%.3f.csv", t);
    return buf;
}

struct VariantResult {
    Variant variant;
    MissionConfig config;
    MetricsLog log;
    bool failed = false;
    std::string error;
};

/// Runs one variant and writes its directory. Simulation failures are
/// recorded (status "failed", partial logs kept) rather than thrown.
inline VariantResult run_variant(const Variant& v, const MissionConfig& cfg, const fs::path& dir) {
    VariantResult res{v, cfg, {}, false, ""};
    fs::create_directories(dir);
    {
        std::ofstream(dir / "config.yaml") << serialize_config(cfg);
    }
    MissionRunner runner(cfg);
    try {
        res.log = runner.run();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
        res.log = runner.partial_log();
    }
    const std::string status = res.failed ? "failed" : res.log.crashed ? "crash" : "ok";
    {
        std::ofstream os(dir / "metrics.csv");
        write_metrics_csv(os, res.log);
    }
    {
        std::ofstream os(dir / "measurements.csv");
        write_measurements_csv(os, res.log);
    }
    for (const FieldSnapshot& s : res.log.snapshots) {
        std::ofstream os(dir / snapshot_name(s.t));
        write_field_csv(os, s.field);
    }
    {
        std::ofstream os(dir / "eware_audit.log");
        write_audit_log(os, res.log);
    }
    {
        std::ofstream os(dir / "summary.json");
        os << summary_json(v.name, cfg, res.log, status, res.error).dump(2) << '\n';
    }
    return res;
}

/// t, q_d_<variant>... on the shared logging clock; shorter runs (crashes)
/// leave their trailing cells empty.
inline void write_comparison_csv(std::ostream& os, const std::vector<VariantResult>& results) {
    os << 't';
    for (const auto& r : results) os << ",q_d_" << r.variant.name;
    os << '\n';
    std::size_t rows = 0;
    const VariantResult* longest = nullptr;
    for (const auto& r : results)
        if (r.log.rows.size() >= rows) {
            rows = r.log.rows.size();
            longest = &r;
        }
    char buf[64];
    for (std::size_t i = 0; i < rows; ++i) {
        std::snprintf(buf, sizeof buf, "%.3f", longest->log.rows[i].t);
        os << buf;
        for (const auto& r : results) {
            os << ',';
            if (i < r.log.rows.size() && r.log.rows[i].t == longest->log.rows[i].t) {
                std::snprintf(buf, sizeof buf, "%.10g", r.log.rows[i].q_d);
                os << buf;
            }
        }
        os << '\n';
    }
}

inline void write_soc_distance_csv(std::ostream& os, const std::vector<VariantResult>& results) {
    os << "variant,t,dist_to_charger,soc\n";
    char buf[128];
    for (const auto& r : results)
        for (const MetricsRow& row : r.log.rows) {
            std::snprintf(buf, sizeof buf, ",%.3f,%.10g,%.10g\n", row.t, row.dist_to_charger, row.soc);
            os << r.variant.name << buf;
        }
}

struct ExperimentResult {
    fs::path out_dir;
    std::vector<VariantResult> variants;

    bool any_failed() const {
        for (const auto& v : variants)
            if (v.failed) return true;
        return false;
    }

    /// A crash that the preset did not expect.
    bool unexpected_crash() const {
        for (const auto& v : variants)
            if (v.log.crashed && !v.variant.expect_crash) return true;
        return false;
    }
};

/// Runs every variant of a preset (sequentially; each has its own directory)
/// and writes the combined comparison and SoC-distance files.
inline ExperimentResult run_experiment(const ExperimentPreset& preset, const fs::path& out_dir) {
    for (const Variant& v : preset.variants) validate_mission(preset.variant_config(v));
    ExperimentResult res;
    res.out_dir = out_dir;
    fs::create_directories(out_dir);
    for (const Variant& v : preset.variants) res.variants.push_back(run_variant(v, preset.variant_config(v), out_dir / v.name));
    {
        std::ofstream os(out_dir / "comparison.csv");
        write_comparison_csv(os, res.variants);
    }
    {
        std::ofstream os(out_dir / "soc_distance.csv");
        write_soc_distance_csv(os, res.variants);
    }
    return res;
}

/// Single-configuration run as a one-variant experiment named after its method.
inline ExperimentResult run_single(const MissionConfig& cfg, const fs::path& out_dir) {
    ExperimentPreset p;
    p.name = "run";
    p.config = cfg;
    p.variants = {Variant{to_string(cfg.method), cfg.method, cfg.eware.enabled, false}};
    return run_experiment(p, out_dir);
}

} // namespace eclares

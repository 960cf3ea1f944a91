#pragma once

// YAML mission configuration: parsing with key/line diagnostics, validation,
// serialization (round-trip exact) and the shipped presets.
//
// Layout: eight required top-level sections (domain, environment, vehicle,
// battery, ergodic, tracking, eware, mission). Keys inside a section are
// optional and default to the values of MissionConfig; unknown keys are errors.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "eclares/mission.hpp"

namespace eclares {

namespace detail {

inline std::string where(const YAML::Node& n) {
    const YAML::Mark m = n.Mark();
    if (m.is_null()) return "";
    return " (line " + std::to_string(m.line + 1) + ")";
}

template <class T>
T decode_scalar(const YAML::Node& n, const std::string& key) {
    if (!n.IsScalar()) throw ConfigError("key '" + key + "'" + where(n) + ": expected a scalar");
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("key '" + key + "'" + where(n) + ": cannot convert '" + n.Scalar() + "'");
    }
}

template <class T>
void decode(const YAML::Node& n, const std::string& key, T& out) {
    if constexpr (std::is_same_v<T, Method>) {
        try {
            out = parse_method(decode_scalar<std::string>(n, key));
        } catch (const ConfigError& e) {
            throw ConfigError("key '" + key + "'" + where(n) + ": " + e.what());
        }
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!n.IsSequence()) throw ConfigError("key '" + key + "'" + where(n) + ": expected a list of numbers");
        out.clear();
        for (const auto& e : n) out.push_back(decode_scalar<double>(e, key));
    } else if constexpr (std::is_same_v<T, std::array<double, 3>>) {
        if (!n.IsSequence() || n.size() != 3) throw ConfigError("key '" + key + "'" + where(n) + ": expected a list of three numbers");
        for (std::size_t i = 0; i < 3; ++i) out[i] = decode_scalar<double>(n[i], key);
    } else {
        out = decode_scalar<T>(n, key);
    }
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string shortest(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

template <class T>
void encode(YAML::Emitter& out, const T& v) {
    if constexpr (std::is_same_v<T, Method>) {
        out << to_string(v);
    } else if constexpr (std::is_same_v<T, double>) {
        out << shortest(v);
    } else if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::array<double, 3>>) {
        out << YAML::Flow << YAML::BeginSeq;
        for (double x : v) out << shortest(x);
        out << YAML::EndSeq;
    } else {
        out << v;
    }
}

struct Field {
    std::string section;
    std::string key;
    std::function<void(MissionConfig&, const YAML::Node&)> read;
    std::function<void(const MissionConfig&, YAML::Emitter&)> write;
};

template <class Access>
Field field(std::string section, std::string key, Access access) {
    using T = std::remove_cvref_t<decltype(access(std::declval<MissionConfig&>()))>;
    Field f;
    f.section = section;
    f.key = key;
    f.read = [access, qualified = section + "." + key](MissionConfig& c, const YAML::Node& n) { decode<T>(n, qualified, access(c)); };
    f.write = [access](const MissionConfig& c, YAML::Emitter& out) { encode<T>(out, access(c)); };
    return f;
}

inline const std::vector<std::string>& required_sections() {
    static const std::vector<std::string> s{"domain", "environment", "vehicle", "battery", "ergodic", "tracking", "eware", "mission"};
    return s;
}

inline const std::vector<Field>& fields() {
    // clang-format off
    static const std::vector<Field> f{
        field("domain", "lengths", [](auto& c) -> auto& { return c.domain.lengths; }),
        field("domain", "cell_size", [](auto& c) -> auto& { return c.domain.cell_size; }),

        field("environment", "background_noise", [](auto& c) -> auto& { return c.environment.background_noise; }),
        field("environment", "patch_noise", [](auto& c) -> auto& { return c.environment.patch_noise; }),
        field("environment", "patch_count", [](auto& c) -> auto& { return c.environment.patch_count; }),
        field("environment", "patch_radius", [](auto& c) -> auto& { return c.environment.patch_radius; }),
        field("environment", "value_mean", [](auto& c) -> auto& { return c.environment.value_mean; }),
        field("environment", "value_spread", [](auto& c) -> auto& { return c.environment.value_spread; }),
        field("environment", "initial_clarity", [](auto& c) -> auto& { return c.environment.initial_clarity; }),
        field("environment", "target_fraction", [](auto& c) -> auto& { return c.environment.target_fraction; }),
        field("environment", "target_clarity", [](auto& c) -> auto& { return c.environment.target_clarity; }),
        field("environment", "measurement_noise", [](auto& c) -> auto& { return c.environment.measurement_noise; }),
        field("environment", "sensing_gain", [](auto& c) -> auto& { return c.environment.sensing_gain; }),
        field("environment", "footprint_radius", [](auto& c) -> auto& { return c.sensor.footprint_radius; }),
        field("environment", "tisd_epsilon", [](auto& c) -> auto& { return c.tisd_epsilon; }),

        field("vehicle", "mass", [](auto& c) -> auto& { return c.vehicle.mass; }),
        field("vehicle", "inertia", [](auto& c) -> auto& { return c.vehicle.inertia; }),
        field("vehicle", "arm_length", [](auto& c) -> auto& { return c.vehicle.arm_length; }),
        field("vehicle", "thrust_coefficient", [](auto& c) -> auto& { return c.vehicle.thrust_coefficient; }),
        field("vehicle", "moment_coefficient", [](auto& c) -> auto& { return c.vehicle.moment_coefficient; }),
        field("vehicle", "gravity", [](auto& c) -> auto& { return c.vehicle.gravity; }),

        field("battery", "capacity", [](auto& c) -> auto& { return c.battery.capacity; }),
        field("battery", "efficiency", [](auto& c) -> auto& { return c.battery.efficiency; }),
        field("battery", "discharge_gain", [](auto& c) -> auto& { return c.battery.discharge_gain; }),

        field("ergodic", "horizon", [](auto& c) -> auto& { return c.ergodic.horizon; }),
        field("ergodic", "dt", [](auto& c) -> auto& { return c.ergodic.dt; }),
        field("ergodic", "fourier_max_index", [](auto& c) -> auto& { return c.ergodic.fourier_max_index; }),
        field("ergodic", "control_weight", [](auto& c) -> auto& { return c.ergodic.control_weight; }),
        field("ergodic", "boundary_weight", [](auto& c) -> auto& { return c.ergodic.boundary_weight; }),
        field("ergodic", "max_iterations", [](auto& c) -> auto& { return c.ergodic.max_iterations; }),
        field("ergodic", "tolerance", [](auto& c) -> auto& { return c.ergodic.tolerance; }),
        field("ergodic", "initial_step", [](auto& c) -> auto& { return c.ergodic.initial_step; }),
        field("ergodic", "armijo_slope", [](auto& c) -> auto& { return c.ergodic.armijo_slope; }),
        field("ergodic", "shrink", [](auto& c) -> auto& { return c.ergodic.shrink; }),
        field("ergodic", "max_backtracks", [](auto& c) -> auto& { return c.ergodic.max_backtracks; }),
        field("ergodic", "spiral_amplitude", [](auto& c) -> auto& { return c.ergodic.spiral_amplitude; }),

        field("tracking", "dt", [](auto& c) -> auto& { return c.tracking.dt; }),
        field("tracking", "horizon", [](auto& c) -> auto& { return c.tracking.horizon; }),
        field("tracking", "position_weight", [](auto& c) -> auto& { return c.tracking.position_weight; }),
        field("tracking", "attitude_weight", [](auto& c) -> auto& { return c.tracking.attitude_weight; }),
        field("tracking", "velocity_weight", [](auto& c) -> auto& { return c.tracking.velocity_weight; }),
        field("tracking", "angular_velocity_weight", [](auto& c) -> auto& { return c.tracking.angular_velocity_weight; }),
        field("tracking", "control_weight", [](auto& c) -> auto& { return c.tracking.control_weight; }),
        field("tracking", "thrust_min", [](auto& c) -> auto& { return c.tracking.thrust_min; }),
        field("tracking", "thrust_max", [](auto& c) -> auto& { return c.tracking.thrust_max; }),

        field("eware", "enabled", [](auto& c) -> auto& { return c.eware.enabled; }),
        field("eware", "period", [](auto& c) -> auto& { return c.eware_period; }),
        field("eware", "soc_reserve", [](auto& c) -> auto& { return c.eware.soc_reserve; }),
        field("eware", "b2b_horizon", [](auto& c) -> auto& { return c.b2b.horizon; }),
        field("eware", "charger", [](auto& c) -> auto& { return c.b2b.charger; }),
        field("eware", "arrival_position_tolerance", [](auto& c) -> auto& { return c.b2b.arrival_position_tolerance; }),
        field("eware", "arrival_velocity_tolerance", [](auto& c) -> auto& { return c.b2b.arrival_velocity_tolerance; }),
        field("eware", "b2b_position_weight", [](auto& c) -> auto& { return c.b2b.position_weight; }),
        field("eware", "b2b_attitude_weight", [](auto& c) -> auto& { return c.b2b.attitude_weight; }),
        field("eware", "b2b_velocity_weight", [](auto& c) -> auto& { return c.b2b.velocity_weight; }),
        field("eware", "b2b_angular_velocity_weight", [](auto& c) -> auto& { return c.b2b.angular_velocity_weight; }),
        field("eware", "b2b_terminal_weight", [](auto& c) -> auto& { return c.b2b.terminal_weight; }),

        field("mission", "method", [](auto& c) -> auto& { return c.method; }),
        field("mission", "duration", [](auto& c) -> auto& { return c.duration; }),
        field("mission", "seed", [](auto& c) -> auto& { return c.seed; }),
        field("mission", "altitude", [](auto& c) -> auto& { return c.altitude; }),
        field("mission", "recharge_dwell", [](auto& c) -> auto& { return c.recharge_dwell; }),
        field("mission", "log_period", [](auto& c) -> auto& { return c.log_period; }),
        field("mission", "lawnmower_spacing", [](auto& c) -> auto& { return c.lawnmower_spacing; }),
        field("mission", "lawnmower_speed", [](auto& c) -> auto& { return c.lawnmower_speed; }),
        field("mission", "snapshot_times", [](auto& c) -> auto& { return c.snapshot_times; }),
    };
    // clang-format on
    return f;
}

} // namespace detail

/// Parses YAML text; `origin` names the source in diagnostics. Structural
/// errors are reported here, invariant violations by validate_mission.
inline MissionConfig parse_config_text(const std::string& text, const std::string& origin = "<config>") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(origin + ": YAML syntax error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    const auto& sections = detail::required_sections();
    auto all_sections = [&] {
        std::string s;
        for (const auto& n : sections) s += (s.empty() ? "" : ", ") + n;
        return s;
    };
    if (!root || root.IsNull()) throw ConfigError(origin + ": empty configuration; required sections: " + all_sections());
    if (!root.IsMap()) throw ConfigError(origin + ": top level must be a mapping of sections; required sections: " + all_sections());

    std::string missing;
    for (const auto& s : sections)
        if (!root[s]) missing += (missing.empty() ? "" : ", ") + s;
    if (!missing.empty()) throw ConfigError(origin + ": missing required sections: " + missing);

    MissionConfig cfg;
    for (const auto& kv : root) {
        const std::string name = kv.first.as<std::string>();
        if (std::find(sections.begin(), sections.end(), name) == sections.end())
            throw ConfigError(origin + ": unknown section '" + name + "'" + detail::where(kv.first));
        const YAML::Node& body = kv.second;
        if (body.IsNull()) continue; // all defaults
        if (!body.IsMap()) throw ConfigError(origin + ": section '" + name + "'" + detail::where(body) + " must be a mapping");
        for (const auto& entry : body) {
            const std::string key = entry.first.as<std::string>();
            const auto& fs = detail::fields();
            auto it = std::find_if(fs.begin(), fs.end(), [&](const detail::Field& f) { return f.section == name && f.key == key; });
            if (it == fs.end()) throw ConfigError(origin + ": unknown key '" + name + "." + key + "'" + detail::where(entry.first));
            try {
                it->read(cfg, entry.second);
            } catch (const ConfigError& e) {
                throw ConfigError(origin + ": " + e.what());
            }
        }
    }
    return cfg;
}

/// Reads and parses a file without checking invariants (so that command-line
/// overrides can be applied before validation).
inline MissionConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

/// Reads, parses and fully validates a configuration file.
inline MissionConfig parse_config(const std::string& path) {
    MissionConfig cfg = read_config_file(path);
    validate_mission(cfg);
    return cfg;
}

/// Full configuration as YAML, every key written, doubles in their shortest
/// exact decimal form.
inline std::string serialize_config(const MissionConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    for (const auto& section : detail::required_sections()) {
        out << YAML::Key << section << YAML::Value << YAML::BeginMap;
        for (const auto& f : detail::fields()) {
            if (f.section != section) continue;
            out << YAML::Key << f.key << YAML::Value;
            f.write(cfg, out);
        }
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

// ------------------------------------------------------------------ presets

struct Variant {
    std::string name;
    Method method = Method::clarity_tisd;
    bool eware = true;
    bool expect_crash = false; ///< the crash is the expected outcome (ablation)
};

struct ExperimentPreset {
    std::string name;
    std::string description;
    MissionConfig config;
    std::vector<Variant> variants;

    /// Config of one variant: shared domain, seed and duration, own method and filter switch.
    MissionConfig variant_config(const Variant& v) const {
        MissionConfig c = config;
        c.method = v.method;
        c.eware.enabled = v.eware;
        return c;
    }
};

/// Desk-scale spatiostatic mission: 2 x 2 m, 0.2 m cells, T_H = 10 s,
/// T_E = T_N = 2 s, T_B = 5 s, 300 s, a full charge lasting about 90 s of hover.
inline MissionConfig desk_config() {
    MissionConfig c;
    c.domain = DomainSpec{{2.0, 2.0}, 0.2};
    c.environment = EnvironmentGenerator{};
    c.sensor.footprint_radius = 0.25;
    c.ergodic.horizon = 10.0;
    c.ergodic.dt = 0.2;
    c.tracking.dt = 0.05;
    c.tracking.horizon = 2.0;
    c.eware_period = 2.0;
    c.b2b.horizon = 5.0;
    c.b2b.charger = {0.0, 0.0, 1.0};
    c.altitude = 1.0;
    c.battery.discharge_gain = BatteryParams::gain_for_hover(c.vehicle, c.battery.capacity, c.battery.efficiency, 90.0);
    c.duration = 300.0;
    c.recharge_dwell = 5.0;
    c.snapshot_times = {0.0, 100.0, 200.0, 300.0};
    return c;
}

/// Desk-scale stochastic environment: low background process noise with
/// high-noise patches.
inline MissionConfig desk_stochastic_config() {
    MissionConfig c = desk_config();
    c.environment.background_noise = 0.01;
    c.environment.patch_noise = 0.1;
    c.environment.patch_count = 3;
    c.environment.patch_radius = 0.4;
    return c;
}

inline std::vector<ExperimentPreset> presets() {
    std::vector<ExperimentPreset> p;
    const std::vector<Variant> three{{"clarity_tisd", Method::clarity_tisd, true, false},
                                     {"uniform_tisd", Method::uniform_tisd, true, false},
                                     {"lawnmower", Method::lawnmower, true, false}};

    p.push_back({"desk", "desk-scale spatiostatic mission with the clarity-driven TISD", desk_config(),
                 {{"clarity_tisd", Method::clarity_tisd, true, false}}});

    MissionConfig paper = desk_stochastic_config();
    paper.domain = DomainSpec{{20.0, 20.0}, 0.2};
    paper.ergodic.horizon = 30.0;
    paper.eware_period = 2.0;
    paper.tracking.horizon = 2.0;
    paper.b2b.horizon = 10.0;
    paper.b2b.charger = {0.0, 0.0, 1.0};
    paper.environment.patch_count = 12;
    paper.environment.patch_radius = 3.0;
    paper.sensor.footprint_radius = 1.0;
    paper.lawnmower_spacing = 2.0;
    paper.lawnmower_speed = 1.0;
    paper.battery.discharge_gain = BatteryParams::gain_for_hover(paper.vehicle, paper.battery.capacity, paper.battery.efficiency, 300.0);
    paper.duration = 900.0;
    paper.snapshot_times = {0.0, 300.0, 600.0, 900.0};
    p.push_back({"paper-scale", "20 x 20 m stochastic mission with T_H = 30 s, T_E = T_N = 2 s, T_B = 10 s", paper, three});

    p.push_back({"fig5a", "spatiostatic comparison: clarity TISD vs uniform TISD vs lawnmower", desk_config(), three});
    p.push_back({"fig5b", "stochastic comparison: clarity TISD vs uniform TISD vs lawnmower", desk_stochastic_config(), three});
    p.push_back({"eware-ablation", "clarity TISD with and without the energy-aware filter", desk_config(),
                 {{"eware", Method::clarity_tisd, true, false}, {"no_eware", Method::clarity_tisd, false, true}}});
    return p;
}

inline ExperimentPreset find_preset(const std::string& name) {
    for (auto& p : presets())
        if (p.name == name) return p;
    std::string names;
    for (auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
}

} // namespace eclares

// Command-line entry point.
//
//   eclares run <config.yaml>      run one mission configuration
//   eclares compare <preset>       run every variant of a preset on a shared seed
//   eclares validate <config.yaml> parse and validate without running
//   eclares presets list|show <name>
//
// Exit codes: 0 success, 1 configuration error, 2 mission runtime error,
// 3 crash event (a crash that the preset expects, as in the ablation, returns 0).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eclares/config_io.hpp"
#include "eclares/experiment.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kRuntime = 2, kCrash = 3 };

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;

    void apply(eclares::MissionConfig& c) const {
        if (seed) c.seed = *seed;
        if (duration) c.duration = *duration;
    }
};

void report(const eclares::ExperimentResult& r) {
    for (const auto& v : r.variants) {
        const auto& rows = v.log.rows;
        std::cout << v.variant.name << ": ";
        if (v.failed)
            std::cout << "FAILED (" << v.error << ")";
        else if (v.log.crashed)
            std::cout << "crash at t=" << v.log.crash_time << (v.variant.expect_crash ? " (expected)" : "");
        else
            std::cout << "ok";
        if (!rows.empty()) std::cout << ", final q_d=" << rows.back().q_d << ", min SoC=" << v.log.min_soc << ", landings=" << v.log.landings.size();
        std::cout << '\n';
    }
    std::cout << "outputs written to " << r.out_dir.string() << '\n';
}

int outcome(const eclares::ExperimentResult& r) {
    if (r.any_failed()) return kRuntime;
    if (r.unexpected_crash()) return kCrash;
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clarity-driven ergodic coverage with an energy-aware trajectory filter"};
    app.require_subcommand(1);

    Overrides ov;
    std::string out_dir;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", ov.seed, "override the random seed");
        sub->add_option("--duration", ov.duration, "override the mission duration in seconds");
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "run one mission configuration");
    run->add_option("config", config_path, "YAML configuration file")->required();
    run->add_option("--out-dir", out_dir, "output directory (default: out/<config name>)");
    add_common(run);

    std::string preset_name;
    auto* compare = app.add_subcommand("compare", "run every variant of a preset");
    compare->add_option("preset", preset_name, "preset name (see `presets list`)")->required();
    compare->add_option("--out-dir", out_dir, "output directory (default: out/<preset>)");
    add_common(compare);

    auto* validate = app.add_subcommand("validate", "parse and validate a configuration");
    validate->add_option("config", config_path, "YAML configuration file")->required();
    add_common(validate);

    auto* presets = app.add_subcommand("presets", "list or show the shipped presets");
    presets->require_subcommand(1);
    auto* list = presets->add_subcommand("list", "list preset names");
    std::string show_name;
    auto* show = presets->add_subcommand("show", "print a preset's configuration as YAML");
    show->add_option("name", show_name, "preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*run || *validate) {
            eclares::MissionConfig cfg = eclares::read_config_file(config_path);
            ov.apply(cfg);
            eclares::validate_mission(cfg);
            if (*validate) {
                std::cout << config_path << ": valid (method " << eclares::to_string(cfg.method) << ", " << cfg.domain.cell_count()
                          << " cells, duration " << cfg.duration << " s)\n";
                return kOk;
            }
            if (out_dir.empty()) out_dir = (std::filesystem::path("out") / std::filesystem::path(config_path).stem()).string();
            const auto result = eclares::run_single(cfg, out_dir);
            report(result);
            return outcome(result);
        }
        if (*compare) {
            eclares::ExperimentPreset p = eclares::find_preset(preset_name);
            ov.apply(p.config);
            if (out_dir.empty()) out_dir = (std::filesystem::path("out") / preset_name).string();
            const auto result = eclares::run_experiment(p, out_dir);
            report(result);
            return outcome(result);
        }
        if (*list) {
            for (const auto& p : eclares::presets()) {
                std::cout << p.name << "  (" << p.variants.size() << " variant" << (p.variants.size() == 1 ? "" : "s") << ": ";
                for (std::size_t i = 0; i < p.variants.size(); ++i) std::cout << (i ? ", " : "") << p.variants[i].name;
                std::cout << ")\n    " << p.description << '\n';
            }
            return kOk;
        }
        if (*show) {
            std::cout << eclares::serialize_config(eclares::find_preset(show_name).config);
            return kOk;
        }
    } catch (const eclares::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}

// Exit-code contract of the command-line tool.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "eclares/config_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = ECLARES_TEST_TMP;

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + ECLARES_CLI_PATH + "\" " + args + " > \"" + (kTmp / "last.log").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const eclares::MissionConfig& c) {
    fs::create_directories(kTmp);
    const fs::path p = kTmp / name;
    std::ofstream(p) << eclares::serialize_config(c);
    return p;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override { fs::create_directories(kTmp); }
};

} // namespace

TEST_F(Cli, PresetsListAndShow) {
    EXPECT_EQ(cli("presets list"), 0);
    EXPECT_EQ(cli("presets show paper-scale"), 0);
    EXPECT_EQ(cli("presets show nope"), 1);
}

TEST_F(Cli, UsageErrorsAreConfigErrors) {
    EXPECT_EQ(cli(""), 1);
    EXPECT_EQ(cli("frobnicate"), 1);
    EXPECT_EQ(cli("run"), 1);
    EXPECT_EQ(cli("compare fig5a --seed notanumber"), 1);
}

TEST_F(Cli, Validate) {
    const fs::path good = write_config("good.yaml", eclares::desk_config());
    EXPECT_EQ(cli("validate \"" + good.string() + "\""), 0);
    EXPECT_EQ(cli("validate \"" + (kTmp / "missing.yaml").string() + "\""), 1);

    eclares::MissionConfig bad = eclares::desk_config();
    bad.eware_period = 20.0;
    EXPECT_EQ(cli("validate \"" + write_config("bad.yaml", bad).string() + "\""), 1);
    // an override can make a valid file invalid
    EXPECT_EQ(cli("validate \"" + good.string() + "\" --duration 0.01"), 1);
}

TEST_F(Cli, RunWritesOutputs) {
    const fs::path cfg = write_config("short.yaml", eclares::desk_config());
    const fs::path out = kTmp / "run_out";
    fs::remove_all(out);
    EXPECT_EQ(cli("run \"" + cfg.string() + "\" --duration 2 --seed 7 --out-dir \"" + out.string() + "\""), 0);
    EXPECT_TRUE(fs::exists(out / "clarity_tisd" / "metrics.csv"));
    EXPECT_TRUE(fs::exists(out / "comparison.csv"));
    const eclares::MissionConfig used = eclares::parse_config((out / "clarity_tisd" / "config.yaml").string());
    EXPECT_EQ(used.seed, 7u);
    EXPECT_EQ(used.duration, 2.0);
}

TEST_F(Cli, UnexpectedCrashExitsThree) {
    eclares::MissionConfig c = eclares::desk_config();
    c.eware.enabled = false;
    c.duration = 120.0;
    const fs::path out = kTmp / "crash_out";
    fs::remove_all(out);
    EXPECT_EQ(cli("run \"" + write_config("crash.yaml", c).string() + "\" --out-dir \"" + out.string() + "\""), 3);
}

TEST_F(Cli, AblationCrashIsExpected) {
    const fs::path out = kTmp / "ablation_out";
    fs::remove_all(out);
    EXPECT_EQ(cli("compare eware-ablation --duration 120 --out-dir \"" + out.string() + "\""), 0);
    std::ifstream in(out / "no_eware" / "metrics.csv");
    std::string last, line;
    while (std::getline(in, line)) last = line;
    EXPECT_NE(last.find("crash"), std::string::npos) << last;
}

TEST_F(Cli, RuntimeFailureExitsTwo) {
    eclares::MissionConfig c = eclares::desk_config();
    c.ergodic.spiral_amplitude = 1e300; // overflowing initial guess
    c.duration = 1.0;
    const fs::path out = kTmp / "fail_out";
    fs::remove_all(out);
    EXPECT_EQ(cli("run \"" + write_config("fail.yaml", c).string() + "\" --out-dir \"" + out.string() + "\""), 2);
    std::ifstream in(out / "clarity_tisd" / "summary.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_NE(text.find("\"failed\""), std::string::npos);
}

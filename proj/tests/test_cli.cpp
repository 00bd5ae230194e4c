#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "blowup/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("blowup_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args, const std::string& env = "") const {
        const std::string cmd = env + " \"" BLOWUP_LAB_PATH "\" " + args + " > \"" + (dir_ / "stdout.txt").string() + "\" 2> \"" +
                                (dir_ / "stderr.txt").string() + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string out_flag(const std::string& sub = "out") const { return "--out \"" + (dir_ / sub).string() + "\""; }
    std::string read(const fs::path& p) const {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
    json read_json(const fs::path& p) const { return json::parse(read(p)); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("--version"), 0);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("selfsim zk --grid 1 " + out_flag()), 2);
    EXPECT_EQ(run("logtw law --model pme4 " + out_flag()), 2);
    EXPECT_EQ(run("logtw residual --model rd4 --eta-from -5 " + out_flag()), 2);
    EXPECT_EQ(run("evolve run --grid-n 10 " + out_flag()), 2);
    EXPECT_FALSE(fs::exists(dir_ / "out" / "evolve-run.manifest.json"));
}

TEST_F(Cli, AmplitudeTable) {
    ASSERT_EQ(run("match table " + out_flag()), 0);
    const json t = read_json(dir_ / "out" / "amplitude_table.json");
    ASSERT_EQ(t.size(), 10u);
    std::map<std::string, json> by;
    for (const auto& r : t) by[r["model"]] = r;
    EXPECT_EQ(by["RD4"]["kind"], "log_log");
    EXPECT_EQ(by["RD4"]["exponent"], "1/2");
    EXPECT_EQ(by["NDE3"]["exponent"], "1/3");
    EXPECT_EQ(by["PME4"]["kind"], "none_self_similar");
}

TEST_F(Cli, ZkProfileAndManifest) {
    ASSERT_EQ(run("selfsim zk --grid 201 " + out_flag()), 0);
    const auto t = blowup::read_csv((dir_ / "out" / "zk.csv").string());
    ASSERT_EQ(t.rows(), 201u);
    EXPECT_NEAR(t.columns[1][100], std::sqrt(3.0) / 2, 1e-15);
    EXPECT_EQ(t.columns[0][100], 0.0);
    const json m = read_json(dir_ / "out" / "selfsim-zk.manifest.json");
    for (const char* k : {"command", "config_digest", "outputs", "wall_time", "tool_version", "exit_code"})
        EXPECT_TRUE(m.contains(k)) << k;
    EXPECT_EQ(m["exit_code"], 0);
    EXPECT_EQ(m["config_digest"].get<std::string>().size(), 16u);
    for (const auto& o : m["outputs"]) EXPECT_GT(fs::file_size(o.get<std::string>()), 0u);
}

TEST_F(Cli, DeterministicOutputsAndDigest) {
    ASSERT_EQ(run("logtw residual --model RD4 --points 11 " + out_flag("a")), 0);
    ASSERT_EQ(run("logtw residual --model RD4 --points 11 " + out_flag("b")), 0);
    EXPECT_EQ(read(dir_ / "a" / "logtw_residual.csv"), read(dir_ / "b" / "logtw_residual.csv"));
    const auto da = read_json(dir_ / "a" / "logtw-residual.manifest.json")["config_digest"];
    const auto db = read_json(dir_ / "b" / "logtw-residual.manifest.json")["config_digest"];
    EXPECT_EQ(da, db);
    ASSERT_EQ(run("logtw residual --model RD4 --points 12 " + out_flag("c")), 0);
    EXPECT_NE(read_json(dir_ / "c" / "logtw-residual.manifest.json")["config_digest"], da);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
    {
        std::ofstream f(dir_ / "run.toml");
        f << "[evolve.run]\ngrid-n = 101\ntau-end = 0.5\ncheckpoints = 21\n";
    }
    ASSERT_EQ(run("--config \"" + (dir_ / "run.toml").string() + "\" evolve run --tau-end 0.25 " + out_flag()), 0);
    const auto t = blowup::read_csv((dir_ / "out" / "evolve_final.csv").string());
    EXPECT_EQ(t.rows(), 101u);
    const json j = read_json(dir_ / "out" / "evolve.json");
    EXPECT_NEAR(j["tau_reached"].get<double>(), 0.25, 1e-12);
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
    ASSERT_EQ(run("match phi", "BLOWUPLAB_OUT=\"" + (dir_ / "env").string() + "\""), 0);
    EXPECT_TRUE(fs::exists(dir_ / "env" / "phi.json"));
    EXPECT_TRUE(fs::exists(dir_ / "env" / "match-phi.manifest.json"));
}

TEST_F(Cli, ComputeFailureExitsOne) {
    EXPECT_EQ(run("selfsim tfe4 --tol 1e-30 " + out_flag()), 1);
    const json m = read_json(dir_ / "out" / "selfsim-tfe4.manifest.json");
    EXPECT_EQ(m["exit_code"], 1);
    EXPECT_TRUE(m.contains("error"));
}

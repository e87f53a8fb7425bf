#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path root;
    explicit Sandbox(const std::string& name) : root(fs::temp_directory_path() / name) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Sandbox() { fs::remove_all(root); }
    [[nodiscard]] std::string operator/(const std::string& s) const { return (root / s).string(); }
};

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(ICV_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST(Cli, UsageErrorsExitTwo) {
    Sandbox box("icv_cli_usage");
    const auto log = box.root / "log.txt";
    EXPECT_EQ(run("", log), 2);
    EXPECT_EQ(run("nonsense", log), 2);
    EXPECT_EQ(run("simulate", log), 2); // --out missing
    EXPECT_EQ(run("rmt-check --y 1 --out " + (box / "r"), log), 2);
    EXPECT_EQ(run("simulate --p 0 --out " + (box / "s"), log), 2);
    EXPECT_EQ(run("--version", log), 0);
}

TEST(Cli, SimulateIsDeterministicForAFixedSeed) {
    Sandbox box("icv_cli_sim");
    const auto log = box.root / "log.txt";
    const std::string base = "simulate --p 4 --days 2 --fine-steps 2340 --intensity 150 ";
    ASSERT_EQ(run(base + "--seed 9 --out " + (box / "a"), log), 0) << slurp(log);
    ASSERT_EQ(run(base + "--seed 9 --out " + (box / "b"), log), 0) << slurp(log);
    ASSERT_EQ(run(base + "--seed 10 --out " + (box / "c"), log), 0) << slurp(log);
    for (const auto* f : {"manifest.json", "ticks/d0001.csv", "ticks/d0002.csv", "truth/d0002.csv", "run_manifest.json"}) {
        EXPECT_EQ(slurp(box.root / "a" / f), slurp(box.root / "b" / f)) << f;
    }
    EXPECT_NE(slurp(box.root / "a" / "ticks/d0001.csv"), slurp(box.root / "c" / "ticks/d0001.csv"));

    const auto manifest = nlohmann::json::parse(slurp(box.root / "a" / "run_manifest.json"));
    EXPECT_EQ(manifest["command"], "simulate");
    EXPECT_EQ(manifest["seed"], 9);
    EXPECT_EQ(manifest["config"]["p"], 4);
    EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
    EXPECT_TRUE(manifest["versions"].contains("eigen"));
}

TEST(Cli, ConfigFileWithFlagOverrides) {
    Sandbox box("icv_cli_config");
    const auto log = box.root / "log.txt";
    std::ofstream(box.root / "sim.json") << R"({"p": 3, "days": 1, "fine_steps": 2340, "intensity": 100, "seed": 4})";
    ASSERT_EQ(run("--config " + (box / "sim.json") + " simulate --p 2 --out " + (box / "s"), log), 0) << slurp(log);
    const auto manifest = nlohmann::json::parse(slurp(box.root / "s" / "run_manifest.json"));
    EXPECT_EQ(manifest["config"]["p"], 2);
    EXPECT_EQ(manifest["config"]["seed"], 4);
    std::ofstream(box.root / "bad.json") << R"({"p": 3, "bogus": 1})";
    EXPECT_EQ(run("--config " + (box / "bad.json") + " simulate --out " + (box / "t"), log), 2);
}

TEST(Cli, IngestSyncEstimate) {
    Sandbox box("icv_cli_pipeline");
    const auto log = box.root / "log.txt";
    ASSERT_EQ(run("simulate --p 3 --days 3 --fine-steps 4680 --intensity 300 --seed 2 --out " + (box / "ds"), log), 0) << slurp(log);
    const std::string ticks = box / "ds/ticks/d0003.csv";

    ASSERT_EQ(run("ingest --in " + ticks + " --out " + (box / "ing"), log), 0) << slurp(log);
    EXPECT_TRUE(fs::exists(box.root / "ing" / "A000.csv"));
    EXPECT_TRUE(fs::exists(box.root / "ing" / "A002.csv"));

    ASSERT_EQ(run("sync --in " + ticks + " --scheme previous --out " + (box / "grid"), log), 0) << slurp(log);
    EXPECT_NE(slurp(log).find("3 assets, 26 returns"), std::string::npos) << slurp(log);
    ASSERT_EQ(run("sync --in " + ticks + " --scheme refresh --out " + (box / "rt"), log), 0);
    EXPECT_EQ(run("sync --in " + ticks + " --scheme sideways --out " + (box / "x"), log), 2);

    ASSERT_EQ(run("estimate --kind TVA --panel " + (box / "rt/panel.csv") + " --out " + (box / "tva_panel"), log), 0) << slurp(log);
    ASSERT_EQ(run("estimate --kind TVA --dataset " + (box / "ds") + " --out " + (box / "tva"), log), 0) << slurp(log);
    EXPECT_EQ(slurp(box.root / "tva_panel" / "cov.csv"), slurp(box.root / "tva" / "cov.csv"));

    ASSERT_EQ(run("estimate --kind SQML --j1 2 --j 3 --dataset " + (box / "ds") + " --out " + (box / "sq"), log), 0) << slurp(log);
    EXPECT_TRUE(fs::exists(box.root / "sq" / "sqml.csv"));
    EXPECT_EQ(run("estimate --kind SQML --j1 5 --j 6 --dataset " + (box / "ds") + " --out " + (box / "sq2"), log), 2);
    EXPECT_EQ(run("estimate --kind BOGUS --dataset " + (box / "ds") + " --out " + (box / "e"), log), 2);
    EXPECT_EQ(run("estimate --kind TVA --dataset " + (box / "missing") + " --out " + (box / "e"), log), 1);
}

TEST(Cli, RmtCheckPointMass) {
    Sandbox box("icv_cli_rmt");
    const auto log = box.root / "log.txt";
    ASSERT_EQ(run("rmt-check --y 0.5 --points 20 --out " + (box / "r"), log), 0) << slurp(log);
    const auto out = slurp(log);
    EXPECT_NE(out.find("PASS"), std::string::npos);
    EXPECT_EQ(out.find("FAIL"), std::string::npos);
    const auto table = slurp(box.root / "r" / "table.csv");
    EXPECT_EQ(table.rfind("x,F,psi,delta,g\n", 0), 0u);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 21);
}

TEST(Cli, BacktestReportsAreReproducible) {
    Sandbox box("icv_cli_backtest");
    const auto log = box.root / "log.txt";
    ASSERT_EQ(run("simulate --p 4 --days 60 --fine-steps 2340 --intensity 150 --seed 6 --out " + (box / "ds"), log), 0) << slurp(log);
    std::ofstream(box.root / "bt.json") << R"({"dataset": ")" << (box / "ds") << R"(", "eval": {"begin": 52, "end": 60}, "rolling_window": 4,
      "strategies": [{"name": "EW", "optimizer": "EW"},
                     {"name": "LS", "estimator": "LS", "optimizer": "GMV", "J_LS": 50},
                     {"name": "TQ", "optimizer": "EW-TQ", "momentum_days": 10}]})";
    ASSERT_EQ(run("backtest --config " + (box / "bt.json") + " --out " + (box / "r1"), log), 0) << slurp(log);
    ASSERT_EQ(run("--threads 2 backtest --config " + (box / "bt.json") + " --out " + (box / "r2"), log), 0) << slurp(log);
    for (const auto* f : {"summary.csv", "returns.csv", "rolling.csv", "log.txt", "summary_first_half.csv", "summary_second_half.csv"}) {
        EXPECT_EQ(slurp(box.root / "r1" / f), slurp(box.root / "r2" / f)) << f;
    }
    const auto summary = slurp(box.root / "r1" / "summary.csv");
    EXPECT_EQ(summary.rfind("strategy,AV,SD,IR,days,coverage\n", 0), 0u);
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 4);

    EXPECT_EQ(run("backtest --config " + (box / "bt.json") + " --eval-begin 55 --eval-end 55 --out " + (box / "r3"), log), 2);
    EXPECT_EQ(run("backtest --config " + (box / "bt.json") + " --eval-begin 5 --out " + (box / "r3"), log), 2);
    EXPECT_EQ(run("backtest --out " + (box / "r3"), log), 2);
}

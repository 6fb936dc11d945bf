#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "probcoh/io.hpp"
#include "probcoh/report.hpp"
#include "probcoh/table_io.hpp"

using namespace probcoh;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, {&out, &err, nullptr});
    return {code, out.str(), err.str()};
}

fs::path run_dir(const std::string& name) {
    const fs::path dir = fs::path(PROBCOH_CLI_TEST_DIR) / name;
    fs::remove_all(dir);
    return dir;
}

std::string fixture_path() { return std::string(PROBCOH_FIXTURE_DIR) + "/replay_24x6x5.jsonl"; }

} // namespace

TEST(Cli, HelpAndVersion) {
    EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
    const auto v = run_cli({"--version"});
    EXPECT_EQ(v.code, cli::kOk);
    EXPECT_EQ(v.out, "0.1.0\n");
}

TEST(Cli, UnknownFlagIsValidationError) {
    EXPECT_EQ(run_cli({"simulate", "--bogus"}).code, cli::kValidation);
    EXPECT_EQ(run_cli({"simulate", "--agent", "oracle"}).code, cli::kValidation);
    EXPECT_EQ(run_cli({}).code, cli::kValidation);
}

TEST(Cli, SimulateAuditMeanvarFitReport) {
    const auto dir = run_dir("full");
    const std::string d = dir.string();
    auto r = run_cli({"--seed", "3", "--out-dir", d, "simulate", "--N", "10", "--beta", "1", "--reps", "8"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "judgments.jsonl"));
    EXPECT_TRUE(fs::exists(dir / "thetas.csv"));
    const auto manifest = nlohmann::json::parse(io::read_file(dir / "simulate.manifest.json"));
    EXPECT_EQ(manifest["seed"], 3);
    EXPECT_EQ(manifest["version"], "0.1.0");
    EXPECT_NE(manifest["config"].get<std::string>().find("beta=1"), std::string::npos);

    r = run_cli({"--out-dir", d, "audit"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("Z8"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "identities.csv"));
    EXPECT_TRUE(fs::exists(dir / "identities_plot.json"));

    r = run_cli({"--out-dir", d, "meanvar", "--weighting", "inverse_variance"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "meanvar_points.csv"));
    EXPECT_TRUE(fs::exists(dir / "meanvar_plot.json"));

    r = run_cli({"--out-dir", d, "fit", "--method", "identity_deviation", "--n-hint", "10"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto fit = nlohmann::json::parse(io::read_file(dir / "fit.json"));
    EXPECT_NEAR(fit["s"].get<double>(), 1.0 / 12.0, 0.03);

    r = run_cli({"--out-dir", d, "report"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "report.json"));
    EXPECT_TRUE(fs::exists(dir / "report.txt"));
}

TEST(Cli, SameSeedSameBytes) {
    const auto a = run_dir("seed_a"), b = run_dir("seed_b");
    for (const auto& dir : {a, b}) {
        ASSERT_EQ(run_cli({"--seed", "11", "--out-dir", dir.string(), "simulate", "--reps", "3"}).code, cli::kOk);
    }
    EXPECT_EQ(io::read_file(a / "judgments.jsonl"), io::read_file(b / "judgments.jsonl"));
}

TEST(Cli, ExitCodes) {
    const auto dir = run_dir("codes");
    const std::string d = dir.string();
    // Missing input file.
    EXPECT_EQ(run_cli({"--out-dir", d, "audit"}).code, cli::kIo);
    EXPECT_EQ(run_cli({"--out-dir", d, "report"}).code, cli::kIo);
    // A coherent agent has zero variance everywhere: no inverted-U to fit.
    ASSERT_EQ(run_cli({"--out-dir", d, "simulate", "--agent", "coherent", "--reps", "3"}).code, cli::kOk);
    EXPECT_EQ(run_cli({"--out-dir", d, "fit", "--method", "meanvar"}).code, cli::kInfeasibleFit);
    const auto failed = nlohmann::json::parse(io::read_file(dir / "fit.manifest.json"));
    EXPECT_EQ(failed["exit_code"], cli::kInfeasibleFit);
    EXPECT_FALSE(failed["error"].get<std::string>().empty());
    // Incomplete table without --allow-missing.
    const auto t = load_table(dir / "judgments.jsonl", {});
    auto js = t.judgments();
    js.pop_back();
    save_table(dir / "judgments.jsonl", JudgmentTable(t.catalog(), js));
    EXPECT_EQ(run_cli({"--out-dir", d, "audit"}).code, cli::kValidation);
    EXPECT_EQ(run_cli({"--out-dir", d, "audit", "--allow-missing"}).code, cli::kOk);
    // Live elicitation without an API key.
    EXPECT_EQ(run_cli({"--out-dir", d, "elicit", "--model", "m", "--api-key-env", "PROBCOH_SURELY_UNSET_KEY"}).code,
              cli::kNetwork);
    EXPECT_EQ(run_cli({"--out-dir", d, "elicit", "--model", "m", "--replay", d + "/nope.jsonl"}).code, cli::kIo);
    EXPECT_EQ(run_cli({"--out-dir", d, "simulate", "--pairs", "30"}).code, cli::kValidation);
}

TEST(Cli, ReplayFixtureIsDeterministic) {
    std::string first;
    for (const char* name : {"replay_a", "replay_b"}) {
        const auto dir = run_dir(name);
        const auto r = run_cli({"--out-dir", dir.string(), "elicit", "--model", "gpt-4-0613", "--replay",
                                fixture_path()});
        ASSERT_EQ(r.code, cli::kOk) << r.err;
        EXPECT_NE(r.out.find("0 network requests"), std::string::npos) << r.out;
        const std::string text = io::read_file(dir / "judgments.jsonl");
        if (first.empty()) {
            first = text;
        } else {
            EXPECT_EQ(text, first);
        }
        EXPECT_EQ(run_cli({"--out-dir", dir.string(), "audit", "--allow-missing"}).code, cli::kOk);
    }
    EXPECT_EQ(io::read_file(fs::path(PROBCOH_CLI_TEST_DIR) / "replay_a" / "identities.csv"),
              io::read_file(fs::path(PROBCOH_CLI_TEST_DIR) / "replay_b" / "identities.csv"));
}

TEST(Cli, ConfigFile) {
    const auto dir = run_dir("config");
    io::write_file(dir / "run.toml", "seed = 5\n[simulate]\nagent = \"ptn\"\nN = 20\nd = 0.2\nreps = 2\n");
    const auto r = run_cli({"--config", (dir / "run.toml").string(), "--out-dir", dir.string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto t = load_table(dir / "judgments.jsonl", {});
    EXPECT_EQ(t.judgments()[0].condition.agent_or_model, "ptn(N=20,d=0.2)");
    EXPECT_EQ(t.size(), 24u * 6 * 2);
}

TEST(Cli, Pipeline) {
    const auto dir = run_dir("pipeline");
    const auto r = run_cli({"--seed", "1", "--out-dir", dir.string(), "pipeline", "--reps", "20", "--method",
                            "combined"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    for (auto f : {files::judgments, files::identities_csv, files::meanvar_fit, files::fit, files::report_json}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_TRUE(fs::exists(dir / "pipeline.manifest.json"));
}

TEST(Cli, PrintIdentitiesAndTemplates) {
    const auto ids = run_cli({"--print-identities"});
    EXPECT_EQ(ids.code, cli::kOk);
    EXPECT_EQ(nlohmann::json::parse(ids.out).size(), 8u);
    const auto t = run_cli({"--print-templates"});
    EXPECT_NE(t.out.find("weather.frame"), std::string::npos);
}

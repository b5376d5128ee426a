#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "vpm/cli.hpp"

namespace fs = std::filesystem;
namespace cli = vpm::cli;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("vpm_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    /// Runs the installed binary with `args` appended; stdout and stderr are captured together.
    Outcome run(const std::string& args, const std::string& env = "") const
    {
        const fs::path log = dir_ / "log.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" VPM_CLI_BINARY "' " + args + " > '"
                                + log.string() + "' 2>&1";
        const int status = std::system(cmd.c_str());
        Outcome o;
        o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        o.out = read(log);
        return o;
    }

    static std::string read(const fs::path& p)
    {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

    /// The first non-comment line of a CSV file.
    static std::string header(const fs::path& p)
    {
        std::ifstream in(p);
        std::string line;
        while (std::getline(in, line))
            if (line.empty() || line[0] != '#')
                return line;
        return "";
    }

    /// Value of a "# key: value" metadata line.
    static std::string meta(const fs::path& p, const std::string& key)
    {
        std::ifstream in(p);
        std::string line;
        const std::string prefix = "# " + key + ": ";
        while (std::getline(in, line))
            if (line.rfind(prefix, 0) == 0)
                return line.substr(prefix.size());
        return "";
    }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, HelpExitsZero)
{
    const auto o = run("--help");
    EXPECT_EQ(o.code, 0);
    EXPECT_NE(o.out.find("converse"), std::string::npos);
}

TEST_F(CliTest, MissingOrUnknownSuiteIsUsageError)
{
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("nonsense").code, 2);
    EXPECT_EQ(run("lemmas --no-such-flag").code, 2);
}

TEST_F(CliTest, BandBudgetViolationIsUsageError)
{
    const auto o = run("converse --n-list 4,8,512 --out res");
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.out.find("256"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "res" / "converse.csv"));
}

TEST_F(CliTest, InvalidValuesAreUsageErrors)
{
    EXPECT_EQ(run("converse --p 3 --out res").code, 2);
    EXPECT_EQ(run("converse --corpus nope --out res").code, 2);
    EXPECT_EQ(run("lemmas --d 2 --out res").code, 2);
    EXPECT_EQ(run("lemmas --n-list 0,8 --out res").code, 2);
    EXPECT_EQ(run("lemmas --n-list 4,x --out res").code, 2);
    EXPECT_EQ(run("multipliers --n-max 65 --out res").code, 2);
    EXPECT_EQ(run("lemmas --quad-order -3 --out res").code, 2);
}

TEST_F(CliTest, UnknownConfigKeyIsUsageError)
{
    write("bad.ini", "d = 3\nn_list = 16,32\nmystery = 1\n");
    const auto o = run("lemmas --config bad.ini --out res");
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.out.find("mystery"), std::string::npos);
}

TEST_F(CliTest, MultipliersWritesCsvAndSummary)
{
    const auto o = run("multipliers --n-max 6 --out res");
    ASSERT_EQ(o.code, 0) << o.out;
    const fs::path csv = dir_ / "res" / "multipliers.csv";
    ASSERT_TRUE(fs::exists(csv));
    EXPECT_EQ(header(csv), "d,n,k,closed_form,quadrature,abs_diff");
    EXPECT_EQ(meta(csv, "suite"), "multipliers");
    EXPECT_EQ(meta(csv, "config_hash").size(), 16u);

    const auto summary = nlohmann::json::parse(read(dir_ / "res" / "summary.json"));
    EXPECT_EQ(summary["suites"]["multipliers"]["passed"], true);
    for (const auto& name : cli::all_suites())
        EXPECT_TRUE(summary["suites"].contains(name)) << name;
    EXPECT_TRUE(summary["suites"]["converse"]["passed"].is_null());
    EXPECT_TRUE(summary["envelope_constants"]["C5"].is_number());
    EXPECT_EQ(summary["config_hash"], meta(csv, "config_hash"));
}

TEST_F(CliTest, SummaryMergesAcrossRuns)
{
    ASSERT_EQ(run("multipliers --n-max 4 --out res").code, 0);
    ASSERT_EQ(run("lemmas --n-list 16,32,64 --out res").code, 0);
    const auto summary = nlohmann::json::parse(read(dir_ / "res" / "summary.json"));
    EXPECT_EQ(summary["suites"]["multipliers"]["passed"], true);
    EXPECT_EQ(summary["suites"]["lemmas"]["passed"], true);
    EXPECT_TRUE(summary["envelope_constants"]["lemma_normalization_windows"].is_object());
}

TEST_F(CliTest, CsvSchemas)
{
    const std::string flags = " --n-list 8,16 --corpus cusp:1,bump --theta-grid-size 8 --out res";
    ASSERT_EQ(run("converse" + flags).code, 0);
    ASSERT_EQ(run("delayed-max" + flags).code, 0);
    ASSERT_EQ(run("modulus" + flags).code, 0);
    ASSERT_EQ(run("voronovskaya" + flags).code, 0);
    EXPECT_EQ(header(dir_ / "res" / "converse.csv"), "function_id,p,n,e_n,w_n,ratio,flag");
    EXPECT_EQ(header(dir_ / "res" / "modulus.csv"), "function_id,p,t,modulus,k_estimate,ratio");
    EXPECT_EQ(header(dir_ / "res" / "voronovskaya.csv"), "d,n,k,omega,n_alpha,residual,normalized");
    EXPECT_EQ(header(dir_ / "res" / "delayed-max.csv").rfind("function_id,p,n,", 0), 0u);
}

TEST_F(CliTest, FlagsOverrideConfigOverrideDefaults)
{
    write("run.ini", "d = 4\nn_list = 16,32\nseed = 7\n");
    ASSERT_EQ(run("lemmas --config run.ini --d 3 --out res").code, 0);
    const auto config = nlohmann::json::parse(meta(dir_ / "res" / "lemmas.csv", "config"));
    EXPECT_EQ(config["d"], 3);
    EXPECT_EQ(config["seed"], 7);
    EXPECT_EQ(config["n_list"], nlohmann::json::array({16, 32}));
}

TEST_F(CliTest, OutDirFromEnvironment)
{
    ASSERT_EQ(run("multipliers --n-max 2", "VPM_OUT_DIR=from_env").code, 0);
    EXPECT_TRUE(fs::exists(dir_ / "from_env" / "multipliers.csv"));
    ASSERT_EQ(run("multipliers --n-max 2 --out from_flag", "VPM_OUT_DIR=from_env2").code, 0);
    EXPECT_TRUE(fs::exists(dir_ / "from_flag" / "multipliers.csv"));
    EXPECT_FALSE(fs::exists(dir_ / "from_env2"));
}

TEST_F(CliTest, UnwritableOutDirIsUsageError)
{
    write("blocker", "x");
    EXPECT_EQ(run("multipliers --n-max 2 --out blocker/sub").code, 2);
}

TEST_F(CliTest, BodiesAreReproducible)
{
    const std::string flags = " --n-list 8,16 --corpus cusp:0.5,randband:seed42 --theta-grid-size 8";
    ASSERT_EQ(run("converse" + flags + " --out a").code, 0);
    ASSERT_EQ(run("converse" + flags + " --out b").code, 0);
    auto strip = [](std::string s) { return s.substr(s.find('\n') + 1); };
    EXPECT_EQ(strip(read(dir_ / "a" / "converse.csv")), strip(read(dir_ / "b" / "converse.csv")));
}

TEST(ParseConfig, InProcess)
{
    const auto ok = cli::parse_config({"converse", "--n-list", "8,16", "--p", "2,inf", "--quad-order", "80"});
    ASSERT_TRUE(ok.run) << ok.message;
    EXPECT_EQ(ok.config.settings.n_list, (std::vector<int>{8, 16}));
    EXPECT_EQ(ok.config.settings.p_list.size(), 2u);
    EXPECT_TRUE(std::isinf(ok.config.settings.p_list[1]));
    EXPECT_EQ(ok.config.settings.quadrature_order, 80);

    const auto big = cli::parse_config({"lemmas", "--n-list", "1024"});
    EXPECT_TRUE(big.run) << big.message;
    const auto too_big = cli::parse_config({"modulus", "--n-list", "257"});
    EXPECT_FALSE(too_big.run);
    EXPECT_EQ(too_big.exit_code, cli::exit_usage);
}

// End-to-end checks that drive the installed binary through popen: output
// formats, exit codes, and the files the simulation subcommands leave behind.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

struct RunResult {
    int status = -1;
    std::string output;
};

RunResult run_cli(const std::string& args, bool merge_stderr = true) {
    const std::string cmd = std::string("\"") + DPMI_CLI_PATH + "\" " + args +
                            (merge_stderr ? " 2>&1" : " 2>/dev/null");
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return result;
    char buffer[4096];
    while (std::size_t got = fread(buffer, 1, sizeof(buffer), pipe))
        result.output.append(buffer, got);
    const int rc = pclose(pipe);
    result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return result;
}

std::string fixture_csv(const std::string& name, std::size_t rows, bool constant_second = false) {
    const std::string path = ::testing::TempDir() + "/" + name;
    std::ofstream out(path, std::ios::trunc);
    out << "a,b\n";
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> noise(0.0, 0.3);
    out.precision(12);
    for (std::size_t i = 0; i < rows; ++i) {
        const double x = noise(rng) * 3.0;
        const double y = constant_second ? 1.0 : 0.6 * x + noise(rng);
        out << x << ',' << y << '\n';
    }
    return path;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

TEST(EstimateCommand, TextFormatEchoesConfigAndDiagnostics) {
    const std::string path = fixture_csv("cli_text.csv", 50);
    const RunResult r =
        run_cli("estimate --input " + path + " --draws 100 --atoms 200 --seed 5");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("config: a=0.05 k=3 atoms=200 draws=100"), std::string::npos)
        << r.output;
    EXPECT_NE(r.output.find("marginal_mode=projected"), std::string::npos);
    EXPECT_NE(r.output.find("rows_used=50"), std::string::npos);
    EXPECT_NE(r.output.find("columns=a,b"), std::string::npos);
    EXPECT_NE(r.output.find("estimate: "), std::string::npos);
    EXPECT_NE(r.output.find("draws: mean="), std::string::npos);
    EXPECT_NE(r.output.find("diagnostics: zero_distance_draws="), std::string::npos);
}

TEST(EstimateCommand, JsonFormatParsesAndCarriesTheRun) {
    const std::string path = fixture_csv("cli_json.csv", 40);
    const RunResult r = run_cli(
        "estimate --input " + path + " --format json --draws 120 --atoms 150 --seed 11",
        /*merge_stderr=*/false);
    ASSERT_EQ(r.status, 0) << r.output;
    const nlohmann::json j = nlohmann::json::parse(r.output);
    EXPECT_EQ(j.at("config").at("draws").get<std::size_t>(), 120u);
    EXPECT_EQ(j.at("config").at("atoms").get<std::size_t>(), 150u);
    EXPECT_EQ(j.at("config").at("seed").get<std::uint64_t>(), 11u);
    EXPECT_EQ(j.at("input").at("rows_used").get<std::size_t>(), 40u);
    EXPECT_EQ(j.at("input").at("columns").size(), 2u);
    EXPECT_GE(j.at("estimate").get<double>(), 0.0);
    EXPECT_EQ(j.at("draws").at("count").get<std::size_t>(), 120u);
    EXPECT_TRUE(std::isfinite(j.at("draws").at("median").get<double>()));
    // Identical invocation is bit-identical output.
    const RunResult again = run_cli(
        "estimate --input " + path + " --format json --draws 120 --atoms 150 --seed 11",
        /*merge_stderr=*/false);
    EXPECT_EQ(nlohmann::json::parse(again.output), j);
}

TEST(EstimateCommand, CsvFormatEmitsHeaderAndRow) {
    const std::string path = fixture_csv("cli_csv.csv", 30);
    const RunResult r = run_cli(
        "estimate --input " + path + " --format csv --draws 80 --atoms 120 --seed 2",
        /*merge_stderr=*/false);
    ASSERT_EQ(r.status, 0) << r.output;
    std::istringstream is(r.output);
    std::string header, row_text;
    ASSERT_TRUE(std::getline(is, header));
    ASSERT_TRUE(std::getline(is, row_text));
    EXPECT_EQ(header, "estimate,mean,q1,median,q3,rows_used,rows_rejected,a,k,atoms,draws,seed");
    const std::vector<std::string> row = split_fields(row_text);
    ASSERT_EQ(row.size(), 12u);
    EXPECT_EQ(row[5], "30");
    EXPECT_EQ(row[9], "120");
    EXPECT_EQ(row[11], "2");
    EXPECT_GE(std::stod(row[0]), 0.0);
}

TEST(EstimateCommand, SubsampleShrinksTheRowsUsed) {
    const std::string path = fixture_csv("cli_subsample.csv", 50);
    const RunResult r = run_cli("estimate --input " + path +
                                " --subsample 30 --draws 60 --atoms 100 --seed 9");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("rows_used=30"), std::string::npos) << r.output;
}

TEST(EstimateCommand, SyntheticCcppFixtureRunsEndToEnd) {
    // The checked-in 200-row stand-in for the power-plant data: named column
    // selection, subsampling, and a clean estimate, no real download needed.
    const std::string path = std::string(DPMI_SOURCE_DIR) + "/data/ccpp_synthetic.csv";
    const RunResult r = run_cli("estimate --input " + path +
                                    " --columns T,V,AP,RH --subsample 50"
                                    " --draws 60 --atoms 200 --seed 31 --format json",
                                /*merge_stderr=*/false);
    ASSERT_EQ(r.status, 0) << r.output;
    const nlohmann::json j = nlohmann::json::parse(r.output);
    EXPECT_EQ(j.at("input").at("rows_used").get<std::size_t>(), 50u);
    const auto columns = j.at("input").at("columns").get<std::vector<std::string>>();
    EXPECT_EQ(columns, (std::vector<std::string>{"T", "V", "AP", "RH"}));
    EXPECT_GE(j.at("estimate").get<double>(), 0.0);
    EXPECT_TRUE(std::isfinite(j.at("estimate").get<double>()));
}

TEST(EstimateCommand, ExitCodesDistinguishFailureKinds) {
    const std::string path = fixture_csv("cli_codes.csv", 30);

    // ell < 4 violates the estimator contract: usage.
    RunResult r = run_cli("estimate --input " + path + " --draws 3");
    EXPECT_EQ(r.status, 64) << r.output;
    EXPECT_NE(r.output.find("usage error"), std::string::npos);

    // Missing file: data.
    r = run_cli("estimate --input " + ::testing::TempDir() + "/nope.csv --draws 50");
    EXPECT_EQ(r.status, 65) << r.output;
    EXPECT_NE(r.output.find("data error"), std::string::npos);

    // One selected column: usage.
    r = run_cli("estimate --input " + path + " --columns a --draws 50");
    EXPECT_EQ(r.status, 64) << r.output;

    // Constant column: degeneracy.
    const std::string flat = fixture_csv("cli_flat.csv", 30, /*constant_second=*/true);
    r = run_cli("estimate --input " + flat + " --draws 50 --atoms 100");
    EXPECT_EQ(r.status, 70) << r.output;
    EXPECT_NE(r.output.find("degeneracy"), std::string::npos);

    // Bad flag value: usage, via the parser.
    r = run_cli("estimate --input " + path + " --marginal-mode bogus");
    EXPECT_EQ(r.status, 64) << r.output;

    // No subcommand at all: usage.
    r = run_cli("");
    EXPECT_EQ(r.status, 64) << r.output;
}

TEST(SimulateCommand, WritesTheThreeFilesAndReportsTheCell) {
    const std::string out_dir = ::testing::TempDir() + "/cli_sim_out";
    const RunResult r = run_cli(
        "simulate normal:d=2:cov=identity --n 20 --replicates 5 --draws 100 --atoms 200 "
        "--seed 7 --out " + out_dir + " --stem smoke");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("scenario: normal:d=2:cov=identity n=20 replicates=5"),
              std::string::npos)
        << r.output;
    EXPECT_NE(r.output.find("average="), std::string::npos);
    EXPECT_NE(r.output.find("true=0.000"), std::string::npos);

    std::ifstream raw(out_dir + "/smoke_raw.csv");
    ASSERT_TRUE(raw.good());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(raw, line)) ++lines;
    EXPECT_EQ(lines, 6u);  // header + 5 replicates

    ASSERT_TRUE(std::ifstream(out_dir + "/smoke_summary.csv").good());
    std::ifstream manifest(out_dir + "/smoke_manifest.json");
    ASSERT_TRUE(manifest.good());
    nlohmann::json j;
    manifest >> j;
    EXPECT_EQ(j.at("true_mi").get<double>(), 0.0);
    EXPECT_EQ(j.at("config").at("seed").get<std::uint64_t>(), 7u);
    EXPECT_EQ(j.at("n").get<std::size_t>(), 20u);
}

TEST(SimulateCommand, ManifestCarriesTheStudentGroundTruth) {
    const std::string out_dir = ::testing::TempDir() + "/cli_sim_student";
    const RunResult r = run_cli(
        "simulate student:df=20:d=2 --n 15 --replicates 3 --draws 60 --atoms 100 --seed 4 "
        "--out " + out_dir + " --format json",
        /*merge_stderr=*/false);
    ASSERT_EQ(r.status, 0) << r.output;
    const nlohmann::json j = nlohmann::json::parse(r.output);
    EXPECT_EQ(j.at("scenario").get<std::string>(), "student:df=20:d=2");
    EXPECT_NEAR(j.at("true_mi").get<double>(), 0.001, 0.0015);
    EXPECT_EQ(j.at("replicates").get<std::size_t>(), 3u);
}

TEST(SimulateCommand, UnknownFamilyListsTheGrammar) {
    const RunResult r = run_cli("simulate banana:d=2 --replicates 2 --draws 50");
    EXPECT_EQ(r.status, 64) << r.output;
    for (const char* family : {"normal", "student", "maxwell", "spherical"})
        EXPECT_NE(r.output.find(family), std::string::npos) << r.output;
}

TEST(SweepKCommand, OneSummaryRowPerK) {
    const std::string out_dir = ::testing::TempDir() + "/cli_sweepk_out";
    const RunResult r = run_cli(
        "sweep-k normal:d=2:cov=identity --n 15 --replicates 2 --k-list 2,4 --draws 50 "
        "--atoms 100 --seed 3 --out " + out_dir + " --stem ks");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("k=2: average="), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("k=4: average="), std::string::npos) << r.output;

    std::ifstream summary(out_dir + "/ks_summary.csv");
    ASSERT_TRUE(summary.good());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(summary, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(split_fields(lines[1])[3], "2");  // k column
    EXPECT_EQ(split_fields(lines[2])[3], "4");
}

TEST(SweepPriorCommand, GridCsvHasOneRowPerCell) {
    const std::string out_dir = ::testing::TempDir() + "/cli_sweepprior_out";
    const RunResult r = run_cli(
        "sweep-prior normal:d=2:cov=identity --n 15 --replicates 2 --a-list 0.05,5 "
        "--draws 50 --atoms 100 --seed 6 --out " + out_dir + " --stem ps");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("a=0.050 base=normal:d=2"), std::string::npos) << r.output;

    std::ifstream summary(out_dir + "/ps_summary.csv");
    ASSERT_TRUE(summary.good());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(summary, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "a,base,scenario,n,replicates,average,mse");
    EXPECT_EQ(std::stod(split_fields(lines[1])[0]), 0.05);
    EXPECT_EQ(std::stod(split_fields(lines[2])[0]), 5.0);
}

}  // namespace

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nonsmooth/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "nonsmooth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = nonsmooth::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nonsmooth_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, FreeSpectrumIsSquares) {
  const auto r = run({"spectrum", "--system", "free", "--hbar", "1", "--emax", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# nonsmooth spectrum schema v1\n", 0), 0u);
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.front()[1], "energy");
  std::vector<double> expected{0};
  for (int n = 1; n * n <= 40; ++n) expected.insert(expected.end(), {n * n / 2.0, n * n / 2.0});
  ASSERT_EQ(rows.size() - 1, expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(std::stod(rows[i + 1][1]), expected[i], 1e-12);
}

TEST(Cli, OutOfRangeHbarIsUsageError) {
  const auto r = run({"spectrum", "--system", "H1", "--hbar", "-1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j["error"], "parameter out of range");
  EXPECT_EQ(j["exit_code"], 2);
}

TEST(Cli, UsageAndNumericalExitCodes) {
  EXPECT_EQ(run({"spectrum", "--system", "H7"}).code, 2);
  EXPECT_EQ(nlohmann::json::parse(run({"spectrum", "--system", "H7"}).err)["error"], "unknown-system");
  EXPECT_EQ(run({"spectrum"}).code, 2);
  EXPECT_EQ(run({"spectrum", "--system", "H1", "--bogus-flag"}).code, 2);
  EXPECT_EQ(run({"compare", "--system", "H2", "--gap-ratio", "1.5"}).code, 2);
  const auto cap = run({"spectrum", "--system", "H1", "--basis-cap", "5"});
  EXPECT_EQ(cap.code, 1);
  EXPECT_EQ(nlohmann::json::parse(cap.err)["error"], "basis-cap");
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, WsumMatchesClosedForm) {
  const auto r = run({"wsum", "--x", "1", "--y", "0", "--order", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(std::stod(rows[1][3]), 1 / (4 * std::pow(std::sin(0.5), 2)), 1e-14);
}

TEST(Cli, ByteIdenticalAcrossRunsAndJobCounts) {
  const std::vector<std::string> base{"scan",  "--system", "ex3.2", "--hbar",   "0.05", "--axis", "pc",
                                      "--from", "0",       "--to",   "0.05", "--points", "5"};
  auto one = base;
  one.insert(one.end(), {"--jobs", "1"});
  auto three = base;
  three.insert(three.end(), {"--jobs", "3"});
  const auto a = run(one);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, run(three).out);
  EXPECT_EQ(a.out, run(one).out);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto path = scratch("free.cfg");
  std::ofstream(path) << "# free rotor\nsystem = free\nhbar = 1\nemax = 5\n";
  const auto r = run({"spectrum", "--config", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv_rows(r.out).size(), 1u + 7u);
  const auto o = run({"spectrum", "--config", path.string(), "--hbar", "0.5"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(csv_rows(o.out).size(), 1u + 13u);
}

TEST(Cli, SidecarHoldsRunMetadata) {
  const auto data = scratch("pairs.csv");
  fs::remove(data.string() + ".meta.json");
  const auto r = run({"pairs", "--system", "H2", "--hbar", "0.05", "--out", data.string(), "--gnuplot"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(data);
  std::string first;
  std::getline(f, first);
  EXPECT_EQ(first, "# nonsmooth pairs schema v1");
  const auto meta = nlohmann::json::parse(std::ifstream(data.string() + ".meta.json"));
  EXPECT_EQ(meta["schema"], "pairs");
  EXPECT_TRUE(meta.contains("finished_utc"));
  EXPECT_EQ(meta["config"]["system"], "H2");
  EXPECT_TRUE(fs::exists(data.string() + ".gp"));
}

TEST(Cli, JsonOutputUsesNullForMissingValues) {
  const auto r = run({"pairs", "--system", "H2", "--hbar", "0.05", "--emin", "1.2", "--emax", "2", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["schema"], "pairs");
  EXPECT_EQ(j["schema_version"], 1);
  ASSERT_FALSE(j["rows"].empty());
  for (const auto& row : j["rows"]) EXPECT_TRUE(row["eta"].is_number());
  const auto p = run({"predict", "--system", "ex3.3", "--energy", "-0.5", "--format", "json"});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_TRUE(nlohmann::json::parse(p.out)["rows"][0]["quantum_number"].is_null());
}

TEST(Cli, CompareAtHalfHbarOffset) {
  const auto r = run({"compare", "--system", "ex3.2", "--hbar", "0.05", "--pc-over-hbar", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_GT(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(std::stod(rows[i][1]), 1e-10);
    EXPECT_EQ(rows[i][7], "true");
  }
}

TEST(Cli, CatalogSurfaces) {
  const auto list = run({"catalog", "list"});
  ASSERT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("ex3.3"), std::string::npos);
  const auto d = run({"catalog", "describe", "H4"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_NE(d.out.find("locus: p = 0"), std::string::npos);
  EXPECT_EQ(run({"catalog", "describe"}).code, 2);
  EXPECT_EQ(run({"catalog", "describe", "nope"}).code, 2);
}

TEST(Cli, HbarScanReportsSlope) {
  const auto r = run({"scan", "--system", "H2", "--axis", "hbar", "--hbar", "0.08,0.06,0.04", "--energy", "1.5",
                      "--emax", "2.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",slope\n"), std::string::npos);
  EXPECT_EQ(run({"scan", "--system", "H2", "--axis", "hbar", "--hbar", "0.08,0.04", "--energy", "1.5"}).code, 1);
  EXPECT_EQ(run({"scan", "--system", "H2", "--axis", "spin", "--values", "1"}).code, 2);
}

TEST(Cli, PredictListsEnergies) {
  const auto r = run({"predict", "--system", "ex2.1", "--hbar", "0.05", "--energy", "1.5,2.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv_rows(r.out).size(), 3u);
  EXPECT_EQ(run({"predict", "--system", "ex2.1"}).code, 2);
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spectraldist/cli.hpp"

namespace sd = spectraldist;
namespace cli = spectraldist::cli;
namespace fs = std::filesystem;
using sd::cplx;

namespace {

const fs::path kConfigs = SD_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "spectraldist_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write(const fs::path& dir, const std::string& text) {
  fs::path p = dir / "config.json";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

struct Run {
  int rc;
  std::string out, err;
};

Run run(const std::string& args, const fs::path& dir) {
  std::string cmd = std::string("\"") + SD_EXE + "\" " + args + " >\"" + (dir / "stdout").string() + "\" 2>\"" +
                    (dir / "stderr").string() + "\"";
  int st = std::system(cmd.c_str());
  int rc = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return {rc, slurp(dir / "stdout"), slurp(dir / "stderr")};
}

// message of the ConfigError raised by parse_config, or "" if parsing succeeds
std::string parse_error(const std::string& text) {
  try {
    cli::parse_config(text, "cfg");
  } catch (const cli::ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kOverlap = R"({
  "scenario": "multop",
  "multop": {
    "domain": [
      ["0", "1"],
      ["0.5", "2"]
    ]
  }
})";

}  // namespace

TEST(LineIndex, MapsPointersToLines) {
  std::string text = "{\n  \"a\": 1,\n  \"b\": [\n    2,\n    {\"c\": 3}\n  ],\n  \"d/e\": {\"f\":\n 4}\n}\n";
  cli::LineIndex idx(text);
  EXPECT_EQ(idx.line(""), 1);
  EXPECT_EQ(idx.line("/a"), 2);
  EXPECT_EQ(idx.line("/b"), 3);
  EXPECT_EQ(idx.line("/b/0"), 4);
  EXPECT_EQ(idx.line("/b/1"), 5);
  EXPECT_EQ(idx.line("/b/1/c"), 5);
  EXPECT_EQ(idx.line("/d~1e/f"), 8);
  EXPECT_EQ(idx.line("/b/1/missing"), 5);
  EXPECT_EQ(idx.line("/nothing"), 1);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_NE(parse_error(kOverlap).find("cfg:6:"), std::string::npos) << parse_error(kOverlap);
  auto e = parse_error("{\n\n  \"scenario\": \"spline\"\n}");
  EXPECT_NE(e.find("cfg:3:"), std::string::npos) << e;
  EXPECT_NE(e.find("unknown scenario 'spline'"), std::string::npos);
  e = parse_error("{\"scenario\": \"matrix\",\n \"matrix\": {\"entries\": [[1]]},\n \"colour\": 1}");
  EXPECT_NE(e.find("cfg:3:"), std::string::npos) << e;
  e = parse_error("{\"scenario\": \"multop\",\n \"multop\": {\"domain\": [[\"0\",\n \"1.x\"]]}}");
  EXPECT_NE(e.find("cfg:3:"), std::string::npos) << e;
  EXPECT_NE(e.find("'1.x' is not a decimal number"), std::string::npos);
  e = parse_error("{\"scenario\": \"matrix\", \"matrix\": {\"entries\": [[1]]},\n \"grid\": {\"epsilon_ladder\": [1e-2,\n 1e-1]}}");
  EXPECT_NE(e.find("cfg:3:"), std::string::npos) << e;
  e = parse_error("{\"scenario\": \"unitary\",\n \"unitary\": {\"entries\": [[2]]}}");
  EXPECT_NE(e.find("not unitary"), std::string::npos) << e;
  e = parse_error("{\"scenario\": \"example2\",\n \"example2\": {\"amplitude\": 1, \"target_c0\": 0}}");
  EXPECT_NE(e.find("exactly one"), std::string::npos) << e;
  e = parse_error("{\"scenario\": \"matrix\", \"matrix\": {\"entries\": [[1]]},\n \"checks\": [\"everything\"]}");
  EXPECT_NE(e.find("cfg:2:"), std::string::npos) << e;
  e = parse_error("{\"scenario\": \"matrix\", \"matrix\": {\"entries\": [[1]]}, \"seed\": 1.5}");
  EXPECT_NE(e.find("expected an integer"), std::string::npos) << e;
  EXPECT_NE(parse_error("{\"scenario\": \"matrix\", \"matrix\": {\"entries\": [[1, 2]]}}"), "");
  EXPECT_NE(parse_error("{\"scenario\": \"matrix\", \"matrix\": {\"entries\": [[1]]}, \"probes\": 1e400}"), "");
  EXPECT_NE(parse_error("[1, 2"), "");
}

TEST(Config, ScanRegionMustAvoidTheSlit) {
  std::string text = slurp(kConfigs / "krein_single_slit.json");
  auto p = text.find("[-1, 0.9]");
  ASSERT_NE(p, std::string::npos);
  text.replace(p, 9, "[-1, 2.5]");
  auto e = parse_error(text);
  EXPECT_NE(e.find("crosses the slit [1.4, 2.6]"), std::string::npos) << e;
  EXPECT_NE(e.find("cfg:10:"), std::string::npos) << e;
}

TEST(Config, DecimalStringsAreExact) {
  auto c = cli::parse_config(R"({"scenario": "multop", "multop": {"domain": [["0.1", "0.7"]], "profile": ["0", "1"]}})", "cfg");
  ASSERT_EQ(c.domain.intervals.size(), 1u);
  EXPECT_EQ(c.domain.intervals[0].a, 0.1);
  EXPECT_EQ(c.domain.intervals[0].b, 0.7);
}

TEST(Config, TolerancesAndHash) {
  std::string text = R"({"scenario": "matrix", "matrix": {"entries": [[1]]}, "tolerances": {"all": 1e-3, "coarea": 1e-9}})";
  auto c = cli::parse_config(text, "cfg");
  EXPECT_EQ(cli::tolerance(c, "multiplicative"), 1e-3);
  EXPECT_EQ(cli::tolerance(c, "coarea"), 1e-9);
  c.tol_scale = 10.0;
  EXPECT_DOUBLE_EQ(cli::tolerance(c, "coarea"), 1e-8);

  auto d = cli::parse_config(R"({"scenario": "matrix", "matrix": {"entries": [[1]]}})", "cfg");
  EXPECT_EQ(cli::tolerance(d, "completeness"), cli::default_tolerances().at("completeness"));

  auto a = cli::parse_config(text, "x"), b = cli::parse_config(text, "y");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.seed = 2;
  EXPECT_NE(a.hash(), b.hash());
  b = a;
  b.tol_scale = 2.0;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_NE(a.hash(), cli::parse_config(text + " ", "x").hash());
  EXPECT_EQ(cli::hex64(cli::fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(cli::hex64(cli::fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Output, CsvRoundTripsDoubles) {
  auto c = cli::parse_config(R"({"scenario": "matrix", "matrix": {"entries": [[1]]}})", "cfg");
  cli::Result r;
  r.header = {"x", "y"};
  r.rows = {{0.1, 1.0 / 3.0}, {-2.5e-300, 6.02214076e23}};
  std::string s = cli::csv_text(c, r);
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# spectraldist " + std::string(cli::kVersion) + " config_hash=" + c.hash());
  std::getline(in, line);
  EXPECT_EQ(line, "x,y");
  for (const auto& row : r.rows) {
    std::getline(in, line);
    auto comma = line.find(',');
    EXPECT_EQ(std::stod(line.substr(0, comma)), row[0]);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), row[1]);
  }
}

TEST(Jobs, KeepOrderAndFirstError) {
  std::vector<cli::Job> jobs;
  for (int i = 0; i < 7; ++i)
    jobs.push_back([i] { return std::vector<sd::CheckReport>{sd::make_report("j" + std::to_string(i), cplx(i), cplx(i), 1e-9)}; });
  auto r = cli::run_jobs(jobs, 3);
  ASSERT_EQ(r.size(), 7u);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(r[i].name, "j" + std::to_string(i));
  jobs[2] = [] () -> std::vector<sd::CheckReport> { throw sd::RegimeError("two", 0.0); };
  jobs[5] = [] () -> std::vector<sd::CheckReport> { throw sd::DomainError("five"); };
  try {
    cli::run_jobs(jobs, 4);
    FAIL();
  } catch (const sd::RegimeError& e) {
    EXPECT_STREQ(e.what(), "two");
  }
}

TEST(Scenario, DiagonalMatrixHasTwoSimplePolesAndNoDensity) {
  auto c = cli::parse_config(R"({"scenario": "matrix", "matrix": {"entries": [[1, 0], [0, 2]]}, "checks": []})", "cfg");
  auto r = cli::run_scenario(c, true);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_TRUE(r.checks.empty());
  const auto& e = r.eigenvalues["entries"];
  ASSERT_EQ(e.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(e[i]["kind"], "simple_pole");
    EXPECT_EQ(e[i]["multiplicity"], 1);
    EXPECT_EQ(e[i]["location"][0].get<double>(), 1.0 + i);
    EXPECT_EQ(e[i]["location"][1].get<double>(), 0.0);
    const auto& res = e[i]["residue"];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        EXPECT_NEAR(res[a][b][0].get<double>(), a == i && b == i ? 1.0 : 0.0, 1e-14);
        EXPECT_NEAR(res[a][b][1].get<double>(), 0.0, 1e-14);
      }
  }
  auto csv = cli::csv_text(c, r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Binary, VersionAndUsage) {
  auto d = scratch("usage");
  auto v = run("--version", d);
  EXPECT_EQ(v.rc, 0);
  EXPECT_NE(v.out.find(cli::kVersion), std::string::npos);
  EXPECT_EQ(run("spectrum --out x", d).rc, 2);
  EXPECT_EQ(run("frobnicate", d).rc, 2);
  EXPECT_EQ(run("--threads 0 verify --config x", d).rc, 2);
}

TEST(Binary, ConfigErrorsExitTwo) {
  auto d = scratch("config_errors");
  auto r = run("verify --config \"" + write(d, kOverlap).string() + "\"", d);
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("config.json:6:"), std::string::npos) << r.err;
  r = run("verify --config \"" + write(d, "{\n  \"scenario\": \"spline\"\n}").string() + "\"", d);
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("config.json:2: unknown scenario"), std::string::npos) << r.err;
  r = run("verify --config \"" + (d / "absent.json").string() + "\"", d);
  EXPECT_EQ(r.rc, 2);
}

TEST(Binary, TightToleranceExitsOne) {
  auto d = scratch("tight");
  std::string text = slurp(kConfigs / "multop_quadratic.json");
  text.insert(text.find('{') + 1, "\n  \"tolerances\": {\"all\": 1e-12},");
  auto r = run("verify --config \"" + write(d, text).string() + "\" --out \"" + (d / "out").string() + "\"", d);
  EXPECT_EQ(r.rc, 1);
  EXPECT_NE(r.out.find("FAIL plemelj"), std::string::npos) << r.out;
  auto rep = cli::json::parse(slurp(d / "out" / "report.json"));
  EXPECT_FALSE(rep["passed"].get<bool>());
  EXPECT_GT(rep["checks"].size(), 0u);
}

TEST(Binary, RegimeErrorExitsThreeAndStillReports) {
  auto d = scratch("regime");
  auto r = run("verify --config \"" + (kConfigs / "krein_threshold.json").string() + "\" --out \"" + (d / "out").string() + "\"", d);
  EXPECT_EQ(r.rc, 3);
  EXPECT_NE(r.err.find("x = 2.5"), std::string::npos) << r.err;
  auto rep = cli::json::parse(slurp(d / "out" / "report.json"));
  EXPECT_FALSE(rep["passed"].get<bool>());
  EXPECT_EQ(rep["error"]["kind"], "regime error");
}

TEST(Binary, OutputsAreByteIdenticalAcrossRunsAndThreadCounts) {
  auto d = scratch("determinism");
  auto cfg = (kConfigs / "multop_quadratic.json").string();
  ASSERT_EQ(run("--threads 1 spectrum --config \"" + cfg + "\" --out \"" + (d / "a").string() + "\"", d).rc, 0);
  ASSERT_EQ(run("--threads 3 spectrum --config \"" + cfg + "\" --out \"" + (d / "b").string() + "\"", d).rc, 0);
  ASSERT_EQ(run("--threads 1 spectrum --config \"" + cfg + "\" --out \"" + (d / "c").string() + "\"", d).rc, 0);
  ASSERT_EQ(run("--seed 8 spectrum --config \"" + cfg + "\" --out \"" + (d / "s").string() + "\"", d).rc, 0);
  auto hash = cli::load_config(cfg).hash();
  for (const char* f : {"eigenvalues.json", "density.csv", "report.json"}) {
    std::string a = slurp(d / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(d / "b" / f)) << f;
    EXPECT_EQ(a, slurp(d / "c" / f)) << f;
    EXPECT_NE(a, slurp(d / "s" / f)) << f;
    EXPECT_NE(a.find(hash), std::string::npos) << f;
    EXPECT_NE(a.find(cli::kVersion), std::string::npos) << f;
  }
  auto csv = slurp(d / "a" / "density.csv");
  EXPECT_NE(csv.find("\nx,C1,C2,re_kappa_1,im_kappa_1,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 512);
}

TEST(Binary, ImaginaryPairSpectrum) {
  auto d = scratch("imaginary");
  auto r = run("spectrum --config \"" + (kConfigs / "example2_imaginary.json").string() + "\" --out \"" + d.string() + "\"", d);
  ASSERT_EQ(r.rc, 0) << r.err;
  auto ev = cli::json::parse(slurp(d / "eigenvalues.json"));
  EXPECT_EQ(ev["regime"], "ImaginaryPair");
  const auto& e = ev["entries"];
  ASSERT_EQ(e.size(), 2u);

  auto K = sd::example2_build(2.0, ev["amplitude"].get<double>(), {1.5, 0.45}).model;
  auto C = [&](double u) { return sd::c_value(K, cplx(0.0, u)).real(); };
  double lo = 1e-3, hi = 3.0;
  ASSERT_LT(C(lo) * C(hi), 0.0);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    double m = 0.5 * (lo + hi);
    ((C(m) < 0.0) == (C(lo) < 0.0) ? lo : hi) = m;
  }
  double u0 = 0.5 * (lo + hi);
  std::vector<double> ims;
  for (const auto& x : e) {
    EXPECT_EQ(x["kind"], "simple_pole");
    EXPECT_EQ(x["classification"], "imaginary");
    EXPECT_LT(std::abs(x["location"][0].get<double>()), 1e-9);
    ims.push_back(x["location"][1].get<double>());
  }
  std::sort(ims.begin(), ims.end());
  EXPECT_NEAR(ims[0], -u0, 1e-9);
  EXPECT_NEAR(ims[1], u0, 1e-9);
  auto rep = cli::json::parse(slurp(d / "report.json"));
  EXPECT_TRUE(rep["passed"].get<bool>());
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef CONIC_BAYES_EXE
#error "CONIC_BAYES_EXE must name the conic-bayes binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conicbayes_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string out, err;
};

Result invoke(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + CONIC_BAYES_EXE + "\" " + args + " >\"" + o.string() +
                          "\" 2>\"" + e.string() + "\"";
  const int status = std::system(cmd.c_str());
  int code = status;
#ifdef WEXITSTATUS
  code = WEXITSTATUS(status);
#endif
  return {code, slurp(o), slurp(e)};
}

}  // namespace

TEST(Cli, VersionAndHelp) {
  const fs::path dir = scratch("version");
  const Result v = invoke("--version", dir);
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("0.1.0"), std::string::npos);
  const Result none = invoke("", dir);
  EXPECT_NE(none.code, 0);
}

TEST(Cli, SimulateWritesManifestAndIsReproducible) {
  const fs::path dir = scratch("simulate");
  const std::string base = "simulate --protocol sim2 --n-datasets 3 --n-points 30 --seed 5 --out ";
  ASSERT_EQ(invoke(base + "\"" + (dir / "a").string() + "\"", dir).code, 0);
  ASSERT_EQ(invoke(base + "\"" + (dir / "b").string() + "\"", dir).code, 0);
  const json ma = json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(ma["datasets"].size(), 3u);
  EXPECT_EQ(ma["datasets"][0]["file"], "dataset_0000.json");
  EXPECT_TRUE(ma.contains("config_hash"));
  EXPECT_TRUE(ma.contains("version"));
  // Output location is not part of the configuration hash.
  EXPECT_EQ(slurp(dir / "a" / "manifest.json"), slurp(dir / "b" / "manifest.json"));
  for (int i = 0; i < 3; ++i) {
    const std::string f = "dataset_000" + std::to_string(i) + ".json";
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f));
  }
  const json d = json::parse(slurp(dir / "a" / "dataset_0000.json"));
  EXPECT_EQ(d["points"].size(), 30u);
}

TEST(Cli, InvalidSpecReportsErrorJson) {
  const fs::path dir = scratch("invalid");
  const Result r = invoke("simulate --n-datasets 0 --out \"" + (dir / "x").string() + "\"", dir);
  EXPECT_EQ(r.code, 2);
  const json e = json::parse(r.err);
  EXPECT_EQ(e["error"]["kind"], "invalid_spec");
  const Result bad_type = invoke("fit -i nothing.json --fix-type oval", dir);
  EXPECT_EQ(bad_type.code, 2);
  EXPECT_EQ(json::parse(bad_type.err)["error"]["kind"], "config");
}

TEST(Cli, MissingInputIsAnIoError) {
  const fs::path dir = scratch("missing");
  const Result r = invoke("fit -i \"" + (dir / "nope.json").string() + "\" --iterations 100 --burn-in 10", dir);
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "io");
  std::ofstream(dir / "bad.json") << "{\"points\": [[1, 2], [3]]}";
  const Result m = invoke("fit -i \"" + (dir / "bad.json").string() + "\"", dir);
  EXPECT_EQ(m.code, 4);
  EXPECT_EQ(json::parse(m.err)["error"]["kind"], "malformed_file");
}

TEST(Cli, FitTracePlotdataAndDeterminism) {
  const fs::path dir = scratch("fit");
  ASSERT_EQ(invoke("simulate --protocol sim2 --type hyperbola --n-datasets 1 --n-points 60 --seed 3 --out \"" +
                    (dir / "data").string() + "\"",
                dir)
                .code,
            0);
  const std::string input = (dir / "data" / "dataset_0000.json").string();
  const std::string fit = "fit -i \"" + input + "\" --iterations 600 --burn-in 200 --seed 9 --region-samples 5";
  ASSERT_EQ(invoke(fit + " --out \"" + (dir / "f1.json").string() + "\" --trace \"" + (dir / "t1.ndjson").string() + "\"", dir).code, 0);
  ASSERT_EQ(invoke(fit + " --out \"" + (dir / "f2.json").string() + "\" --trace \"" + (dir / "t2.ndjson").string() + "\"", dir).code, 0);
  EXPECT_EQ(slurp(dir / "f1.json"), slurp(dir / "f2.json"));
  EXPECT_EQ(slurp(dir / "t1.ndjson"), slurp(dir / "t2.ndjson"));

  const json f = json::parse(slurp(dir / "f1.json"));
  EXPECT_TRUE(f["summary"].contains("type_probs"));
  EXPECT_TRUE(f["summary"].contains("bayes_factors"));
  EXPECT_EQ(f["summary"]["n_samples"], 400);
  const std::string trace = slurp(dir / "t1.ndjson");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 400);

  ASSERT_EQ(invoke("plotdata -i \"" + (dir / "f1.json").string() + "\" --out \"" + (dir / "plot").string() + "\"", dir).code, 0);
  const std::string csv = slurp(dir / "plot" / "plot.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "series,index,x,y");
  EXPECT_NE(csv.find("\ndata,59,"), std::string::npos);
  EXPECT_NE(csv.find("\nposterior_mean,0,"), std::string::npos);
  const std::string svg = slurp(dir / "plot" / "plot.svg");
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '<'), std::count(svg.begin(), svg.end(), '>'));
}

TEST(Cli, DetectCsv) {
  const fs::path dir = scratch("detect");
  ASSERT_EQ(invoke("simulate --protocol sim1 --n-datasets 1 --n-points 40 --out \"" + (dir / "d").string() + "\"", dir).code, 0);
  const Result r = invoke("detect -i \"" + (dir / "d" / "dataset_0000.json").string() +
                        "\" --iterations 300 --burn-in 100 --format csv",
                    dir);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "type,probability,mc_sd");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
}

TEST(Cli, BaselineCsvOnOneDatasetHasNoStandardError) {
  const fs::path dir = scratch("baseline");
  ASSERT_EQ(invoke("simulate --protocol sim1 --n-datasets 1 --n-points 50 --out \"" + (dir / "d").string() + "\"", dir).code, 0);
  const Result r = invoke("baseline -i \"" + (dir / "d").string() + "\" --format csv", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("NA"), std::string::npos);
  const Result t = invoke("baseline -i \"" + (dir / "d").string() + "\" --format table", dir);
  EXPECT_EQ(t.code, 0);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "run.toml") << "protocol = \"sim1\"\nn-datasets = 2\nn-points = 20\nseed = 4\n";
  ASSERT_EQ(invoke("simulate --config \"" + (dir / "run.toml").string() + "\" --n-datasets 1 --out \"" +
                    (dir / "o").string() + "\"",
                dir)
                .code,
            0);
  const json m = json::parse(slurp(dir / "o" / "manifest.json"));
  EXPECT_EQ(m["datasets"].size(), 1u);
  EXPECT_EQ(m["spec"]["n_points"], 20);
}

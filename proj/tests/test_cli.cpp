#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polya/cli.hpp"

using polya::cli::run;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_config(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("polya_test_" + name + ".json");
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const json d = polya::cli::default_config();
  EXPECT_EQ(polya::cli::resolve_config("{}"), d);
  const json c = polya::cli::resolve_config(R"({"params": {"z": 0.3}, "replicas": 10})");
  EXPECT_EQ(c["params"]["z"], 0.3);
  EXPECT_EQ(c["params"]["w"], d["params"]["w"]);
  EXPECT_EQ(c["replicas"], 10);
}

TEST(Config, MalformedJsonNamesTheLine) {
  const auto path = write_config("malformed", "{\n  \"seed\": 3,\n  \"params\": {\"z\": }\n}\n");
  const Outcome o = invoke({"--config", path, "selfcheck-combinatorics"});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("line 3"), std::string::npos) << o.err;
  EXPECT_TRUE(o.out.empty());
}

TEST(Config, UnknownKeyNamesTheField) {
  const auto path = write_config("unknown", R"({"params": {"z": 0.5, "q": 1}})");
  const Outcome o = invoke({"--config", path, "ldp"});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("/params/q"), std::string::npos) << o.err;
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_EQ(invoke({"--config", write_config("type", R"({"replicas": "many"})"), "posterior"}).code, 2);
  const Outcome z = invoke({"--config", write_config("range", R"({"params": {"z": 1.5}})"), "sample"});
  EXPECT_EQ(z.code, 2);
  EXPECT_NE(z.err.find("/params"), std::string::npos) << z.err;
  EXPECT_EQ(invoke({"--seed", "-4", "sample"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
}

TEST(Commands, SelfcheckPasses) {
  const Outcome o = invoke({"selfcheck-combinatorics"});
  ASSERT_EQ(o.code, 0) << o.err;
  const json r = json::parse(o.out);
  EXPECT_EQ(r["command"], "selfcheck-combinatorics");
  for (const auto& [name, check] : r["result"]["checks"].items()) EXPECT_EQ(check["status"], "pass") << name;
}

TEST(Commands, SampleIsReproducible) {
  const Outcome a = invoke({"--seed", "7", "sample"});
  const Outcome b = invoke({"--seed", "7", "sample"});
  const Outcome c = invoke({"--seed", "8", "sample"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  std::istringstream lines(a.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    EXPECT_TRUE(json::accept(line)) << line;
    ++count;
  }
  EXPECT_EQ(count, 6);  // header plus the default five samples
}

TEST(Commands, LdpExample) {
  const Outcome o = invoke({"ldp", "--u", "1", "--v", "0.6931471805599453"});
  ASSERT_EQ(o.code, 0) << o.err;
  const json r = json::parse(o.out)["result"];
  EXPECT_NEAR(r["estimates"]["z"].get<double>(), 0.5, 1e-10);
  EXPECT_NEAR(r["estimates"]["w"].get<double>(), 1.0, 1e-10);
  EXPECT_LT(r["errors"]["l1_numeric_vs_analytic"].get<double>(), 1e-8);
  EXPECT_NEAR(r["minimizer"]["numeric"][0].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(r["minimizer"]["numeric"][2].get<double>(), 0.125 / 3.0, 1e-12);
  EXPECT_EQ(invoke({"ldp", "--u", "1", "--v", "2"}).code, 2);
  EXPECT_EQ(invoke({"--csv", "ldp"}).code, 2);
}

TEST(Commands, BoundaryCsvShape) {
  const auto path = write_config("boundary", R"({"chain": {"K": 12}, "replicas": 4})");
  const Outcome o = invoke({"--config", path, "--csv", "boundary", "--ensemble", "both"});
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream lines(o.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "k,u_k,v_k,w_hat_k,z_hat_k");
  int rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 12);
}

TEST(Commands, EnsembleReportsExactLaw) {
  const auto path = write_config("ensemble", R"({"ensemble": {"samples": 20000}})");
  const Outcome o = invoke({"--config", path, "ensemble", "--kind", "both", "--m", "4", "--k", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  const json law = json::parse(o.out)["result"]["law"];
  ASSERT_EQ(law.size(), 2u);
  EXPECT_EQ(law[0]["probability"], "8/11");
  EXPECT_EQ(law[1]["probability"], "3/11");
  const Outcome bad = invoke({"ensemble", "--kind", "both", "--m", "4", "--k", "5"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("error:"), std::string::npos);
}

TEST(Commands, OutDirectoryAndThreadIndependence) {
  const auto dir = std::filesystem::temp_directory_path() / "polya_test_out";
  std::filesystem::remove_all(dir);
  const auto path = write_config("posterior", R"({"replicas": 20, "posterior": {"checkpoints": [5, 20]}})");
  ASSERT_EQ(invoke({"--config", path, "--out", dir.string(), "--threads", "1", "posterior"}).code, 0);
  std::ifstream one_file(dir / "posterior.json");
  std::stringstream one;
  one << one_file.rdbuf();
  EXPECT_TRUE(std::filesystem::exists(dir / "posterior.csv"));
  const Outcome four = invoke({"--config", path, "--threads", "4", "posterior"});
  EXPECT_EQ(json::parse(one.str())["result"], json::parse(four.out)["result"]);
  std::filesystem::remove_all(dir);
}

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult cli(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string("\"") + NTFORGE_CLI + "\" " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string scenario(const std::string& name) { return std::string(NTFORGE_SCENARIO_DIR) + "/" + name; }

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = fs::temp_directory_path() / ("ntforge_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

// Structural equality with a relative tolerance on floating-point leaves.
bool close(const json& a, const json& b, const std::string& where, std::string& diff) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (std::abs(x - y) <= 1e-9 * (1.0 + std::abs(y))) return true;
    diff = where + ": " + a.dump() + " vs " + b.dump();
    return false;
  }
  if (a.type() != b.type()) {
    diff = where + ": type differs";
    return false;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) {
      diff = where + ": length differs";
      return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!close(a[i], b[i], where + "[" + std::to_string(i) + "]", diff)) return false;
    return true;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) {
      diff = where + ": key count differs";
      return false;
    }
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k)) {
        diff = where + "." + k + ": missing";
        return false;
      }
      if (!close(v, b.at(k), where + "." + k, diff)) return false;
    }
    return true;
  }
  if (a != b) diff = where + ": " + a.dump() + " vs " + b.dump();
  return a == b;
}

}  // namespace

TEST(Scenario, GoldenReports) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(NTFORGE_SCENARIO_DIR)) {
    const auto path = entry.path();
    if (path.extension() != ".json" || path.string().find(".report.json") != std::string::npos) continue;
    const auto golden_path = path.parent_path() / (path.stem().string() + ".report.json");
    ASSERT_TRUE(fs::exists(golden_path)) << golden_path;
    const auto r = cli("run \"" + path.string() + "\" --no-timestamp");
    ASSERT_EQ(r.exit_code, 0) << path;
    const auto got = json::parse(r.out);
    std::ifstream in(golden_path);
    const auto want = json::parse(in);
    std::string diff;
    EXPECT_TRUE(close(got, want, path.filename().string(), diff)) << diff;
    EXPECT_EQ(got.at("summary").at("fail"), 0) << path;
    EXPECT_EQ(got.at("summary").at("error"), 0) << path;
    ++seen;
  }
  EXPECT_GE(seen, 4);
}

TEST(Scenario, TimestampIsFilledByDefault) {
  const auto r = cli("run \"" + scenario("bundle_Z2.json") + "\"");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_FALSE(json::parse(r.out).at("timestamp").get<std::string>().empty());
}

TEST(Scenario, DeterministicAndSeeded) {
  const auto a = cli("run \"" + scenario("free_monoid.json") + "\" --no-timestamp");
  const auto b = cli("run \"" + scenario("free_monoid.json") + "\" --no-timestamp");
  EXPECT_EQ(a.out, b.out);
  const auto c = cli("run \"" + scenario("free_monoid.json") + "\" --no-timestamp --seed 99");
  ASSERT_EQ(c.exit_code, 0);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(json::parse(c.out).at("settings").at("seed"), 99);
}

TEST(Scenario, OverridesReachSettings) {
  const auto r = cli("run \"" + scenario("toeplitz_N.json") + "\" --no-timestamp --depth 5 --tol 1e-7");
  ASSERT_EQ(r.exit_code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("settings").at("depth"), 5);
  EXPECT_DOUBLE_EQ(j.at("settings").at("tol").get<double>(), 1e-7);
}

TEST(Scenario, EmptyScenarioGivesEmptyReport) {
  const auto r = cli("run \"" + write_temp("empty.json", "{}") + "\" --no-timestamp");
  ASSERT_EQ(r.exit_code, 0);
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j.at("items").empty());
  EXPECT_EQ(j.at("summary").at("pass"), 0);
}

TEST(Scenario, ParseErrorReportsLineAndColumn) {
  const auto path = write_temp("broken.json", "{\n  \"semigroup\": \"N\",\n  \"backend\": {\"kind\": }\n}\n");
  const auto r = cli("run \"" + path + "\"", true);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("line 3, column"), std::string::npos) << r.out;
}

TEST(Scenario, ValidationErrorNamesTheFieldAndPair) {
  const auto path = write_temp("bad_dims.json",
                               R"({"semigroup": "absorption", "backend": {"generator_dims": [[2], [1]]}})");
  const auto r = cli("run \"" + path + "\"", true);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("backend.generator_dims"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("(0,1)"), std::string::npos) << r.out;
}

TEST(Scenario, UnknownSectionIsRejected) {
  const auto r = cli("run \"" + write_temp("unknown.json", R"({"semigroup": "N", "extras": {}})") + "\"", true);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("extras"), std::string::npos);
}

TEST(Scenario, ItemErrorsAreRecordedPerItem) {
  const auto path = write_temp("item_error.json", R"({"semigroup": "N", "backend": {},
    "items": [{"name": "dominated", "op": "check-toeplitz", "p": "2", "qs": ["1"]},
              {"name": "ok", "op": "laws", "depth": 2}]})");
  const auto r = cli("run \"" + path + "\" --no-timestamp");
  const auto j = json::parse(r.out);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_TRUE(j.at("items")[0].contains("error"));
  EXPECT_EQ(j.at("items")[1].at("status"), "pass");
  EXPECT_EQ(j.at("summary").at("error"), 1);
}

TEST(Scenario, ExplainKnownAndUnknown) {
  const auto ok = cli("explain condition-c");
  EXPECT_EQ(ok.exit_code, 0);
  EXPECT_NE(ok.out.find("check-condition-c"), std::string::npos);
  const auto bad = cli("explain toplitz", true);
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_NE(bad.out.find("did you mean: check-toeplitz"), std::string::npos) << bad.out;
}

TEST(Scenario, DirectSubcommands) {
  const auto seg = cli("segments --instance free2 -F a ab b");
  EXPECT_EQ(seg.exit_code, 0);
  EXPECT_NE(seg.out.find("ab"), std::string::npos);
  const auto inst = cli("list-instances");
  EXPECT_NE(inst.out.find("absorption"), std::string::npos);
  EXPECT_NE(inst.out.find("S3"), std::string::npos);
  const auto spec = cli("bundle spectrum \"" + scenario("bundle_Z2.json") + "\" a+bu");
  EXPECT_EQ(spec.exit_code, 0) << spec.out;
  EXPECT_NE(spec.out.find("2.5"), std::string::npos) << spec.out;
}

TEST(Scenario, RandomAndUnitTermsStayInTheIdeal) {
  const auto path = write_temp("ideal.json", R"({"semigroup": "free2",
    "backend": {"generator_dims": [[2, 1], [1, 2]], "ideal": [1]},
    "elements": {"x": [{"range": "a", "source": "a", "random": true}],
                 "e": [{"range": "", "source": "", "unit": true}]},
    "items": [{"name": "x", "op": "nt-adjoint", "a": "x"}, {"name": "e", "op": "nt-norm", "a": "e"}]})");
  const auto r = cli("run \"" + path + "\" --no-timestamp");
  EXPECT_EQ(r.exit_code, 0) << r.out;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("summary").at("error"), 0);
}

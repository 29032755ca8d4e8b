#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "collar/runner.hpp"

using namespace collar;

namespace {

const RunReport& identity_report() {
  static const RunReport r = run_scenario(catalog_entry("identity"));
  return r;
}

std::filesystem::path scratch(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("collar_test_" + tag);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Catalog, ListHasSevenNames) {
  const std::vector<std::string> want{"identity",           "dilation",         "quadratic-collar", "boundary-shear",
                                      "bad-boundary-shift", "bad-transmission", "bad-symplectic"};
  EXPECT_EQ(catalog_names(), want);
}

TEST(Catalog, EmitIdentityPhaseString) {
  auto j = to_json(catalog_entry("identity"));
  EXPECT_EQ(j.at("phase").get<std::string>(), "x1*k1 + xn*kn");
  EXPECT_EQ(j.at("n").get<int>(), 2);
}

TEST(Catalog, EmittedDilationGeneratesItsMap) {
  // round trip through the file format, then the graph test
  const Scenario s = scenario_from_json(nlohmann::json::parse(to_json(catalog_entry("dilation")).dump()));
  ASSERT_TRUE(s.map.has_value());
  auto rep = check_generating(build_phase(s), build_map(s, *s.map), collar_samples(s.layout(), s.collar, 200, 11));
  EXPECT_LE(rep.residual, 1e-9);
}

TEST(Catalog, ScenarioFilesMatchEmission) {
  for (const auto& name : catalog_names()) {
    const auto p = std::filesystem::path(COLLAR_SOURCE_DIR) / "scenarios" / (name + ".json");
    ASSERT_TRUE(std::filesystem::exists(p)) << p;
    EXPECT_EQ(slurp(p), to_json(catalog_entry(name)).dump(2) + "\n") << name;
    EXPECT_EQ(load_scenario(p.string()).name, name);
  }
}

TEST(Catalog, UnknownNameIsInfrastructure) {
  try {
    resolve_scenario("no-such-scenario");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownScenario);
    EXPECT_TRUE(e.infrastructure());
  }
}

TEST(Runner, IdentityPassesEveryCheck) {
  const auto& r = identity_report();
  EXPECT_EQ(r.exit_code(), 0);
  for (const auto& c : r.checks) EXPECT_EQ(c.status, CheckStatus::Pass) << c.name << " " << c.message;
  std::size_t total = 0;
  for (const auto& st : stage_names()) total += stage_checks(st).size();
  EXPECT_EQ(r.checks.size(), total);
}

TEST(Runner, IdentityConstantsAreExact) {
  const auto& r = identity_report();
  EXPECT_EQ(r.check("calibrate").metric("K"), 1.0);
  EXPECT_NEAR(r.check("verify_P2").metric("c_t"), 1.0, 1e-12);
  EXPECT_NEAR(r.check("verify_P2").metric("C_tau"), 1.0, 1e-12);
  EXPECT_NEAR(r.check("verify_P3").metric("eps"), 1.0, 1e-12);
  EXPECT_LE(r.check("verify_P1").metric("C_max_observed"), 1.0 + 1e-12);
}

TEST(Runner, NegativesFailExactlyTheirIntendedCheck) {
  for (const auto& s : catalog()) {
    if (is_positive(s)) continue;
    const auto r = run_scenario(s);
    EXPECT_EQ(r.exit_code(), 1) << s.name;
    EXPECT_EQ(r.failed(), std::vector<std::string>{s.intended_failure}) << s.name;
  }
}

TEST(Runner, GatingReportsSkippedNotPassed) {
  const auto r = run_scenario(catalog_entry("bad-transmission"));
  for (const auto& c : r.checks)
    if (c.stage == "sgphase" || c.stage == "oscint" || c.stage == "opsymb") {
      EXPECT_EQ(c.status, CheckStatus::Skipped) << c.name;
      EXPECT_NE(c.message.find("genphase"), std::string::npos);
    }
  EXPECT_EQ(r.check("normal_coeffs").status, CheckStatus::Skipped);
}

TEST(Runner, StagesRunInDependencyOrder) {
  RunOptions opt;
  opt.stages = {"oscint", "symplecto"};
  opt.grid = "quick";
  const auto r = run_scenario(catalog_entry("boundary-shear"), opt);
  EXPECT_EQ(r.stages, (std::vector<std::string>{"symplecto", "oscint"}));
  EXPECT_EQ(r.checks.front().stage, "symplecto");
  EXPECT_EQ(r.checks.back().stage, "oscint");
  EXPECT_EQ(r.exit_code(), 0);
}

TEST(Runner, UnknownPresetsAreValidationErrors) {
  RunOptions opt;
  opt.grid = "huge";
  EXPECT_THROW(run_scenario(catalog_entry("identity"), opt), Error);
  opt.grid = "";
  opt.margin = "lenient";
  EXPECT_THROW(run_scenario(catalog_entry("identity"), opt), Error);
  opt.margin = "default";
  opt.stages = {"opsym"};
  EXPECT_THROW(run_scenario(catalog_entry("identity"), opt), Error);
}

TEST(Runner, GridHashTracksPreset) {
  EXPECT_EQ(grid_hash(grid_preset("default")), grid_hash(grid_preset("default")));
  EXPECT_NE(grid_hash(grid_preset("default")), grid_hash(grid_preset("quick")));
}

TEST(Runner, RepeatedRunsAreByteIdentical) {
  RunOptions opt;
  opt.grid = "quick";
  const auto a = run_scenario(catalog_entry("quadratic-collar"), opt);
  const auto b = run_scenario(catalog_entry("quadratic-collar"), opt);
  EXPECT_EQ(csv_bundle(a), csv_bundle(b));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.hash, b.hash);
}

TEST(Runner, SeedMovesTheSamples) {
  RunOptions opt;
  opt.stages = {"symplecto"};
  opt.seed = 7;
  const auto a = run_scenario(catalog_entry("bad-symplectic"), opt);
  opt.seed = 8;
  const auto b = run_scenario(catalog_entry("bad-symplectic"), opt);
  EXPECT_NE(a.check("check_symplectic").message, b.check("check_symplectic").message);
  EXPECT_EQ(a.failed(), b.failed());
}

TEST(Report, SummaryLineCountAndOrder) {
  const auto& r = identity_report();
  const auto lines = render_summary(r);
  EXPECT_EQ(lines.size(), 1 + r.checks.size());
  EXPECT_EQ(lines[0].rfind("identity: PASS", 0), 0u);
  const auto bad = render_summary(run_scenario(catalog_entry("bad-symplectic")));
  EXPECT_EQ(bad[1].rfind("FAIL symplecto/check_symplectic", 0), 0u);
}

TEST(Report, JsonRoundTrip) {
  const auto& r = identity_report();
  const auto back = report_from_json(nlohmann::ordered_json::parse(to_json(r).dump()));
  EXPECT_EQ(report_hash(back), r.hash);
  EXPECT_EQ(csv_bundle(back), csv_bundle(r));
  EXPECT_EQ(render_summary(back), render_summary(r));
}

TEST(Report, ConventionsAreStamped) {
  const auto j = to_json(identity_report());
  EXPECT_TRUE(j.at("conventions").contains("fourier"));
  EXPECT_TRUE(j.at("conventions").contains("order_index"));
  EXPECT_TRUE(j.at("environment").contains("boost"));
  EXPECT_EQ(j.at("grid_hash").get<std::string>().size(), 64u);
}

TEST(Report, WritesBundle) {
  const auto dir = scratch("bundle");
  write_report(identity_report(), dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.csv"));
  EXPECT_EQ(slurp(dir / "verify_P1__constants.csv").substr(0, 26), "a,alpha,C,x_prime,bracket,");
  EXPECT_EQ(load_report((dir / "report.json").string()).hash, identity_report().hash);
  std::filesystem::remove_all(dir);
}

TEST(Report, CsvQuoting) {
  Table t{"x", {"a", "b"}, {{"1,2", "say \"hi\""}}};
  EXPECT_EQ(csv(t), "a,b\n\"1,2\",\"say \"\"hi\"\"\"\n");
}

TEST(Report, CanonicalNumbers) {
  EXPECT_EQ(canonical_num(3e-16), "0");
  EXPECT_EQ(canonical_num(-4e-12), "0");
  EXPECT_EQ(canonical_num(2.3197768), "2.31978");
  EXPECT_EQ(canonical_num(-INFINITY), "-inf");
}

TEST(Golden, UpdateThenMatchThenMismatch) {
  const auto dir = scratch("golden");
  RunReport r = identity_report();
  EXPECT_THROW(load_report((dir / "missing.json").string()), Error);
  apply_golden(r, dir, false);
  EXPECT_EQ(r.golden, "");
  apply_golden(r, dir, true);
  EXPECT_EQ(r.golden, "updated");
  apply_golden(r, dir, false);
  EXPECT_EQ(r.golden, "match");
  EXPECT_EQ(r.exit_code(), 0);
  RunReport changed = r;
  changed.checks[0].metrics[0].second = 0.5;
  changed.hash = report_hash(changed);
  apply_golden(changed, dir, false);
  EXPECT_EQ(changed.golden, "mismatch");
  EXPECT_EQ(changed.exit_code(), 1);
  RunReport other = r;
  other.seed = 2;
  apply_golden(other, dir, false);
  EXPECT_EQ(other.golden, "");
  std::filesystem::remove_all(dir);
}

TEST(Golden, RefusesFailingRun) {
  auto r = run_scenario(catalog_entry("bad-boundary-shift"));
  const auto dir = scratch("golden_fail");
  EXPECT_THROW(apply_golden(r, dir, true), Error);
  EXPECT_FALSE(std::filesystem::exists(golden_path(dir, r.scenario)));
}

TEST(Golden, StoredDilationRecordCarriesGridHash) {
  const auto g = load_golden(std::filesystem::path(COLLAR_SOURCE_DIR) / "golden", "dilation");
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->grid, "default");
  EXPECT_EQ(g->grid_hash, grid_hash(grid_preset("default")));
}

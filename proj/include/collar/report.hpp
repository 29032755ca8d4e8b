#pragma once

// Run reports: per-check records, JSON/CSV serialization, canonical hash,
// human summary.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/version.hpp>
#include <Eigen/Core>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include "collar/error.hpp"
#include "json.hpp"

namespace collar {

enum class CheckStatus { Pass, Fail, Skipped };

inline std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "?";
}

inline CheckStatus status_from(const std::string& s) {
  if (s == "pass") return CheckStatus::Pass;
  if (s == "fail") return CheckStatus::Fail;
  if (s == "skipped") return CheckStatus::Skipped;
  throw Error(ErrorKind::ParseError, "unknown check status '" + s + "'");
}

// Cells are stored formatted so CSV bodies are reproducible byte for byte.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct CheckResult {
  std::string name, stage;
  CheckStatus status = CheckStatus::Pass;
  std::string message;  // failure reason, skip reason or worst point
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Table> tables;

  double metric(const std::string& key) const {
    for (const auto& [k, v] : metrics)
      if (k == key) return v;
    throw Error(ErrorKind::ValidationError, "check '" + name + "' has no metric '" + key + "'");
  }
  const Table& table(const std::string& key) const {
    for (const auto& t : tables)
      if (t.name == key) return t;
    throw Error(ErrorKind::ValidationError, "check '" + name + "' has no table '" + key + "'");
  }
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string grid = "default", margin = "default";
  std::vector<std::string> stages;  // selected, in dependency order
  nlohmann::ordered_json conventions;
  nlohmann::ordered_json environment;
  std::string grid_hash;
  std::vector<CheckResult> checks;
  std::string hash;    // canonical hash of the check records
  std::string golden;  // "match", "mismatch", "updated" or "" (none stored)

  bool pass() const {
    if (golden == "mismatch") return false;
    return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
  }
  int exit_code() const { return pass() ? 0 : 1; }
  const CheckResult& check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw Error(ErrorKind::ValidationError, "report has no check '" + name + "'");
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (c.status == CheckStatus::Fail) out.push_back(c.name);
    return out;
  }
};

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Six significant digits, magnitudes below 1e-9 read as zero: roundoff-level
// residuals do not move the hash.
inline std::string canonical_num(double v) {
  if (!std::isfinite(v)) return num(v);
  if (std::fabs(v) < 1e-9) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline nlohmann::ordered_json environment_stamp() {
  nlohmann::ordered_json e;
#ifdef __VERSION__
  e["compiler"] = __VERSION__;
#endif
  e["cxx"] = static_cast<long>(__cplusplus);
  e["boost"] = BOOST_LIB_VERSION;
  e["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  e["openssl"] = OPENSSL_VERSION_TEXT;
  return e;
}

inline nlohmann::ordered_json conventions_stamp() {
  nlohmann::ordered_json c;
  c["fourier"] = "u^(xi) = int e^{-i t xi} u(t) dt";
  c["measure"] = "dbar xi = dxi / (2 pi)";
  c["jacobian_layout"] = "rows (x', xi', x_n, xi_n), columns (y', eta', y_n, eta_n)";
  c["order_index"] =
      "alpha counts x' derivatives, beta counts xi' derivatives; the decay target is m - |beta|. "
      "The integral estimate is sometimes printed with m - |alpha|, which pairs the decay with the x' index";
  return c;
}

inline nlohmann::ordered_json table_json(const Table& t) {
  return {{"name", t.name}, {"header", t.header}, {"rows", t.rows}};
}

inline nlohmann::ordered_json check_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["check"] = c.name;
  j["stage"] = c.stage;
  j["status"] = to_string(c.status);
  j["message"] = c.message;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.metrics) m[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(num(v));
  j["metrics"] = m;
  nlohmann::ordered_json ts = nlohmann::ordered_json::array();
  for (const auto& t : c.tables) ts.push_back(table_json(t));
  j["tables"] = ts;
  return j;
}

// Hash input: scenario, seed, presets, grid hash, and per check name, status
// and canonical metrics.  Environment and free text are left out.
inline std::string canonical_text(const RunReport& r) {
  std::ostringstream o;
  o << "scenario=" << r.scenario << "\nseed=" << r.seed << "\ngrid=" << r.grid << "\nmargin=" << r.margin
    << "\ngrid_hash=" << r.grid_hash << "\n";
  for (const auto& c : r.checks) {
    o << c.name << "|" << c.stage << "|" << to_string(c.status);
    for (const auto& [k, v] : c.metrics) o << "|" << k << "=" << canonical_num(v);
    o << "\n";
  }
  return o.str();
}

inline std::string report_hash(const RunReport& r) { return sha256_hex(canonical_text(r)); }

inline nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["grid"] = r.grid;
  j["margin"] = r.margin;
  j["stages"] = r.stages;
  j["pass"] = r.pass();
  j["conventions"] = r.conventions;
  j["environment"] = r.environment;
  j["grid_hash"] = r.grid_hash;
  j["report_hash"] = r.hash;
  j["golden"] = r.golden;
  nlohmann::ordered_json cs = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) cs.push_back(check_json(c));
  j["checks"] = cs;
  return j;
}

inline double metric_from(const nlohmann::ordered_json& v) {
  if (v.is_number()) return v.get<double>();
  const std::string s = v.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

inline RunReport report_from_json(const nlohmann::ordered_json& j) {
  try {
    RunReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.grid = j.at("grid").get<std::string>();
    r.margin = j.at("margin").get<std::string>();
    r.stages = j.at("stages").get<std::vector<std::string>>();
    r.conventions = j.at("conventions");
    r.environment = j.at("environment");
    r.grid_hash = j.at("grid_hash").get<std::string>();
    r.hash = j.at("report_hash").get<std::string>();
    r.golden = j.at("golden").get<std::string>();
    for (const auto& c : j.at("checks")) {
      CheckResult cr;
      cr.name = c.at("check").get<std::string>();
      cr.stage = c.at("stage").get<std::string>();
      cr.status = status_from(c.at("status").get<std::string>());
      cr.message = c.at("message").get<std::string>();
      for (const auto& [k, v] : c.at("metrics").items()) cr.metrics.emplace_back(k, metric_from(v));
      for (const auto& t : c.at("tables"))
        cr.tables.push_back({t.at("name").get<std::string>(), t.at("header").get<std::vector<std::string>>(),
                             t.at("rows").get<std::vector<std::vector<std::string>>>()});
      r.checks.push_back(std::move(cr));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("report: ") + e.what());
  }
}

inline RunReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open report '" + path + "'");
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, "report '" + path + "': " + e.what());
  }
  return report_from_json(j);
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      s += cells[i];
      continue;
    }
    s += '"';
    for (char ch : cells[i]) {
      if (ch == '"') s += '"';
      s += ch;
    }
    s += '"';
  }
  return s + "\n";
}

inline std::string csv(const Table& t) {
  std::string s = csv_line(t.header);
  for (const auto& r : t.rows) s += csv_line(r);
  return s;
}

inline Table metrics_table(const CheckResult& c) {
  Table t{"metrics", {"metric", "value"}, {}};
  for (const auto& [k, v] : c.metrics) t.rows.push_back({k, num(v)});
  return t;
}

inline Table summary_table(const RunReport& r) {
  Table t{"summary", {"check", "stage", "status", "message"}, {}};
  for (const auto& c : r.checks) t.rows.push_back({c.name, c.stage, to_string(c.status), c.message});
  return t;
}

// Every CSV of the bundle, file name -> body, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> csv_bundle(const RunReport& r) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("summary.csv", csv(summary_table(r)));
  for (const auto& c : r.checks) {
    if (c.status == CheckStatus::Skipped) continue;
    out.emplace_back(c.name + ".csv", csv(metrics_table(c)));
    for (const auto& t : c.tables) out.emplace_back(c.name + "__" + t.name + ".csv", csv(t));
  }
  return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw Error(ErrorKind::Io, "cannot write '" + p.string() + "'");
  o << body;
}

inline void write_report(const RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  write_text(dir / "report.json", to_json(r).dump(2) + "\n");
  for (const auto& [name, body] : csv_bundle(r)) write_text(dir / name, body);
}

// Golden records pin the canonical hash of one run configuration together
// with its grid hash.  They are compared only against the same configuration.
struct GoldenRecord {
  std::string scenario, grid, margin, grid_hash, report_hash;
  std::uint64_t seed = 1;
  std::vector<std::string> stages;
};

inline std::filesystem::path golden_path(const std::filesystem::path& dir, const std::string& scenario) {
  return dir / (scenario + ".json");
}

inline std::optional<GoldenRecord> load_golden(const std::filesystem::path& dir, const std::string& scenario) {
  const auto p = golden_path(dir, scenario);
  if (!std::filesystem::exists(p)) return std::nullopt;
  std::ifstream in(p);
  try {
    nlohmann::json j;
    in >> j;
    GoldenRecord g;
    g.scenario = j.at("scenario").get<std::string>();
    g.grid = j.at("grid").get<std::string>();
    g.margin = j.at("margin").get<std::string>();
    g.seed = j.at("seed").get<std::uint64_t>();
    g.stages = j.at("stages").get<std::vector<std::string>>();
    g.grid_hash = j.at("grid_hash").get<std::string>();
    g.report_hash = j.at("report_hash").get<std::string>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, "golden '" + p.string() + "': " + e.what());
  }
}

inline bool same_configuration(const GoldenRecord& g, const RunReport& r) {
  return g.scenario == r.scenario && g.grid == r.grid && g.margin == r.margin && g.seed == r.seed &&
         g.stages == r.stages;
}

// Sets r.golden.  Writing needs update = true and a passing run.
inline void apply_golden(RunReport& r, const std::filesystem::path& dir, bool update) {
  if (update) {
    if (!r.pass()) throw Error(ErrorKind::ValidationError, "refusing to store a failing run as golden");
    nlohmann::ordered_json j{{"scenario", r.scenario}, {"grid", r.grid},           {"margin", r.margin},
                             {"seed", r.seed},         {"stages", r.stages},       {"grid_hash", r.grid_hash},
                             {"report_hash", r.hash}};
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    write_text(golden_path(dir, r.scenario), j.dump(2) + "\n");
    r.golden = "updated";
    return;
  }
  const auto g = load_golden(dir, r.scenario);
  if (!g || !same_configuration(*g, r)) {
    r.golden.clear();
    return;
  }
  r.golden = (g->grid_hash == r.grid_hash && g->report_hash == r.hash) ? "match" : "mismatch";
}

// Failing checks first, then the rest in run order.  One header line plus one
// line per check.
inline std::vector<std::string> render_summary(const RunReport& r) {
  std::vector<std::string> lines;
  int np = 0, nf = 0, ns = 0;
  for (const auto& c : r.checks) {
    if (c.status == CheckStatus::Pass) ++np;
    if (c.status == CheckStatus::Fail) ++nf;
    if (c.status == CheckStatus::Skipped) ++ns;
  }
  std::string head = r.scenario + ": " + (r.pass() ? "PASS" : "FAIL") + " (" + std::to_string(np) + " pass, " +
                     std::to_string(nf) + " fail, " + std::to_string(ns) + " skipped)";
  if (!r.golden.empty()) head += " golden " + r.golden;
  lines.push_back(head);
  auto line = [](const CheckResult& c) {
    std::string s = c.status == CheckStatus::Pass ? "PASS" : c.status == CheckStatus::Fail ? "FAIL" : "SKIP";
    s += " " + c.stage + "/" + c.name;
    for (const auto& [k, v] : c.metrics) s += " " + k + "=" + num(v);
    if (!c.message.empty()) s += "  [" + c.message + "]";
    return s;
  };
  for (const auto& c : r.checks)
    if (c.status == CheckStatus::Fail) lines.push_back(line(c));
  for (const auto& c : r.checks)
    if (c.status != CheckStatus::Fail) lines.push_back(line(c));
  return lines;
}

}  // namespace collar

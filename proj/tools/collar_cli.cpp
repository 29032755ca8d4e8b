// collar: scenario checks from the command line.
// Exit codes: 0 every selected check passed, 1 a check failed, 2 bad input or I/O.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "collar/runner.hpp"

#ifndef COLLAR_GOLDEN_DIR
#define COLLAR_GOLDEN_DIR "golden"
#endif

namespace {

using namespace collar;

struct Common {
  std::string scenario;
  std::string grid;
  std::string margin = "default";
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool with_out = true) {
  sub->add_option("--scenario", c.scenario, "catalog name or scenario JSON file")->required();
  sub->add_option("--grid", c.grid, "grid preset (default, quick)");
  sub->add_option("--margin", c.margin, "margin preset (default, strict, loose)");
  sub->add_option("--seed", c.seed, "sample jitter seed");
  if (with_out) sub->add_option("--out", c.out, "output directory");
}

int finish(RunReport& r, const std::string& out) {
  for (const auto& line : render_summary(r)) std::cout << line << "\n";
  if (!out.empty()) {
    write_report(r, out);
    std::cout << "wrote " << out << "\n";
  }
  return r.exit_code();
}

int run_stages(const Common& c, std::vector<std::string> stages, bool golden_update, const std::string& golden_dir) {
  const Scenario s = resolve_scenario(c.scenario);
  RunOptions opt;
  opt.stages = std::move(stages);
  opt.grid = c.grid;
  opt.margin = c.margin;
  opt.seed = c.seed;
  RunReport r = run_scenario(s, opt);
  apply_golden(r, golden_dir, golden_update);
  return finish(r, c.out);
}

// a:b:n
std::vector<double> parse_range(const std::string& spec) {
  double a = 0, b = 0;
  int n = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(spec);
  if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1)
    throw Error(ErrorKind::ValidationError, "range must look like a:b:n, got '" + spec + "'");
  return n == 1 ? std::vector<double>{a} : linspace(a, b, n);
}

int cmd_calibrate(const Common& c) {
  const Scenario s = resolve_scenario(c.scenario);
  UniformityOptions opt = grid_preset(c.grid.empty() ? s.grid : c.grid).uniformity;
  opt.margins = margin_preset(c.margin, s.margins);
  try {
    const Calibration cal = calibrate(build_phase(s), opt);
    std::cout << "k=" << num(cal.k) << " K=" << num(cal.K) << " trials=" << cal.trials.size()
              << " worst_ratio=" << num(cal.certificate.worst_ratio) << " (" << cal.certificate.worst_constant << ")\n";
    if (!c.out.empty()) {
      std::filesystem::create_directories(c.out);
      Table t{"trials", {"k", "K", "all_pass", "uniform", "worst_ratio"}, {}};
      for (const auto& tr : cal.trials)
        t.rows.push_back({num(tr.k), num(tr.K), tr.all_pass ? "1" : "0", tr.uniform ? "1" : "0", num(tr.worst_ratio)});
      write_text(std::filesystem::path(c.out) / "calibrate__trials.csv", csv(t));
    }
    return (cal.K <= 16.0 && cal.k >= s.collar / 32.0) ? 0 : 1;
  } catch (const Error& e) {
    if (e.infrastructure()) throw;
    std::cout << "FAIL " << e.what() << "\n";
    return 1;
  }
}

int cmd_apply(const Common& c, const std::string& function, const std::string& range, bool truncated) {
  const Scenario s = resolve_scenario(c.scenario);
  const NormalOperatorSpec sp = normal_spec(s);
  const SchwartzFn u = test_function(function);
  const auto xs = parse_range(range);
  ApplyResult r;
  try {
    r = truncated ? apply_truncated_op(sp, u, xs) : apply_normal_op(sp, u, xs);
  } catch (const Error& e) {
    if (e.infrastructure()) throw;
    std::cerr << "FAIL " << e.what() << "\n";
    return 1;
  }
  Table t{"apply", {"x_n", "re", "im", "err_est"}, {}};
  for (std::size_t i = 0; i < r.x.size(); ++i)
    t.rows.push_back({num(r.x[i]), num(r.value[i].real()), num(r.value[i].imag()), num(r.error[i])});
  if (c.out.empty()) {
    std::cout << csv(t);
  } else {
    std::filesystem::create_directories(c.out);
    write_text(std::filesystem::path(c.out) / ("apply_" + u.name() + ".csv"), csv(t));
  }
  std::cerr << "mode " << to_string(r.mode) << " max_err " << num(r.max_error()) << "\n";
  return r.max_error() <= sp.quad.budget ? 0 : 1;
}

int cmd_catalog(const std::string& action, const std::string& name, const std::string& out) {
  if (action == "list") {
    for (const auto& n : catalog_names()) std::cout << n << "\n";
    return 0;
  }
  if (action != "emit") throw Error(ErrorKind::ValidationError, "catalog action is list or emit");
  std::vector<std::string> names;
  if (name.empty() || name == "all") names = catalog_names();
  else names = {catalog_entry(name).name};
  for (const auto& n : names) {
    const std::string body = to_json(catalog_entry(n)).dump(2) + "\n";
    if (out.empty()) {
      std::cout << body;
    } else {
      std::filesystem::create_directories(out);
      write_text(std::filesystem::path(out) / (n + ".json"), body);
      std::cout << "wrote " << (std::filesystem::path(out) / (n + ".json")).string() << "\n";
    }
  }
  return 0;
}

int cmd_report(const std::string& path, const std::string& out) {
  RunReport r = load_report(path);
  return finish(r, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collar: checks for normal-direction operators near a boundary"};
  app.require_subcommand(1);
  std::string golden_dir = COLLAR_GOLDEN_DIR;
  app.add_option("--golden-dir", golden_dir, "where golden run hashes live");

  Common c;
  bool golden_update = false;
  std::vector<std::string> checks;

  auto* run = app.add_subcommand("run", "run the scenario's checks in dependency order");
  add_common(run, c);
  run->add_option("--checks", checks, "stages to run (default: the scenario's list)")->delimiter(',');
  run->add_flag("--golden-update", golden_update, "store this run's hash as the golden record");

  struct StageCmd {
    const char* name;
    const char* help;
    const char* stage;
  };
  const std::vector<StageCmd> stage_cmds{
      {"check-symplecto", "map checks", "symplecto"},
      {"check-phase", "generating phase checks", "genphase"},
      {"verify-sg", "calibration, P1-P3 and uniformity", "sgphase"},
      {"verify-opsymb", "symbol order of the conjugated family", "opsymb"},
  };
  std::vector<CLI::App*> stage_subs;
  for (const auto& sc : stage_cmds) {
    auto* sub = app.add_subcommand(sc.name, sc.help);
    add_common(sub, c);
    stage_subs.push_back(sub);
  }

  auto* cal = app.add_subcommand("calibrate", "search (k, K) for the regularized phase");
  add_common(cal, c);

  std::string function = "h0", range = "-3:3:61";
  bool truncated = false;
  auto* apply = app.add_subcommand("apply", "apply the normal-direction operator, CSV out");
  add_common(apply, c);
  apply->add_option("--function", function, "test function name or expression in t");
  apply->add_option("--x", range, "x_n grid a:b:n");
  apply->add_flag("--truncated", truncated, "truncated operator on the half line");

  std::string action, entry;
  auto* cat = app.add_subcommand("catalog", "list or emit built-in scenarios");
  cat->add_option("action", action, "list | emit")->required();
  cat->add_option("name", entry, "scenario to emit (all when omitted)");
  cat->add_option("--out", c.out, "directory for emitted files");

  std::string report_path;
  auto* rep = app.add_subcommand("report", "render a stored report");
  rep->add_option("report", report_path, "report.json")->required();
  rep->add_option("--out", c.out, "directory for the CSV bundle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return run_stages(c, checks, golden_update, golden_dir);
    for (std::size_t i = 0; i < stage_subs.size(); ++i)
      if (stage_subs[i]->parsed()) return run_stages(c, {stage_cmds[i].stage}, false, golden_dir);
    if (cal->parsed()) return cmd_calibrate(c);
    if (apply->parsed()) return cmd_apply(c, function, range, truncated);
    if (cat->parsed()) return cmd_catalog(action, entry, c.out);
    if (rep->parsed()) return cmd_report(report_path, c.out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.infrastructure() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

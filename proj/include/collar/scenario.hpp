#pragma once

// Scenario files: JSON description of a phase, an optional map, an amplitude
// and the checks to run.  Expression strings use the parser grammar.

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "collar/parse.hpp"
#include "json.hpp"

namespace collar {

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> s{"symplecto", "genphase", "sgphase", "oscint", "opsymb"};
  return s;
}

struct MapSpec {
  std::vector<std::string> x, xi;
};

struct AmplitudeSpec {
  std::string re = "1";
  std::string im = "0";
  double order = 0.0;
};

struct Margins {
  double c_min = 1e-2;        // P2 lower constants
  double eps_min = 1e-2;      // P3
  double C_max = 1e4;         // P1 and P2 upper constants
  double nondeg_delta = 1e-3;
  double uniformity = 3.0;
};

struct Scenario {
  std::string name;
  std::string description;
  int n = 2;
  double collar = 1.0;
  std::string phase;
  std::optional<MapSpec> map;
  std::optional<MapSpec> inverse;
  AmplitudeSpec amplitude;
  std::vector<std::string> checks = stage_names();
  std::string grid = "default";
  Margins margins;
  std::uint64_t seed = 1;
  std::vector<double> frozen_x;   // x' for the normal-direction operator
  std::vector<double> frozen_xi;  // xi'
  std::vector<std::string> test_functions{"h0", "h1", "h2", "h3", "h4"};
  std::string intended_failure;  // negative catalog entries only

  VarLayout layout() const { return VarLayout(n); }
};

namespace detail {

inline nlohmann::json map_json(const MapSpec& m) { return {{"x", m.x}, {"xi", m.xi}}; }

inline MapSpec map_from(const nlohmann::json& j) {
  MapSpec m;
  m.x = j.at("x").get<std::vector<std::string>>();
  m.xi = j.at("xi").get<std::vector<std::string>>();
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json out;
  out["name"] = s.name;
  if (!s.description.empty()) out["description"] = s.description;
  out["n"] = s.n;
  out["collar"] = s.collar;
  out["phase"] = s.phase;
  if (s.map) out["map"] = detail::map_json(*s.map);
  if (s.inverse) out["inverse"] = detail::map_json(*s.inverse);
  out["amplitude"] = {{"re", s.amplitude.re}, {"im", s.amplitude.im}, {"order", s.amplitude.order}};
  out["checks"] = s.checks;
  out["grid"] = s.grid;
  out["margins"] = {{"c_min", s.margins.c_min},
                    {"eps_min", s.margins.eps_min},
                    {"C_max", s.margins.C_max},
                    {"nondeg_delta", s.margins.nondeg_delta},
                    {"uniformity", s.margins.uniformity}};
  out["seed"] = s.seed;
  out["frozen"] = {{"x", s.frozen_x}, {"xi", s.frozen_xi}};
  out["test_functions"] = s.test_functions;
  if (!s.intended_failure.empty()) out["intended_failure"] = s.intended_failure;
  return out;
}

// Every expression must parse and every component count must match n.
inline void validate(const Scenario& s) {
  auto bad = [&](const std::string& m) { throw Error(ErrorKind::ValidationError, s.name + ": " + m); };
  if (s.name.empty()) bad("missing name");
  if (s.n < 2 || s.n > 8) bad("dimension must be between 2 and 8");
  if (!(s.collar > 0.0)) bad("collar half-width must be positive");
  const VarLayout lay = s.layout();
  parse(s.phase, lay);
  parse(s.amplitude.re, lay);
  parse(s.amplitude.im, lay);
  for (const auto* m : {&s.map, &s.inverse}) {
    if (!*m) continue;
    if (static_cast<int>((*m)->x.size()) != s.n || static_cast<int>((*m)->xi.size()) != s.n)
      bad("map components must number n each");
    for (const auto& e : (*m)->x) parse(e, lay);
    for (const auto& e : (*m)->xi) parse(e, lay);
  }
  for (const auto& c : s.checks)
    if (std::find(stage_names().begin(), stage_names().end(), c) == stage_names().end()) bad("unknown check '" + c + "'");
  if (!s.frozen_x.empty() && static_cast<int>(s.frozen_x.size()) != s.n - 1) bad("frozen.x must have n-1 entries");
  if (!s.frozen_xi.empty() && static_cast<int>(s.frozen_xi.size()) != s.n - 1) bad("frozen.xi must have n-1 entries");
  if (s.grid != "default" && s.grid != "quick") bad("grid preset must be 'default' or 'quick'");
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  try {
    s.name = j.at("name").get<std::string>();
    s.description = j.value("description", std::string{});
    s.n = j.value("n", 2);
    s.collar = j.value("collar", 1.0);
    s.phase = j.at("phase").get<std::string>();
    if (j.contains("map")) s.map = detail::map_from(j.at("map"));
    if (j.contains("inverse")) s.inverse = detail::map_from(j.at("inverse"));
    if (j.contains("amplitude")) {
      const auto& a = j.at("amplitude");
      s.amplitude.re = a.value("re", std::string("1"));
      s.amplitude.im = a.value("im", std::string("0"));
      s.amplitude.order = a.value("order", 0.0);
    }
    if (j.contains("checks")) s.checks = j.at("checks").get<std::vector<std::string>>();
    s.grid = j.value("grid", std::string("default"));
    if (j.contains("margins")) {
      const auto& m = j.at("margins");
      s.margins.c_min = m.value("c_min", s.margins.c_min);
      s.margins.eps_min = m.value("eps_min", s.margins.eps_min);
      s.margins.C_max = m.value("C_max", s.margins.C_max);
      s.margins.nondeg_delta = m.value("nondeg_delta", s.margins.nondeg_delta);
      s.margins.uniformity = m.value("uniformity", s.margins.uniformity);
    }
    s.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("frozen")) {
      s.frozen_x = j.at("frozen").value("x", std::vector<double>{});
      s.frozen_xi = j.at("frozen").value("xi", std::vector<double>{});
    }
    if (j.contains("test_functions")) s.test_functions = j.at("test_functions").get<std::vector<std::string>>();
    s.intended_failure = j.value("intended_failure", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ValidationError, std::string("scenario: ") + e.what());
  }
  validate(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace collar

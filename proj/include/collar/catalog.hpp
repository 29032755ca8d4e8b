#pragma once

// Built-in scenarios, all with n = 2 and g(x1) = sin(x1)/2.

#include <string>
#include <vector>

#include "collar/scenario.hpp"
#include "collar/genphase.hpp"
#include "collar/symplecto.hpp"

namespace collar {

namespace detail {

inline Scenario base(std::string name, std::string description, std::string phase) {
  Scenario s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.phase = std::move(phase);
  s.frozen_x = {0.3};
  s.frozen_xi = {2.0};
  return s;
}

// x_n of the quadratic-collar map, the root of y_n = x_n (1 + c x_n).
inline const std::string kQuadXn = "(2*yn/(1 + sqrt(1 + 0.8*cos(y1)*yn)))";
inline const std::string kShearB = "inv(lam + 0.3*tanh(lam), x1)";

inline std::vector<Scenario> build_catalog() {
  std::vector<Scenario> out;

  Scenario id = base("identity", "identity map, phase x.xi", "x1*k1 + xn*kn");
  id.map = MapSpec{{"y1", "yn"}, {"eta1", "etan"}};
  id.inverse = MapSpec{{"x1", "xn"}, {"k1", "kn"}};
  out.push_back(id);

  Scenario dil = base("dilation", "normal dilation by exp(-g), g = sin(x1)/2",
                      "x1*k1 + xn*kn*exp(sin(x1)/2)");
  dil.map = MapSpec{{"y1", "yn*exp(-sin(y1)/2)"}, {"eta1 + yn*etan*cos(y1)/2", "etan*exp(sin(y1)/2)"}};
  dil.inverse = MapSpec{{"x1", "xn*exp(sin(x1)/2)"}, {"k1 - xn*kn*cos(x1)/2", "kn*exp(-sin(x1)/2)"}};
  out.push_back(dil);

  Scenario quad = base("quadratic-collar", "phase x.xi + xn^2 kn c(x1), c = 0.2 cos(x1)",
                       "x1*k1 + xn*kn*(1 + xn*0.2*cos(x1))");
  quad.collar = 0.5;
  quad.map = MapSpec{{"y1", kQuadXn},
                     {"eta1 - 0.2*sin(y1)*etan*" + kQuadXn + "^2", "etan*(1 + 0.4*cos(y1)*" + kQuadXn + ")"}};
  quad.inverse = MapSpec{{"x1", "xn*(1 + 0.2*cos(x1)*xn)"},
                         {"k1 + 0.2*sin(x1)*xn^2*kn/(1 + 0.4*cos(x1)*xn)", "kn/(1 + 0.4*cos(x1)*xn)"}};
  out.push_back(quad);

  Scenario shear = base("boundary-shear", "cotangent lift of b(x1) = x1 + 0.3 tanh(x1)",
                        kShearB + "*k1 + xn*kn");
  shear.map = MapSpec{{"y1 + 0.3*tanh(y1)", "yn"}, {"eta1/(1 + 0.3*(1 - tanh(y1)^2))", "etan"}};
  shear.inverse = MapSpec{{kShearB, "xn"}, {"k1*(1 + 0.3*(1 - tanh(" + kShearB + ")^2))", "kn"}};
  out.push_back(shear);

  Scenario shift = base("bad-boundary-shift", "translated normal coordinate x_n = y_n + 0.1", "x1*k1 + xn*kn");
  shift.map = MapSpec{{"y1", "yn + 0.1"}, {"eta1", "etan"}};
  shift.intended_failure = "check_boundary_preserving";
  out.push_back(shift);

  Scenario tr = base("bad-transmission", "phase with a 0.1 xn |xi| term", "x1*k1 + xn*kn + 0.1*xn*norm(k1, kn)");
  tr.intended_failure = "check_admissibility";
  out.push_back(tr);

  Scenario sy = base("bad-symplectic", "dilation with fiber factor exp(2g)", dil.phase);
  sy.map = MapSpec{{"y1", "yn*exp(-sin(y1)/2)"}, {"eta1 + yn*etan*cos(y1)/2", "etan*exp(sin(y1))"}};
  sy.intended_failure = "check_symplectic";
  out.push_back(sy);

  for (const auto& s : out) validate(s);
  return out;
}

}  // namespace detail

inline const std::vector<Scenario>& catalog() {
  static const std::vector<Scenario> c = detail::build_catalog();
  return c;
}

inline std::vector<std::string> catalog_names() {
  std::vector<std::string> v;
  for (const auto& s : catalog()) v.push_back(s.name);
  return v;
}

inline const Scenario& catalog_entry(const std::string& name) {
  for (const auto& s : catalog())
    if (s.name == name) return s;
  throw Error(ErrorKind::UnknownScenario, "no catalog scenario named '" + name + "'");
}

inline bool is_positive(const Scenario& s) { return s.intended_failure.empty(); }

inline SymplectoMap build_map(const Scenario& s, const MapSpec& m) {
  const VarLayout lay = s.layout();
  std::vector<Expr> x, xi;
  for (const auto& e : m.x) x.push_back(parse(e, lay));
  for (const auto& e : m.xi) xi.push_back(parse(e, lay));
  return SymplectoMap(lay, x, xi, s.collar);
}

inline GeneratingPhase build_phase(const Scenario& s) {
  return GeneratingPhase::make(s.layout(), parse(s.phase, s.layout()), s.collar);
}

}  // namespace collar

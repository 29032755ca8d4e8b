#pragma once

// Regularized phase
//   *Phi(t, tau) = K t tau + w(t / (L k)) (phi(x', t/L, xi', tau L) - K t tau),  L = <xi'>,
// and grid certification of the SG phase conditions P1-P3.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "collar/cutoff.hpp"
#include "collar/genphase.hpp"
#include "collar/parallel.hpp"
#include "collar/scenario.hpp"

namespace collar {

// Geometric t/tau ladder {0, +-a r^j, j < per_side} with a r^(per_side-1) = top.
struct SgGrid {
  std::vector<double> t, tau;
};

inline std::vector<double> sg_ladder(double first = 0.25, double top = 50.0, int per_side = 20) {
  std::vector<double> pos;
  const double r = std::pow(top / first, 1.0 / (per_side - 1));
  for (int j = 0; j < per_side; ++j) pos.push_back(j == per_side - 1 ? top : first * std::pow(r, j));
  std::vector<double> v;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) v.push_back(-*it);
  v.push_back(0.0);
  v.insert(v.end(), pos.begin(), pos.end());
  return v;
}

inline SgGrid default_sg_grid() { return {sg_ladder(), sg_ladder()}; }

// Same range, twice the nodes per decade.
inline SgGrid refined_sg_grid() { return {sg_ladder(0.25, 50.0, 39), sg_ladder(0.25, 50.0, 39)}; }

// Pinned ladder plus `nodes` + 1 points per side across the cutoff transition
// layer |t| in [L k / 2, L k] of every rung L.  Layers past the ladder's top
// are kept: the P1-P3 suprema are over all t.
inline SgGrid with_transition_layers(const SgGrid& base, const std::vector<double>& rungs, double k,
                                     int nodes = 16) {
  SgGrid g = base;
  if (nodes <= 0) return g;
  for (double L : rungs) {
    const double l = L * k;
    for (int j = 0; j <= nodes; ++j) {
      const double t = l * (0.5 + 0.5 * j / nodes);
      g.t.push_back(t);
      g.t.push_back(-t);
    }
  }
  std::sort(g.t.begin(), g.t.end());
  g.t.erase(std::unique(g.t.begin(), g.t.end()), g.t.end());
  return g;
}

inline SgGrid with_transition_layer(const SgGrid& base, double L, double k, int nodes = 16) {
  return with_transition_layers(base, {L}, k, nodes);
}

// One compiled program for every frozen (x', xi', k, K).  Extra input slots
// after the layout hold L, 1/L, K and 1/k.
class StarPhiFamily {
 public:
  StarPhiFamily(const GeneratingPhase& g, int order = 3) : g_(g), order_(order) {
    const VarLayout& lay = g.lay;
    const int base = lay.size();
    sL_ = base;
    sInvL_ = base + 1;
    sK_ = base + 2;
    sInvk_ = base + 3;
    Expr t = var(lay.t()), tau = var(lay.tau());
    Expr s = t * var(sInvL_);
    Expr w = omega(s * var(sInvk_));
    Expr phi = substitute(g.phi, {{lay.xn(), s}, {lay.kn(), tau * var(sL_)}});
    Expr far = var(sK_) * t * tau;
    Expr star = far + w * (phi - far);
    std::vector<Expr> outs;
    std::vector<Expr> phis;
    for (int a = 0; a <= order; ++a)
      for (int al = 0; al <= order; ++al) {
        std::vector<int> seq(a, lay.t());
        seq.insert(seq.end(), al, lay.tau());
        outs.push_back(differentiate(star, seq));
      }
    tape_ = std::make_shared<Tape>(outs);
    star_ = star;
  }

  const GeneratingPhase& phase() const { return g_; }
  int order() const { return order_; }
  int width() const { return (order_ + 1) * (order_ + 1); }
  const Expr& expr() const { return star_; }
  int slots() const { return g_.lay.size() + 4; }
  int slot_L() const { return sL_; }
  int slot_inv_L() const { return sInvL_; }
  int slot_K() const { return sK_; }
  int slot_inv_k() const { return sInvk_; }
  const Tape& tape() const { return *tape_; }

 private:
  GeneratingPhase g_;
  int order_;
  int sL_, sInvL_, sK_, sInvk_;
  Expr star_;
  std::shared_ptr<Tape> tape_;
};

class RegularizedPhase {
 public:
  // `bracket`, when given, is <xi'> itself (ladder rungs are passed exactly).
  RegularizedPhase(std::shared_ptr<const StarPhiFamily> fam, std::vector<double> xp, std::vector<double> kp, double k,
                   double K, std::optional<double> bracket = {})
      : fam_(std::move(fam)), xp_(std::move(xp)), kp_(std::move(kp)), k_(k), K_(K) {
    const GeneratingPhase& g = fam_->phase();
    const VarLayout& lay = g.lay;
    if (static_cast<int>(xp_.size()) != lay.dim() - 1 || static_cast<int>(kp_.size()) != lay.dim() - 1)
      throw Error(ErrorKind::ValidationError, "frozen x' and xi' need n-1 entries");
    if (!(k > 0.0)) throw Error(ErrorKind::ValidationError, "k must be positive");
    if (k > g.collar / 2 * (1 + 1e-12))
      throw Error(ErrorKind::CollarExceeded, "k = " + std::to_string(k) + " exceeds half the collar half-width");
    double r2 = 1.0;
    for (double v : kp_) r2 += v * v;
    L_ = std::sqrt(r2);
    if (bracket) {
      if (std::fabs(*bracket - L_) > 1e-12 * L_)
        throw Error(ErrorKind::ValidationError, "bracket does not match xi'");
      L_ = *bracket;
    }
    p_.assign(fam_->slots(), 0.0);
    for (int i = 0; i < lay.dim() - 1; ++i) {
      p_[lay.x(i)] = xp_[i];
      p_[lay.k(i)] = kp_[i];
    }
    p_[fam_->slot_L()] = L_;
    p_[fam_->slot_inv_L()] = 1.0 / L_;
    p_[fam_->slot_K()] = K_;
    p_[fam_->slot_inv_k()] = 1.0 / k_;
  }

  double bracket() const { return L_; }
  double k() const { return k_; }
  double K() const { return K_; }
  int order() const { return fam_->order(); }
  const std::vector<double>& x_prime() const { return xp_; }
  const std::vector<double>& xi_prime() const { return kp_; }

  // All d^a_t d^alpha_tau *Phi, a, alpha <= order, row-major in a.  The phase
  // part is only evaluated on the support of the cutoff.
  void derivatives(double t, double tau, std::span<double> out, std::vector<double>& point,
                   std::vector<double>& ws) const {
    const int A = fam_->order();
    if (std::fabs(t) / (L_ * k_) >= 1.0) {
      std::fill(out.begin(), out.end(), 0.0);
      out[0] = K_ * t * tau;
      if (A >= 1) {
        out[A + 1] = K_ * tau;     // (1, 0)
        out[1] = K_ * t;           // (0, 1)
        out[A + 2] = K_;           // (1, 1)
      }
      return;
    }
    point = p_;
    const VarLayout& lay = fam_->phase().lay;
    point[lay.t()] = t;
    point[lay.tau()] = tau;
    fam_->tape().eval(point, out, ws);
  }

  double value(double t, double tau) const {
    std::vector<double> out(fam_->width()), pt, ws;
    derivatives(t, tau, out, pt, ws);
    return out[0];
  }

 private:
  std::shared_ptr<const StarPhiFamily> fam_;
  std::vector<double> xp_, kp_;
  double k_, K_, L_ = 1.0;
  std::vector<double> p_;
};

inline RegularizedPhase build_star_phi(const GeneratingPhase& g, const std::vector<double>& xp,
                                       const std::vector<double>& kp, double k, double K, int order = 3) {
  return RegularizedPhase(std::make_shared<StarPhiFamily>(g, order), xp, kp, k, K);
}

struct PhaseConstants {
  int order = 3;
  std::vector<double> C;  // C[a * (order+1) + alpha]
  std::vector<std::array<double, 2>> C_worst;
  double c_t = std::numeric_limits<double>::infinity(), C_t = 0.0;      // <d_t Phi> / <tau>
  double c_tau = std::numeric_limits<double>::infinity(), C_tau = 0.0;  // <d_tau Phi> / <t>
  double eps = std::numeric_limits<double>::infinity();                 // inf |d_t d_tau Phi|
  std::array<double, 2> eps_worst{0.0, 0.0};
  double mixed_min = std::numeric_limits<double>::infinity();
  double mixed_max = -std::numeric_limits<double>::infinity();
  bool sign_change = false;
  bool p1 = true, p2 = true, p3 = true;

  double c(int a, int alpha) const { return C[a * (order + 1) + alpha]; }
  bool pass() const { return p1 && p2 && p3; }
};

inline double japan(double v) { return std::sqrt(1.0 + v * v); }

inline PhaseConstants phase_constants(const RegularizedPhase& phi, const SgGrid& grid = default_sg_grid(),
                                      const Margins& margins = {}) {
  const int A = phi.order();
  const int W = (A + 1) * (A + 1);
  PhaseConstants pc;
  pc.order = A;
  pc.C.assign(W, 0.0);
  pc.C_worst.assign(W, {0.0, 0.0});
  std::vector<double> out(W), pt, ws;
  for (double t : grid.t)
    for (double tau : grid.tau) {
      phi.derivatives(t, tau, out, pt, ws);
      const double jt = japan(t), jtau = japan(tau);
      for (int a = 0; a <= A; ++a)
        for (int al = 0; al <= A; ++al) {
          const double v = std::fabs(out[a * (A + 1) + al]) * std::pow(jt, a - 1) * std::pow(jtau, al - 1);
          if (v > pc.C[a * (A + 1) + al]) {
            pc.C[a * (A + 1) + al] = v;
            pc.C_worst[a * (A + 1) + al] = {t, tau};
          }
        }
      if (A >= 1) {
        const double dt = out[A + 1], dtau = out[1], mixed = out[A + 2];
        const double rt = japan(dt) / jtau, rtau = japan(dtau) / jt;
        pc.c_t = std::min(pc.c_t, rt);
        pc.C_t = std::max(pc.C_t, rt);
        pc.c_tau = std::min(pc.c_tau, rtau);
        pc.C_tau = std::max(pc.C_tau, rtau);
        if (std::fabs(mixed) < pc.eps) {
          pc.eps = std::fabs(mixed);
          pc.eps_worst = {t, tau};
        }
        pc.mixed_min = std::min(pc.mixed_min, mixed);
        pc.mixed_max = std::max(pc.mixed_max, mixed);
      }
    }
  pc.sign_change = pc.mixed_min < 0.0 && pc.mixed_max > 0.0;
  for (double v : pc.C) pc.p1 = pc.p1 && std::isfinite(v) && v <= margins.C_max;
  pc.p2 = pc.c_t >= margins.c_min && pc.c_tau >= margins.c_min && pc.C_t <= margins.C_max &&
          pc.C_tau <= margins.C_max;
  pc.p3 = !pc.sign_change && pc.eps >= margins.eps_min;
  return pc;
}

inline PhaseConstants verify_P1(const RegularizedPhase& phi, const SgGrid& grid = default_sg_grid(),
                                const Margins& m = {}) {
  return phase_constants(phi, grid, m);
}

struct P2Result {
  double c_t, C_t, c_tau, C_tau;
  bool pass;
};

inline P2Result verify_P2(const RegularizedPhase& phi, const SgGrid& grid = default_sg_grid(), const Margins& m = {}) {
  auto pc = phase_constants(phi, grid, m);
  return {pc.c_t, pc.C_t, pc.c_tau, pc.C_tau, pc.p2};
}

struct P3Result {
  double eps;
  bool sign_change;
  bool pass;
};

inline P3Result verify_P3(const RegularizedPhase& phi, const SgGrid& grid = default_sg_grid(), const Margins& m = {},
                          bool throw_on_sign_change = false) {
  auto pc = phase_constants(phi, grid, m);
  if (pc.sign_change && throw_on_sign_change)
    throw Error(ErrorKind::SignChange, "d_t d_tau *Phi changes sign on the grid");
  return {pc.eps, pc.sign_change, pc.p3};
}

// Names of the constants compared across frozen samples, in a fixed order.
inline std::vector<std::string> constant_names(int order) {
  std::vector<std::string> v;
  for (int a = 0; a <= order; ++a)
    for (int al = 0; al <= order; ++al) v.push_back("C" + std::to_string(a) + std::to_string(al));
  for (const char* s : {"c_t", "C_t", "c_tau", "C_tau", "eps"}) v.push_back(s);
  return v;
}

inline std::vector<double> constant_values(const PhaseConstants& pc) {
  std::vector<double> v = pc.C;
  for (double s : {pc.c_t, pc.C_t, pc.c_tau, pc.C_tau, pc.eps}) v.push_back(s);
  return v;
}

struct UniformitySample {
  std::vector<double> x_prime;
  double bracket = 1.0;
  PhaseConstants constants;
};

struct UniformityReport {
  std::vector<std::string> names;
  std::vector<double> max, min, ratio;
  std::vector<UniformitySample> samples;
  std::vector<bool> structural;
  double worst_ratio = 1.0;  // over the structural constants only
  std::string worst_constant;
  double table_worst_ratio = 1.0;  // over every constant, informational
  std::string table_worst_constant;
  double limit = 3.0;
  bool all_pass = true;  // P1-P3 at every sample
  bool pass = true;
};

inline constexpr double kActiveFloor = 1e-12;

// Constants whose max/min ratio decides uniformity.  The higher C_{a alpha}
// with a >= 2 scale like (L k)^(1-a) at xi' = 0, so those are only held to the
// C_max bound.
inline bool is_structural_constant(const std::string& name) {
  static const std::vector<std::string> s{"C00", "C01", "C10", "C11", "c_t", "C_t", "c_tau", "C_tau", "eps"};
  return std::find(s.begin(), s.end(), name) != s.end();
}

struct UniformityOptions {
  std::vector<double> u = linspace(-1.0, 1.0, 9);  // x' samples per axis
  std::vector<double> rungs = dyadic_ladder(9);    // <xi'>
  SgGrid grid = default_sg_grid();
  int layer_nodes = 16;  // transition-layer nodes per rung, 0 for the bare ladder
  Margins margins;
};

inline UniformityReport check_uniformity(std::shared_ptr<const StarPhiFamily> fam, double k, double K,
                                         const UniformityOptions& opt = {}) {
  const VarLayout& lay = fam->phase().lay;
  const int m = lay.dim() - 1;
  auto xs = detail::tensor(opt.u, m);
  std::vector<UniformitySample> samples;
  for (const auto& x : xs)
    for (double L : opt.rungs) samples.push_back({x, L, {}});
  // one grid for every sample, so differences between samples come from the phase alone
  const SgGrid grid = with_transition_layers(opt.grid, opt.rungs, k, opt.layer_nodes);
  parallel_for(samples.size(), [&](std::size_t i) {
    std::vector<double> kp(m, 0.0);
    kp[0] = std::sqrt(std::max(0.0, samples[i].bracket * samples[i].bracket - 1.0));
    RegularizedPhase phi(fam, samples[i].x_prime, kp, k, K, samples[i].bracket);
    samples[i].constants =
        phase_constants(phi, grid, opt.margins);
  });
  UniformityReport r;
  r.limit = opt.margins.uniformity;
  r.names = constant_names(fam->order());
  const std::size_t C = r.names.size();
  r.max.assign(C, 0.0);
  r.min.assign(C, std::numeric_limits<double>::infinity());
  r.ratio.assign(C, 1.0);
  for (const auto& nm : r.names) r.structural.push_back(is_structural_constant(nm));
  for (const auto& s : samples) {
    r.all_pass = r.all_pass && s.constants.pass();
    auto v = constant_values(s.constants);
    for (std::size_t c = 0; c < C; ++c) {
      r.max[c] = std::max(r.max[c], v[c]);
      if (v[c] > kActiveFloor) r.min[c] = std::min(r.min[c], v[c]);
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (!(r.max[c] > kActiveFloor)) {
      r.min[c] = 0.0;
      continue;
    }
    r.ratio[c] = r.max[c] / r.min[c];
    if (r.ratio[c] > r.table_worst_ratio || r.table_worst_constant.empty()) {
      r.table_worst_ratio = std::max(r.table_worst_ratio, r.ratio[c]);
      r.table_worst_constant = r.names[c];
    }
    if (r.structural[c] && (r.ratio[c] > r.worst_ratio || r.worst_constant.empty())) {
      r.worst_ratio = std::max(r.worst_ratio, r.ratio[c]);
      r.worst_constant = r.names[c];
    }
  }
  r.samples = std::move(samples);
  r.pass = r.all_pass && r.worst_ratio <= r.limit;
  return r;
}

struct CalibrationTrial {
  double k, K;
  bool all_pass, uniform;
  double worst_ratio;
};

struct Calibration {
  double k = 0.0, K = 0.0;
  UniformityReport certificate;
  std::vector<CalibrationTrial> trials;
};

// K doubles from 1 (outer), k halves from collar/2 (inner), at most `steps` each.
inline Calibration calibrate(const GeneratingPhase& g, const UniformityOptions& opt = {}, int steps = 12) {
  auto fam = std::make_shared<const StarPhiFamily>(g, 3);
  Calibration cal;
  double K = 1.0;
  for (int i = 0; i < steps; ++i, K *= 2.0) {
    double k = g.collar / 2.0;
    for (int j = 0; j < steps; ++j, k /= 2.0) {
      auto rep = check_uniformity(fam, k, K, opt);
      cal.trials.push_back({k, K, rep.all_pass, rep.worst_ratio <= rep.limit, rep.worst_ratio});
      if (rep.pass) {
        cal.k = k;
        cal.K = K;
        cal.certificate = std::move(rep);
        return cal;
      }
    }
  }
  throw Error(ErrorKind::CalibrationExhausted,
              "no (k, K) pair passed after " + std::to_string(cal.trials.size()) + " trials");
}

// Localized phase bound: sup over the grid of
//   |d^alpha_tau [w_k(t/L) phi(x', t/L, xi', tau L)]| / (<t> <tau>^(1-alpha)),  alpha <= 3,
// per <xi'> rung.
inline std::vector<double> localized_phase_bound(const GeneratingPhase& g, const std::vector<double>& xp, double k,
                                                 const std::vector<double>& rungs = dyadic_ladder(9),
                                                 const SgGrid& grid = default_sg_grid()) {
  auto fam = std::make_shared<const StarPhiFamily>(g, 3);
  std::vector<double> out;
  const int A = 3;
  for (double L : rungs) {
    std::vector<double> kp(xp.size(), 0.0);
    kp[0] = std::sqrt(std::max(0.0, L * L - 1.0));
    // with K = 0 the regularized phase is exactly the localized phase
    RegularizedPhase phi(fam, xp, kp, k, 0.0, L);
    std::vector<double> d((A + 1) * (A + 1)), pt, ws;
    double best = 0.0;
    for (double t : grid.t)
      for (double tau : grid.tau) {
        phi.derivatives(t, tau, d, pt, ws);
        for (int al = 0; al <= A; ++al)
          best = std::max(best, std::fabs(d[al]) / (japan(t) * std::pow(japan(tau), 1 - al)));
      }
    out.push_back(best);
  }
  return out;
}

}  // namespace collar

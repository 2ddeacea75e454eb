#pragma once

// Built-in systems with their torus families, separatrices, closed-form
// splitting predictions and quantization settings.
//
//   free      p^2/2
//   H1..H4    {p^2/2, |p|} + {cos^2 x, |cos x|}, potential scaled by lambda
//   ex2.1     p^2/2 + max(cos x, 0)^k
//   ex2.2     |p| + max(cos x, 0)^k
//   ex3.1     (p^2 - 1)^2 + 1 - (x/pi)^2 on |x| <= pi
//   ex3.2     |p - pc| + cos^2 x
//   ex3.3     spin j: J1^2 - J2^2 + J3^2 [J3 >= 0]
//   lambda    p^2/2 + cos x + lambda |sin x|

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nonsmooth/classical.hpp"
#include "nonsmooth/error.hpp"
#include "nonsmooth/lattice_sum.hpp"
#include "nonsmooth/model.hpp"
#include "nonsmooth/potentials.hpp"
#include "nonsmooth/predictor.hpp"
#include "nonsmooth/quantize.hpp"

namespace nonsmooth::catalog {

struct Parameters {
  std::optional<double> hbar;
  int k = 1;
  double pc = 0.0;
  double lambda = 1.0;
  double j = 100.0;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double e) const { return e >= lo && e <= hi; }
};

struct Prediction {
  double amplitude = 0.0;  ///< |A|
  double eta = 0.0;
  std::optional<double> splitting;
  std::string source;
  std::optional<int> quantum_number;
  bool interference_zero = false;
  /// No transition path connects the tori: the splitting is beyond any
  /// power of hbar and the leading-order prediction is zero.
  bool below_power_law_floor = false;
};

/// Relative phases per path (find_transition_paths order) given the EBK
/// quantum number of the level.
using PhaseRule = std::function<std::vector<double>(const std::vector<TransitionPath>&, int n)>;

struct TorusFamily {
  std::string name;
  TorusClass plus;
  TorusClass minus;
  PhaseRule phases;  ///< empty: loop construction
};

using ClosedForm = std::function<Prediction(double energy, std::optional<int> n)>;

struct Entry {
  std::string id;
  std::string hamiltonian;
  std::vector<std::string> parameters;  ///< names of the parameters that apply
  Parameters params;
  double hbar = 0.05;
  CircleSystem system;  ///< classical system (and quantum, unless spin is set)
  std::optional<SpinSystem> spin;
  std::vector<TorusFamily> families;
  std::vector<double> separatrices;
  std::vector<Range> regimes;  ///< energies where the predictions apply
  std::function<bool(double energy, double p2)> keep;
  bool keep_needs_vectors = false;
  ClosedForm closed_form;
  bool closed_form_needs_parity = false;
  std::string closed_form_text;
  double basis_factor = 4.0;  ///< half-width N >= basis_factor / hbar
  double default_emax = 3.0;
  int basis_cap = kDefaultBasisCap;

  /// Width of the band around separatrices where leading order degrades.
  double separatrix_band(double factor = 5.0) const { return factor * std::pow(hbar, 2.0 / 3.0); }

  /// Regimes with the separatrix band removed.
  std::vector<Range> validity(double factor = 5.0) const {
    std::vector<Range> out;
    const double band = separatrix_band(factor);
    for (auto r : regimes) {
      for (double s : separatrices) {
        if (std::abs(r.lo - s) < band) r.lo = s + band;
        if (std::abs(r.hi - s) < band) r.hi = s - band;
      }
      if (r.hi > r.lo) out.push_back(r);
    }
    return out;
  }
};

inline const std::vector<std::string>& identifiers() {
  static const std::vector<std::string> ids = {"free",  "H1",    "H2",    "H3",    "H4",    "ex2.1",
                                               "ex2.2", "ex3.1", "ex3.2", "ex3.3", "lambda"};
  return ids;
}

/// Gamma((k+1)/2) / (2 Gamma(1/2) Gamma(k/2 + 1)), the mean of max(cos, 0)^k.
inline double alpha(int k) {
  return std::tgamma((k + 1) / 2.0) / (2.0 * std::tgamma(0.5) * std::tgamma(k / 2.0 + 1.0));
}

namespace detail {

inline constexpr double pi = std::numbers::pi;

inline double factorial(int k) { return std::tgamma(k + 1.0); }

inline TorusFamily rotational_family(double e_sep, double p_edge = 0.0) {
  TorusFamily f;
  f.name = "rotation";
  f.plus.name = "rotation p>0";
  f.plus.p_lo = p_edge;
  f.plus.energy_min = e_sep;
  f.minus.name = "rotation p<0";
  f.minus.p_hi = -p_edge;
  f.minus.energy_min = e_sep;
  return f;
}

inline TorusFamily well_family(double x_plus, double x_minus, double junction, double e_min,
                               double e_max, int maslov) {
  TorusFamily f;
  f.name = "wells";
  for (auto* c : {&f.plus, &f.minus}) {
    c->kind = TorusKind::Librational;
    c->p_junction = junction;
    c->energy_min = e_min;
    c->energy_max = e_max;
    c->maslov = maslov;
  }
  f.plus.name = "well at x=" + std::to_string(x_plus);
  f.plus.x_center = x_plus;
  f.minus.name = "well at x=" + std::to_string(x_minus);
  f.minus.x_center = x_minus;
  return f;
}

inline void check_hbar(double hbar, double hi = 0.5) {
  if (!(hbar >= 1e-3 && hbar <= hi)) {
    throw Error(ErrorCode::OutOfRange, "hbar = " + std::to_string(hbar) +
                                           " must lie in [0.001, " + std::to_string(hi) + "]");
  }
}

inline void check_k(int k) {
  if (k < 1 || k > 4) {
    throw Error(ErrorCode::OutOfRange, "k = " + std::to_string(k) + " must lie in [1, 4]");
  }
}

inline void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::OutOfRange, std::string(name) + " must be finite");
  }
}

/// Splitting from |A| using the period of the family's p > 0 torus.
inline std::optional<double> splitting_from_amplitude(const Entry& e, const TorusFamily& fam,
                                                      double energy, double amp) {
  const double T = Torus(e.system, fam.plus, energy).period();
  return 2.0 * e.hbar / T * amp;
}

inline Prediction from_amplitude(double amp, const char* source) {
  Prediction p;
  p.amplitude = amp;
  p.eta = amp / pi;
  p.source = source;
  return p;
}

// Potential with the lambda hook; lambda = 1 leaves it unchanged.
inline PiecewisePeriodicFunction with_lambda(const PiecewisePeriodicFunction& v, double lambda) {
  return lambda == 1.0 ? v : potentials::scaled(v, lambda);
}

inline void add_scaled_families(Entry& e, bool wells) {
  const double vmax = e.system.potential.max_value();
  const double vmin = std::min(0.0, vmax);
  e.families.push_back(rotational_family(vmax));
  e.separatrices.push_back(vmax);
  e.regimes.push_back({vmax, vmax + 3.0});
  if (wells && vmax > 0.0) {
    e.families.push_back(well_family(pi / 2, 3 * pi / 2, 0.0, vmin, vmax, 2));
    e.regimes.push_back({vmin, vmax});
    e.separatrices.push_back(vmin);
  }
}

inline Entry build_free(const Parameters& p) {
  Entry e;
  e.hamiltonian = "p^2/2";
  e.parameters = {"hbar"};
  e.hbar = p.hbar.value_or(1.0);
  check_hbar(e.hbar, 10.0);
  e.system.potential = PiecewisePeriodicFunction::constant(0.0);
  e.families.push_back(rotational_family(0.0));
  e.separatrices = {0.0};
  e.regimes = {{0.0, 5.0}};
  e.default_emax = 5.0;
  e.basis_factor = 1.0;
  e.closed_form = [](double, std::optional<int>) {
    Prediction pr = from_amplitude(0.0, "closed-form");
    pr.splitting = 0.0;
    pr.below_power_law_floor = true;
    return pr;
  };
  e.closed_form_text = "exact degeneracy: splitting 0";
  return e;
}

inline Entry build_h(int which, const Parameters& p) {
  Entry e;
  const bool abs_kinetic = which >= 3;
  const bool abs_potential = which % 2 == 0;
  e.hamiltonian = std::string(abs_kinetic ? "|p|" : "p^2/2") + " + lambda " +
                  (abs_potential ? "|cos x|" : "cos^2 x");
  e.parameters = {"hbar", "lambda"};
  e.hbar = p.hbar.value_or(0.05);
  check_hbar(e.hbar);
  check_finite(p.lambda, "lambda");
  if (abs_kinetic) e.system.kinetic = KineticForm::shifted_abs(0.0);
  e.system.potential = with_lambda(abs_potential ? potentials::abs_cos() : potentials::cos_squared(), p.lambda);
  add_scaled_families(e, abs_kinetic);
  e.basis_factor = abs_kinetic ? 6.0 : 3.5;
  return e;
}

inline Entry build_ex21(const Parameters& p) {
  Entry e;
  e.hamiltonian = "p^2/2 + lambda max(cos x, 0)^k";
  e.parameters = {"hbar", "k", "lambda"};
  e.hbar = p.hbar.value_or(0.05);
  check_hbar(e.hbar);
  check_k(p.k);
  check_finite(p.lambda, "lambda");
  e.system.potential = with_lambda(potentials::max_cos_power(p.k), p.lambda);
  add_scaled_families(e, false);
  e.basis_factor = 5.0;
  e.default_emax = 4.0;
  if (p.lambda == 1.0) {
    const int k = p.k;
    const double hbar = e.hbar;
    e.closed_form_text = "eta = k! hbar^k / (2^k pi (2e)^(k/2+1)) |sin(sqrt(2e) pi/hbar + k pi/2)|";
    e.closed_form = [k, hbar, fam = e.families.front(), sys = e.system](double en, std::optional<int>) {
      if (!(en > 1.0)) throw Error(ErrorCode::OutOfRange, "closed form needs energy > 1");
      const double eta = factorial(k) * std::pow(hbar, k) /
                         (std::pow(2.0, k) * pi * std::pow(2 * en, k / 2.0 + 1)) *
                         std::abs(std::sin(std::sqrt(2 * en) * pi / hbar + k * pi / 2));
      Prediction pr = from_amplitude(pi * eta, "closed-form");
      const double T = Torus(sys, fam.plus, en).period();
      pr.splitting = 2.0 * pi * hbar * eta / T;
      return pr;
    };
  }
  return e;
}

inline Entry build_ex22(const Parameters& p) {
  Entry e;
  e.hamiltonian = "|p| + lambda max(cos x, 0)^k";
  e.parameters = {"hbar", "k", "lambda"};
  e.hbar = p.hbar.value_or(0.04);
  check_hbar(e.hbar);
  check_k(p.k);
  check_finite(p.lambda, "lambda");
  e.system.kinetic = KineticForm::shifted_abs(0.0);
  e.system.potential = with_lambda(potentials::max_cos_power(p.k), p.lambda);
  add_scaled_families(e, false);
  e.basis_factor = 6.0;
  e.default_emax = 4.5;
  if (p.lambda == 1.0) {
    const int k = p.k;
    const double hbar = e.hbar;
    e.closed_form_text =
        "splitting = k! hbar^(k+1) / (2^k pi e^(k+1)) |sin(alpha_k pi/hbar + k pi/2)| at e = n hbar + alpha_k";
    e.closed_form = [k, hbar](double en, std::optional<int>) {
      if (!(en > 1.0)) throw Error(ErrorCode::OutOfRange, "closed form needs energy > 1");
      const double split = factorial(k) * std::pow(hbar, k + 1) / (std::pow(2.0, k) * pi * std::pow(en, k + 1)) *
                           std::abs(std::sin(alpha(k) * pi / hbar + k * pi / 2));
      // Period 2 pi: eta = splitting / hbar, |A| = pi splitting / hbar.
      Prediction pr = from_amplitude(pi * split / hbar, "closed-form");
      pr.splitting = split;
      return pr;
    };
  }
  return e;
}

inline Entry build_ex31(const Parameters& p) {
  Entry e;
  e.hamiltonian = "(p^2 - 1)^2 + 1 - (x/pi)^2";
  e.parameters = {"hbar"};
  e.hbar = p.hbar.value_or(0.02);
  check_hbar(e.hbar);
  e.system.kinetic = KineticForm::quartic_double_well();
  e.system.potential = potentials::inverted_parabola();
  auto wells = well_family(pi, pi, 0.0, 0.0, 1.0, 2);
  wells.name = "caustic tori";
  wells.plus.p_junction = 1.0;
  wells.plus.p_lo = 0.0;
  wells.minus.p_junction = -1.0;
  wells.minus.p_hi = 0.0;
  wells.plus.name = "torus around (pi, 1)";
  wells.minus.name = "torus around (pi, -1)";
  // Paths on one sheet (outer to outer, inner to inner) share a phase; the
  // two cross-sheet paths are offset by n pi.
  wells.phases = [](const std::vector<TransitionPath>& paths, int n) {
    auto cross = [](const TransitionPath& t) { return std::abs(std::abs(t.start.p) - std::abs(t.end.p)) > 1e-9; };
    std::vector<double> out;
    for (const auto& t : paths) out.push_back(cross(t) != cross(paths.front()) ? n * pi : 0.0);
    return out;
  };
  e.families.push_back(wells);
  e.families.push_back(rotational_family(1.0, 1.0));
  e.families.back().plus.name = "outer rotation p>1";
  e.families.back().minus.name = "outer rotation p<-1";
  e.separatrices = {0.0, 1.0};
  e.regimes = {{0.0, 1.0}, {1.0, 3.0}};
  e.keep = [](double en, double p2) { return !(en > 1.0 && en <= 2.0 && p2 < 1.0); };
  e.keep_needs_vectors = true;
  e.basis_factor = 2.2;
  e.default_emax = 3.0;
  e.closed_form_needs_parity = true;
  e.closed_form_text =
      "e<1: |A| = hbar/(4 pi sqrt e) |(1+sqrt e)^-3/2 + (1-sqrt e)^-3/2 + (-1)^n 4/((1+sqrt(1-e))(1-e)^1/4)|; "
      "e>1: |A| = hbar/(4 pi sqrt e (1+sqrt e)^3/2); eta = |A|/pi";
  const double hbar = e.hbar;
  e.closed_form = [hbar, ent = e](double en, std::optional<int> n) {
    if (!(en > 0.0) || en == 1.0) throw Error(ErrorCode::OutOfRange, "closed form needs e > 0, e != 1");
    const double se = std::sqrt(en);
    double amp;
    if (en < 1.0) {
      if (!n) throw Error(ErrorCode::ParityRequired, "closed form below the separatrix needs the level parity");
      const double parity = *n % 2 == 0 ? 1.0 : -1.0;
      amp = hbar / (4 * pi * se) *
            std::abs(std::pow(1 + se, -1.5) + std::pow(1 - se, -1.5) +
                     parity * 4.0 / ((1 + std::sqrt(1 - en)) * std::pow(1 - en, 0.25)));
    } else {
      amp = hbar / (4 * pi * se * std::pow(1 + se, 1.5));
    }
    Prediction pr = from_amplitude(amp, "closed-form");
    pr.quantum_number = n;
    pr.splitting = splitting_from_amplitude(ent, en < 1.0 ? ent.families[0] : ent.families[1], en, amp);
    return pr;
  };
  return e;
}

inline Entry build_ex32(const Parameters& p) {
  Entry e;
  e.hamiltonian = "|p - pc| + cos^2 x";
  e.parameters = {"hbar", "pc"};
  e.params = p;
  e.hbar = p.hbar.value_or(0.02);
  check_hbar(e.hbar);
  check_finite(p.pc, "pc");
  e.system.kinetic = KineticForm::shifted_abs(p.pc);
  e.system.potential = potentials::cos_squared();
  e.families.push_back(well_family(pi / 2, 3 * pi / 2, p.pc, 0.0, 1.0, 2));
  e.separatrices = {0.0, 1.0};
  e.regimes = {{0.0, 1.0}};
  e.basis_factor = 3.0;
  e.default_emax = 1.0;
  e.closed_form_needs_parity = true;
  e.closed_form_text =
      "|A| = hbar/(sqrt e sqrt(1-e)) |W2(2xc, pc/hbar) + W2(2pi-2xc, pc/hbar) + (-1)^n 2 W2(pi, pc/hbar)|, "
      "xc = arccos sqrt e; eta = |A|/pi";
  const double hbar = e.hbar;
  const double pc = p.pc;
  e.closed_form = [hbar, pc, ent = e](double en, std::optional<int> n) {
    if (!(en > 0.0 && en < 1.0)) throw Error(ErrorCode::OutOfRange, "closed form needs 0 < e < 1");
    if (!n) throw Error(ErrorCode::ParityRequired, "closed form needs the level parity");
    const double parity = *n % 2 == 0 ? 1.0 : -1.0;
    const double xc = std::acos(std::sqrt(en));
    const double y = pc / hbar;
    const complex terms[3] = {circle_lattice_sum(2 * xc, y, 2), circle_lattice_sum(2 * pi - 2 * xc, y, 2),
                              parity * 2.0 * circle_lattice_sum(pi, y, 2)};
    const complex sum = terms[0] + terms[1] + terms[2];
    const double biggest = std::max({std::abs(terms[0]), std::abs(terms[1]), std::abs(terms[2])});
    const double amp = hbar / (std::sqrt(en) * std::sqrt(1 - en)) * std::abs(sum);
    Prediction pr = from_amplitude(amp, "closed-form");
    pr.interference_zero = std::abs(sum) < kInterferenceZeroRatio * biggest;
    pr.quantum_number = n;
    pr.splitting = splitting_from_amplitude(ent, ent.families[0], en, amp);
    return pr;
  };
  return e;
}

inline Entry build_ex33(const Parameters& p) {
  Entry e;
  e.hamiltonian = "J1^2 - J2^2 + J3^2 [J3 >= 0]";
  e.parameters = {"j", "hbar"};
  const double j = p.j;
  if (!(j >= 0.5 && j <= 400.0) || std::abs(2 * j - std::round(2 * j)) > 1e-12) {
    throw Error(ErrorCode::OutOfRange,
                "j = " + std::to_string(j) + " must be a multiple of 1/2 in [0.5, 400]");
  }
  e.hbar = p.hbar.value_or(1.0 / (j + 0.5));
  check_hbar(e.hbar);
  SpinSystem spin;
  spin.j = j;
  spin.hbar = e.hbar;
  spin.blocks = {{SpinRegion::All, parse_spin_polynomial("J1^2 - J2^2")},
                 {SpinRegion::UpperJ3, parse_spin_polynomial("J3^2")}};
  e.spin = spin;
  e.system = spin_to_circle(spin);
  const double J = spin.radius();
  const double p0 = spin.p_offset();
  auto wells = well_family(pi / 2, 3 * pi / 2, p0, -J * J, 0.0, 2);
  for (auto* c : {&wells.plus, &wells.minus}) {
    c->p_lo = p0 - J;
    c->p_hi = p0 + J;
  }
  e.families.push_back(wells);
  e.separatrices = {-J * J, 0.0};
  e.regimes = {{-J * J, 0.0}};
  e.default_emax = 0.0;
  e.closed_form_text = spin.integer_spin()
                           ? "|A| = |cos phi| / (2 (j+1/2)^2 (1-xi)^2)"
                           : "|A| = |(3+xi)/(sqrt2 (1-xi)^3/2) sin phi + 1/2| / (4 (j+1/2)^2 sqrt(1-xi^2))";
  e.closed_form_text += ", xi = e/J^2, phi = pi (j+1/2) (1 - sqrt((1-xi)/2)); eta = |A|/pi";
  e.closed_form = [j, J, integer = spin.integer_spin(), ent = e](double en, std::optional<int>) {
    const double xi = en / (J * J);
    if (!(xi > -1.0 && xi < 0.0)) throw Error(ErrorCode::OutOfRange, "closed form needs -J^2 < e < 0");
    const double jh = j + 0.5;
    const double phi = pi * jh * (1 - std::sqrt((1 - xi) / 2));
    double amp;
    if (integer) {
      amp = std::abs(std::cos(phi)) / (2 * jh * jh * (1 - xi) * (1 - xi));
    } else {
      amp = std::abs((3 + xi) / (std::sqrt(2.0) * std::pow(1 - xi, 1.5)) * std::sin(phi) + 0.5) /
            (4 * jh * jh * std::sqrt(1 - xi * xi));
    }
    Prediction pr = from_amplitude(amp, "closed-form");
    pr.splitting = splitting_from_amplitude(ent, ent.families[0], en, amp);
    return pr;
  };
  return e;
}

inline Entry build_lambda(const Parameters& p) {
  Entry e;
  e.hamiltonian = "p^2/2 + cos x + lambda |sin x|";
  e.parameters = {"hbar", "lambda"};
  e.hbar = p.hbar.value_or(0.05);
  check_hbar(e.hbar);
  check_finite(p.lambda, "lambda");
  e.system.potential = potentials::cos_plus_abs_sin(p.lambda);
  const double vmax = e.system.potential.max_value();
  e.families.push_back(rotational_family(vmax));
  e.separatrices = {vmax};
  e.regimes = {{vmax, vmax + 3.0}};
  e.basis_factor = 3.5;
  e.default_emax = vmax + 2.0;
  return e;
}

}  // namespace detail

/// Builds a catalog entry; throws UnknownSystem or OutOfRange.
inline Entry build(const std::string& id, const Parameters& p = {}) {
  Entry e;
  if (id == "free") {
    e = detail::build_free(p);
  } else if (id == "H1" || id == "H2" || id == "H3" || id == "H4") {
    e = detail::build_h(id[1] - '0', p);
  } else if (id == "ex2.1") {
    e = detail::build_ex21(p);
  } else if (id == "ex2.2") {
    e = detail::build_ex22(p);
  } else if (id == "ex3.1") {
    e = detail::build_ex31(p);
  } else if (id == "ex3.2") {
    e = detail::build_ex32(p);
  } else if (id == "ex3.3") {
    e = detail::build_ex33(p);
  } else if (id == "lambda") {
    e = detail::build_lambda(p);
  } else {
    throw Error(ErrorCode::UnknownSystem, "unknown system '" + id + "'");
  }
  e.id = id;
  e.params = p;
  e.system.hbar = e.hbar;
  e.system.name = id;
  e.system.validate();
  return e;
}

/// The family whose tori exist at this energy.
inline const TorusFamily& family_at(const Entry& e, double energy) {
  for (const auto& f : e.families) {
    if (energy > f.plus.energy_min && energy < f.plus.energy_max) return f;
  }
  throw Error(ErrorCode::NoTorus, "no torus family of '" + e.id + "' at energy " + std::to_string(energy));
}

/// EBK quantum number of a level on the family's p > 0 torus.
inline int quantum_number(const Entry& e, double energy) {
  const auto& f = family_at(e, energy);
  return ebk_quantum_number(e.system, f.plus, energy);
}

/// Path-sum prediction at one energy.
inline Prediction engine_prediction(const Entry& e, double energy, std::optional<int> n = std::nullopt) {
  const auto& f = family_at(e, energy);
  const Torus plus(e.system, f.plus, energy);
  const Torus minus(e.system, f.minus, energy);
  PathOptions opt;
  Prediction pr;
  if (f.phases) {
    if (!n) n = ebk_quantum_number(e.system, f.plus, energy);
    opt.phase_offsets = f.phases(find_transition_paths(plus, minus), *n);
    pr.quantum_number = n;
  }
  const auto rep = predict(plus, minus, opt);
  pr.amplitude = std::abs(rep.amplitude);
  pr.eta = rep.eta;
  pr.splitting = rep.splitting;
  pr.source = "path-sum";
  pr.interference_zero = rep.interference_zero;
  pr.below_power_law_floor = rep.paths.empty();
  return pr;
}

/// Closed-form prediction; ParityRequired when the formula needs (-1)^n and
/// none is given.
inline Prediction closed_form_prediction(const Entry& e, double energy, std::optional<int> n = std::nullopt) {
  if (!e.closed_form) {
    throw Error(ErrorCode::Configuration, "system '" + e.id + "' has no closed-form prediction");
  }
  return e.closed_form(energy, n);
}

/// Closed form when available (EBK parity filled in), otherwise the engine.
inline Prediction prediction(const Entry& e, double energy) {
  if (!e.closed_form) return engine_prediction(e, energy);
  std::optional<int> n;
  if (e.closed_form_needs_parity) {
    const auto& f = family_at(e, energy);
    if (f.plus.kind == TorusKind::Librational) n = ebk_quantum_number(e.system, f.plus, energy);
  }
  return closed_form_prediction(e, energy, n);
}

// ---------------------------------------------------------------------------
// Quantum side

/// H = J1^2 - J2^2 + J3^2 [J3 >= 0] in the |j, m> basis, m = -j..j:
/// diagonal m^2 hbar^2 [m >= 0], <m+2|H|m> = (hbar^2/2) sqrt((j-m)(j+m+1)(j-m-1)(j+m+2)).
inline RealMatrix<double> spin_matrix(double j, double hbar) {
  const int dim = static_cast<int>(std::lround(2 * j)) + 1;
  RealMatrix<double> h = RealMatrix<double>::Zero(dim, dim);
  for (int a = 0; a < dim; ++a) {
    const double m = -j + a;
    if (m >= 0.0) h(a, a) = m * m * hbar * hbar;
    if (a + 2 < dim) {
      const double v = 0.5 * hbar * hbar * std::sqrt((j - m) * (j + m + 1) * (j - m - 1) * (j + m + 2));
      h(a + 2, a) = v;
      h(a, a + 2) = v;
    }
  }
  return h;
}

inline MomentumBasis basis_for(const Entry& e, double emax) {
  if (e.spin) return MomentumBasis::spin(e.spin->j, e.hbar);
  auto b = default_basis(e.system, emax, 2.0, e.basis_cap);
  const int n = static_cast<int>(std::ceil(e.basis_factor / e.hbar));
  if (n > b.half_width()) b = MomentumBasis::symmetric(n, e.hbar, e.system.p_offset);
  if (b.size() > e.basis_cap) {
    throw Error(ErrorCode::BasisCap, "basis of " + std::to_string(b.size()) + " states exceeds the cap");
  }
  return b;
}

template <class Real = double>
SpectrumResult<Real> spectrum(const Entry& e, double emax, bool with_vectors) {
  const auto basis = basis_for(e, emax);
  if (e.spin) {
    RealMatrix<Real> h = spin_matrix(e.spin->j, e.hbar).template cast<Real>();
    return diagonalize<Real>(h, basis, with_vectors);
  }
  SolveOptions opt;
  opt.with_vectors = with_vectors;
  return solve<Real>(e.system, basis, opt);
}

inline PairOptions pair_options(const Entry& e, double gap_ratio = 0.25) {
  PairOptions opt;
  opt.gap_ratio = gap_ratio;
  opt.keep = e.keep;
  opt.separatrix_energies = e.separatrices;
  opt.separatrix_band = e.separatrix_band();
  return opt;
}

/// Human-readable description for `catalog describe`.
inline std::string describe(const Entry& e) {
  std::ostringstream os;
  os << "id: " << e.id << "\n";
  os << "hamiltonian: " << e.hamiltonian << "\n";
  os << "parameters:";
  for (const auto& p : e.parameters) os << " " << p;
  os << "\n";
  os << "hbar: " << e.hbar << "\n";
  for (const auto& l : e.system.loci()) {
    os << "locus: " << (l.axis == Axis::X ? "x = " : "p = ") << l.location << ", order " << l.order << "\n";
  }
  for (const auto& f : e.families) {
    os << "torus family: " << f.name << " (" << f.plus.name << " / " << f.minus.name << "), maslov "
       << f.plus.maslov << ", energies (" << f.plus.energy_min << ", " << f.plus.energy_max << ")";
    if (f.phases) os << ", catalog phase offsets";
    os << "\n";
  }
  os << "separatrices:";
  for (double s : e.separatrices) os << " " << s;
  os << "\n";
  for (const auto& r : e.validity()) os << "validity: [" << r.lo << ", " << r.hi << "]\n";
  if (e.closed_form) os << "closed form: " << e.closed_form_text << "\n";
  return os.str();
}

}  // namespace nonsmooth::catalog

#pragma once

// Exact quantum engine: plane-wave basis on the circle, Hamiltonian matrix
// assembly, dense diagonalization and near-degenerate pair extraction.
//
// Everything is templated on the working precision so that exponentially
// small splittings can be resolved with long double when double runs out.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonsmooth/error.hpp"
#include "nonsmooth/model.hpp"
#include "nonsmooth/numeric.hpp"

namespace nonsmooth {

/// Plane waves |n>, n in [n_min, n_max], with momentum p_n = n hbar + p_offset.
struct MomentumBasis {
  int n_min = 0;
  int n_max = 0;
  double hbar = 1.0;
  double p_offset = 0.0;

  static MomentumBasis symmetric(int N, double hbar, double p_offset = 0.0) {
    return {-N, N, hbar, p_offset};
  }
  /// m = -j..j for a spin; half-integer m is carried by p_offset = hbar/2.
  static MomentumBasis spin(double j, double hbar) {
    const int dim = static_cast<int>(std::lround(2.0 * j)) + 1;
    const bool half = dim % 2 == 0;
    const int lo = half ? -dim / 2 : -(dim - 1) / 2;
    return {lo, lo + dim - 1, hbar, half ? 0.5 * hbar : 0.0};
  }

  int size() const { return n_max - n_min + 1; }
  int index_of(int n) const { return n - n_min; }
  int n_at(int index) const { return n_min + index; }
  double momentum_of(int n) const { return n * hbar + p_offset; }
  double momentum_at(int index) const { return momentum_of(n_at(index)); }
  int half_width() const { return std::max(std::abs(n_min), std::abs(n_max)); }
};

inline constexpr int kDefaultBasisCap = 1 << 14;

/// Smallest symmetric basis with E(+-N hbar + p0) + min V > e_max + margin,
/// where E includes the p-only mixed term T_0.
inline MomentumBasis default_basis(const CircleSystem& s, double e_max, double margin = 2.0,
                                   int cap = kDefaultBasisCap) {
  double v_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1024; ++i) v_min = std::min(v_min, s.potential(kTwoPi * i / 1024.0));
  auto p_energy = [&](double p) {
    double e = s.kinetic.value(p);
    for (const auto& t : s.mixed) {
      if (t.harmonic == 0) e += t.coefficient(p, 0, Side::Right).real();
    }
    return e + v_min;
  };
  const double target = e_max + margin;
  for (int N = 1; 2 * N + 1 <= cap; ++N) {
    if (p_energy(N * s.hbar + s.p_offset) > target && p_energy(-N * s.hbar + s.p_offset) > target) {
      return MomentumBasis::symmetric(N, s.hbar, s.p_offset);
    }
  }
  throw Error(ErrorCode::BasisCap, "no basis below the cap of " + std::to_string(cap) +
                                       " states reaches energy " + std::to_string(target));
}

// ---------------------------------------------------------------------------
// Fourier coefficients V_m = (1/2pi) int_0^{2pi} V e^{-imx} dx

/// Quadrature split at breakpoints and into panels of at most half an
/// oscillation, so every panel integrates a smooth, gently varying function.
inline complex fourier_by_quadrature(const PiecewisePeriodicFunction& f, int m,
                                     double abs_tol = 1e-13) {
  double re = 0.0;
  double im = 0.0;
  double err = 0.0;
  double mass = 0.0;
  QuadratureOptions opt;
  opt.abs_tol = 1e-16;
  opt.rel_tol = 1e-13;
  for (const auto& [a, b] : f.piece_intervals()) {
    // Evaluate strictly inside the piece: the endpoints use one-sided limits.
    auto value = [&f, a = a, b = b](double x) {
      if (x <= a) return f.one_sided(a, 0, Side::Right);
      if (x >= b) return f.one_sided(b, 0, Side::Left);
      return f(x);
    };
    const int panels = static_cast<int>(std::ceil(std::abs(m) * (b - a) / std::numbers::pi)) + 1;
    for (int i = 0; i < panels; ++i) {
      const double lo = a + (b - a) * i / panels;
      const double hi = a + (b - a) * (i + 1) / panels;
      auto rc = integrate([&](double x) { return value(x) * std::cos(m * x); }, lo, hi, opt);
      auto rs = integrate([&](double x) { return value(x) * std::sin(m * x); }, lo, hi, opt);
      re += rc.value;
      im -= rs.value;
      err += rc.error + rs.error;
      mass += std::abs(rc.value) + std::abs(rs.value);
    }
  }
  if (err > abs_tol + 1e-14 * mass) {
    throw Error(ErrorCode::ToleranceFailure,
                "Fourier coefficient m=" + std::to_string(m) +
                    " did not converge; error estimate " + std::to_string(err));
  }
  return complex(re, im) / kTwoPi;
}

/// Closed form when the function carries one, quadrature otherwise.
inline complex potential_fourier(const PiecewisePeriodicFunction& f, int m) {
  if (f.fourier()) return f.fourier()(m);
  return fourier_by_quadrature(f, m);
}

/// V_m for m = 0..m_max (real V gives V_{-m} = conj V_m).
inline std::vector<complex> fourier_table(const PiecewisePeriodicFunction& f, int m_max) {
  std::vector<complex> out(static_cast<std::size_t>(m_max) + 1);
  for (int m = 0; m <= m_max; ++m) out[m] = potential_fourier(f, m);
  return out;
}

// ---------------------------------------------------------------------------
// Matrix assembly

template <class Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

inline complex coefficient_at(const std::vector<complex>& table, int m) {
  const auto idx = static_cast<std::size_t>(std::abs(m));
  if (idx >= table.size()) return 0.0;
  return m >= 0 ? table[idx] : std::conj(table[idx]);
}

inline double t0_at(const CircleSystem& s, double p) {
  double e = 0.0;
  for (const auto& t : s.mixed) {
    if (t.harmonic == 0) e += t.coefficient(p, 0, Side::Right).real();
  }
  return e;
}

}  // namespace detail

/// Hamiltonian in the plane-wave basis restricted to the listed indices n.
/// Entry (r, r) = E_k(p_r) + V_0 + T_0(p_r); entry (r + m, r) = V_m + T_m at
/// the midpoint momentum (r + m/2) hbar + p0. Only the lower triangle is
/// computed; the upper one is its conjugate, so the result is Hermitian by
/// construction.
template <class Real = double>
ComplexMatrix<Real> build_matrix(const CircleSystem& s, const MomentumBasis& basis,
                                 const std::vector<complex>& v_table, const std::vector<int>& ns) {
  const auto dim = static_cast<Eigen::Index>(ns.size());
  ComplexMatrix<Real> h(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const int r = ns[c];
    const double p = basis.momentum_of(r);
    h(c, c) = std::complex<Real>(static_cast<Real>(s.kinetic.value(p)) +
                                     static_cast<Real>(v_table.at(0).real()) +
                                     static_cast<Real>(detail::t0_at(s, p)),
                                 0);
    for (Eigen::Index row = c + 1; row < dim; ++row) {
      const int m = ns[row] - r;
      complex value = detail::coefficient_at(v_table, m);
      if (!s.mixed.empty()) {
        const double mid = (r + 0.5 * m) * basis.hbar + basis.p_offset;
        for (const auto& t : s.mixed) {
          if (t.harmonic == m) value += t.coefficient(mid, 0, Side::Right);
        }
      }
      h(row, c) = std::complex<Real>(static_cast<Real>(value.real()), static_cast<Real>(value.imag()));
      h(c, row) = std::conj(h(row, c));
    }
  }
  return h;
}

/// Full-basis matrix; computes the Fourier table itself.
template <class Real = double>
ComplexMatrix<Real> build_matrix(const CircleSystem& s, const MomentumBasis& basis) {
  s.validate();
  std::vector<int> ns;
  for (int n = basis.n_min; n <= basis.n_max; ++n) ns.push_back(n);
  const auto table = fourier_table(s.potential, basis.size());
  return build_matrix<Real>(s, basis, table, ns);
}

// ---------------------------------------------------------------------------
// Spectra

template <class Real = double>
struct SpectrumResult {
  std::vector<Real> energies;
  /// Column i holds the momentum-space coefficients of state i over the
  /// basis; empty when vectors were not requested.
  ComplexMatrix<Real> vectors;
  std::vector<double> p2;
  std::vector<std::string> sector;
  std::vector<int> dominant_n;
  MomentumBasis basis;

  std::size_t size() const { return energies.size(); }
  bool has_vectors() const { return vectors.size() > 0; }
};

/// Sum_r |c_r|^2 (r hbar + p0)^2.
template <class Vector>
double p2_expectation(const Vector& c, const MomentumBasis& basis) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double p = basis.momentum_at(static_cast<int>(i));
    sum += static_cast<double>(std::norm(c(i))) * p * p;
  }
  return sum;
}

namespace detail {

template <class Real>
struct Block {
  std::vector<Real> values;
  ComplexMatrix<Real> vectors;  // full-basis coefficients (may be empty)
  std::string label;
};

template <class Matrix>
auto eigen_solve(const Matrix& h, bool with_vectors) {
  using Solver = Eigen::SelfAdjointEigenSolver<Matrix>;
  Solver solver(h, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::EigenFailure,
                "eigensolver did not converge for a " + std::to_string(h.rows()) + "x" +
                    std::to_string(h.cols()) + " matrix (Eigen info " +
                    std::to_string(static_cast<int>(solver.info())) + ")");
  }
  return solver;
}

template <class Real>
SpectrumResult<Real> merge_blocks(std::vector<Block<Real>> blocks, const MomentumBasis& basis,
                                  bool with_vectors) {
  struct Entry {
    Real e;
    int dominant;
    std::size_t block, column;
  };
  std::vector<Entry> all;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t c = 0; c < blocks[b].values.size(); ++c) {
      int dominant = 0;
      if (with_vectors) {
        Eigen::Index best = 0;
        blocks[b].vectors.col(static_cast<Eigen::Index>(c)).cwiseAbs2().maxCoeff(&best);
        dominant = basis.n_at(static_cast<int>(best));
      }
      all.push_back({blocks[b].values[c], dominant, b, c});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.e != b.e) return a.e < b.e;
    return a.dominant < b.dominant;
  });
  SpectrumResult<Real> out;
  out.basis = basis;
  if (with_vectors) out.vectors.resize(basis.size(), static_cast<Eigen::Index>(all.size()));
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& en = all[i];
    out.energies.push_back(en.e);
    out.sector.push_back(blocks[en.block].label);
    out.dominant_n.push_back(en.dominant);
    if (with_vectors) {
      out.vectors.col(static_cast<Eigen::Index>(i)) =
          blocks[en.block].vectors.col(static_cast<Eigen::Index>(en.column));
      out.p2.push_back(p2_expectation(out.vectors.col(static_cast<Eigen::Index>(i)), basis));
    } else {
      out.p2.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

}  // namespace detail

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
template <class Real = double>
SpectrumResult<Real> diagonalize(const ComplexMatrix<Real>& h, const MomentumBasis& basis,
                                 bool with_vectors = true) {
  const auto solver = detail::eigen_solve(h, with_vectors);
  detail::Block<Real> block;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    block.values.push_back(solver.eigenvalues()(i));
  }
  if (with_vectors) block.vectors = solver.eigenvectors();
  block.label = "all";
  return detail::merge_blocks<Real>({std::move(block)}, basis, with_vectors);
}

template <class Real = double>
SpectrumResult<Real> diagonalize(const RealMatrix<Real>& h, const MomentumBasis& basis,
                                 bool with_vectors = true) {
  const auto solver = detail::eigen_solve(h, with_vectors);
  detail::Block<Real> block;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    block.values.push_back(solver.eigenvalues()(i));
  }
  if (with_vectors) block.vectors = solver.eigenvectors().template cast<std::complex<Real>>();
  block.label = "all";
  return detail::merge_blocks<Real>({std::move(block)}, basis, with_vectors);
}

struct SolveOptions {
  bool with_vectors = true;
  /// Block-diagonalize over even/odd n when only even harmonics couple.
  bool use_translation = true;
  /// Split into cos/sin sectors for even real potentials with a p -> -p
  /// symmetric kinetic energy on an unshifted grid.
  bool use_reflection = true;
};

/// True when V and all mixed terms contain only even harmonics, so the
/// system is invariant under x -> x + pi.
inline bool pi_translation_invariant(const CircleSystem& s, const std::vector<complex>& table) {
  for (std::size_t m = 1; m < table.size(); m += 2) {
    if (std::abs(table[m]) > 1e-14) return false;
  }
  return std::all_of(s.mixed.begin(), s.mixed.end(),
                     [](const MixedTerm& t) { return t.harmonic % 2 == 0; });
}

inline bool reflection_invariant(const CircleSystem& s, const std::vector<complex>& table) {
  if (!s.mixed.empty() || s.p_offset != 0.0) return false;
  if (!s.kinetic.time_reversal_symmetric() || s.kinetic.center() != 0.0) return false;
  for (const auto& v : table) {
    if (std::abs(v.imag()) > 1e-14) return false;
  }
  return true;
}

/// Builds and diagonalizes the circle Hamiltonian, using symmetry sectors
/// where the system allows them. Sector eigenvalues are interleaved back
/// into one ascending list; eigenvectors are expanded into the full basis.
template <class Real = double>
SpectrumResult<Real> solve(const CircleSystem& s, const MomentumBasis& basis, const SolveOptions& opt = {}) {
  s.validate();
  const auto table = fourier_table(s.potential, basis.size());
  const bool translation = opt.use_translation && pi_translation_invariant(s, table);
  const bool reflection = opt.use_reflection && reflection_invariant(s, table) &&
                          basis.n_min == -basis.n_max;

  std::vector<detail::Block<Real>> blocks;
  const std::vector<int> parities = translation ? std::vector<int>{0, 1} : std::vector<int>{-1};
  for (int parity : parities) {
    const std::string parity_label = parity < 0 ? "" : (parity == 0 ? "even" : "odd");
    if (!reflection) {
      std::vector<int> ns;
      for (int n = basis.n_min; n <= basis.n_max; ++n) {
        if (parity < 0 || ((n % 2) + 2) % 2 == parity) ns.push_back(n);
      }
      const auto h = build_matrix<Real>(s, basis, table, ns);
      const auto solver = detail::eigen_solve(h, opt.with_vectors);
      detail::Block<Real> block;
      block.label = parity_label.empty() ? "all" : parity_label;
      for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        block.values.push_back(solver.eigenvalues()(i));
      }
      if (opt.with_vectors) {
        block.vectors = ComplexMatrix<Real>::Zero(basis.size(), h.cols());
        for (std::size_t r = 0; r < ns.size(); ++r) {
          block.vectors.row(basis.index_of(ns[r])) = solver.eigenvectors().row(static_cast<Eigen::Index>(r));
        }
      }
      blocks.push_back(std::move(block));
      continue;
    }
    // cos sector on a >= 0, sin sector on a >= 1.
    for (int sign : {+1, -1}) {
      std::vector<int> as;
      for (int a = sign > 0 ? 0 : 1; a <= basis.n_max; ++a) {
        if (parity < 0 || a % 2 == parity) as.push_back(a);
      }
      if (as.empty()) continue;
      const auto dim = static_cast<Eigen::Index>(as.size());
      RealMatrix<Real> h(dim, dim);
      const Real root2 = std::sqrt(static_cast<Real>(2));
      for (Eigen::Index c = 0; c < dim; ++c) {
        for (Eigen::Index r = c; r < dim; ++r) {
          const int a = as[r];
          const int b = as[c];
          Real v = static_cast<Real>(detail::coefficient_at(table, a - b).real()) +
                   sign * static_cast<Real>(detail::coefficient_at(table, a + b).real());
          if (a == 0 && b == 0) {
            v = static_cast<Real>(table[0].real());
          } else if (a == 0 || b == 0) {
            v = root2 * static_cast<Real>(detail::coefficient_at(table, a + b).real());
          }
          if (r == c) v += static_cast<Real>(s.kinetic.value(basis.momentum_of(a)));
          h(r, c) = v;
          h(c, r) = v;
        }
      }
      const auto solver = detail::eigen_solve(h, opt.with_vectors);
      detail::Block<Real> block;
      block.label = (parity_label.empty() ? "" : parity_label + "-") + (sign > 0 ? "cos" : "sin");
      for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        block.values.push_back(solver.eigenvalues()(i));
      }
      if (opt.with_vectors) {
        block.vectors = ComplexMatrix<Real>::Zero(basis.size(), dim);
        const Real inv = 1 / root2;
        for (Eigen::Index r = 0; r < dim; ++r) {
          const int a = as[r];
          for (Eigen::Index col = 0; col < dim; ++col) {
            const Real c = solver.eigenvectors()(r, col);
            if (a == 0) {
              block.vectors(basis.index_of(0), col) = c;
            } else {
              block.vectors(basis.index_of(a), col) = c * inv;
              block.vectors(basis.index_of(-a), col) = sign * c * inv;
            }
          }
        }
      }
      blocks.push_back(std::move(block));
    }
  }
  return detail::merge_blocks<Real>(std::move(blocks), basis, opt.with_vectors);
}

/// Doubles N from the default basis until every eigenvalue below e_max moves
/// by less than tol; returns the smaller of the two agreeing sizes.
inline int convergence_check(const CircleSystem& s, double e_max, double tol,
                             int cap = kDefaultBasisCap, double margin = 2.0) {
  if (!(tol > 0.0)) throw Error(ErrorCode::OutOfRange, "tolerance must be positive");
  auto basis = default_basis(s, e_max, margin, cap);
  SolveOptions opt;
  opt.with_vectors = false;
  auto below = [&](const MomentumBasis& b) {
    auto spec = solve<double>(s, b, opt);
    std::vector<double> out;
    for (double e : spec.energies) {
      if (e < e_max) out.push_back(e);
    }
    return out;
  };
  auto current = below(basis);
  while (true) {
    const int N = basis.half_width();
    if (2 * (2 * N) + 1 > cap) {
      throw Error(ErrorCode::BasisCap, "basis doubling exceeded the cap of " + std::to_string(cap) +
                                           " states at N = " + std::to_string(N));
    }
    auto bigger = MomentumBasis::symmetric(2 * N, s.hbar, s.p_offset);
    auto next = below(bigger);
    double shift = 0.0;
    const std::size_t count = std::min(current.size(), next.size());
    for (std::size_t i = 0; i < count; ++i) shift = std::max(shift, std::abs(current[i] - next[i]));
    if (current.size() == next.size() && shift < tol) return N;
    basis = bigger;
    current = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// Near-degenerate pairs

struct NDPair {
  int index = 0;  ///< ordinal among all pairs of the spectrum, from 0
  int lower_state = 0;
  int upper_state = 0;
  double lower = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  double splitting = 0.0;
  std::optional<double> eta;
  double p2 = std::numeric_limits<double>::quiet_NaN();
  bool near_separatrix = false;
};

struct PairOptions {
  double gap_ratio = 0.25;
  double window_lo = -std::numeric_limits<double>::infinity();
  double window_hi = std::numeric_limits<double>::infinity();
  /// Per-state predicate (energy, <p^2>) applied before pairing.
  std::function<bool(double energy, double p2)> keep;
  std::vector<double> separatrix_energies;
  double separatrix_band = 0.05;
};

/// Consecutive kept levels (a, b) pair up when b - a < gap_ratio times the
/// smaller neighbouring gap. Pairs are disjoint and found greedily from the
/// bottom. eta = 2 d / (mean_{n+1} - mean_{n-1}) uses the adjacent pairs and
/// is left empty at the ends of the pair list.
template <class Real>
std::vector<NDPair> find_nd_pairs(const SpectrumResult<Real>& spec, const PairOptions& opt = {}) {
  if (!(opt.gap_ratio > 0.0 && opt.gap_ratio < 1.0)) {
    throw Error(ErrorCode::OutOfRange, "gap_ratio must lie in (0, 1)");
  }
  std::vector<int> kept;
  for (std::size_t i = 0; i < spec.energies.size(); ++i) {
    if (i > 0 && spec.energies[i] < spec.energies[i - 1]) {
      throw Error(ErrorCode::Configuration, "spectrum is not sorted");
    }
    const double p2 = i < spec.p2.size() ? spec.p2[i] : std::numeric_limits<double>::quiet_NaN();
    if (!opt.keep || opt.keep(static_cast<double>(spec.energies[i]), p2)) kept.push_back(static_cast<int>(i));
  }
  const Real inf = std::numeric_limits<Real>::infinity();
  auto e = [&](std::size_t k) { return spec.energies[static_cast<std::size_t>(kept[k])]; };
  std::vector<NDPair> all;
  std::vector<Real> means;
  for (std::size_t k = 0; k + 1 < kept.size();) {
    const Real d = e(k + 1) - e(k);
    const Real before = k > 0 ? e(k) - e(k - 1) : inf;
    const Real after = k + 2 < kept.size() ? e(k + 2) - e(k + 1) : inf;
    const Real neighbour = std::min(before, after);
    if (neighbour == inf || !(d < static_cast<Real>(opt.gap_ratio) * neighbour)) {
      ++k;
      continue;
    }
    NDPair pair;
    pair.index = static_cast<int>(all.size());
    pair.lower_state = kept[k];
    pair.upper_state = kept[k + 1];
    pair.lower = static_cast<double>(e(k));
    pair.upper = static_cast<double>(e(k + 1));
    const Real mean = (e(k) + e(k + 1)) / 2;
    pair.mean = static_cast<double>(mean);
    pair.splitting = static_cast<double>(d);
    if (!spec.p2.empty()) {
      pair.p2 = 0.5 * (spec.p2[static_cast<std::size_t>(kept[k])] + spec.p2[static_cast<std::size_t>(kept[k + 1])]);
    }
    for (double sep : opt.separatrix_energies) {
      if (std::abs(pair.mean - sep) < opt.separatrix_band) pair.near_separatrix = true;
    }
    all.push_back(pair);
    means.push_back(mean);
    k += 2;
  }
  for (std::size_t i = 1; i + 1 < all.size(); ++i) {
    const Real spread = means[i + 1] - means[i - 1];
    if (spread > 0) all[i].eta = static_cast<double>(2 * static_cast<Real>(all[i].splitting) / spread);
  }
  std::vector<NDPair> out;
  for (const auto& p : all) {
    if (p.mean >= opt.window_lo && p.mean <= opt.window_hi) out.push_back(p);
  }
  return out;
}

/// Throws InsufficientData when fewer than three pairs are available, since
/// eta then has no neighbours to normalize against.
inline void require_eta(const std::vector<NDPair>& pairs) {
  if (pairs.size() < 3) {
    throw Error(ErrorCode::InsufficientData,
                "window holds " + std::to_string(pairs.size()) + " pairs; eta needs at least 3");
  }
}

}  // namespace nonsmooth

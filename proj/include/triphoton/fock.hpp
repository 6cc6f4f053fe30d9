#ifndef TRIPHOTON_FOCK_HPP
#define TRIPHOTON_FOCK_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "triphoton/common.hpp"
#include "triphoton/hamiltonian.hpp"

namespace triphoton::fock {

using SpMat = Eigen::SparseMatrix<cplx>;
using Vec = Eigen::VectorXcd;

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CutoffTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Truncated multimode number basis. Mode 0 is the slowest-varying index:
// index = ((n_0 * (c_1+1) + n_1) * (c_2+1) + n_2) for three modes.
struct FockSpace {
  std::vector<int> cutoffs;  // max photon number per mode

  FockSpace() = default;
  explicit FockSpace(std::vector<int> cut) : cutoffs(std::move(cut)) {
    if (cutoffs.empty() || cutoffs.size() > 3)
      throw std::invalid_argument("FockSpace: 1-3 modes supported");
    for (int c : cutoffs)
      if (c < 1) throw std::invalid_argument("FockSpace: cutoffs must be >= 1");
  }

  int n_modes() const { return static_cast<int>(cutoffs.size()); }

  long dim() const {
    long d = 1;
    for (int c : cutoffs) d *= c + 1;
    return d;
  }

  long stride(int mode) const {
    long s = 1;
    for (int m = mode + 1; m < n_modes(); ++m) s *= cutoffs[static_cast<std::size_t>(m)] + 1;
    return s;
  }

  int occupation(long index, int mode) const {
    return static_cast<int>((index / stride(mode)) % (cutoffs[static_cast<std::size_t>(mode)] + 1));
  }

  long index_of(std::span<const int> ns) const {
    long idx = 0;
    for (int m = 0; m < n_modes(); ++m) idx += ns[static_cast<std::size_t>(m)] * stride(m);
    return idx;
  }

  bool operator==(const FockSpace& o) const { return cutoffs == o.cutoffs; }
  bool operator!=(const FockSpace& o) const { return !(*this == o); }
};

// Pure state as a complex amplitude vector over the product number basis.
struct FockState {
  FockSpace space;
  Vec amp;

  static FockState vacuum(const FockSpace& s) {
    FockState st;
    st.space = s;
    st.amp = Vec::Zero(s.dim());
    st.amp[0] = 1.0;
    return st;
  }

  double norm() const { return amp.norm(); }
  void renormalize() {
    const double n = norm();
    if (n > 0.0) amp /= n;
  }
};

// Population in basis states where any mode sits at its cutoff; the usual
// truncation-leak indicator.
inline double top_level_population(const FockState& st) {
  double pop = 0.0;
  const int m = st.space.n_modes();
  for (long i = 0; i < st.amp.size(); ++i) {
    bool top = false;
    for (int mode = 0; mode < m; ++mode)
      if (st.space.occupation(i, mode) == st.space.cutoffs[static_cast<std::size_t>(mode)]) {
        top = true;
        break;
      }
    if (top) pop += std::norm(st.amp[i]);
  }
  return pop;
}

// Copy a state into a space with equal or larger cutoffs (same mode count).
inline FockState embed(const FockState& st, const FockSpace& bigger) {
  if (bigger.n_modes() != st.space.n_modes())
    throw DimensionMismatch("embed: mode counts differ");
  for (int m = 0; m < bigger.n_modes(); ++m)
    if (bigger.cutoffs[static_cast<std::size_t>(m)] < st.space.cutoffs[static_cast<std::size_t>(m)])
      throw DimensionMismatch("embed: target space smaller than source");
  FockState out;
  out.space = bigger;
  out.amp = Vec::Zero(bigger.dim());
  std::vector<int> ns(static_cast<std::size_t>(st.space.n_modes()));
  for (long i = 0; i < st.amp.size(); ++i) {
    if (st.amp[i] == cplx{0.0, 0.0}) continue;
    for (int m = 0; m < st.space.n_modes(); ++m) ns[static_cast<std::size_t>(m)] = st.space.occupation(i, m);
    out.amp[bigger.index_of(ns)] = st.amp[i];
  }
  return out;
}

// Sparse operator tagged with its space.
struct ModeOperator {
  FockSpace space;
  SpMat matrix;

  ModeOperator() = default;
  ModeOperator(FockSpace s, SpMat m) : space(std::move(s)), matrix(std::move(m)) {}

  FockState apply(const FockState& st) const {
    if (st.space != space) throw DimensionMismatch("ModeOperator::apply: space mismatch");
    FockState out;
    out.space = st.space;
    out.amp = matrix * st.amp;
    return out;
  }

  ModeOperator adjoint() const { return {space, SpMat(matrix.adjoint())}; }
};

inline bool is_hermitian(const ModeOperator& op, double tol = 1e-12) {
  SpMat diff = SpMat(op.matrix.adjoint()) - op.matrix;
  double scale = 0.0;
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.matrix, k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  if (scale == 0.0) return true;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it)
      if (std::abs(it.value()) > tol * scale) return false;
  return true;
}

namespace detail {

// matrix of prod_i adag_i^c_i * prod_i a_i^d_i, assembled analytically:
// |n> -> sqrt(falling factorials) |n - d + c>
inline SpMat monomial_matrix(const FockSpace& space, std::span<const int> creation,
                             std::span<const int> annihilation, cplx coeff) {
  const int m = space.n_modes();
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<int> ns(static_cast<std::size_t>(m));
  for (long i = 0; i < space.dim(); ++i) {
    double amp = 1.0;
    bool ok = true;
    for (int mode = 0; mode < m; ++mode) {
      const int n = space.occupation(i, mode);
      const int d = annihilation[static_cast<std::size_t>(mode)];
      const int c = creation[static_cast<std::size_t>(mode)];
      const int after = n - d + c;
      if (n < d || after > space.cutoffs[static_cast<std::size_t>(mode)]) {
        ok = false;
        break;
      }
      for (int j = 0; j < d; ++j) amp *= std::sqrt(static_cast<double>(n - j));
      for (int j = 0; j < c; ++j) amp *= std::sqrt(static_cast<double>(n - d + j + 1));
      ns[static_cast<std::size_t>(mode)] = after;
    }
    if (!ok) continue;
    trip.emplace_back(static_cast<int>(space.index_of(ns)), static_cast<int>(i), coeff * amp);
  }
  SpMat out(space.dim(), space.dim());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

} // namespace detail

inline ModeOperator annihilation(const FockSpace& space, int mode) {
  std::vector<int> c(static_cast<std::size_t>(space.n_modes()), 0), d = c;
  d[static_cast<std::size_t>(mode)] = 1;
  return {space, detail::monomial_matrix(space, c, d, 1.0)};
}

inline ModeOperator creation(const FockSpace& space, int mode) {
  std::vector<int> c(static_cast<std::size_t>(space.n_modes()), 0), d = c;
  c[static_cast<std::size_t>(mode)] = 1;
  return {space, detail::monomial_matrix(space, c, d, 1.0)};
}

inline ModeOperator number_operator(const FockSpace& space, int mode) {
  std::vector<int> c(static_cast<std::size_t>(space.n_modes()), 0), d = c;
  c[static_cast<std::size_t>(mode)] = 1;
  d[static_cast<std::size_t>(mode)] = 1;
  return {space, detail::monomial_matrix(space, c, d, 1.0)};
}

inline ModeOperator identity_operator(const FockSpace& space) {
  SpMat m(space.dim(), space.dim());
  m.setIdentity();
  return {space, std::move(m)};
}

// x = a + adag
inline ModeOperator quadrature_x(const FockSpace& space, int mode) {
  return {space, SpMat(annihilation(space, mode).matrix + creation(space, mode).matrix)};
}

// p = -i (a - adag)
inline ModeOperator quadrature_p(const FockSpace& space, int mode) {
  return {space,
          SpMat(-imag_unit * (annihilation(space, mode).matrix - creation(space, mode).matrix))};
}

// Materializes an effective Hamiltonian on the truncated space. Terms are
// normal-ordered (creations left of annihilations). Throws CutoffTooSmall if
// a monomial maps the whole truncated basis to zero.
inline ModeOperator build_hamiltonian(const FockSpace& space, const rwa::EffectiveHamiltonian& eff) {
  if (eff.n_modes() != space.n_modes())
    throw DimensionMismatch("build_hamiltonian: mode count mismatch");
  SpMat h(space.dim(), space.dim());
  for (const auto& t : eff.terms) {
    for (int m = 0; m < space.n_modes(); ++m) {
      const int cut = space.cutoffs[static_cast<std::size_t>(m)];
      if (t.creation[static_cast<std::size_t>(m)] > cut || t.annihilation[static_cast<std::size_t>(m)] > cut)
        throw CutoffTooSmall("build_hamiltonian: monomial annihilates the truncated basis");
    }
    h += detail::monomial_matrix(space, t.creation, t.annihilation, t.coefficient);
  }
  return {space, std::move(h)};
}

// <psi|O|psi>. For Hermitian O the imaginary part is asserted below 1e-10.
inline cplx expectation(const FockState& st, const ModeOperator& op) {
  if (st.space != op.space) throw DimensionMismatch("expectation: space mismatch");
  const cplx v = st.amp.dot(op.matrix * st.amp);
  if (is_hermitian(op) && std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v.real())))
    throw std::runtime_error("expectation: nonreal value for Hermitian observable");
  return v;
}

// Anti-normally ordered moment < prod_i a_i^p_i  prod_i adag_i^q_i >, which
// equals the Husimi Q-function moment E[ prod alpha_i^p_i conj(alpha_i)^q_i ].
// Computed exactly by embedding into a space with creation headroom.
inline cplx husimi_moment(const FockState& st, std::span<const int> alpha_pow,
                          std::span<const int> conj_pow) {
  const int m = st.space.n_modes();
  if (static_cast<int>(alpha_pow.size()) != m || static_cast<int>(conj_pow.size()) != m)
    throw DimensionMismatch("husimi_moment: power lists must match mode count");
  FockSpace big = st.space;
  int total = 0;
  for (int i = 0; i < m; ++i) {
    big.cutoffs[static_cast<std::size_t>(i)] +=
        std::max(alpha_pow[static_cast<std::size_t>(i)], conj_pow[static_cast<std::size_t>(i)]);
    total += alpha_pow[static_cast<std::size_t>(i)] + conj_pow[static_cast<std::size_t>(i)];
  }
  if (total == 0) return {st.amp.squaredNorm(), 0.0};
  const FockState ext = embed(st, big);
  // <psi| a^p adag^q |psi> = < adag^p psi , adag^q psi >
  Vec left = ext.amp, right = ext.amp;
  std::vector<int> zero(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    std::vector<int> c = zero;
    c[static_cast<std::size_t>(i)] = alpha_pow[static_cast<std::size_t>(i)];
    if (c[static_cast<std::size_t>(i)] > 0)
      left = detail::monomial_matrix(big, c, zero, 1.0) * left;
    std::vector<int> c2 = zero;
    c2[static_cast<std::size_t>(i)] = conj_pow[static_cast<std::size_t>(i)];
    if (c2[static_cast<std::size_t>(i)] > 0)
      right = detail::monomial_matrix(big, c2, zero, 1.0) * right;
  }
  return left.dot(right);
}

// Text export of a state: a header recording the space shape, then one
// "re im" amplitude row per basis state. Used to hand states to the
// measurement layer out of process.
inline void write_state(const std::string& path, const FockState& st) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("write_state: cannot open " + path);
  f << "triphoton-state 1\n";
  f << "cutoffs";
  for (int c : st.space.cutoffs) f << " " << c;
  f << "\n";
  char buf[64];
  for (long i = 0; i < st.amp.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", st.amp[i].real(), st.amp[i].imag());
    f << buf;
  }
}

inline FockState read_state(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_state: cannot open " + path);
  std::string magic;
  int version = 0;
  f >> magic >> version;
  if (magic != "triphoton-state" || version != 1)
    throw std::runtime_error("read_state: not a triphoton state file");
  std::string word;
  f >> word;
  if (word != "cutoffs") throw std::runtime_error("read_state: missing cutoffs header");
  std::string rest;
  std::getline(f, rest);
  std::vector<int> cutoffs;
  {
    std::istringstream ss(rest);
    int c;
    while (ss >> c) cutoffs.push_back(c);
  }
  FockState st;
  st.space = FockSpace(cutoffs);
  st.amp = Vec::Zero(st.space.dim());
  for (long i = 0; i < st.amp.size(); ++i) {
    double re, im;
    if (!(f >> re >> im)) throw std::runtime_error("read_state: truncated amplitude table");
    st.amp[i] = cplx{re, im};
  }
  return st;
}

// A named measured quadrature: x or p of one mode.
struct QuadAxis {
  int mode = 0;
  enum Kind { X, P } kind = X;
};

// Husimi moment of a product of up to three quadrature axes (non-central):
// each x_i = alpha_i + conj(alpha_i), p_i = -i(alpha_i - conj(alpha_i)) is
// expanded and the resulting alpha-monomials evaluated with husimi_moment.
inline double husimi_quadrature_moment(const FockState& st, std::span<const QuadAxis> axes) {
  const int m = st.space.n_modes();
  cplx total{0.0, 0.0};
  const std::size_t k = axes.size();
  for (std::size_t mask = 0; mask < (1u << k); ++mask) {
    cplx coeff{1.0, 0.0};
    std::vector<int> ap(static_cast<std::size_t>(m), 0), cp(static_cast<std::size_t>(m), 0);
    for (std::size_t j = 0; j < k; ++j) {
      const bool conjugated = (mask >> j) & 1u;
      const auto& ax = axes[j];
      if (ax.kind == QuadAxis::X) {
        // coefficient 1 for either branch
      } else {
        coeff *= conjugated ? imag_unit : -imag_unit;
      }
      (conjugated ? cp : ap)[static_cast<std::size_t>(ax.mode)] += 1;
    }
    total += coeff * husimi_moment(st, ap, cp);
  }
  if (std::abs(total.imag()) > 1e-9 * std::max(1.0, std::abs(total.real())))
    throw std::runtime_error("husimi_quadrature_moment: nonreal moment of Hermitian combination");
  return total.real();
}

} // namespace triphoton::fock

#endif

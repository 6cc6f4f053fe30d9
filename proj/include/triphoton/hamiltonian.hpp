#ifndef TRIPHOTON_HAMILTONIAN_HPP
#define TRIPHOTON_HAMILTONIAN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "triphoton/common.hpp"

namespace triphoton::rwa {

// One monomial in the mode ladder operators: prod_i adag_i^c_i * prod_i a_i^d_i,
// with its coefficient and interaction-picture rotating frequency
// sum_i (c_i - d_i) f_i.
struct HamiltonianTerm {
  std::vector<int> creation;      // per-mode creation counts
  std::vector<int> annihilation;  // per-mode annihilation counts
  cplx coefficient{0.0, 0.0};
  double rotating_freq = 0.0;  // GHz

  int n_modes() const { return static_cast<int>(creation.size()); }
  int order() const {
    int s = 0;
    for (std::size_t i = 0; i < creation.size(); ++i) s += creation[i] + annihilation[i];
    return s;
  }
  double recompute_rotating_freq(std::span<const double> mode_freqs) const {
    double f = 0.0;
    for (std::size_t i = 0; i < creation.size(); ++i)
      f += (creation[i] - annihilation[i]) * mode_freqs[i];
    return f;
  }
  HamiltonianTerm conjugate() const {
    HamiltonianTerm t;
    t.creation = annihilation;
    t.annihilation = creation;
    t.coefficient = std::conj(coefficient);
    t.rotating_freq = -rotating_freq;
    return t;
  }
  bool same_powers(const HamiltonianTerm& o) const {
    return creation == o.creation && annihilation == o.annihilation;
  }
  // canonical ordering: annihilation-heavy terms first, then lexicographic
  bool operator<(const HamiltonianTerm& o) const {
    int net = 0, onet = 0;
    for (std::size_t i = 0; i < creation.size(); ++i) {
      net += creation[i] - annihilation[i];
      onet += o.creation[i] - o.annihilation[i];
    }
    if (net != onet) return net < onet;
    if (creation != o.creation) return creation < o.creation;
    return annihilation < o.annihilation;
  }
};

struct EmptySelection : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AmbiguousSelection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pump-selected effective Hamiltonian: the resonant terms, with coefficients
// already scaled by the classical pump amplitude and phase.
struct EffectiveHamiltonian {
  std::vector<HamiltonianTerm> terms;
  double pump_freq = 0.0;          // GHz
  double pump_phase = 0.0;         // radians
  double detuning_tolerance = 0.0; // GHz
  std::vector<double> mode_freqs;  // GHz, for bookkeeping

  int n_modes() const { return static_cast<int>(mode_freqs.size()); }

  // magnitude of the annihilation-side coefficient; the natural rate unit
  // for drive strengths quoted as g*t products
  double coupling_rate() const {
    double g = 0.0;
    for (const auto& t : terms)
      if (t.rotating_freq < 0.0) g = std::max(g, std::abs(t.coefficient));
    return g;
  }

  // re-phase the pump: annihilation-side terms carry exp(+i theta), their
  // conjugates exp(-i theta)
  EffectiveHamiltonian with_pump_phase(double theta) const {
    EffectiveHamiltonian out = *this;
    const double dtheta = theta - pump_phase;
    for (auto& t : out.terms) {
      const double sign = (t.rotating_freq < 0.0) ? 1.0 : -1.0;
      t.coefficient *= std::exp(imag_unit * (sign * dtheta));
    }
    out.pump_phase = theta;
    return out;
  }
};

namespace detail {

inline void enumerate_rec(std::span<const double> mode_freqs, int slots_left, int slot,
                          std::vector<int>& counts, double g_order, double order_factorial,
                          std::vector<HamiltonianTerm>& out) {
  const int n_slots = static_cast<int>(counts.size());
  if (slot == n_slots - 1) {
    counts[static_cast<std::size_t>(slot)] = slots_left;
    const int m = n_slots / 2;
    HamiltonianTerm t;
    t.creation.assign(counts.begin() + m, counts.end());
    t.annihilation.assign(counts.begin(), counts.begin() + m);
    double denom = 1.0;
    for (int c : counts)
      for (int j = 2; j <= c; ++j) denom *= j;
    t.coefficient = g_order * order_factorial / denom;  // multinomial count
    t.rotating_freq = t.recompute_rotating_freq(mode_freqs);
    out.push_back(std::move(t));
    return;
  }
  for (int c = 0; c <= slots_left; ++c) {
    counts[static_cast<std::size_t>(slot)] = c;
    enumerate_rec(mode_freqs, slots_left - c, slot + 1, counts, g_order, order_factorial, out);
  }
}

} // namespace detail

// All distinct monomials of total degree `order` in the 2m letters
// {a_1..a_m, adag_1..adag_m}, with multinomial counts times g_order as
// coefficients (like monomials merged as commuting letters; operator-ordering
// corrections are handled downstream when matrices are built).
inline std::vector<HamiltonianTerm> enumerate_terms(std::span<const double> mode_freqs, int order,
                                                    double g_order = 1.0) {
  if (order < 1) throw std::invalid_argument("enumerate_terms: order must be >= 1");
  if (mode_freqs.empty() || mode_freqs.size() > 3)
    throw std::invalid_argument("enumerate_terms: expected 1-3 modes");
  double order_factorial = 1.0;
  for (int j = 2; j <= order; ++j) order_factorial *= j;
  std::vector<int> counts(2 * mode_freqs.size(), 0);
  std::vector<HamiltonianTerm> out;
  detail::enumerate_rec(mode_freqs, order, 0, counts, g_order, order_factorial, out);
  std::sort(out.begin(), out.end());
  return out;
}

// Retains the terms resonant with +-pump_freq and scales them by the pump:
// terms rotating at -pump_freq (annihilation-heavy, the downconversion side)
// pick up beta_p = amp * exp(i phase); their conjugates pick up conj(beta_p).
inline EffectiveHamiltonian select_resonant(const std::vector<HamiltonianTerm>& terms,
                                            std::span<const double> mode_freqs, double pump_freq,
                                            double tolerance, double pump_amplitude = 1.0,
                                            double pump_phase = 0.0) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("select_resonant: tolerance must be > 0");
  if (!(pump_freq > tolerance))
    throw std::invalid_argument("select_resonant: pump frequency must exceed the tolerance");

  // tolerance must resolve distinct processes: check against the minimal
  // spacing between distinct |rotating_freq| values
  std::vector<double> mags;
  mags.reserve(terms.size());
  for (const auto& t : terms) mags.push_back(std::abs(t.rotating_freq));
  std::sort(mags.begin(), mags.end());
  double min_spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < mags.size(); ++i) {
    const double gap = mags[i] - mags[i - 1];
    if (gap > 1e-12) min_spacing = std::min(min_spacing, gap);
  }
  if (tolerance >= min_spacing)
    throw std::invalid_argument("select_resonant: tolerance does not resolve distinct processes");

  const cplx beta = pump_amplitude * std::exp(imag_unit * pump_phase);
  EffectiveHamiltonian out;
  out.pump_freq = pump_freq;
  out.pump_phase = pump_phase;
  out.detuning_tolerance = tolerance;
  out.mode_freqs.assign(mode_freqs.begin(), mode_freqs.end());

  for (const auto& t : terms) {
    if (std::abs(t.rotating_freq + pump_freq) <= tolerance) {
      HamiltonianTerm kept = t;
      kept.coefficient *= beta;
      out.terms.push_back(std::move(kept));
    } else if (std::abs(t.rotating_freq - pump_freq) <= tolerance) {
      HamiltonianTerm kept = t;
      kept.coefficient *= std::conj(beta);
      out.terms.push_back(std::move(kept));
    }
  }
  if (out.terms.empty())
    throw EmptySelection("select_resonant: no term matches the pump frequency");

  // distinct processes (conjugate pairs identified) within the window
  std::vector<HamiltonianTerm> classes;
  for (const auto& t : out.terms) {
    bool known = false;
    for (const auto& c : classes)
      if (t.same_powers(c) || t.same_powers(c.conjugate())) { known = true; break; }
    if (!known) classes.push_back(t);
  }
  if (classes.size() > 1)
    throw AmbiguousSelection("select_resonant: " + std::to_string(classes.size()) +
                             " inequivalent processes inside the tolerance window");

  std::sort(out.terms.begin(), out.terms.end());
  return out;
}

// Stable text rendering: sorted terms, coefficients divided by the phase of
// the leading term so the printed phases do not wobble with float noise.
inline std::string format_hamiltonian(const EffectiveHamiltonian& eff) {
  std::string s;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "pump %.6f GHz, tolerance %.6g GHz, %zu terms\n", eff.pump_freq,
                eff.detuning_tolerance, eff.terms.size());
  s += buf;
  std::vector<HamiltonianTerm> terms = eff.terms;
  std::sort(terms.begin(), terms.end());
  cplx phase{1.0, 0.0};
  if (!terms.empty() && std::abs(terms.front().coefficient) > 0.0)
    phase = terms.front().coefficient / std::abs(terms.front().coefficient);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const cplx c = t.coefficient / phase;
    std::snprintf(buf, sizeof(buf), "%s (%+.9f%+.9fi) *", i == 0 ? "H/hbar =" : "       +",
                  c.real(), c.imag());
    s += buf;
    bool any = false;
    for (int m = 0; m < t.n_modes(); ++m) {
      if (const int p = t.annihilation[static_cast<std::size_t>(m)]; p > 0) {
        if (p > 1) std::snprintf(buf, sizeof(buf), " a%d^%d", m + 1, p);
        else std::snprintf(buf, sizeof(buf), " a%d", m + 1);
        s += buf;
        any = true;
      }
    }
    for (int m = 0; m < t.n_modes(); ++m) {
      if (const int p = t.creation[static_cast<std::size_t>(m)]; p > 0) {
        if (p > 1) std::snprintf(buf, sizeof(buf), " adag%d^%d", m + 1, p);
        else std::snprintf(buf, sizeof(buf), " adag%d", m + 1);
        s += buf;
        any = true;
      }
    }
    if (!any) s += " 1";
    std::snprintf(buf, sizeof(buf), "   [%+.6f GHz]\n", t.rotating_freq);
    s += buf;
  }
  if (std::abs(phase - cplx{1.0, 0.0}) > 1e-12) {
    std::snprintf(buf, sizeof(buf), "global phase: %+.9f rad\n", std::arg(phase));
    s += buf;
  }
  return s;
}

} // namespace triphoton::rwa

#endif

#ifndef TRIPHOTON_DEVICE_HPP
#define TRIPHOTON_DEVICE_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "triphoton/common.hpp"

namespace triphoton::device {

// Physical parameters of the pumped asymmetric-SQUID cavity. Energies are in
// frequency units (GHz); fluxes are in units of one flux quantum.
struct DeviceParams {
  double ej1 = 1.0;   // Josephson energy of junction 1
  double ej2 = 1.7;   // Josephson energy of junction 2
  double area_ratio = 1.7;  // design junction-area ratio, consistency check only
  double flux_bias = 0.25;  // DC flux working point, units of Phi_0
  double pump_amplitude = 1.0;  // |beta_p|, classical pump amplitude
  double pump_phase = 0.0;      // arg(beta_p), radians
  std::vector<double> mode_freqs{4.2, 6.1, 7.5};          // GHz
  std::vector<double> quality_factors{7000.0, 7000.0, 7000.0};
  double impedance = 50.0;  // ohms, metadata only
  std::vector<double> zero_point_amplitudes{0.1, 0.1, 0.1};  // cavity-phase units

  void validate() const {
    if (!(ej1 > 0.0) || !(ej2 > 0.0))
      throw std::invalid_argument("device: junction energies must be positive");
    if (mode_freqs.empty() || mode_freqs.size() > 3)
      throw std::invalid_argument("device: expected 1-3 mode frequencies");
    for (std::size_t i = 0; i < mode_freqs.size(); ++i) {
      if (!(mode_freqs[i] > 0.0))
        throw std::invalid_argument("device: mode frequencies must be positive");
      if (i > 0 && !(mode_freqs[i] > mode_freqs[i - 1]))
        throw std::invalid_argument("device: mode frequencies must be strictly increasing");
    }
    if (quality_factors.size() != mode_freqs.size())
      throw std::invalid_argument("device: need one quality factor per mode");
    for (double q : quality_factors)
      if (!(q > 0.0)) throw std::invalid_argument("device: quality factors must be positive");
    if (zero_point_amplitudes.size() != mode_freqs.size())
      throw std::invalid_argument("device: need one zero-point amplitude per mode");
    for (double z : zero_point_amplitudes)
      if (z < 0.0) throw std::invalid_argument("device: zero-point amplitudes must be >= 0");
    if (pump_amplitude < 0.0)
      throw std::invalid_argument("device: pump amplitude must be >= 0");
  }

  // Junction energies are proportional to areas; reports whether the stated
  // design ratio matches ej2/ej1. A derived consistency probe, not enforced.
  bool area_ratio_consistent(double rel_tol = 1e-3) const {
    if (!(area_ratio > 0.0) || !(ej1 > 0.0)) return false;
    return std::abs(ej2 / ej1 - area_ratio) <= rel_tol * area_ratio;
  }

  // Per-mode energy decay rates kappa_i = 2 pi f_i / Q_i, in 1/ns for f in GHz.
  std::vector<double> decay_rates() const {
    std::vector<double> k(mode_freqs.size());
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = two_pi * mode_freqs[i] / quality_factors[i];
    return k;
  }
};

// Flux-dependent Josephson energy of the SQUID,
//   E_J(phi) = sqrt(E1^2 + E2^2 + 2 E1 E2 cos(2 pi phi)).
// Even and 1-periodic in phi; max at integer flux, min at half-integer.
inline double effective_josephson_energy(const DeviceParams& p, double ext_flux) {
  const double c = std::cos(two_pi * ext_flux);
  const double s2 = p.ej1 * p.ej1 + p.ej2 * p.ej2 + 2.0 * p.ej1 * p.ej2 * c;
  return std::sqrt(std::max(0.0, s2));
}

struct AlphaResult {
  double value = 0.0;
  bool degenerate = false;  // ext_flux at an odd half-integer (tan singularity)
};

// Effective cavity flux offset induced by junction asymmetry,
//   alpha = arctan[ tan(pi phi) (E1-E2)/(E1+E2) ],
// principal branch: odd and 1-periodic in phi, alpha(0) = 0. At half-integer
// flux the arctan argument diverges; the limiting value +-pi/2 * sign(E1-E2)
// is returned with the degenerate flag set.
inline AlphaResult effective_offset_alpha(const DeviceParams& p, double ext_flux) {
  const double d = (p.ej1 - p.ej2) / (p.ej1 + p.ej2);
  // reduce to the fundamental cell (-1/2, 1/2]
  double phi = ext_flux - std::round(ext_flux);
  const double half_dist = std::abs(std::abs(phi) - 0.5);
  if (half_dist < 1e-15) {
    const double sgn = (p.ej1 > p.ej2) ? 1.0 : (p.ej1 < p.ej2 ? -1.0 : 0.0);
    return {0.5 * pi * sgn, true};  // limit approaching from below
  }
  return {std::atan(std::tan(pi * phi) * d), false};
}

// Continuously unwrapped alpha along a flux sweep: equals the principal
// branch near zero and accumulates +-pi across each half-integer crossing,
// so coupling curves built from it are smooth.
inline std::vector<double> alpha_sweep(const DeviceParams& p, std::span<const double> flux) {
  const double d = (p.ej1 - p.ej2) / (p.ej1 + p.ej2);
  std::vector<double> out(flux.size());
  if (d == 0.0) return out;  // symmetric SQUID: alpha vanishes identically
  double offset = 0.0;
  double prev_raw = 0.0;
  for (std::size_t i = 0; i < flux.size(); ++i) {
    // phase of (E1+E2)cos(pi phi) + i (E1-E2)sin(pi phi); atan2 branch cuts at
    // odd flux are healed by tracking a 2*pi offset between consecutive points
    const double raw = std::atan2(d * std::sin(pi * flux[i]), std::cos(pi * flux[i]));
    if (i > 0) {
      double jump = raw - prev_raw;
      if (jump > pi) offset -= two_pi;
      else if (jump < -pi) offset += two_pi;
    }
    prev_raw = raw;
    out[i] = raw + offset;
  }
  return out;
}

// Taylor expansion of the SQUID potential E_J(flux_bias) cos(theta - alpha)
// around theta = 0, theta being the cavity phase 2 pi Phi_cav / Phi_0.
struct PotentialExpansion {
  std::vector<double> coefficients;  // c_k, k = 0..k_max
  double alpha = 0.0;
  double josephson_energy = 0.0;
  bool degenerate_alpha = false;
};

// c_k = E_J * d^k/dtheta^k cos(theta - alpha)|_0 / k!. The derivative cycles
// through {cos a, sin a, -cos a, -sin a}, evaluated exactly so a symmetric
// SQUID gives identically zero odd coefficients.
inline PotentialExpansion expand_potential(const DeviceParams& p, int k_max) {
  if (k_max < 3) throw std::invalid_argument("expand_potential: k_max must be >= 3");
  PotentialExpansion out;
  const AlphaResult a = effective_offset_alpha(p, p.flux_bias);
  out.alpha = a.value;
  out.degenerate_alpha = a.degenerate;
  out.josephson_energy = effective_josephson_energy(p, p.flux_bias);
  const bool symmetric = (p.ej1 == p.ej2);
  const double ca = symmetric ? 1.0 : std::cos(out.alpha);
  const double sa = symmetric ? 0.0 : std::sin(out.alpha);
  out.coefficients.resize(static_cast<std::size_t>(k_max) + 1);
  double inv_factorial = 1.0;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) inv_factorial /= k;
    double deriv = 0.0;
    switch (k % 4) {
      case 0: deriv = ca; break;
      case 1: deriv = sa; break;
      case 2: deriv = -ca; break;
      case 3: deriv = -sa; break;
    }
    out.coefficients[static_cast<std::size_t>(k)] = out.josephson_energy * deriv * inv_factorial;
  }
  return out;
}

// Order-k coupling constants entering the interaction Hamiltonian. Convention:
// g_k = c_k * (geometric mean of the zero-point amplitudes)^k, which reduces
// to c_k * lambda^k for equal amplitudes and is homogeneous of degree k under
// rescaling. g_0 is reported as zero (a constant offset drives no process).
struct CouplingSet {
  std::vector<double> g;  // indexed by order k
  std::string convention = "g_k = c_k * gmean(zero_point_amplitudes)^k; g_0 := 0";
};

inline CouplingSet coupling_constants(const PotentialExpansion& exp,
                                      std::span<const double> zero_point_amplitudes) {
  if (zero_point_amplitudes.empty())
    throw std::invalid_argument("coupling_constants: need at least one zero-point amplitude");
  for (double z : zero_point_amplitudes)
    if (z < 0.0) throw std::invalid_argument("coupling_constants: amplitudes must be >= 0");
  double log_sum = 0.0;
  bool any_zero = false;
  for (double z : zero_point_amplitudes) {
    if (z == 0.0) any_zero = true;
    else log_sum += std::log(z);
  }
  const double gmean =
      any_zero ? 0.0 : std::exp(log_sum / static_cast<double>(zero_point_amplitudes.size()));
  CouplingSet out;
  out.g.resize(exp.coefficients.size(), 0.0);
  double scale = 1.0;
  for (std::size_t k = 1; k < out.g.size(); ++k) {
    scale *= gmean;
    out.g[k] = exp.coefficients[k] * scale;
  }
  return out;
}

} // namespace triphoton::device

#endif

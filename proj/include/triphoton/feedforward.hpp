#ifndef TRIPHOTON_FEEDFORWARD_HPP
#define TRIPHOTON_FEEDFORWARD_HPP

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "triphoton/cumulants.hpp"
#include "triphoton/record.hpp"

namespace triphoton::ff {

struct PhaseEstimate {
  std::vector<double> phases;   // radians in [-pi, pi)
  std::size_t zero_flagged = 0; // samples with I = Q = 0, assigned phase 0
};

// Per-sample four-quadrant phase of the reference mode, atan2(Q_ref, I_ref).
inline PhaseEstimate estimate_phase(const meas::QuadratureRecord& rec, int reference_mode) {
  if (reference_mode < 0 || reference_mode >= rec.n_modes)
    throw std::invalid_argument("estimate_phase: reference mode out of range");
  PhaseEstimate out;
  out.phases.resize(rec.n_samples);
  for (std::size_t k = 0; k < rec.n_samples; ++k) {
    const double i = rec.raw_i(k, reference_mode);
    const double q = rec.raw_q(k, reference_mode);
    if (std::abs(i) + std::abs(q) == 0.0) {
      out.phases[k] = 0.0;
      ++out.zero_flagged;
    } else {
      out.phases[k] = std::atan2(q, i);
    }
  }
  return out;
}

enum class Protocol { three_mode, two_mode };

struct FeedForwardResult {
  meas::QuadratureRecord corrected;
  std::map<std::string, stats::Estimate> correlation_table;
  stats::Estimate variance_ratio{1.0, 0.0};  // var(x)/var(p) of the corrected mode (two-mode)
  std::size_t zero_phase_samples = 0;
};

namespace detail {

inline void rotate_mode(meas::QuadratureRecord& rec, int mode, std::span<const double> angles) {
  for (std::size_t k = 0; k < rec.n_samples; ++k) {
    const double c = std::cos(angles[k]), s = std::sin(angles[k]);
    const double i = rec.raw_i(k, mode), q = rec.raw_q(k, mode);
    rec.raw_i(k, mode) = i * c - q * s;
    rec.raw_q(k, mode) = i * s + q * c;
  }
}

} // namespace detail

// Pairwise correlation coefficients between the quadratures of two modes:
// II, QQ, IQ, QI. Used both for feed-forward output and no-feed-forward
// baselines.
inline std::map<std::string, stats::Estimate> correlation_table(const meas::QuadratureRecord& rec,
                                                                int mode_a, int mode_b,
                                                                int n_batches = 100) {
  using stats::Quad;
  const std::string a = std::to_string(mode_a + 1), b = std::to_string(mode_b + 1);
  std::map<std::string, stats::Estimate> out;
  out["I" + a + "I" + b] = stats::correlation(stats::quadrature_stream(rec, mode_a, Quad::I),
                                              stats::quadrature_stream(rec, mode_b, Quad::I), n_batches);
  out["Q" + a + "Q" + b] = stats::correlation(stats::quadrature_stream(rec, mode_a, Quad::Q),
                                              stats::quadrature_stream(rec, mode_b, Quad::Q), n_batches);
  out["I" + a + "Q" + b] = stats::correlation(stats::quadrature_stream(rec, mode_a, Quad::I),
                                              stats::quadrature_stream(rec, mode_b, Quad::Q), n_batches);
  out["Q" + a + "I" + b] = stats::correlation(stats::quadrature_stream(rec, mode_a, Quad::Q),
                                              stats::quadrature_stream(rec, mode_b, Quad::I), n_batches);
  return out;
}

// Correlation feed-forward: estimate the reference-mode phase sample by
// sample and rotate the remaining modes by phi_ref / 2 (energy conservation
// distributes a reference-mode detuning across the other photons; in the
// two-mode case the remaining mode carries two photons, hence the same 1/2).
// The branch convention is atan2 in [-pi, pi); the rotation inherits its
// sign, and the singular values of the recovered cross-covariance block are
// branch-free.
inline FeedForwardResult apply_feedforward(const meas::QuadratureRecord& rec, int reference_mode,
                                           Protocol protocol, int n_batches = 100,
                                           int smoothing_window = 1) {
  rec.validate();
  const int expected_modes = protocol == Protocol::three_mode ? 3 : 2;
  if (rec.n_modes != expected_modes)
    throw std::invalid_argument("apply_feedforward: record has the wrong mode count");
  if (reference_mode < 0 || reference_mode >= rec.n_modes)
    throw std::invalid_argument("apply_feedforward: reference mode out of range");
  if (smoothing_window < 1)
    throw std::invalid_argument("apply_feedforward: smoothing window must be >= 1");

  PhaseEstimate est = estimate_phase(rec, reference_mode);
  if (smoothing_window > 1) {
    // optional moving average over the complex phasor, preserving [-pi, pi)
    std::vector<double> smoothed(est.phases.size());
    for (std::size_t k = 0; k < est.phases.size(); ++k) {
      double re = 0.0, im = 0.0;
      const std::size_t lo = k >= static_cast<std::size_t>(smoothing_window - 1)
                                 ? k - static_cast<std::size_t>(smoothing_window - 1)
                                 : 0;
      for (std::size_t j = lo; j <= k; ++j) {
        re += std::cos(est.phases[j]);
        im += std::sin(est.phases[j]);
      }
      smoothed[k] = std::atan2(im, re);
    }
    est.phases = std::move(smoothed);
  }

  std::vector<double> half(est.phases.size());
  for (std::size_t k = 0; k < half.size(); ++k) half[k] = 0.5 * est.phases[k];

  FeedForwardResult out;
  out.corrected = rec;
  out.zero_phase_samples = est.zero_flagged;
  for (int mode = 0; mode < rec.n_modes; ++mode)
    if (mode != reference_mode) detail::rotate_mode(out.corrected, mode, half);

  if (protocol == Protocol::three_mode) {
    int others[2], idx = 0;
    for (int mode = 0; mode < 3; ++mode)
      if (mode != reference_mode) others[idx++] = mode;
    out.correlation_table = correlation_table(out.corrected, others[0], others[1], n_batches);
  } else {
    const int mode = reference_mode == 0 ? 1 : 0;
    const stats::StreamView views[2] = {stats::quadrature_stream(out.corrected, mode, stats::Quad::I),
                                        stats::quadrature_stream(out.corrected, mode, stats::Quad::Q)};
    const stats::MomentSummary s = stats::accumulate_moments(views, n_batches);
    const double vx = s.covariance(0, 0), vp = s.covariance(1, 1);
    if (!(vp > 0.0)) throw stats::DegenerateVariance("apply_feedforward: zero p variance");
    std::vector<double> per_batch;
    for (int b = 0; b < s.n_batches; ++b) {
      const double bp = s.batch_covariance(b, 1, 1);
      if (bp > 0.0) per_batch.push_back(s.batch_covariance(b, 0, 0) / bp);
    }
    out.variance_ratio = stats::detail::batch_estimate(vx / vp, per_batch);
    const std::string m = std::to_string(mode + 1);
    out.correlation_table["I" + m + "Q" + m] =
        stats::correlation(views[0], views[1], n_batches);
  }
  return out;
}

// 2x2 cross-covariance block between the (x, p) quadratures of two modes;
// its singular values are invariant under the feed-forward branch choice.
inline std::array<double, 2> cross_covariance_singular_values(const meas::QuadratureRecord& rec,
                                                              int mode_a, int mode_b) {
  using stats::Quad;
  const stats::StreamView views[4] = {stats::quadrature_stream(rec, mode_a, Quad::I),
                                      stats::quadrature_stream(rec, mode_a, Quad::Q),
                                      stats::quadrature_stream(rec, mode_b, Quad::I),
                                      stats::quadrature_stream(rec, mode_b, Quad::Q)};
  const stats::MomentSummary s = stats::accumulate_moments(views, 1);
  // SVD of [[c02, c03], [c12, c13]] via its 2x2 Gram matrix
  const double a = s.covariance(0, 2), b = s.covariance(0, 3);
  const double c = s.covariance(1, 2), d = s.covariance(1, 3);
  const double g11 = a * a + b * b, g22 = c * c + d * d, g12 = a * c + b * d;
  const double tr = g11 + g22;
  const double disc = std::sqrt(std::max(0.0, (g11 - g22) * (g11 - g22) + 4.0 * g12 * g12));
  return {std::sqrt(std::max(0.0, 0.5 * (tr + disc))),
          std::sqrt(std::max(0.0, 0.5 * (tr - disc)))};
}

} // namespace triphoton::ff

#endif

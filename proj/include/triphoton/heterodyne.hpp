#ifndef TRIPHOTON_HETERODYNE_HPP
#define TRIPHOTON_HETERODYNE_HPP

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "triphoton/common.hpp"
#include "triphoton/cumulants.hpp"
#include "triphoton/fock.hpp"
#include "triphoton/parallel.hpp"
#include "triphoton/record.hpp"
#include "triphoton/rng.hpp"

namespace triphoton::meas {

struct QBoundFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact i.i.d. sampler for the multimode Husimi Q distribution of a truncated
// Fock state (the ideal dual-quadrature heterodyne POVM). Q factors as
//   Q(alpha) = exp(-|alpha|^2) |P(conj alpha)|^2 / pi^m,
// with P the polynomial with coefficients amp_n / sqrt(prod n_i!). Proposals
// are drawn from the envelope obtained by replacing P with its coefficient-
// absolute-value polynomial in |alpha_i|; that envelope dominates Q by the
// triangle inequality and is a finite mixture of gamma-radial components, so
// it can be sampled exactly and the accept ratio never exceeds one.
class HusimiSampler {
public:
  static constexpr int kMaxPower = 63;

  explicit HusimiSampler(const fock::FockState& st) : modes_(st.space.n_modes()) {
    const double nrm = st.norm();
    if (!(nrm > 0.0)) throw std::invalid_argument("HusimiSampler: zero state");
    const double drop = 1e-12 * nrm;
    const auto& space = st.space;
    for (long i = 0; i < st.amp.size(); ++i) {
      if (std::abs(st.amp[i]) <= drop) continue;
      Entry e;
      double log_fact = 0.0;
      for (int m = 0; m < modes_; ++m) {
        e.ns[m] = space.occupation(i, m);
        if (e.ns[m] > kMaxPower)
          throw std::invalid_argument("HusimiSampler: cutoff beyond supported power table");
        for (int j = 2; j <= e.ns[m]; ++j) log_fact += std::log(static_cast<double>(j));
        max_n_[m] = std::max(max_n_[m], e.ns[m]);
      }
      e.b = (st.amp[i] / nrm) * std::exp(-0.5 * log_fact);
      e.abs_b = std::abs(e.b);
      entries_.push_back(e);
    }
    // mixture over coefficient pairs (j,l): weight |b_j||b_l| prod_i Gamma(k_i/2+1)
    const std::size_t K = entries_.size();
    weights_.reserve(K * K);
    shapes_.reserve(K * K * static_cast<std::size_t>(modes_));
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t l = 0; l < K; ++l) {
        double w = entries_[j].abs_b * entries_[l].abs_b;
        for (int m = 0; m < modes_; ++m) {
          const double shape = 0.5 * (entries_[j].ns[m] + entries_[l].ns[m]) + 1.0;
          shapes_.push_back(shape);
          w *= std::tgamma(shape);
        }
        weights_.push_back(w);
      }
    component_ = std::discrete_distribution<std::size_t>(weights_.begin(), weights_.end());
  }

  int n_modes() const { return modes_; }

  // Per-worker mutable distribution state; create one per sampling block.
  std::discrete_distribution<std::size_t> component_distribution() const { return component_; }

  // one Husimi draw; out[2m], out[2m+1] filled with x_m = 2 Re a, p_m = 2 Im a
  template <typename Rng>
  void draw(Rng& rng, std::discrete_distribution<std::size_t>& comp, double* out) const {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    cplx capow[3][kMaxPower + 1];
    double rpow[3][kMaxPower + 1];
    for (;;) {
      const std::size_t c = comp(rng);
      double re[3], im[3], r[3];
      for (int m = 0; m < modes_; ++m) {
        std::gamma_distribution<double> gamma(shapes_[c * static_cast<std::size_t>(modes_) +
                                                      static_cast<std::size_t>(m)],
                                              1.0);
        const double radius = std::sqrt(gamma(rng));
        const double phase = two_pi * uni(rng);
        r[m] = radius;
        re[m] = radius * std::cos(phase);
        im[m] = radius * std::sin(phase);
        capow[m][0] = 1.0;
        rpow[m][0] = 1.0;
        const cplx conj_alpha{re[m], -im[m]};
        for (int p = 1; p <= max_n_[m]; ++p) {
          capow[m][p] = capow[m][p - 1] * conj_alpha;
          rpow[m][p] = rpow[m][p - 1] * radius;
        }
      }
      // accept with |P(conj alpha)|^2 / P_abs(|alpha|)^2
      cplx val{0.0, 0.0};
      double bound = 0.0;
      for (const auto& e : entries_) {
        cplx term = e.b;
        double aterm = e.abs_b;
        for (int m = 0; m < modes_; ++m) {
          term *= capow[m][e.ns[m]];
          aterm *= rpow[m][e.ns[m]];
        }
        val += term;
        bound += aterm;
      }
      const double num = std::norm(val);
      const double den = bound * bound;
      if (num > den * (1.0 + 1e-9))
        throw QBoundFailure("heterodyne: rejection envelope undercovers Q near |alpha| = (" +
                            std::to_string(r[0]) + ", ...)");
      if (den == 0.0) continue;
      if (uni(rng) * den <= num) {
        for (int m = 0; m < modes_; ++m) {
          out[2 * m] = 2.0 * re[m];
          out[2 * m + 1] = 2.0 * im[m];
        }
        return;
      }
    }
  }

private:
  struct Entry {
    int ns[3] = {0, 0, 0};
    cplx b{0.0, 0.0};
    double abs_b = 0.0;
  };
  int modes_;
  int max_n_[3] = {0, 0, 0};
  std::vector<Entry> entries_;
  std::vector<double> weights_;
  std::vector<double> shapes_;  // per component per mode
  std::discrete_distribution<std::size_t> component_;
};

struct RecordMeta {
  double gain = 1.0;
  std::vector<double> noise_photons;  // per mode, variance per quadrature
  double sample_rate = 1e6;
  double pump_phase = 0.0;
  bool pump_on = true;
  std::string calibration_note;
};

// Synthetic heterodyne record: Husimi draws from the state, plus Gaussian
// system noise of the given variance on each quadrature, scaled by sqrt(gain).
// Samples are i.i.d.; blocks of 65536 use independent RNG streams keyed on
// (seed, block), so the record does not depend on the thread count.
inline QuadratureRecord sample_heterodyne(const fock::FockState& st, std::size_t n_samples,
                                          const RecordMeta& meta, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("sample_heterodyne: need >= 1 sample");
  if (!(meta.gain > 0.0)) throw std::invalid_argument("sample_heterodyne: gain must be > 0");
  const int m = st.space.n_modes();
  std::vector<double> noise = meta.noise_photons;
  if (noise.empty()) noise.assign(static_cast<std::size_t>(m), 0.0);
  if (noise.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("sample_heterodyne: one noise entry per mode");
  for (double v : noise)
    if (v < 0.0) throw std::invalid_argument("sample_heterodyne: noise_photons must be >= 0");

  HusimiSampler sampler(st);
  QuadratureRecord rec;
  rec.n_modes = m;
  rec.n_samples = n_samples;
  rec.sample_rate = meta.sample_rate;
  rec.gain = meta.gain;
  rec.noise_photons = noise;
  rec.pump_phase = meta.pump_phase;
  rec.pump_on = meta.pump_on;
  rec.calibration_note = meta.calibration_note;
  rec.samples.resize(n_samples * rec.row_width());

  const double root_gain = std::sqrt(meta.gain);
  std::vector<double> sigma(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) sigma[static_cast<std::size_t>(i)] = std::sqrt(noise[static_cast<std::size_t>(i)]);

  for_each_block(n_samples, 65536, [&](std::size_t block, std::size_t lo, std::size_t hi) {
    auto rng = make_stream_rng(seed, block);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto component = sampler.component_distribution();
    double row[6];
    for (std::size_t k = lo; k < hi; ++k) {
      sampler.draw(rng, component, row);
      double* dst = rec.samples.data() + k * rec.row_width();
      for (int mode = 0; mode < m; ++mode) {
        const double s = sigma[static_cast<std::size_t>(mode)];
        double x = row[2 * mode], p = row[2 * mode + 1];
        if (s > 0.0) {
          x += s * gauss(rng);
          p += s * gauss(rng);
        }
        dst[2 * mode] = root_gain * x;
        dst[2 * mode + 1] = root_gain * p;
      }
    }
  });
  return rec;
}

struct FluxDensityEstimate {
  double value = 0.0;      // photons/s/Hz
  double bandwidth = 0.0;  // Hz
  double mean_photons = 0.0;
  double std_error = 0.0;
  bool clamped = false;  // negative excess clamped to zero
};

// Photon-flux-density estimate from excess calibrated quadrature variance
// over the heterodyne vacuum level (2 per quadrature in x = a + adag units)
// and the recorded system noise. The intracavity occupation stands in for the
// propagating mode: F ~= kappa <n> / bandwidth with bandwidth = kappa / 2 pi.
// This is a labeled approximation, not a full input-output treatment.
inline FluxDensityEstimate flux_density(const QuadratureRecord& rec, int mode, double kappa,
                                        int n_batches = 100) {
  rec.validate();
  if (mode < 0 || mode >= rec.n_modes) throw std::invalid_argument("flux_density: bad mode");
  if (!(kappa > 0.0)) throw std::invalid_argument("flux_density: kappa must be > 0");
  const stats::StreamView views[2] = {stats::quadrature_stream(rec, mode, stats::Quad::I),
                                      stats::quadrature_stream(rec, mode, stats::Quad::Q)};
  stats::MomentSummary s = stats::accumulate_moments(views, n_batches);
  const double noise = rec.noise_photons[static_cast<std::size_t>(mode)];
  auto excess_to_n = [&](double vx, double vp) { return (vx + vp - 4.0 - 2.0 * noise) / 4.0; };
  const double n_est = excess_to_n(s.covariance(0, 0), s.covariance(1, 1));
  std::vector<double> per_batch;
  for (int b = 0; b < s.n_batches; ++b)
    per_batch.push_back(excess_to_n(s.batch_covariance(b, 0, 0), s.batch_covariance(b, 1, 1)));
  const stats::Estimate est = stats::detail::batch_estimate(n_est, per_batch);

  FluxDensityEstimate out;
  out.bandwidth = kappa / two_pi;
  out.mean_photons = est.value;
  out.std_error = two_pi * est.std_error;
  if (est.value < 0.0) {
    out.clamped = true;
    out.value = 0.0;
  } else {
    out.value = two_pi * est.value;  // kappa <n> / (kappa / 2 pi)
  }
  return out;
}

} // namespace triphoton::meas

#endif

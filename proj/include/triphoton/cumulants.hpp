#ifndef TRIPHOTON_CUMULANTS_HPP
#define TRIPHOTON_CUMULANTS_HPP

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "triphoton/parallel.hpp"
#include "triphoton/record.hpp"

namespace triphoton::stats {

struct DegenerateVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Strided, scaled view over a sample column; covers record quadratures and
// plain vectors without copying.
struct StreamView {
  const double* data = nullptr;
  std::size_t n = 0;
  std::size_t stride = 1;
  double scale = 1.0;

  double operator[](std::size_t k) const { return data[k * stride] * scale; }

  static StreamView of(std::span<const double> v) { return {v.data(), v.size(), 1, 1.0}; }
};

enum class Quad { I, Q };

// Calibrated quadrature stream of a record: x = I/sqrt(G) or p = Q/sqrt(G).
inline StreamView quadrature_stream(const meas::QuadratureRecord& rec, int mode, Quad which) {
  if (mode < 0 || mode >= rec.n_modes)
    throw std::invalid_argument("quadrature_stream: mode out of range");
  StreamView s;
  s.data = rec.samples.data() + 2 * static_cast<std::size_t>(mode) + (which == Quad::Q ? 1 : 0);
  s.n = rec.n_samples;
  s.stride = rec.row_width();
  s.scale = 1.0 / std::sqrt(rec.gain);
  return s;
}

// Parse "I2" / "Q1" style quadrature names (modes are 1-based in names).
inline std::pair<int, Quad> parse_quad_name(const std::string& name) {
  if (name.size() != 2 || (name[0] != 'I' && name[0] != 'Q') || name[1] < '1' || name[1] > '3')
    throw std::invalid_argument("bad quadrature name '" + name + "' (expected I1..Q3)");
  return {name[1] - '1', name[0] == 'I' ? Quad::I : Quad::Q};
}

namespace detail {

inline std::size_t cov_size(int k) { return static_cast<std::size_t>(k * (k + 1)) / 2; }
inline std::size_t m3_size(int k) { return static_cast<std::size_t>(k * (k + 1) * (k + 2)) / 6; }

// packed index for i <= j
inline std::size_t cov_index(int i, int j) {
  return static_cast<std::size_t>(j * (j + 1) / 2 + i);
}
// packed index for i <= j <= l
inline std::size_t m3_index(int i, int j, int l) {
  return static_cast<std::size_t>(l * (l + 1) * (l + 2) / 6 + j * (j + 1) / 2 + i);
}

} // namespace detail

// Joint first/second/third central moments of up to six streams, with
// per-batch copies for batch-means standard errors. Batches are contiguous,
// non-overlapping, and centered at their own batch means; the full-sample
// moments are centered at the global mean. Accumulation is parallel over
// batches and bit-reproducible for any thread count.
struct MomentSummary {
  int k = 0;
  std::size_t n = 0;
  int n_batches = 0;
  std::vector<double> mean;  // k
  std::vector<double> cov;   // packed i<=j
  std::vector<double> m3;    // packed i<=j<=l
  std::vector<std::size_t> batch_n;
  std::vector<double> batch_mean, batch_cov, batch_m3;  // n_batches x packed

  double covariance(int i, int j) const {
    return cov[detail::cov_index(std::min(i, j), std::max(i, j))];
  }
  double third(int i, int j, int l) const {
    int a = i, b = j, c = l;
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    return m3[detail::m3_index(a, b, c)];
  }
  double batch_covariance(int b, int i, int j) const {
    return batch_cov[static_cast<std::size_t>(b) * detail::cov_size(k) +
                     detail::cov_index(std::min(i, j), std::max(i, j))];
  }
  double batch_third(int b, int i, int j, int l) const {
    int x = i, y = j, z = l;
    if (x > y) std::swap(x, y);
    if (y > z) std::swap(y, z);
    if (x > y) std::swap(x, y);
    return batch_m3[static_cast<std::size_t>(b) * detail::m3_size(k) + detail::m3_index(x, y, z)];
  }
};

inline MomentSummary accumulate_moments(std::span<const StreamView> streams, int n_batches = 100) {
  const int k = static_cast<int>(streams.size());
  if (k < 1 || k > 6) throw std::invalid_argument("accumulate_moments: 1-6 streams supported");
  const std::size_t n = streams[0].n;
  for (const auto& s : streams)
    if (s.n != n) throw LengthMismatch("accumulate_moments: stream lengths differ");
  if (n < 2) throw DegenerateVariance("accumulate_moments: need at least 2 samples");

  MomentSummary out;
  out.k = k;
  out.n = n;
  const int B = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n_batches), n / 2));
  out.n_batches = std::max(1, B);
  const std::size_t cs = detail::cov_size(k);
  const std::size_t ms = detail::m3_size(k);
  const std::size_t nb = static_cast<std::size_t>(out.n_batches);

  out.batch_n.assign(nb, 0);
  out.batch_mean.assign(nb * static_cast<std::size_t>(k), 0.0);
  out.batch_cov.assign(nb * cs, 0.0);
  out.batch_m3.assign(nb * ms, 0.0);

  auto batch_range = [&](std::size_t b) {
    const std::size_t lo = n * b / nb;
    const std::size_t hi = n * (b + 1) / nb;
    return std::pair<std::size_t, std::size_t>(lo, hi);
  };

  // pass 1: batch sums -> batch and global means
  for_each_block(nb, 1, [&](std::size_t b, std::size_t, std::size_t) {
    auto [lo, hi] = batch_range(b);
    double sums[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t i = lo; i < hi; ++i)
      for (int s = 0; s < k; ++s) sums[s] += streams[static_cast<std::size_t>(s)][i];
    out.batch_n[b] = hi - lo;
    for (int s = 0; s < k; ++s)
      out.batch_mean[b * static_cast<std::size_t>(k) + static_cast<std::size_t>(s)] =
          sums[s] / static_cast<double>(hi - lo);
  });
  out.mean.assign(static_cast<std::size_t>(k), 0.0);
  for (std::size_t b = 0; b < nb; ++b)
    for (int s = 0; s < k; ++s)
      out.mean[static_cast<std::size_t>(s)] +=
          out.batch_mean[b * static_cast<std::size_t>(k) + static_cast<std::size_t>(s)] *
          static_cast<double>(out.batch_n[b]);
  for (int s = 0; s < k; ++s) out.mean[static_cast<std::size_t>(s)] /= static_cast<double>(n);

  // pass 2: central products, batch-centered and global-centered
  std::vector<double> global_cov(nb * cs, 0.0), global_m3(nb * ms, 0.0);
  for_each_block(nb, 1, [&](std::size_t b, std::size_t, std::size_t) {
    auto [lo, hi] = batch_range(b);
    double bc[6], d[6], g[6];
    for (int s = 0; s < k; ++s)
      bc[s] = out.batch_mean[b * static_cast<std::size_t>(k) + static_cast<std::size_t>(s)];
    double* covb = out.batch_cov.data() + b * cs;
    double* m3b = out.batch_m3.data() + b * ms;
    double* covg = global_cov.data() + b * cs;
    double* m3g = global_m3.data() + b * ms;
    for (std::size_t i = lo; i < hi; ++i) {
      for (int s = 0; s < k; ++s) {
        const double v = streams[static_cast<std::size_t>(s)][i];
        d[s] = v - bc[s];
        g[s] = v - out.mean[static_cast<std::size_t>(s)];
      }
      std::size_t ci = 0, mi = 0;
      for (int j = 0; j < k; ++j)
        for (int i2 = 0; i2 <= j; ++i2, ++ci) {
          covb[ci] += d[i2] * d[j];
          covg[ci] += g[i2] * g[j];
        }
      for (int l = 0; l < k; ++l)
        for (int j = 0; j <= l; ++j)
          for (int i2 = 0; i2 <= j; ++i2, ++mi) {
            m3b[mi] += d[i2] * d[j] * d[l];
            m3g[mi] += g[i2] * g[j] * g[l];
          }
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (std::size_t c = 0; c < cs; ++c) covb[c] *= inv;
    for (std::size_t c = 0; c < ms; ++c) m3b[c] *= inv;
  });
  out.cov.assign(cs, 0.0);
  out.m3.assign(ms, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t c = 0; c < cs; ++c) out.cov[c] += global_cov[b * cs + c];
    for (std::size_t c = 0; c < ms; ++c) out.m3[c] += global_m3[b * ms + c];
  }
  for (std::size_t c = 0; c < cs; ++c) out.cov[c] /= static_cast<double>(n);
  for (std::size_t c = 0; c < ms; ++c) out.m3[c] /= static_cast<double>(n);
  return out;
}

namespace detail {

inline Estimate batch_estimate(double full_value, std::span<const double> batch_values) {
  const std::size_t B = batch_values.size();
  if (B < 2) return {full_value, 0.0};
  double mean = 0.0;
  for (double v : batch_values) mean += v;
  mean /= static_cast<double>(B);
  double var = 0.0;
  for (double v : batch_values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(B - 1);
  return {full_value, std::sqrt(var / static_cast<double>(B))};
}

} // namespace detail

// Third standardized central moment m3 / sigma^3 with a batch-means standard
// error. (The standardized-moment denominator is sigma cubed.)
inline Estimate skewness(const StreamView& stream, int n_batches = 100) {
  const StreamView views[1] = {stream};
  MomentSummary s = accumulate_moments(views, n_batches);
  const double var = s.covariance(0, 0);
  if (!(var > 0.0)) throw DegenerateVariance("skewness: zero variance");
  const double full = s.third(0, 0, 0) / std::pow(var, 1.5);
  std::vector<double> per_batch;
  per_batch.reserve(static_cast<std::size_t>(s.n_batches));
  for (int b = 0; b < s.n_batches; ++b) {
    const double bv = s.batch_covariance(b, 0, 0);
    if (bv > 0.0) per_batch.push_back(s.batch_third(b, 0, 0, 0) / std::pow(bv, 1.5));
  }
  return detail::batch_estimate(full, per_batch);
}

inline Estimate skewness(std::span<const double> samples, int n_batches = 100) {
  return skewness(StreamView::of(samples), n_batches);
}

// Standardized mixed third central moment mean(abc)/(sa sb sc), symmetric
// under any permutation of the three streams.
inline Estimate coskewness(const StreamView& a, const StreamView& b, const StreamView& c,
                           int n_batches = 100) {
  const StreamView views[3] = {a, b, c};
  MomentSummary s = accumulate_moments(views, n_batches);
  const double v0 = s.covariance(0, 0), v1 = s.covariance(1, 1), v2 = s.covariance(2, 2);
  if (!(v0 > 0.0) || !(v1 > 0.0) || !(v2 > 0.0))
    throw DegenerateVariance("coskewness: zero variance");
  const double full = s.third(0, 1, 2) / std::sqrt(v0 * v1 * v2);
  std::vector<double> per_batch;
  for (int b2 = 0; b2 < s.n_batches; ++b2) {
    const double b0 = s.batch_covariance(b2, 0, 0), b1 = s.batch_covariance(b2, 1, 1),
                 bb2 = s.batch_covariance(b2, 2, 2);
    if (b0 > 0.0 && b1 > 0.0 && bb2 > 0.0)
      per_batch.push_back(s.batch_third(b2, 0, 1, 2) / std::sqrt(b0 * b1 * bb2));
  }
  return detail::batch_estimate(full, per_batch);
}

inline Estimate coskewness(std::span<const double> a, std::span<const double> b,
                           std::span<const double> c, int n_batches = 100) {
  if (a.size() != b.size() || a.size() != c.size())
    throw LengthMismatch("coskewness: unequal lengths");
  return coskewness(StreamView::of(a), StreamView::of(b), StreamView::of(c), n_batches);
}

// Pearson correlation coefficient with a batch-means standard error.
inline Estimate correlation(const StreamView& a, const StreamView& b, int n_batches = 100) {
  const StreamView views[2] = {a, b};
  MomentSummary s = accumulate_moments(views, n_batches);
  const double v0 = s.covariance(0, 0), v1 = s.covariance(1, 1);
  if (!(v0 > 0.0) || !(v1 > 0.0)) throw DegenerateVariance("correlation: zero variance");
  const double full = s.covariance(0, 1) / std::sqrt(v0 * v1);
  std::vector<double> per_batch;
  for (int b2 = 0; b2 < s.n_batches; ++b2) {
    const double b0 = s.batch_covariance(b2, 0, 0), b1 = s.batch_covariance(b2, 1, 1);
    if (b0 > 0.0 && b1 > 0.0)
      per_batch.push_back(s.batch_covariance(b2, 0, 1) / std::sqrt(b0 * b1));
  }
  return detail::batch_estimate(full, per_batch);
}

// Standardized cumulant digest of a set of streams: means, covariance and the
// standardized third-moment tensor, each with batch-means standard errors.
struct CumulantSummary {
  std::vector<std::string> names;
  std::vector<Estimate> means;        // per stream
  std::vector<Estimate> covariance;   // packed i<=j, normalized (Pearson off-diagonal)
  std::vector<Estimate> coskewness;   // packed i<=j<=l, standardized
  std::size_t n = 0;
  int n_batches = 0;

  const Estimate& covariance_entry(int i, int j) const {
    return covariance[detail::cov_index(std::min(i, j), std::max(i, j))];
  }
  const Estimate& coskewness_entry(int i, int j, int l) const {
    int a = i, b = j, c = l;
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    return coskewness[detail::m3_index(a, b, c)];
  }
};

inline CumulantSummary cumulant_summary(std::span<const StreamView> streams,
                                        std::span<const std::string> names, int n_batches = 100) {
  const MomentSummary s = accumulate_moments(streams, n_batches);
  const int k = s.k;
  CumulantSummary out;
  out.names.assign(names.begin(), names.end());
  out.n = s.n;
  out.n_batches = s.n_batches;

  auto batched = [&](const std::function<double(int)>& per_batch, double full) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(s.n_batches));
    for (int b = 0; b < s.n_batches; ++b) vals.push_back(per_batch(b));
    return detail::batch_estimate(full, vals);
  };

  for (int i = 0; i < k; ++i)
    out.means.push_back(batched(
        [&](int b) { return s.batch_mean[static_cast<std::size_t>(b) * static_cast<std::size_t>(k) + static_cast<std::size_t>(i)]; },
        s.mean[static_cast<std::size_t>(i)]));
  for (int j = 0; j < k; ++j)
    for (int i = 0; i <= j; ++i) {
      if (i == j) {
        out.covariance.push_back(
            batched([&](int b) { return s.batch_covariance(b, i, i); }, s.covariance(i, i)));
      } else {
        auto pearson = [&](double cij, double cii, double cjj) {
          return (cii > 0.0 && cjj > 0.0) ? cij / std::sqrt(cii * cjj) : 0.0;
        };
        out.covariance.push_back(batched(
            [&](int b) {
              return pearson(s.batch_covariance(b, i, j), s.batch_covariance(b, i, i),
                             s.batch_covariance(b, j, j));
            },
            pearson(s.covariance(i, j), s.covariance(i, i), s.covariance(j, j))));
      }
    }
  auto standardized = [&](double m, double vi, double vj, double vl) {
    return (vi > 0.0 && vj > 0.0 && vl > 0.0) ? m / std::sqrt(vi * vj * vl) : 0.0;
  };
  for (int l = 0; l < k; ++l)
    for (int j = 0; j <= l; ++j)
      for (int i = 0; i <= j; ++i)
        out.coskewness.push_back(batched(
            [&](int b) {
              return standardized(s.batch_third(b, i, j, l), s.batch_covariance(b, i, i),
                                  s.batch_covariance(b, j, j), s.batch_covariance(b, l, l));
            },
            standardized(s.third(i, j, l), s.covariance(i, i), s.covariance(j, j),
                         s.covariance(l, l))));
  return out;
}

// All calibrated quadratures of a record, I1, Q1, I2, ...
inline CumulantSummary cumulant_summary(const meas::QuadratureRecord& rec, int n_batches = 100) {
  std::vector<StreamView> streams;
  std::vector<std::string> names;
  for (int m = 0; m < rec.n_modes; ++m) {
    streams.push_back(quadrature_stream(rec, m, Quad::I));
    names.push_back("I" + std::to_string(m + 1));
    streams.push_back(quadrature_stream(rec, m, Quad::Q));
    names.push_back("Q" + std::to_string(m + 1));
  }
  return cumulant_summary(streams, names, n_batches);
}

// Calibrated rotated quadrature x cos(phi) - p sin(phi) of one record mode.
inline std::vector<double> generalized_quadrature(const meas::QuadratureRecord& rec, int mode,
                                                  double phi) {
  const StreamView x = quadrature_stream(rec, mode, Quad::I);
  const StreamView p = quadrature_stream(rec, mode, Quad::Q);
  const double c = std::cos(phi), s = std::sin(phi);
  std::vector<double> out(rec.n_samples);
  for (std::size_t i = 0; i < rec.n_samples; ++i) out[i] = x[i] * c - p[i] * s;
  return out;
}

} // namespace triphoton::stats

#endif

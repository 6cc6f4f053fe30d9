#ifndef TRIPHOTON_FINGERPRINT_HPP
#define TRIPHOTON_FINGERPRINT_HPP

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "triphoton/cumulants.hpp"
#include "triphoton/sim.hpp"

namespace triphoton::stats {

struct BinMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedHamiltonian : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sampled skewness field over scan angles: polar (phi) for one mode, or
// spherical (theta, phi) for a three-quadrature selection.
struct FingerprintMap {
  enum class Kind { polar_1mode, spherical_3quad };
  Kind kind = Kind::polar_1mode;
  std::vector<double> phi;        // n_phi angles
  std::vector<double> theta;      // n_theta angles (empty for polar)
  std::vector<double> values;     // polar: [iphi]; spherical: [itheta * n_phi + iphi]
  std::vector<double> std_errors; // same layout; empty for theory maps
  double node_antinode_ratio = 0.0;

  double at(std::size_t itheta, std::size_t iphi) const {
    return values[itheta * phi.size() + iphi];
  }
};

namespace detail {

// gamma(u) = sum_{i<=j<=l} mult * u_i u_j u_l m3_ijl / (sum_{i<=j} mult * u_i u_j C_ij)^{3/2}
inline double contract_gamma(std::span<const double> u, const double* cov, const double* m3,
                             int k) {
  double var = 0.0;
  std::size_t ci = 0;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i <= j; ++i, ++ci) var += (i == j ? 1.0 : 2.0) * u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)] * cov[ci];
  double third = 0.0;
  std::size_t mi = 0;
  for (int l = 0; l < k; ++l)
    for (int j = 0; j <= l; ++j)
      for (int i = 0; i <= j; ++i, ++mi) {
        double mult = 6.0;
        if (i == j && j == l) mult = 1.0;
        else if (i == j || j == l) mult = 3.0;
        third += mult * u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)] * u[static_cast<std::size_t>(l)] * m3[mi];
      }
  if (!(var > 0.0)) throw DegenerateVariance("fingerprint: zero variance along scan direction");
  return third / (var * std::sqrt(var));
}

inline void scan_with_errors(const MomentSummary& s,
                             const std::vector<std::vector<double>>& directions,
                             std::vector<double>& values, std::vector<double>& errors) {
  const int k = s.k;
  const std::size_t cs = cov_size(k), ms = m3_size(k);
  values.resize(directions.size());
  errors.resize(directions.size());
  std::vector<double> batch_vals(static_cast<std::size_t>(s.n_batches));
  for (std::size_t g = 0; g < directions.size(); ++g) {
    values[g] = contract_gamma(directions[g], s.cov.data(), s.m3.data(), k);
    for (int b = 0; b < s.n_batches; ++b)
      batch_vals[static_cast<std::size_t>(b)] =
          contract_gamma(directions[g], s.batch_cov.data() + static_cast<std::size_t>(b) * cs,
                         s.batch_m3.data() + static_cast<std::size_t>(b) * ms, k);
    errors[g] = batch_estimate(values[g], batch_vals).std_error;
  }
}

// Eq.-style scan direction for the spherical fingerprint:
// A' = cos(phi) cos(theta) A - sin(phi) B + cos(phi) sin(theta) C
inline std::vector<double> spherical_direction(double theta, double phi) {
  return {std::cos(phi) * std::cos(theta), -std::sin(phi), std::cos(phi) * std::sin(theta)};
}

inline double plane_ratio_spherical(const FingerprintMap& map) {
  double plane_max = 0.0, global_max = 0.0;
  for (std::size_t it = 0; it < map.theta.size(); ++it)
    for (std::size_t ip = 0; ip < map.phi.size(); ++ip) {
      const auto u = spherical_direction(map.theta[it], map.phi[ip]);
      const double v = std::abs(map.at(it, ip));
      global_max = std::max(global_max, v);
      const double min_comp = std::min({std::abs(u[0]), std::abs(u[1]), std::abs(u[2])});
      if (min_comp < 1e-12) plane_max = std::max(plane_max, v);
    }
  return global_max > 0.0 ? plane_max / global_max : 0.0;
}

} // namespace detail

// gamma_phi on a uniform phi grid for one record mode, computed by
// contracting the once-accumulated (x, p) moment tensors with the scan
// direction (cos phi, -sin phi); no noise subtraction is applied.
inline FingerprintMap polar_scan(const meas::QuadratureRecord& rec, int mode, int n_angles = 120,
                                 int n_batches = 100) {
  if (n_angles < 3) throw std::invalid_argument("polar_scan: need at least 3 angles");
  const StreamView streams[2] = {quadrature_stream(rec, mode, Quad::I),
                                 quadrature_stream(rec, mode, Quad::Q)};
  const MomentSummary s = accumulate_moments(streams, n_batches);
  FingerprintMap map;
  map.kind = FingerprintMap::Kind::polar_1mode;
  map.phi.resize(static_cast<std::size_t>(n_angles));
  std::vector<std::vector<double>> dirs(static_cast<std::size_t>(n_angles));
  for (int i = 0; i < n_angles; ++i) {
    const double phi = two_pi * i / n_angles;
    map.phi[static_cast<std::size_t>(i)] = phi;
    dirs[static_cast<std::size_t>(i)] = {std::cos(phi), -std::sin(phi)};
  }
  detail::scan_with_errors(s, dirs, map.values, map.std_errors);
  double lo = std::abs(map.values[0]), hi = lo;
  for (double v : map.values) {
    lo = std::min(lo, std::abs(v));
    hi = std::max(hi, std::abs(v));
  }
  map.node_antinode_ratio = hi > 0.0 ? lo / hi : 0.0;
  return map;
}

using QuadSelection = std::array<std::pair<int, Quad>, 3>;

inline QuadSelection parse_selection(const std::array<std::string, 3>& names) {
  QuadSelection sel;
  for (int i = 0; i < 3; ++i) sel[static_cast<std::size_t>(i)] = parse_quad_name(names[static_cast<std::size_t>(i)]);
  return sel;
}

// gamma_(phi,theta) of the generalized quadrature mixing three selected
// quadratures under the passive symplectic scan, theta in [0, pi], phi in
// [0, 2 pi). node_antinode_ratio compares the largest |gamma| on the three
// coordinate planes against the global maximum.
inline FingerprintMap spherical_scan(const meas::QuadratureRecord& rec, const QuadSelection& sel,
                                     int n_theta = 181, int n_phi = 360, int n_batches = 100) {
  if (n_theta < 3 || n_phi < 4) throw std::invalid_argument("spherical_scan: grid too small");
  if (sel[0] == sel[1] || sel[0] == sel[2] || sel[1] == sel[2])
    throw std::invalid_argument("spherical_scan: quadratures must be distinct");
  const StreamView streams[3] = {quadrature_stream(rec, sel[0].first, sel[0].second),
                                 quadrature_stream(rec, sel[1].first, sel[1].second),
                                 quadrature_stream(rec, sel[2].first, sel[2].second)};
  const MomentSummary s = accumulate_moments(streams, n_batches);
  FingerprintMap map;
  map.kind = FingerprintMap::Kind::spherical_3quad;
  map.theta.resize(static_cast<std::size_t>(n_theta));
  map.phi.resize(static_cast<std::size_t>(n_phi));
  for (int it = 0; it < n_theta; ++it) map.theta[static_cast<std::size_t>(it)] = pi * it / (n_theta - 1);
  for (int ip = 0; ip < n_phi; ++ip) map.phi[static_cast<std::size_t>(ip)] = two_pi * ip / n_phi;
  std::vector<std::vector<double>> dirs;
  dirs.reserve(static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_phi));
  for (int it = 0; it < n_theta; ++it)
    for (int ip = 0; ip < n_phi; ++ip)
      dirs.push_back(detail::spherical_direction(map.theta[static_cast<std::size_t>(it)],
                                                 map.phi[static_cast<std::size_t>(ip)]));
  detail::scan_with_errors(s, dirs, map.values, map.std_errors);
  map.node_antinode_ratio = detail::plane_ratio_spherical(map);
  return map;
}

namespace detail {

// central Husimi moments of the selected quadrature axes of a state
struct TheoryMoments {
  std::vector<double> cov;  // packed i<=j
  std::vector<double> m3;   // packed i<=j<=l
};

inline TheoryMoments husimi_central_moments(const fock::FockState& st,
                                            std::span<const fock::QuadAxis> axes) {
  const int k = static_cast<int>(axes.size());
  std::vector<double> mu(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const fock::QuadAxis a[1] = {axes[static_cast<std::size_t>(i)]};
    mu[static_cast<std::size_t>(i)] = fock::husimi_quadrature_moment(st, a);
  }
  TheoryMoments out;
  out.cov.resize(cov_size(k));
  out.m3.resize(m3_size(k));
  std::size_t ci = 0;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i <= j; ++i, ++ci) {
      const fock::QuadAxis a[2] = {axes[static_cast<std::size_t>(i)], axes[static_cast<std::size_t>(j)]};
      out.cov[ci] = fock::husimi_quadrature_moment(st, a) - mu[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(j)];
    }
  std::size_t mi = 0;
  for (int l = 0; l < k; ++l)
    for (int j = 0; j <= l; ++j)
      for (int i = 0; i <= j; ++i, ++mi) {
        const fock::QuadAxis a[3] = {axes[static_cast<std::size_t>(i)], axes[static_cast<std::size_t>(j)],
                                     axes[static_cast<std::size_t>(l)]};
        const double raw = fock::husimi_quadrature_moment(st, a);
        // central third moment
        out.m3[mi] = raw - mu[static_cast<std::size_t>(i)] * (out.cov[cov_index(std::min(j, l), std::max(j, l))]) -
                     mu[static_cast<std::size_t>(j)] * (out.cov[cov_index(std::min(i, l), std::max(i, l))]) -
                     mu[static_cast<std::size_t>(l)] * (out.cov[cov_index(std::min(i, j), std::max(i, j))]) -
                     mu[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(j)] * mu[static_cast<std::size_t>(l)];
      }
  return out;
}

inline void check_table_family(const rwa::EffectiveHamiltonian& eff) {
  if (eff.terms.size() != 2)
    throw UnsupportedHamiltonian("theory_fingerprint: expected one conjugate term pair");
  // locate the pure downconversion (all-annihilation) side
  const rwa::HamiltonianTerm* down = nullptr;
  for (const auto& t : eff.terms) {
    bool pure = true;
    for (int c : t.creation) pure = pure && (c == 0);
    if (pure) down = &t;
  }
  if (!down) throw UnsupportedHamiltonian("theory_fingerprint: no pure downconversion term");
  std::vector<int> pattern = down->annihilation;
  std::sort(pattern.begin(), pattern.end(), std::greater<int>());
  while (!pattern.empty() && pattern.back() == 0) pattern.pop_back();
  const bool cubic = (pattern == std::vector<int>{3} || pattern == std::vector<int>{2, 1} ||
                      pattern == std::vector<int>{1, 1, 1});
  if (!cubic) throw UnsupportedHamiltonian("theory_fingerprint: not a cubic SPDC Hamiltonian");
  const auto conj = down->conjugate();
  const auto& other = (&eff.terms[0] == down) ? eff.terms[1] : eff.terms[0];
  if (!other.same_powers(conj) ||
      std::abs(other.coefficient - conj.coefficient) > 1e-9 * std::abs(conj.coefficient))
    throw UnsupportedHamiltonian("theory_fingerprint: terms are not a Hermitian pair");
}

} // namespace detail

// Theory fingerprint from quantum correlators of the short-time evolved
// state: all third-order Husimi correlators of the selected quadratures are
// computed once and contracted with the scan direction per grid point.
// Values are normalized to max |gamma| = 1; no other free parameters.
inline FingerprintMap theory_fingerprint(const rwa::EffectiveHamiltonian& eff,
                                       const QuadSelection& sel, double drive, int n_theta = 181,
                                       int n_phi = 360,
                                       const fock::FockSpace* space_override = nullptr) {
  detail::check_table_family(eff);
  fock::FockSpace space =
      space_override ? *space_override
                     : sim::default_space(eff.n_modes() == 1   ? sim::Process::single_mode
                                          : eff.n_modes() == 2 ? sim::Process::two_mode
                                                               : sim::Process::three_mode);
  for (const auto& [mode, q] : sel)
    if (mode < 0 || mode >= eff.n_modes())
      throw std::invalid_argument("theory_fingerprint: quadrature names a missing mode");
  const auto h = fock::build_hamiltonian(space, eff);
  const double rate = eff.coupling_rate();
  const auto res = fock::evolve(fock::FockState::vacuum(space), h, drive / rate);
  std::vector<fock::QuadAxis> axes;
  for (const auto& [mode, q] : sel)
    axes.push_back({mode, q == Quad::I ? fock::QuadAxis::X : fock::QuadAxis::P});
  const detail::TheoryMoments tm = detail::husimi_central_moments(res.state, axes);

  FingerprintMap map;
  map.kind = FingerprintMap::Kind::spherical_3quad;
  map.theta.resize(static_cast<std::size_t>(n_theta));
  map.phi.resize(static_cast<std::size_t>(n_phi));
  for (int it = 0; it < n_theta; ++it) map.theta[static_cast<std::size_t>(it)] = pi * it / (n_theta - 1);
  for (int ip = 0; ip < n_phi; ++ip) map.phi[static_cast<std::size_t>(ip)] = two_pi * ip / n_phi;
  map.values.resize(static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_phi));
  double max_abs = 0.0;
  for (int it = 0; it < n_theta; ++it)
    for (int ip = 0; ip < n_phi; ++ip) {
      const auto u = detail::spherical_direction(map.theta[static_cast<std::size_t>(it)],
                                                 map.phi[static_cast<std::size_t>(ip)]);
      const double g = detail::contract_gamma(u, tm.cov.data(), tm.m3.data(), 3);
      map.values[static_cast<std::size_t>(it) * static_cast<std::size_t>(n_phi) + static_cast<std::size_t>(ip)] = g;
      max_abs = std::max(max_abs, std::abs(g));
    }
  if (max_abs > 0.0)
    for (double& v : map.values) v /= max_abs;
  map.node_antinode_ratio = detail::plane_ratio_spherical(map);
  return map;
}

inline FingerprintMap theory_fingerprint(const rwa::EffectiveHamiltonian& eff, int mode, double drive,
                                   int n_angles = 120,
                                   const fock::FockSpace* space_override = nullptr) {
  detail::check_table_family(eff);
  if (mode < 0 || mode >= eff.n_modes())
    throw std::invalid_argument("theory_fingerprint: mode out of range");
  fock::FockSpace space =
      space_override ? *space_override
                     : sim::default_space(eff.n_modes() == 1   ? sim::Process::single_mode
                                          : eff.n_modes() == 2 ? sim::Process::two_mode
                                                               : sim::Process::three_mode);
  const auto h = fock::build_hamiltonian(space, eff);
  const auto res = fock::evolve(fock::FockState::vacuum(space), h, drive / eff.coupling_rate());
  const std::vector<fock::QuadAxis> axes{{mode, fock::QuadAxis::X}, {mode, fock::QuadAxis::P}};
  const detail::TheoryMoments tm = detail::husimi_central_moments(res.state, axes);

  FingerprintMap map;
  map.kind = FingerprintMap::Kind::polar_1mode;
  map.phi.resize(static_cast<std::size_t>(n_angles));
  map.values.resize(static_cast<std::size_t>(n_angles));
  double max_abs = 0.0;
  for (int i = 0; i < n_angles; ++i) {
    const double phi = two_pi * i / n_angles;
    map.phi[static_cast<std::size_t>(i)] = phi;
    const std::vector<double> u{std::cos(phi), -std::sin(phi)};
    const double g = detail::contract_gamma(u, tm.cov.data(), tm.m3.data(), 2);
    map.values[static_cast<std::size_t>(i)] = g;
    max_abs = std::max(max_abs, std::abs(g));
  }
  if (max_abs > 0.0)
    for (double& v : map.values) v /= max_abs;
  double lo = std::abs(map.values[0]), hi = lo;
  for (double v : map.values) {
    lo = std::min(lo, std::abs(v));
    hi = std::max(hi, std::abs(v));
  }
  map.node_antinode_ratio = hi > 0.0 ? lo / hi : 0.0;
  return map;
}

// Cosine similarity between two maps on identical grids.
inline double cosine_similarity(const FingerprintMap& a, const FingerprintMap& b) {
  if (a.values.size() != b.values.size())
    throw BinMismatch("cosine_similarity: grids differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

struct SinusoidFit {
  double amplitude = 0.0;
  double phase = 0.0;   // value = amplitude * sin(x + phase) + offset
  double offset = 0.0;
  double r_squared = 0.0;
  double residual_rms = 0.0;
};

// Least-squares fit of a 2 pi-periodic sinusoid on (x, y) pairs.
inline SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 4)
    throw std::invalid_argument("fit_sinusoid: need >= 4 points");
  // normal equations for y = a sin x + b cos x + c
  double s[3][3] = {{0}}, rhs[3] = {0, 0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double basis[3] = {std::sin(x[i]), std::cos(x[i]), 1.0};
    for (int r = 0; r < 3; ++r) {
      rhs[r] += basis[r] * y[i];
      for (int c = 0; c < 3; ++c) s[r][c] += basis[r] * basis[c];
    }
  }
  // 3x3 solve by Cramer's rule
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det3(s);
  if (std::abs(d) < 1e-12) throw std::runtime_error("fit_sinusoid: singular design matrix");
  double sol[3];
  for (int c = 0; c < 3; ++c) {
    double m[3][3];
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc) m[r][cc] = (cc == c) ? rhs[r] : s[r][cc];
    sol[c] = det3(m) / d;
  }
  SinusoidFit fit;
  fit.amplitude = std::hypot(sol[0], sol[1]);
  fit.phase = std::atan2(sol[1], sol[0]);
  fit.offset = sol[2];
  double ss_res = 0.0, ss_tot = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) mean += y[i];
  mean /= static_cast<double>(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double model = sol[0] * std::sin(x[i]) + sol[1] * std::cos(x[i]) + sol[2];
    ss_res += (y[i] - model) * (y[i] - model);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  fit.residual_rms = std::sqrt(ss_res / static_cast<double>(x.size()));
  return fit;
}

struct SweepPoint {
  double phase = 0.0;
  std::map<std::string, Estimate> covariances;   // Pearson r per quadrature pair
  std::map<std::string, Estimate> coskewnesses;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::string key;  // the coskewness column the sinusoid is fit to
  SinusoidFit fit;
};

// Pump-phase sweep: for each phase the record source is invoked, all pairwise
// correlations and a process-appropriate set of coskewnesses are computed,
// and the key coskewness is fit against a 2 pi-periodic sinusoid.
inline SweepResult pump_phase_sweep(sim::Process process, std::span<const double> phases,
                                    const std::function<meas::QuadratureRecord(double)>& source,
                                    int n_batches = 100) {
  if (phases.size() < 8) throw std::invalid_argument("pump_phase_sweep: need >= 8 phases");
  const int m = sim::process_modes(process);
  std::vector<std::string> quads;
  for (int i = 0; i < m; ++i) {
    quads.push_back("I" + std::to_string(i + 1));
    quads.push_back("Q" + std::to_string(i + 1));
  }
  std::vector<std::array<std::string, 3>> triples;
  switch (process) {
    case sim::Process::single_mode:
      triples = {{"I1", "I1", "I1"}, {"Q1", "Q1", "Q1"}, {"I1", "I1", "Q1"}, {"I1", "Q1", "Q1"}};
      break;
    case sim::Process::two_mode:
      triples = {{"I1", "I1", "I2"}, {"Q1", "Q1", "I2"}, {"I1", "Q1", "I2"},
                 {"I1", "I1", "Q2"}, {"Q1", "Q1", "Q2"}};
      break;
    case sim::Process::three_mode:
      triples = {{"I1", "I2", "I3"}, {"Q1", "Q2", "Q3"}, {"I1", "Q2", "Q3"},
                 {"Q1", "I2", "Q3"}, {"Q1", "Q2", "I3"}};
      break;
  }
  const std::string key = triples.front()[0] + triples.front()[1] + triples.front()[2];

  SweepResult out;
  out.key = key;
  std::vector<double> xs, ys;
  for (double phase : phases) {
    const meas::QuadratureRecord rec = source(phase);
    SweepPoint pt;
    pt.phase = phase;
    for (std::size_t a = 0; a < quads.size(); ++a)
      for (std::size_t b = a + 1; b < quads.size(); ++b) {
        const auto [ma, qa] = parse_quad_name(quads[a]);
        const auto [mb, qb] = parse_quad_name(quads[b]);
        pt.covariances[quads[a] + quads[b]] =
            correlation(quadrature_stream(rec, ma, qa), quadrature_stream(rec, mb, qb), n_batches);
      }
    for (const auto& t : triples) {
      const auto [m0, q0] = parse_quad_name(t[0]);
      const auto [m1, q1] = parse_quad_name(t[1]);
      const auto [m2, q2] = parse_quad_name(t[2]);
      pt.coskewnesses[t[0] + t[1] + t[2]] =
          coskewness(quadrature_stream(rec, m0, q0), quadrature_stream(rec, m1, q1),
                     quadrature_stream(rec, m2, q2), n_batches);
    }
    xs.push_back(phase);
    ys.push_back(pt.coskewnesses[key].value);
    out.points.push_back(std::move(pt));
  }
  out.fit = fit_sinusoid(xs, ys);
  return out;
}

struct HistGrid {
  int nx = 101, ny = 101;
  double xlo = -6.0, xhi = 6.0, ylo = -6.0, yhi = 6.0;
  bool operator==(const HistGrid& o) const {
    return nx == o.nx && ny == o.ny && xlo == o.xlo && xhi == o.xhi && ylo == o.ylo && yhi == o.yhi;
  }
};

struct Histogram2D {
  HistGrid grid;
  std::vector<double> density;  // row-major [iy * nx + ix], integrates to <= 1
  std::size_t n_inside = 0;
};

// Normalized 2D density of the calibrated (x, p) samples of one mode.
inline Histogram2D histogram2d(const meas::QuadratureRecord& rec, int mode, const HistGrid& grid) {
  const StreamView x = quadrature_stream(rec, mode, Quad::I);
  const StreamView p = quadrature_stream(rec, mode, Quad::Q);
  Histogram2D h;
  h.grid = grid;
  h.density.assign(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny), 0.0);
  const double wx = (grid.xhi - grid.xlo) / grid.nx;
  const double wy = (grid.yhi - grid.ylo) / grid.ny;
  for (std::size_t i = 0; i < rec.n_samples; ++i) {
    const int ix = static_cast<int>(std::floor((x[i] - grid.xlo) / wx));
    const int iy = static_cast<int>(std::floor((p[i] - grid.ylo) / wy));
    if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny) continue;
    h.density[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix)] += 1.0;
    ++h.n_inside;
  }
  const double norm = 1.0 / (static_cast<double>(rec.n_samples) * wx * wy);
  for (double& v : h.density) v *= norm;
  return h;
}

// Bin-wise subtraction of a reference histogram (e.g. the unpumped system
// noise) from a signal histogram.
inline Histogram2D subtract(const Histogram2D& a, const Histogram2D& b) {
  if (!(a.grid == b.grid)) throw BinMismatch("histogram subtract: bin grids differ");
  Histogram2D out = a;
  for (std::size_t i = 0; i < out.density.size(); ++i) out.density[i] -= b.density[i];
  return out;
}

} // namespace triphoton::stats

#endif

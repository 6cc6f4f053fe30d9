#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "triphoton/fingerprint.hpp"
#include "triphoton/sim.hpp"

using namespace triphoton;
using namespace triphoton::stats;

namespace {
const std::vector<double> kModes{4.2, 6.1, 7.5};

meas::QuadratureRecord gaussian_noise_record(int n_modes, std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.9);
  meas::QuadratureRecord rec;
  rec.n_modes = n_modes;
  rec.n_samples = n;
  rec.noise_photons.assign(static_cast<std::size_t>(n_modes), 0.0);
  rec.samples.resize(n * rec.row_width());
  for (auto& v : rec.samples) v = gauss(rng);
  return rec;
}
} // namespace

TEST_CASE("polar scan of pure noise stays within error bars") {
  const auto rec = gaussian_noise_record(1, 300000, 21);
  const FingerprintMap map = polar_scan(rec, 0, 60);
  for (std::size_t i = 0; i < map.values.size(); ++i)
    CHECK(std::abs(map.values[i]) < 5.0 * map.std_errors[i]);
}

TEST_CASE("polar scan parity: gamma(phi + pi) = -gamma(phi) exactly") {
  sim::SimParams sp;
  sp.process = sim::Process::single_mode;
  sp.drive = 0.05;
  sp.samples = 100000;
  sp.seed = 3;
  sp.noise_photons = {0.4};
  const auto rec = sim::simulate_record(sp);
  const FingerprintMap map = polar_scan(rec, 0, 60);
  for (std::size_t i = 0; i < 30; ++i)
    CHECK(map.values[i] == doctest::Approx(-map.values[i + 30]).epsilon(1e-9));
}

TEST_CASE("star state: three-fold symmetric lobes with nodes on the symmetry angles") {
  sim::SimParams sp;
  sp.process = sim::Process::single_mode;
  sp.drive = 0.05;
  sp.samples = 600000;
  sp.seed = 41;
  sp.noise_photons = {0.1};  // noise comparable to the weak signal
  const auto rec = sim::simulate_record(sp);
  const FingerprintMap map = polar_scan(rec, 0, 120);

  double max_abs = 0.0;
  for (double v : map.values) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs > 0.05);  // visible skewness signal

  // 2 pi / 3 periodicity within combined statistical error
  const std::size_t third = map.values.size() / 3;
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const std::size_t j = (i + third) % map.values.size();
    const double se = std::hypot(map.std_errors[i], map.std_errors[j]);
    CHECK(std::abs(map.values[i] - map.values[j]) < 5.0 * se);
  }
}

TEST_CASE("spherical scan at theta=0, phi=0 equals the plain skewness of A") {
  sim::SimParams sp;
  sp.process = sim::Process::three_mode;
  sp.drive = 0.15;
  sp.samples = 150000;
  sp.seed = 5;
  const auto rec = sim::simulate_record(sp);
  const QuadSelection sel = parse_selection({"I1", "I2", "I3"});
  const FingerprintMap map = spherical_scan(rec, sel, 5, 8);
  const Estimate direct = skewness(quadrature_stream(rec, 0, Quad::I));
  CHECK(map.at(0, 0) == doctest::Approx(direct.value).epsilon(1e-9));
}

TEST_CASE("spherical scan values at theta=0 do not depend on the C stream") {
  sim::SimParams sp;
  sp.process = sim::Process::three_mode;
  sp.drive = 0.15;
  sp.samples = 120000;
  sp.seed = 6;
  const auto rec = sim::simulate_record(sp);
  const FingerprintMap a = spherical_scan(rec, parse_selection({"I1", "I2", "I3"}), 5, 12);
  const FingerprintMap b = spherical_scan(rec, parse_selection({"I1", "I2", "Q3"}), 5, 12);
  for (std::size_t ip = 0; ip < a.phi.size(); ++ip)
    CHECK(a.at(0, ip) == doctest::Approx(b.at(0, ip)).epsilon(1e-9));
}

TEST_CASE("three-mode fingerprint: nodes on coordinate planes, lobes off them") {
  sim::SimParams sp;
  sp.process = sim::Process::three_mode;
  sp.drive = 0.15;
  sp.samples = 1000000;
  sp.seed = 77;
  const auto rec = sim::simulate_record(sp);
  const FingerprintMap map = spherical_scan(rec, parse_selection({"I1", "I2", "I3"}), 31, 60);
  CHECK(map.node_antinode_ratio < 0.05);

  // coordinate-plane cuts are zero within error: theta = pi/2 row excludes A
  const std::size_t mid_theta = 15;  // theta = pi/2
  for (std::size_t ip = 0; ip < map.phi.size(); ++ip) {
    const std::size_t idx = mid_theta * map.phi.size() + ip;
    CHECK(std::abs(map.values[idx]) < 5.0 * map.std_errors[idx]);
  }
}

TEST_CASE("theory fingerprint matches the sampled fingerprint (H3M and H2M)") {
  SUBCASE("three-mode, (I1, I2, I3)") {
    sim::SimParams sp;
    sp.process = sim::Process::three_mode;
    sp.drive = 0.15;
    sp.samples = 1500000;
    sp.seed = 101;
    const auto rec = sim::simulate_record(sp);
    const auto sel = parse_selection({"I1", "I2", "I3"});
    FingerprintMap data = spherical_scan(rec, sel, 31, 60);
    double max_abs = 0.0;
    for (double v : data.values) max_abs = std::max(max_abs, std::abs(v));
    for (double& v : data.values) v /= max_abs;
    const auto eff = sim::make_process_hamiltonian(sim::Process::three_mode, kModes, 1.0,
                                                   sp.pump_phase);
    const FingerprintMap theory = theory_fingerprint(eff, sel, sp.drive, 31, 60);
    CHECK(cosine_similarity(theory, data) > 0.99);
    CHECK(theory.node_antinode_ratio < 1e-6);  // exact nodes in theory
  }
  SUBCASE("two-mode, (I1, Q1, I2)") {
    sim::SimParams sp;
    sp.process = sim::Process::two_mode;
    sp.drive = 0.1;
    sp.samples = 1500000;
    sp.seed = 102;
    const auto rec = sim::simulate_record(sp);
    const auto sel = parse_selection({"I1", "Q1", "I2"});
    FingerprintMap data = spherical_scan(rec, sel, 31, 60);
    double max_abs = 0.0;
    for (double v : data.values) max_abs = std::max(max_abs, std::abs(v));
    for (double& v : data.values) v /= max_abs;
    const auto eff = sim::make_process_hamiltonian(sim::Process::two_mode, kModes, 1.0,
                                                   sp.pump_phase);
    const FingerprintMap theory = theory_fingerprint(eff, sel, sp.drive, 31, 60);
    CHECK(cosine_similarity(theory, data) > 0.99);
  }
}

TEST_CASE("two-mode CA-plane cut: nodes at theta = 0 and pi/2, lobes near pi/4") {
  const auto eff = sim::make_process_hamiltonian(sim::Process::two_mode, kModes, 1.0, -pi / 2);
  const auto sel = parse_selection({"I1", "Q1", "I2"});
  const FingerprintMap theory = theory_fingerprint(eff, sel, 0.1, 91, 8);
  // phi = 0 column is the CA plane: direction (cos theta, 0, sin theta)
  auto value_at_theta = [&](double theta) {
    std::size_t it = static_cast<std::size_t>(std::round(theta / pi * 90.0));
    return theory.at(it, 0);
  };
  CHECK(std::abs(value_at_theta(0.0)) < 1e-9);        // skewness of I1 alone
  CHECK(std::abs(value_at_theta(pi / 2)) < 1e-9);     // skewness of I2 alone
  CHECK(std::abs(value_at_theta(pi / 4)) > 0.5);      // maximally mixed
  CHECK(std::abs(value_at_theta(3 * pi / 4)) > 0.5);
}

TEST_CASE("theory polar map of the star state is a pure third harmonic") {
  const auto eff = sim::make_process_hamiltonian(sim::Process::single_mode, kModes);
  const FingerprintMap theory = theory_fingerprint(eff, 0, 0.05, 120);
  // fit |cos(3(phi - phi0))| structure: project onto the third harmonic
  double c3 = 0.0, s3 = 0.0, total = 0.0;
  for (std::size_t i = 0; i < theory.phi.size(); ++i) {
    c3 += theory.values[i] * std::cos(3.0 * theory.phi[i]);
    s3 += theory.values[i] * std::sin(3.0 * theory.phi[i]);
    total += theory.values[i] * theory.values[i];
  }
  const double harmonic_power = (c3 * c3 + s3 * s3) / (total * theory.phi.size() / 2.0);
  CHECK(harmonic_power > 0.999);  // all power in the n = 3 harmonic
  CHECK(theory.node_antinode_ratio < 1e-6);
}

TEST_CASE("theory fingerprint rejects non-cubic Hamiltonians") {
  auto eff = sim::make_process_hamiltonian(sim::Process::three_mode, kModes);
  eff.terms.front().creation = {2, 0, 0};
  eff.terms.front().annihilation = {0, 1, 0};  // quadratic-looking mutation
  CHECK_THROWS_AS(theory_fingerprint(eff, parse_selection({"I1", "I2", "I3"}), 0.1, 5, 8),
                  UnsupportedHamiltonian);
}

TEST_CASE("pump phase sweep: sinusoidal coskewness, flat covariances") {
  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(-two_pi + 4.0 * pi * i / 16.0);
  auto source = [&](double phase) {
    sim::SimParams sp;
    sp.process = sim::Process::three_mode;
    sp.drive = 0.15;
    sp.samples = 120000;
    sp.seed = 500 + static_cast<std::uint64_t>((phase + 10.0) * 1000);
    sp.pump_phase = phase;
    return sim::simulate_record(sp);
  };
  const SweepResult sweep = pump_phase_sweep(sim::Process::three_mode, phases, source);
  CHECK(sweep.key == "I1I2I3");
  CHECK(sweep.fit.r_squared > 0.99);
  CHECK(sweep.fit.amplitude > 0.02);
  for (const auto& pt : sweep.points)
    for (const auto& [name, est] : pt.covariances)
      CHECK(std::abs(est.value) < 5.0 * est.std_error);
}

TEST_CASE("pump phase theta and theta+pi negate the coskewness") {
  auto run = [&](double phase) {
    sim::SimParams sp;
    sp.process = sim::Process::three_mode;
    sp.drive = 0.15;
    sp.samples = 200000;
    sp.seed = 904;
    sp.pump_phase = phase;
    const auto rec = sim::simulate_record(sp);
    return coskewness(quadrature_stream(rec, 0, Quad::I), quadrature_stream(rec, 1, Quad::I),
                      quadrature_stream(rec, 2, Quad::I));
  };
  const Estimate a = run(0.7);
  const Estimate b = run(0.7 + pi);
  CHECK(std::abs(a.value + b.value) < 5.0 * std::hypot(a.std_error, b.std_error));
  CHECK(std::abs(a.value) > 10.0 * a.std_error);
}

TEST_CASE("zero pump amplitude: all coskewness vanishes") {
  sim::SimParams sp;
  sp.process = sim::Process::three_mode;
  sp.drive = 0.0;
  sp.samples = 100000;
  sp.seed = 31;
  const auto rec = sim::simulate_record(sp);
  const Estimate g = coskewness(quadrature_stream(rec, 0, Quad::I),
                                quadrature_stream(rec, 1, Quad::I),
                                quadrature_stream(rec, 2, Quad::I));
  CHECK(std::abs(g.value) < 5.0 * g.std_error);
}

TEST_CASE("2d histogram: gaussian blob statistics and subtraction") {
  const auto noise = gaussian_noise_record(1, 400000, 55);
  HistGrid grid;
  const Histogram2D h = histogram2d(noise, 0, grid);
  // density integrates to ~1 (tails truncated at |x| > 6 are tiny here)
  double integral = 0.0;
  const double cell = (grid.xhi - grid.xlo) / grid.nx * (grid.yhi - grid.ylo) / grid.ny;
  for (double v : h.density) integral += v * cell;
  CHECK(integral > 0.99);
  // isotropy: x and y marginals have equal second moments within a few percent
  double mx = 0.0, my = 0.0;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.xlo + (ix + 0.5) * (grid.xhi - grid.xlo) / grid.nx;
      const double y = grid.ylo + (iy + 0.5) * (grid.yhi - grid.ylo) / grid.ny;
      const double w = h.density[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix)] * cell;
      mx += w * x * x;
      my += w * y * y;
    }
  CHECK(mx == doctest::Approx(my).epsilon(0.05));

  const Histogram2D zero = subtract(h, h);
  for (double v : zero.density) CHECK(v == 0.0);

  HistGrid other;
  other.nx = 51;
  CHECK_THROWS_AS(subtract(h, histogram2d(noise, 0, other)), BinMismatch);
}

TEST_CASE("star-state histogram minus noise reference keeps the triangular signal") {
  sim::SimParams sp;
  sp.process = sim::Process::single_mode;
  sp.drive = 0.05;
  sp.samples = 500000;
  sp.seed = 66;
  sp.pump_phase = -pi / 2;  // aligns a lobe with the +x axis
  sp.noise_photons = {1.0};
  const auto pumped = sim::simulate_record(sp);
  sp.drive = 0.0;
  sp.seed = 67;
  const auto unpumped = sim::simulate_record(sp);
  HistGrid grid;
  const Histogram2D diff = subtract(histogram2d(pumped, 0, grid), histogram2d(unpumped, 0, grid));
  // the residual has a three-fold asymmetry: its x-marginal third moment is nonzero
  double m3 = 0.0;
  const double cellx = (grid.xhi - grid.xlo) / grid.nx;
  const double celly = (grid.yhi - grid.ylo) / grid.ny;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.xlo + (ix + 0.5) * cellx;
      const double y = grid.ylo + (iy + 0.5) * celly;
      (void)y;
      m3 += diff.density[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix)] * cellx * celly * x * x * x;
    }
  // compare against the statistical scale of the third moment estimator
  CHECK(std::abs(m3) > 1e-3);
}

TEST_CASE("theory maps validate the quadrature selection against the mode count") {
  const auto eff = sim::make_process_hamiltonian(sim::Process::two_mode, kModes);
  CHECK_THROWS_AS(theory_fingerprint(eff, parse_selection({"I1", "I2", "I3"}), 0.1, 5, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(theory_fingerprint(eff, 2, 0.1), std::invalid_argument);
}

TEST_CASE("two-mode coskewness pattern: I1I1I2 and Q1Q1I2 carry the signal") {
  sim::SimParams sp;
  sp.process = sim::Process::two_mode;
  sp.drive = 0.1;
  sp.samples = 400000;
  sp.seed = 6060;
  sp.noise_photons = {0.2, 0.2};
  sp.pump_phase = -pi / 2;  // the aligned pump phase
  const auto rec = sim::simulate_record(sp);
  auto gamma = [&](const char* a, const char* b, const char* c) {
    const auto [ma, qa] = parse_quad_name(a);
    const auto [mb, qb] = parse_quad_name(b);
    const auto [mc, qc] = parse_quad_name(c);
    return coskewness(quadrature_stream(rec, ma, qa), quadrature_stream(rec, mb, qb),
                      quadrature_stream(rec, mc, qc));
  };
  const Estimate ii = gamma("I1", "I1", "I2");
  const Estimate qq = gamma("Q1", "Q1", "I2");
  const Estimate iq = gamma("I1", "Q1", "I2");
  CHECK(std::abs(ii.value) > 10.0 * ii.std_error);
  CHECK(std::abs(qq.value) > 10.0 * qq.std_error);
  CHECK(std::abs(iq.value) < 5.0 * iq.std_error);
  // degenerate pair pulls opposite signs: x1^2 and p1^2 couple to x2 oppositely
  CHECK(ii.value * qq.value < 0.0);
}

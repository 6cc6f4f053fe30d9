#include <doctest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "triphoton/device.hpp"

using namespace triphoton;
using namespace triphoton::device;

namespace {

DeviceParams asymmetric_params() {
  DeviceParams p;
  p.ej1 = 1.0;
  p.ej2 = 1.7;
  p.flux_bias = 0.25;
  return p;
}

DeviceParams symmetric_params() {
  DeviceParams p;
  p.ej1 = 1.3;
  p.ej2 = 1.3;
  return p;
}

} // namespace

TEST_CASE("effective Josephson energy at reference fluxes") {
  DeviceParams p;
  p.ej1 = 1.0;
  p.ej2 = 1.0;
  CHECK(effective_josephson_energy(p, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(effective_josephson_energy(p, 0.5) == doctest::Approx(0.0).epsilon(1e-7));

  // quarter flux: the interference term vanishes
  DeviceParams a = asymmetric_params();
  CHECK(effective_josephson_energy(a, 0.25) ==
        doctest::Approx(std::sqrt(1.0 + 1.7 * 1.7)).epsilon(1e-12));
}

TEST_CASE("effective Josephson energy parity and periodicity") {
  DeviceParams p = asymmetric_params();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> flux(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double f = flux(rng);
    const double e = effective_josephson_energy(p, f);
    CHECK(e == doctest::Approx(effective_josephson_energy(p, -f)).epsilon(1e-12));
    CHECK(e == doctest::Approx(effective_josephson_energy(p, f + 1.0)).epsilon(1e-9));
    CHECK(e <= effective_josephson_energy(p, 0.0) + 1e-12);
    CHECK(e >= effective_josephson_energy(p, 0.5) - 1e-12);
  }
}

TEST_CASE("alpha at reference points") {
  DeviceParams s = symmetric_params();
  CHECK(effective_offset_alpha(s, 0.37).value == 0.0);
  CHECK(effective_offset_alpha(s, -1.21).value == 0.0);

  DeviceParams a = asymmetric_params();
  CHECK(effective_offset_alpha(a, 0.0).value == 0.0);
  CHECK(effective_offset_alpha(a, 0.25).value ==
        doctest::Approx(std::atan(-0.7 / 2.7)).epsilon(1e-12));
}

TEST_CASE("alpha parity, periodicity, degenerate flag") {
  DeviceParams p = asymmetric_params();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> flux(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    double f = flux(rng);
    // keep clear of the tan singularities themselves
    if (std::abs(std::abs(f - std::round(f)) - 0.5) < 1e-3) continue;
    const AlphaResult r = effective_offset_alpha(p, f);
    CHECK(!r.degenerate);
    CHECK(r.value == doctest::Approx(-effective_offset_alpha(p, -f).value).epsilon(1e-10));
    CHECK(r.value == doctest::Approx(effective_offset_alpha(p, f + 1.0).value).epsilon(1e-9));
  }
  const AlphaResult half = effective_offset_alpha(p, 0.5);
  CHECK(half.degenerate);
  CHECK(half.value == doctest::Approx(-0.5 * pi).epsilon(1e-12));  // ej1 < ej2
}

TEST_CASE("alpha sweep is continuous across half-integer flux") {
  DeviceParams p = asymmetric_params();
  std::vector<double> flux;
  for (int i = 0; i <= 400; ++i) flux.push_back(-1.0 + i * 0.005);
  const std::vector<double> a = alpha_sweep(p, flux);
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK(std::abs(a[i] - a[i - 1]) < 0.1);  // no pi-sized branch jumps
  // matches the principal branch near zero
  CHECK(a[200] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(a[250] == doctest::Approx(effective_offset_alpha(p, 0.25).value).epsilon(1e-10));
}

TEST_CASE("potential expansion against finite-difference oracle") {
  DeviceParams p = asymmetric_params();
  const PotentialExpansion ex = expand_potential(p, 4);
  REQUIRE(ex.coefficients.size() == 5);

  const double ej = effective_josephson_energy(p, p.flux_bias);
  const double alpha = effective_offset_alpha(p, p.flux_bias).value;
  auto f = [&](double theta) { return ej * std::cos(theta - alpha); };
  double factorial = 1.0;
  for (int k = 0; k <= 4; ++k) {
    if (k > 0) factorial *= k;
    const double oracle = oracles::derivative_at_zero(f, k) / factorial;
    CHECK(ex.coefficients[static_cast<std::size_t>(k)] ==
          doctest::Approx(oracle).epsilon(1e-6));
  }
  // analytic cubic coefficient: -E_J sin(alpha) / 6
  CHECK(ex.coefficients[3] == doctest::Approx(-ej * std::sin(alpha) / 6.0).epsilon(1e-12));
}

TEST_CASE("symmetric SQUID suppresses all odd orders") {
  DeviceParams p = symmetric_params();
  p.flux_bias = 0.0;
  const PotentialExpansion ex = expand_potential(p, 7);
  CHECK(ex.alpha == 0.0);
  CHECK(ex.coefficients[1] == 0.0);
  CHECK(ex.coefficients[3] == 0.0);
  CHECK(ex.coefficients[5] == 0.0);
  CHECK(ex.coefficients[7] == 0.0);
  CHECK(ex.coefficients[2] == doctest::Approx(-ex.josephson_energy / 2.0).epsilon(1e-14));
  // relative to c2, odd coefficients are far below 1e-12
  for (int k : {1, 3, 5, 7})
    CHECK(std::abs(ex.coefficients[static_cast<std::size_t>(k)]) <=
          1e-12 * std::abs(ex.coefficients[2]));
}

TEST_CASE("expand_potential shape and precondition") {
  DeviceParams p = asymmetric_params();
  CHECK(expand_potential(p, 3).coefficients.size() == 4);
  CHECK_THROWS_AS(expand_potential(p, 2), std::invalid_argument);
}

TEST_CASE("coupling constants: zeros, symmetry, homogeneity") {
  DeviceParams a = asymmetric_params();
  const PotentialExpansion ex = expand_potential(a, 4);

  const std::vector<double> zeros{0.0, 0.0, 0.0};
  const CouplingSet at_zero = coupling_constants(ex, zeros);
  for (double g : at_zero.g) CHECK(g == 0.0);

  DeviceParams s = symmetric_params();
  s.flux_bias = 0.0;
  const PotentialExpansion sym = expand_potential(s, 4);
  const std::vector<double> lam{0.1, 0.12, 0.09};
  CHECK(coupling_constants(sym, lam).g[3] == 0.0);

  const CouplingSet base = coupling_constants(ex, lam);
  std::vector<double> doubled{0.2, 0.24, 0.18};
  const CouplingSet twice = coupling_constants(ex, doubled);
  CHECK(twice.g[3] == doctest::Approx(8.0 * base.g[3]).epsilon(1e-12));
  CHECK(twice.g[2] == doctest::Approx(4.0 * base.g[2]).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(0.1, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double c = scale(rng);
    std::vector<double> scaled = lam;
    for (double& v : scaled) v *= c;
    const CouplingSet sc = coupling_constants(ex, scaled);
    for (std::size_t k = 1; k < sc.g.size(); ++k)
      CHECK(sc.g[k] ==
            doctest::Approx(base.g[k] * std::pow(c, static_cast<double>(k))).epsilon(1e-9));
  }
}

TEST_CASE("asymmetric SQUID at default bias yields nonzero cubic coupling") {
  DeviceParams p = asymmetric_params();
  const CouplingSet g = coupling_constants(expand_potential(p, 3), p.zero_point_amplitudes);
  CHECK(std::abs(g.g[3]) > 1e-8);
}

TEST_CASE("device parameter validation") {
  DeviceParams p = asymmetric_params();
  p.ej1 = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = asymmetric_params();
  p.mode_freqs = {6.1, 4.2};
  p.quality_factors = {7000, 7000};
  p.zero_point_amplitudes = {0.1, 0.1};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = asymmetric_params();
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("area ratio consistency probe") {
  DeviceParams p = asymmetric_params();  // 1.0 : 1.7 with ratio 1.7
  CHECK(p.area_ratio_consistent());
  p.ej2 = 1.4;
  CHECK(!p.area_ratio_consistent());
}

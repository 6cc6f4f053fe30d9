#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "triphoton/hamiltonian.hpp"

using namespace triphoton;
using namespace triphoton::rwa;

namespace {
const std::vector<double> kModes{4.2, 6.1, 7.5};

bool has_term(const std::vector<HamiltonianTerm>& terms, std::vector<int> creation,
              std::vector<int> annihilation) {
  return std::any_of(terms.begin(), terms.end(), [&](const HamiltonianTerm& t) {
    return t.creation == creation && t.annihilation == annihilation;
  });
}
} // namespace

TEST_CASE("single mode, order 3: four distinct monomials with binomial weights") {
  const std::vector<double> one_mode{4.2};
  const auto terms = enumerate_terms(one_mode, 3);
  REQUIRE(terms.size() == 4);
  for (const auto& t : terms) {
    const int c = t.creation[0], d = t.annihilation[0];
    CHECK(c + d == 3);
    double expected = (c == 0 || c == 3) ? 1.0 : 3.0;
    CHECK(t.coefficient.real() == doctest::Approx(expected));
    CHECK(t.rotating_freq == doctest::Approx((c - d) * 4.2).epsilon(1e-12));
  }
  // a^3 rotates at -3 f1 = -12.6 GHz
  const auto a3 = std::find_if(terms.begin(), terms.end(),
                               [](const auto& t) { return t.annihilation[0] == 3; });
  REQUIRE(a3 != terms.end());
  CHECK(a3->rotating_freq == doctest::Approx(-12.6).epsilon(1e-12));
}

TEST_CASE("three modes: a1 a2 a3 rotates at -(f1+f2+f3)") {
  const auto terms = enumerate_terms(kModes, 3);
  const auto it = std::find_if(terms.begin(), terms.end(), [](const HamiltonianTerm& t) {
    return t.annihilation == std::vector<int>{1, 1, 1} && t.creation == std::vector<int>{0, 0, 0};
  });
  REQUIRE(it != terms.end());
  CHECK(it->rotating_freq == doctest::Approx(-17.8).epsilon(1e-12));
  CHECK(it->coefficient.real() == doctest::Approx(6.0));  // 3! orderings
}

TEST_CASE("multinomial completeness: coefficients sum to (2m)^order") {
  for (int order : {1, 2, 3, 4}) {
    const auto terms = enumerate_terms(kModes, order);
    cplx total{0.0, 0.0};
    for (const auto& t : terms) total += t.coefficient;
    CHECK(total.real() == doctest::Approx(std::pow(6.0, order)).epsilon(1e-12));
    CHECK(total.imag() == doctest::Approx(0.0));
  }
  const std::vector<double> one{4.2};
  const auto terms = enumerate_terms(one, 3, 0.5);
  cplx total{0.0, 0.0};
  for (const auto& t : terms) total += t.coefficient;
  CHECK(total.real() == doctest::Approx(0.5 * 8.0).epsilon(1e-12));
}

TEST_CASE("conjugation is a bijection on the term list") {
  const auto terms = enumerate_terms(kModes, 3);
  for (const auto& t : terms) {
    const HamiltonianTerm c = t.conjugate();
    CHECK(has_term(terms, c.creation, c.annihilation));
    CHECK(c.rotating_freq == doctest::Approx(-t.rotating_freq));
  }
}

TEST_CASE("rotating frequency recomputes from powers") {
  const auto terms = enumerate_terms(kModes, 4);
  for (const auto& t : terms)
    CHECK(t.rotating_freq == doctest::Approx(t.recompute_rotating_freq(kModes)).epsilon(1e-12));
}

TEST_CASE("pump selection reproduces the three cubic processes") {
  const auto terms = enumerate_terms(kModes, 3);
  const double tol = 1e-3;  // 1 MHz

  SUBCASE("12.6 GHz: single-mode process") {
    const auto eff = select_resonant(terms, kModes, 12.6, tol);
    REQUIRE(eff.terms.size() == 2);
    CHECK(has_term(eff.terms, {0, 0, 0}, {3, 0, 0}));
    CHECK(has_term(eff.terms, {3, 0, 0}, {0, 0, 0}));
  }
  SUBCASE("14.5 GHz: two-mode process") {
    const auto eff = select_resonant(terms, kModes, 14.5, tol);
    REQUIRE(eff.terms.size() == 2);
    CHECK(has_term(eff.terms, {0, 0, 0}, {2, 1, 0}));
    CHECK(has_term(eff.terms, {2, 1, 0}, {0, 0, 0}));
  }
  SUBCASE("17.8 GHz: three-mode process") {
    const auto eff = select_resonant(terms, kModes, 17.8, tol);
    REQUIRE(eff.terms.size() == 2);
    CHECK(has_term(eff.terms, {0, 0, 0}, {1, 1, 1}));
    CHECK(has_term(eff.terms, {1, 1, 1}, {0, 0, 0}));
  }
}

TEST_CASE("empty and ambiguous selections") {
  const auto terms = enumerate_terms(kModes, 3);
  CHECK_THROWS_AS(select_resonant(terms, kModes, 9.0, 1e-6), EmptySelection);

  // degenerate mode spacing: 3 f1 = 12 coincides with 2 f3 - f1
  const std::vector<double> degenerate{4.0, 6.0, 8.0};
  const auto dterms = enumerate_terms(degenerate, 3);
  CHECK_THROWS_AS(select_resonant(dterms, degenerate, 12.0, 1e-3), AmbiguousSelection);
}

TEST_CASE("tolerance preconditions") {
  const auto terms = enumerate_terms(kModes, 3);
  CHECK_THROWS_AS(select_resonant(terms, kModes, 12.6, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(select_resonant(terms, kModes, 12.6, 10.0), std::invalid_argument);
}

TEST_CASE("selection scales coefficients by the pump and stays Hermitian") {
  const auto terms = enumerate_terms(kModes, 3);
  const double amp = 0.25, phase = 0.7;
  const auto eff = select_resonant(terms, kModes, 17.8, 1e-3, amp, phase);
  for (const auto& t : eff.terms) {
    CHECK(std::abs(t.coefficient) == doctest::Approx(6.0 * amp).epsilon(1e-12));
    const double expected_arg = (t.rotating_freq < 0.0) ? phase : -phase;
    CHECK(std::arg(t.coefficient) == doctest::Approx(expected_arg).epsilon(1e-12));
    CHECK(has_term(eff.terms, t.annihilation, t.creation));  // conjugate present
  }
  // re-phasing: annihilation side advances with the pump phase
  const auto shifted = eff.with_pump_phase(phase + 0.3);
  for (const auto& t : shifted.terms) {
    const double expected_arg = (t.rotating_freq < 0.0) ? phase + 0.3 : -(phase + 0.3);
    CHECK(std::arg(t.coefficient) == doctest::Approx(expected_arg).epsilon(1e-12));
  }
}

TEST_CASE("stable text rendering") {
  const auto terms = enumerate_terms(kModes, 3);
  const auto eff = select_resonant(terms, kModes, 14.5, 1e-3);
  const std::string s = format_hamiltonian(eff);
  CHECK(s.find("a1^2 a2") != std::string::npos);
  CHECK(s.find("adag1^2 adag2") != std::string::npos);
  CHECK(s.find("pump 14.500000 GHz") != std::string::npos);
}

TEST_CASE("order-2 selection finds conventional two-photon downconversion") {
  const std::vector<double> one_mode{4.2};
  const auto terms = enumerate_terms(one_mode, 2);
  const auto eff = select_resonant(terms, one_mode, 8.4, 1e-3);
  REQUIRE(eff.terms.size() == 2);
  CHECK(has_term(eff.terms, {0}, {2}));
  CHECK(has_term(eff.terms, {2}, {0}));
}

#ifndef TRIPHOTON_EVOLVE_HPP
#define TRIPHOTON_EVOLVE_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "triphoton/common.hpp"
#include "triphoton/fock.hpp"
#include "triphoton/parallel.hpp"
#include "triphoton/rng.hpp"

namespace triphoton::fock {

enum class Method { expm_oracle, stepper };

struct EvolveResult {
  FockState state;
  double top_level_population = 0.0;
  bool truncation_warning = false;  // top-level population above 1e-6
  long steps = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau
struct Dopri5 {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

// Adaptive integrator for y' = M y with constant (generally non-Hermitian) M.
class SchrodingerStepper {
public:
  SchrodingerStepper(const SpMat& m, double rtol, double atol)
      : m_(m), rtol_(rtol), atol_(atol) {}

  // integrate over [0, duration] starting from y (modified in place);
  // returns accepted step count
  long integrate(Vec& y, double duration) {
    if (duration <= 0.0) return 0;
    double t = 0.0;
    double h = initial_step(y, duration);
    long accepted = 0;
    Vec k1 = m_ * y;
    for (;;) {
      const double remaining = duration - t;
      if (remaining <= duration * 1e-14) break;
      const bool last = h >= remaining;
      if (last) h = remaining;
      Vec y_new, k7;
      const double err = try_step(y, k1, h, y_new, k7);
      if (err <= 1.0) {
        t += h;
        y.swap(y_new);
        k1.swap(k7);  // first-same-as-last
        ++accepted;
        if (last) break;
      }
      const double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      h *= std::clamp(factor, 0.2, 5.0);
      if (h < duration * 1e-15)
        throw std::runtime_error("stepper: step size underflow");
    }
    return accepted;
  }

  // one embedded step; returns the scaled error estimate
  double try_step(const Vec& y, const Vec& k1, double h, Vec& y_new, Vec& k7) const {
    using T = Dopri5;
    Vec k2 = m_ * (y + h * T::a21 * k1);
    Vec k3 = m_ * (y + h * (T::a31 * k1 + T::a32 * k2));
    Vec k4 = m_ * (y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    Vec k5 = m_ * (y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
    Vec k6 = m_ * (y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
    y_new = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
    k7 = m_ * y_new;
    const Vec err_vec =
        h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    const double scale = atol_ + rtol_ * std::max(y.norm(), y_new.norm());
    return err_vec.norm() / scale;
  }

private:
  double initial_step(const Vec& y, double duration) const {
    const double rate = (m_ * y).norm();
    const double h = (rate > 0.0) ? 0.01 * std::max(y.norm(), 1e-30) / rate : duration;
    return std::min(h, duration);
  }

  const SpMat& m_;
  double rtol_, atol_;
};

inline Vec expm_apply_hermitian(const SpMat& h, const Vec& y, double duration) {
  Eigen::MatrixXcd dense = Eigen::MatrixXcd(h);
  dense = 0.5 * (dense + dense.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("expm_oracle: eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  Eigen::VectorXcd phases(ev.size());
  for (long i = 0; i < ev.size(); ++i) phases[i] = std::exp(-imag_unit * ev[i] * duration);
  return es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * y));
}

} // namespace detail

// Unitary evolution |psi(t)> = exp(-i H t) |psi(0)>. The expm_oracle route is
// the dense reference; the stepper integrates the Schrodinger equation with
// adaptive Dormand-Prince steps.
inline EvolveResult evolve(const FockState& st, const ModeOperator& hamiltonian, double duration,
                           Method method = Method::stepper, double rtol = 1e-10,
                           double atol = 1e-12) {
  if (duration < 0.0) throw std::invalid_argument("evolve: duration must be >= 0");
  if (st.space != hamiltonian.space) throw DimensionMismatch("evolve: space mismatch");
  if (!is_hermitian(hamiltonian, 1e-12))
    throw std::invalid_argument("evolve: Hamiltonian must be Hermitian");

  EvolveResult res;
  res.state.space = st.space;
  if (method == Method::expm_oracle) {
    res.state.amp = detail::expm_apply_hermitian(hamiltonian.matrix, st.amp, duration);
  } else {
    SpMat m = (-imag_unit * hamiltonian.matrix).eval();
    Vec y = st.amp;
    detail::SchrodingerStepper stepper(m, rtol, atol);
    res.steps = stepper.integrate(y, duration);
    res.state.amp = std::move(y);
  }
  res.top_level_population = top_level_population(res.state);
  res.truncation_warning = res.top_level_population > 1e-6;
  return res;
}

// Ensemble of pure-state trajectories; averages of observables estimate the
// lossy (Lindblad) evolution.
struct TrajectoryEnsemble {
  FockSpace space;
  std::vector<Vec> states;  // normalized

  cplx expectation(const ModeOperator& op) const {
    if (op.space != space) throw DimensionMismatch("ensemble expectation: space mismatch");
    cplx acc{0.0, 0.0};
    for (const auto& s : states) acc += s.dot(op.matrix * s);
    return acc / static_cast<double>(states.size());
  }

  // mean and Monte Carlo standard error of a Hermitian observable
  std::pair<double, double> expectation_with_error(const ModeOperator& op) const {
    std::vector<double> vals;
    vals.reserve(states.size());
    for (const auto& s : states) vals.push_back(s.dot(op.matrix * s).real());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= std::max<std::size_t>(1, vals.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(vals.size()))};
  }
};

// Monte Carlo wave-function unfolding of single-photon loss with rates
// kappa_i: deterministic drift under H_eff = H - (i/2) sum_i kappa_i n_i,
// jumps a_i triggered when the squared norm crosses a uniform threshold.
// Trajectory t uses an independent RNG stream derived from (seed, t).
inline TrajectoryEnsemble evolve_lossy(const FockState& st, const ModeOperator& hamiltonian,
                                       std::span<const double> kappas, double duration,
                                       int n_trajectories, std::uint64_t seed, double rtol = 1e-10,
                                       double atol = 1e-12) {
  if (duration < 0.0) throw std::invalid_argument("evolve_lossy: duration must be >= 0");
  if (n_trajectories < 1) throw std::invalid_argument("evolve_lossy: need >= 1 trajectory");
  if (st.space != hamiltonian.space) throw DimensionMismatch("evolve_lossy: space mismatch");
  if (static_cast<int>(kappas.size()) != st.space.n_modes())
    throw std::invalid_argument("evolve_lossy: one kappa per mode");
  for (double k : kappas)
    if (k < 0.0) throw std::invalid_argument("evolve_lossy: kappas must be >= 0");
  if (!is_hermitian(hamiltonian, 1e-12))
    throw std::invalid_argument("evolve_lossy: Hamiltonian must be Hermitian");

  const int m = st.space.n_modes();
  std::vector<SpMat> jump_ops;
  SpMat decay(st.space.dim(), st.space.dim());
  for (int mode = 0; mode < m; ++mode) {
    jump_ops.push_back(annihilation(st.space, mode).matrix);
    if (kappas[static_cast<std::size_t>(mode)] > 0.0)
      decay += cplx{0.5 * kappas[static_cast<std::size_t>(mode)], 0.0} *
               number_operator(st.space, mode).matrix;
  }
  const SpMat m_eff = (-imag_unit * hamiltonian.matrix - decay).eval();

  TrajectoryEnsemble ens;
  ens.space = st.space;
  ens.states.resize(static_cast<std::size_t>(n_trajectories));

  // trajectories are independent; each owns an RNG stream keyed on its index,
  // so the ensemble is identical for any worker count
  for_each_block(static_cast<std::size_t>(n_trajectories), 1,
                 [&](std::size_t traj, std::size_t, std::size_t) {
    auto rng = make_stream_rng(seed, static_cast<std::uint64_t>(traj));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    detail::SchrodingerStepper stepper(m_eff, rtol, atol);

    Vec y = st.amp;
    double t = 0.0;
    double threshold = uni(rng);
    double h = duration > 0.0 ? duration / 100.0 : 0.0;
    Vec k1 = m_eff * y;

    while (duration - t > duration * 1e-14) {
      h = std::min(h, duration - t);
      Vec y_new, k7;
      const double err = stepper.try_step(y, k1, h, y_new, k7);
      if (err > 1.0) {
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
        if (h < duration * 1e-15) throw std::runtime_error("evolve_lossy: step underflow");
        continue;
      }
      if (y_new.squaredNorm() < threshold) {
        // bisect the jump time inside [0, h]
        double lo = 0.0, hi = h;
        Vec y_hi = y_new;
        for (int it = 0; it < 60 && (hi - lo) > 1e-13 * std::max(duration, 1.0); ++it) {
          const double mid = 0.5 * (lo + hi);
          Vec y_mid = y;
          detail::SchrodingerStepper sub(m_eff, rtol, atol);
          sub.integrate(y_mid, mid);
          if (y_mid.squaredNorm() < threshold) {
            hi = mid;
            y_hi = y_mid;
          } else {
            lo = mid;
          }
        }
        t += hi;
        y = y_hi;
        // select the decay channel
        std::vector<double> w(static_cast<std::size_t>(m), 0.0);
        double total = 0.0;
        for (int mode = 0; mode < m; ++mode) {
          w[static_cast<std::size_t>(mode)] =
              kappas[static_cast<std::size_t>(mode)] * (jump_ops[static_cast<std::size_t>(mode)] * y).squaredNorm();
          total += w[static_cast<std::size_t>(mode)];
        }
        if (total > 0.0) {
          double pick = uni(rng) * total;
          int chosen = m - 1;
          for (int mode = 0; mode < m; ++mode) {
            pick -= w[static_cast<std::size_t>(mode)];
            if (pick <= 0.0) { chosen = mode; break; }
          }
          y = jump_ops[static_cast<std::size_t>(chosen)] * y;
          y.normalize();
        }
        threshold = uni(rng);
        k1 = m_eff * y;
        continue;
      }
      t += h;
      y.swap(y_new);
      k1.swap(k7);
      h *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    }
    y.normalize();
    ens.states[traj] = std::move(y);
  });
  return ens;
}

} // namespace triphoton::fock

#endif

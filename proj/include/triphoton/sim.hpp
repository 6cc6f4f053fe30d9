#ifndef TRIPHOTON_SIM_HPP
#define TRIPHOTON_SIM_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "triphoton/evolve.hpp"
#include "triphoton/fock.hpp"
#include "triphoton/hamiltonian.hpp"
#include "triphoton/heterodyne.hpp"
#include "triphoton/record.hpp"

namespace triphoton::sim {

enum class Process { single_mode, two_mode, three_mode };

inline int process_modes(Process p) {
  switch (p) {
    case Process::single_mode: return 1;
    case Process::two_mode: return 2;
    case Process::three_mode: return 3;
  }
  return 0;
}

inline Process parse_process(const std::string& s) {
  if (s == "1m" || s == "single_mode") return Process::single_mode;
  if (s == "2m" || s == "two_mode") return Process::two_mode;
  if (s == "3m" || s == "three_mode") return Process::three_mode;
  throw std::invalid_argument("unknown process '" + s + "' (expected 1m, 2m or 3m)");
}

inline std::string process_name(Process p) {
  switch (p) {
    case Process::single_mode: return "1m";
    case Process::two_mode: return "2m";
    case Process::three_mode: return "3m";
  }
  return "?";
}

// Pump frequency activating each process: 3 f1, 2 f1 + f2, f1 + f2 + f3.
inline double process_pump_freq(Process p, std::span<const double> mode_freqs) {
  if (mode_freqs.size() < static_cast<std::size_t>(process_modes(p)))
    throw std::invalid_argument("process_pump_freq: not enough mode frequencies");
  switch (p) {
    case Process::single_mode: return 3.0 * mode_freqs[0];
    case Process::two_mode: return 2.0 * mode_freqs[0] + mode_freqs[1];
    case Process::three_mode: return mode_freqs[0] + mode_freqs[1] + mode_freqs[2];
  }
  return 0.0;
}

// Cubic effective Hamiltonian for one process, built through enumeration and
// pump selection, then normalized so the annihilation-side coefficient has
// magnitude g (the rate that multiplies t in g*t drive strengths).
inline rwa::EffectiveHamiltonian make_process_hamiltonian(Process p,
                                                          std::span<const double> all_mode_freqs,
                                                          double g = 1.0, double pump_phase = 0.0,
                                                          double tolerance = 1e-3) {
  const int m = process_modes(p);
  if (all_mode_freqs.size() < static_cast<std::size_t>(m))
    throw std::invalid_argument("make_process_hamiltonian: not enough mode frequencies");
  const std::vector<double> freqs(all_mode_freqs.begin(), all_mode_freqs.begin() + m);
  const auto terms = rwa::enumerate_terms(freqs, 3);
  auto eff = rwa::select_resonant(terms, freqs, process_pump_freq(p, freqs), tolerance, 1.0,
                                  pump_phase);
  const double rate = eff.coupling_rate();
  for (auto& t : eff.terms) t.coefficient *= g / rate;
  return eff;
}

// Default truncations: generous for the bright single-mode runs, proportional
// to the photon-number ladder (n1 = 2 n2) for the two-mode process.
inline fock::FockSpace default_space(Process p) {
  switch (p) {
    case Process::single_mode: return fock::FockSpace({24});
    case Process::two_mode: return fock::FockSpace({14, 7});
    case Process::three_mode: return fock::FockSpace({7, 7, 7});
  }
  return fock::FockSpace({4});
}

// Vacuum evolved to the requested drive strength g*t under the process
// Hamiltonian.
inline fock::EvolveResult process_state(Process p, double drive, double pump_phase = 0.0,
                                          std::span<const double> mode_freqs = {},
                                          const fock::FockSpace* space_override = nullptr) {
  static const std::vector<double> kDefault{4.2, 6.1, 7.5};
  const std::span<const double> freqs = mode_freqs.empty() ? std::span<const double>(kDefault)
                                                           : mode_freqs;
  const fock::FockSpace space = space_override ? *space_override : default_space(p);
  const auto eff = make_process_hamiltonian(p, freqs, 1.0, pump_phase);
  const auto h = fock::build_hamiltonian(space, eff);
  return fock::evolve(fock::FockState::vacuum(space), h, drive);
}

struct SimParams {
  Process process = Process::single_mode;
  double drive = 0.1;  // g*t
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::vector<double> noise_photons;  // per mode; empty = noiseless
  double gain = 1.0;
  // -pi/2 puts the three-point correlators into the I quadratures
  // (<I1 I2 I3> etc. maximal, the mixed I/Q terms zero)
  double pump_phase = -0.5 * pi;
  double sample_rate = 1e6;
  std::vector<double> mode_freqs;  // empty = 4.2 / 6.1 / 7.5 GHz
};

// End-to-end synthetic measurement: evolve vacuum, then draw heterodyne
// samples through the amplifier-noise channel.
inline meas::QuadratureRecord simulate_record(const SimParams& sp) {
  const auto res = process_state(sp.process, sp.drive, sp.pump_phase, sp.mode_freqs);
  meas::RecordMeta meta;
  meta.gain = sp.gain;
  meta.noise_photons = sp.noise_photons;
  meta.sample_rate = sp.sample_rate;
  meta.pump_phase = sp.pump_phase;
  meta.pump_on = sp.drive != 0.0;
  meta.calibration_note =
      "synthetic heterodyne, process " + process_name(sp.process) + ", seed " +
      std::to_string(sp.seed);
  return meas::sample_heterodyne(res.state, sp.samples, meta, sp.seed);
}

} // namespace triphoton::sim

#endif

// triphoton: simulate three-photon SPDC records and analyze their
// second/third-order cumulant structure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "triphoton/config.hpp"
#include "triphoton/feedforward.hpp"
#include "triphoton/fingerprint.hpp"
#include "triphoton/heterodyne.hpp"
#include "triphoton/pipeline.hpp"
#include "triphoton/record.hpp"
#include "triphoton/sim.hpp"

using namespace triphoton;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out_dir;
};

cfg::Config load_config(const GlobalOpts& g) {
  if (g.config_path.empty()) return cfg::Config::parse("", "<defaults>");
  return cfg::Config::parse_file(g.config_path);
}

cfg::RunConfig load_run_config(const GlobalOpts& g) {
  cfg::RunConfig rc = cfg::run_config_from_config(load_config(g));
  if (g.seed_given) rc.seed = g.seed;
  if (!g.out_dir.empty()) rc.output_dir = g.out_dir;
  return rc;
}

meas::QuadratureRecord load_record_any(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    return meas::read_record_csv(path);
  return meas::read_record(path);
}

void write_record_any(const std::string& path, const meas::QuadratureRecord& rec) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    meas::write_record_csv(path, rec);
  else
    meas::write_record(path, rec);
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

int cmd_processes(const GlobalOpts& g, double pump_ghz, int order, double tolerance_ghz) {
  const device::DeviceParams dev = cfg::device_from_config(load_config(g));
  const device::PotentialExpansion expansion = device::expand_potential(dev, std::max(order, 3));
  const device::CouplingSet couplings =
      device::coupling_constants(expansion, dev.zero_point_amplitudes);
  const double g_order = couplings.g[static_cast<std::size_t>(order)];

  const auto terms = rwa::enumerate_terms(dev.mode_freqs, order, g_order);
  const auto eff = rwa::select_resonant(terms, dev.mode_freqs, pump_ghz, tolerance_ghz,
                                        dev.pump_amplitude, dev.pump_phase);
  std::printf("modes [GHz]:");
  for (double f : dev.mode_freqs) std::printf(" %.3f", f);
  std::printf("\ncoupling g_%d = %.6e (convention: %s)\n", order, g_order,
              couplings.convention.c_str());
  std::fputs(rwa::format_hamiltonian(eff).c_str(), stdout);
  return 0;
}

int cmd_simulate(const GlobalOpts& g, const std::string& process, double gt, std::size_t samples,
                 const std::string& out_path, std::vector<double> noise, double pump_phase,
                 bool pump_phase_given, double gain, double sample_rate,
                 const std::string& state_out) {
  const cfg::RunConfig rc = load_run_config(g);
  sim::SimParams sp;
  sp.process = sim::parse_process(process);
  sp.drive = gt;
  sp.samples = samples;
  sp.seed = rc.seed;
  sp.noise_photons = noise;
  sp.gain = gain;
  sp.pump_phase = pump_phase_given ? pump_phase : rc.pump_phase;
  sp.sample_rate = sample_rate;
  sp.mode_freqs = rc.device.mode_freqs;
  const meas::QuadratureRecord rec = sim::simulate_record(sp);
  ensure_parent_dir(out_path);
  write_record_any(out_path, rec);
  if (!state_out.empty()) {
    ensure_parent_dir(state_out);
    const auto evolved = sim::process_state(sp.process, sp.drive, sp.pump_phase, sp.mode_freqs);
    fock::write_state(state_out, evolved.state);
  }
  std::printf("wrote %s: %d mode(s), %zu samples, seed %llu\n", out_path.c_str(), rec.n_modes,
              rec.n_samples, static_cast<unsigned long long>(sp.seed));
  return 0;
}

stats::QuadSelection default_selection(int n_modes) {
  if (n_modes == 3) return stats::parse_selection({"I1", "I2", "I3"});
  if (n_modes == 2) return stats::parse_selection({"I1", "Q1", "I2"});
  throw std::invalid_argument("spherical analysis needs a 2- or 3-mode record");
}

int cmd_analyze(const GlobalOpts& g, const std::string& in_path, const std::string& mode,
                const std::string& out_path, int mode_index, int angles,
                const std::string& quads_arg, int n_theta, int n_phi, int bins, double range,
                const std::string& subtract_path, const std::string& process, double gt,
                std::size_t sweep_samples, int n_phases, double phase_offset) {
  ensure_parent_dir(out_path);
  json summary;
  std::string csvtext;

  auto load_input = [&]() {
    auto rec = load_record_any(in_path);
    if (phase_offset != 0.0)
      for (int m = 0; m < rec.n_modes; ++m) meas::rotate_mode_phase(rec, m, phase_offset);
    return rec;
  };

  if (mode == "polar") {
    const auto rec = load_input();
    const auto map = stats::polar_scan(rec, mode_index, angles);
    csvtext = pipeline::detail::polar_csv(map);
    double gamma_max = 0.0;
    for (double v : map.values) gamma_max = std::max(gamma_max, std::abs(v));
    summary["kind"] = "polar";
    summary["gamma_max"] = gamma_max;
    summary["node_antinode_ratio"] = map.node_antinode_ratio;
    summary["cumulants"] = pipeline::detail::cumulant_json(stats::cumulant_summary(rec));
  } else if (mode == "spherical") {
    const auto rec = load_input();
    stats::QuadSelection sel;
    if (quads_arg.empty()) {
      sel = default_selection(rec.n_modes);
    } else {
      std::array<std::string, 3> names;
      std::istringstream ss(quads_arg);
      std::string tok;
      int i = 0;
      while (std::getline(ss, tok, ',') && i < 3) names[static_cast<std::size_t>(i++)] = tok;
      if (i != 3) throw cfg::ConfigError("--quads expects three names like I1,Q1,I2");
      sel = stats::parse_selection(names);
    }
    const auto map = stats::spherical_scan(rec, sel, n_theta, n_phi);
    csvtext = pipeline::detail::spherical_csv(map);
    summary["kind"] = "spherical";
    summary["node_antinode_ratio"] = map.node_antinode_ratio;
    summary["cumulants"] = pipeline::detail::cumulant_json(stats::cumulant_summary(rec));
    double gamma_max = 0.0;
    for (double v : map.values) gamma_max = std::max(gamma_max, std::abs(v));
    summary["gamma_max"] = gamma_max;
  } else if (mode == "hist") {
    const auto rec = load_input();
    stats::HistGrid grid;
    grid.nx = grid.ny = bins;
    grid.xlo = grid.ylo = -range;
    grid.xhi = grid.yhi = range;
    auto h = stats::histogram2d(rec, mode_index, grid);
    if (!subtract_path.empty())
      h = stats::subtract(h, stats::histogram2d(load_record_any(subtract_path), mode_index, grid));
    csvtext = pipeline::detail::hist_csv(h);
    summary["kind"] = "hist";
    summary["n_inside"] = h.n_inside;
  } else if (mode == "sweep") {
    if (process.empty()) throw cfg::ConfigError("analyze --mode sweep requires --process");
    const cfg::RunConfig rc = load_run_config(g);
    const sim::Process proc = sim::parse_process(process);
    std::vector<double> phases;
    for (int i = 0; i < n_phases; ++i)
      phases.push_back(-two_pi + 4.0 * pi * i / n_phases);
    auto source = [&](double phase) {
      sim::SimParams sp;
      sp.process = proc;
      sp.drive = gt;
      sp.samples = sweep_samples;
      sp.seed = rc.seed + static_cast<std::uint64_t>((phase + 7.0) * 4096.0);
      sp.noise_photons = pipeline::detail::noise_or(rc, sim::process_modes(proc), 0.3);
      sp.pump_phase = phase;
      sp.mode_freqs = rc.device.mode_freqs;
      return sim::simulate_record(sp);
    };
    const auto sweep = stats::pump_phase_sweep(proc, phases, source);
    csvtext = pipeline::detail::sweep_csv(sweep);
    summary["kind"] = "sweep";
    summary["key"] = sweep.key;
    summary["fit"] = pipeline::detail::fit_json(sweep.fit);
  } else {
    throw cfg::ConfigError("unknown analyze mode '" + mode +
                           "' (expected polar|spherical|sweep|hist)");
  }

  {
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw std::runtime_error("analyze: cannot write " + out_path);
    f << csvtext;
  }
  const std::string json_path = out_path + ".json";
  std::ofstream jf(json_path, std::ios::trunc);
  jf << summary.dump(2) << "\n";
  std::printf("wrote %s and %s\n", out_path.c_str(), json_path.c_str());
  return 0;
}

int cmd_feedforward(const std::string& in_path, const std::string& protocol, int ref_1based,
                    const std::string& out_dir, int smooth) {
  const auto rec = load_record_any(in_path);
  const ff::Protocol proto =
      protocol == "3m" ? ff::Protocol::three_mode
                       : (protocol == "2m" ? ff::Protocol::two_mode
                                           : throw cfg::ConfigError("--protocol must be 3m or 2m"));
  const int ref = ref_1based - 1;
  const auto res = ff::apply_feedforward(rec, ref, proto, 100, smooth);
  std::filesystem::create_directories(out_dir);
  meas::write_record(out_dir + "/corrected.tpr", res.corrected);
  std::string csvtext = "pair,value,std_error\n";
  for (const auto& [name, est] : res.correlation_table)
    csvtext += name + "," + pipeline::detail::fmt(est.value) + "," +
               pipeline::detail::fmt(est.std_error) + "\n";
  {
    std::ofstream f(out_dir + "/correlations.csv", std::ios::trunc);
    f << csvtext;
  }
  json summary;
  summary["protocol"] = protocol;
  summary["reference_mode"] = ref_1based;
  summary["zero_phase_samples"] = res.zero_phase_samples;
  for (const auto& [name, est] : res.correlation_table)
    summary["correlations"][name] = pipeline::detail::estimate_json(est);
  if (proto == ff::Protocol::two_mode)
    summary["variance_ratio"] = pipeline::detail::estimate_json(res.variance_ratio);
  std::ofstream jf(out_dir + "/summary.json", std::ios::trunc);
  jf << summary.dump(2) << "\n";
  std::printf("wrote %s/{corrected.tpr,correlations.csv,summary.json}\n", out_dir.c_str());
  return 0;
}

int cmd_pipeline(const GlobalOpts& g, const std::string& name) {
  const cfg::RunConfig rc = load_run_config(g);
  const pipeline::Kind kind = pipeline::parse_pipeline(name);
  const json summary = pipeline::run_pipeline(rc, kind);
  std::printf("pipeline %s -> %s/%s (manifest.json + data files)\n", name.c_str(),
              rc.output_dir.c_str(), name.c_str());
  std::fputs(summary.dump(2).c_str(), stdout);
  std::fputs("\n", stdout);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-photon SPDC simulation and cumulant analysis toolkit"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--config", g.config_path, "device/run configuration file")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "master RNG seed");
  app.add_option("--out", g.out_dir, "output directory (pipelines)");

  // processes
  auto* processes = app.add_subcommand("processes", "list the pump-selected effective Hamiltonian");
  double pump_ghz = 0.0, tolerance_ghz = 1e-3;
  int order = 3;
  processes->add_option("--pump", pump_ghz, "pump frequency in GHz")->required();
  processes->add_option("--order", order, "expansion order")->check(CLI::Range(1, 4));
  processes->add_option("--tolerance", tolerance_ghz, "detuning tolerance in GHz");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "synthesize a heterodyne record");
  std::string process, sim_out, state_out;
  double gt = 0.1, pump_phase = 0.0, gain = 1.0, sample_rate = 1e6;
  std::size_t samples = 100000;
  std::vector<double> noise;
  simulate->add_option("--process", process, "1m | 2m | 3m")->required();
  simulate->add_option("--gt", gt, "drive strength g*t")->required();
  simulate->add_option("--samples", samples, "number of samples")->required();
  simulate->add_option("--out", sim_out, "output record path (.tpr binary or .csv)")->required();
  simulate->add_option("--noise", noise, "per-mode noise photons (variance per quadrature)");
  auto* phase_opt = simulate->add_option("--pump-phase", pump_phase, "pump phase in radians");
  simulate->add_option("--gain", gain, "system gain G");
  simulate->add_option("--sample-rate", sample_rate, "sample rate in Hz");
  simulate->add_option("--state-out", state_out, "also export the evolved state (text format)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "cumulant analysis of a record");
  std::string an_in, an_mode, an_out, quads_arg, subtract_path, sweep_process;
  int mode_index = 1, angles = 120, n_theta = 181, n_phi = 360, bins = 101, n_phases = 16;
  double range = 6.0, sweep_gt = 0.15, phase_offset = 0.0;
  std::size_t sweep_samples = 60000;
  analyze->add_option("--in", an_in, "input record (.tpr or .csv)");
  analyze->add_option("--mode", an_mode, "polar | spherical | sweep | hist")->required();
  analyze->add_option("--out", an_out, "output CSV path (summary written to <out>.json)")
      ->required();
  analyze->add_option("--mode-index", mode_index, "1-based record mode for polar/hist");
  analyze->add_option("--angles", angles, "polar angle count");
  analyze->add_option("--quads", quads_arg, "three quadratures for spherical, e.g. I1,Q1,I2");
  analyze->add_option("--theta", n_theta, "spherical theta grid points");
  analyze->add_option("--phi", n_phi, "spherical phi grid points");
  analyze->add_option("--bins", bins, "histogram bins per axis");
  analyze->add_option("--range", range, "histogram half-range in calibrated units");
  analyze->add_option("--subtract", subtract_path, "reference record to subtract (hist)");
  analyze->add_option("--process", sweep_process, "process for sweep mode (1m|2m|3m)");
  analyze->add_option("--gt", sweep_gt, "drive strength for sweep mode");
  analyze->add_option("--sweep-samples", sweep_samples, "samples per sweep phase");
  analyze->add_option("--phases", n_phases, "number of sweep phases");
  analyze->add_option("--phase-offset", phase_offset,
                      "global digitizer-vs-pump phase offset applied to all modes (radians)");

  // feedforward
  auto* feedfwd = app.add_subcommand("feedforward", "correlation feed-forward protocol");
  std::string ff_in, ff_protocol, ff_out = "ff_out";
  int ff_ref = 1, ff_smooth = 1;
  feedfwd->add_option("--in", ff_in, "input record")->required();
  feedfwd->add_option("--protocol", ff_protocol, "3m | 2m")->required();
  feedfwd->add_option("--ref", ff_ref, "1-based reference mode")->required();
  feedfwd->add_option("--out", ff_out, "output directory");
  feedfwd->add_option("--smooth", ff_smooth, "moving-average window for the phase estimate");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "regenerate a full figure dataset");
  std::string pipe_name;
  pipe->add_option("--name", pipe_name, "fig2|fig3|fig4|fig5|fig6_table2|fig7")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit with 2
  }

  g.seed_given = seed_opt->count() > 0;

  try {
    if (processes->parsed()) return cmd_processes(g, pump_ghz, order, tolerance_ghz);
    if (simulate->parsed())
      return cmd_simulate(g, process, gt, samples, sim_out, noise, pump_phase,
                          phase_opt->count() > 0, gain, sample_rate, state_out);
    if (analyze->parsed())
      return cmd_analyze(g, an_in, an_mode, an_out, mode_index - 1, angles, quads_arg, n_theta,
                         n_phi, bins, range, subtract_path, sweep_process, sweep_gt, sweep_samples,
                         n_phases, phase_offset);
    if (feedfwd->parsed()) return cmd_feedforward(ff_in, ff_protocol, ff_ref, ff_out, ff_smooth);
    if (pipe->parsed()) return cmd_pipeline(g, pipe_name);
  } catch (const cfg::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

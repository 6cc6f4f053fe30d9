#ifndef TRIPHOTON_PIPELINE_HPP
#define TRIPHOTON_PIPELINE_HPP

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "triphoton/config.hpp"
#include "triphoton/feedforward.hpp"
#include "triphoton/fingerprint.hpp"
#include "triphoton/heterodyne.hpp"
#include "triphoton/parallel.hpp"
#include "triphoton/record.hpp"
#include "triphoton/sim.hpp"

namespace triphoton::pipeline {

using nlohmann::json;

enum class Kind { fig2, fig3, fig4, fig5, fig6_table2, fig7 };

inline Kind parse_pipeline(const std::string& s) {
  if (s == "fig2") return Kind::fig2;
  if (s == "fig3") return Kind::fig3;
  if (s == "fig4") return Kind::fig4;
  if (s == "fig5") return Kind::fig5;
  if (s == "fig6_table2") return Kind::fig6_table2;
  if (s == "fig7") return Kind::fig7;
  throw cfg::ConfigError("unknown pipeline '" + s +
                         "' (expected fig2|fig3|fig4|fig5|fig6_table2|fig7)");
}

inline std::string pipeline_name(Kind k) {
  switch (k) {
    case Kind::fig2: return "fig2";
    case Kind::fig3: return "fig3";
    case Kind::fig4: return "fig4";
    case Kind::fig5: return "fig5";
    case Kind::fig6_table2: return "fig6_table2";
    case Kind::fig7: return "fig7";
  }
  return "?";
}

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Tracks emitted files and writes the run manifest. Data files are
// deterministic for a fixed (config, seed); the manifest additionally
// records runtimes and is not covered by the byte-identity guarantee.
class Bundle {
public:
  Bundle(std::string dir, std::string pipeline) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    manifest_["pipeline"] = pipeline;
    manifest_["version"] = version_string();
    manifest_["files"] = json::array();
    start_ = std::chrono::steady_clock::now();
  }

  std::string path(const std::string& name) const { return dir_ + "/" + name; }

  void note_file(const std::string& name) {
    std::ifstream f(path(name), std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string bytes = ss.str();
    json entry;
    entry["name"] = name;
    entry["bytes"] = bytes.size();
    entry["crc32"] = meas::crc32(bytes.data(), bytes.size());
    manifest_["files"].push_back(entry);
  }

  void write_text(const std::string& name, const std::string& body) {
    std::ofstream f(path(name), std::ios::trunc | std::ios::binary);
    if (!f) throw std::runtime_error("pipeline: cannot write " + path(name));
    f << body;
    f.close();
    note_file(name);
  }

  void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }

  void write_record(const std::string& name, const meas::QuadratureRecord& rec) {
    meas::write_record(path(name), rec);
    note_file(name);
  }

  json& manifest() { return manifest_; }

  void finish(const json& parameters) {
    manifest_["parameters"] = parameters;
    const std::string canon = parameters.dump();
    manifest_["config_crc32"] = meas::crc32(canon.data(), canon.size());
    manifest_["threads"] = thread_count();
    manifest_["runtime_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              start_)
            .count();
    std::ofstream f(path("manifest.json"), std::ios::trunc);
    f << manifest_.dump(2) << "\n";
  }

private:
  std::string dir_;
  json manifest_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string polar_csv(const stats::FingerprintMap& map) {
  std::string s = "phi,gamma,std_error\n";
  for (std::size_t i = 0; i < map.phi.size(); ++i) {
    s += fmt(map.phi[i]) + "," + fmt(map.values[i]) + "," +
         (map.std_errors.empty() ? "0" : fmt(map.std_errors[i])) + "\n";
  }
  return s;
}

inline std::string spherical_csv(const stats::FingerprintMap& map) {
  std::string s = "theta,phi,gamma,std_error\n";
  for (std::size_t it = 0; it < map.theta.size(); ++it)
    for (std::size_t ip = 0; ip < map.phi.size(); ++ip) {
      const std::size_t idx = it * map.phi.size() + ip;
      s += fmt(map.theta[it]) + "," + fmt(map.phi[ip]) + "," + fmt(map.values[idx]) + "," +
           (map.std_errors.empty() ? "0" : fmt(map.std_errors[idx])) + "\n";
    }
  return s;
}

inline std::string hist_csv(const stats::Histogram2D& h) {
  std::string s = "x,p,density\n";
  const double wx = (h.grid.xhi - h.grid.xlo) / h.grid.nx;
  const double wy = (h.grid.yhi - h.grid.ylo) / h.grid.ny;
  for (int iy = 0; iy < h.grid.ny; ++iy)
    for (int ix = 0; ix < h.grid.nx; ++ix)
      s += fmt(h.grid.xlo + (ix + 0.5) * wx) + "," + fmt(h.grid.ylo + (iy + 0.5) * wy) + "," +
           fmt(h.density[static_cast<std::size_t>(iy) * static_cast<std::size_t>(h.grid.nx) +
                         static_cast<std::size_t>(ix)]) +
           "\n";
  return s;
}

inline std::string sweep_csv(const stats::SweepResult& sweep) {
  std::string s = "phase";
  for (const auto& [name, est] : sweep.points.front().covariances)
    s += ",cov_" + name + ",cov_" + name + "_err";
  for (const auto& [name, est] : sweep.points.front().coskewnesses)
    s += ",cosk_" + name + ",cosk_" + name + "_err";
  s += "\n";
  for (const auto& pt : sweep.points) {
    s += fmt(pt.phase);
    for (const auto& [name, est] : pt.covariances)
      s += "," + fmt(est.value) + "," + fmt(est.std_error);
    for (const auto& [name, est] : pt.coskewnesses)
      s += "," + fmt(est.value) + "," + fmt(est.std_error);
    s += "\n";
  }
  return s;
}

inline json fit_json(const stats::SinusoidFit& fit) {
  return json{{"amplitude", fit.amplitude},
              {"phase", fit.phase},
              {"offset", fit.offset},
              {"r_squared", fit.r_squared},
              {"residual_rms", fit.residual_rms}};
}

inline json estimate_json(const stats::Estimate& e) {
  return json{{"value", e.value}, {"std_error", e.std_error}};
}

inline json cumulant_json(const stats::CumulantSummary& c) {
  json out;
  out["n_samples"] = c.n;
  out["n_batches"] = c.n_batches;
  const int k = static_cast<int>(c.names.size());
  for (int i = 0; i < k; ++i) out["mean"][c.names[static_cast<std::size_t>(i)]] = estimate_json(c.means[static_cast<std::size_t>(i)]);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i <= j; ++i)
      out["covariance"][c.names[static_cast<std::size_t>(i)] + c.names[static_cast<std::size_t>(j)]] =
          estimate_json(c.covariance_entry(i, j));
  for (int l = 0; l < k; ++l)
    for (int j = 0; j <= l; ++j)
      for (int i = 0; i <= j; ++i)
        out["coskewness"][c.names[static_cast<std::size_t>(i)] + c.names[static_cast<std::size_t>(j)] +
                          c.names[static_cast<std::size_t>(l)]] = estimate_json(c.coskewness_entry(i, j, l));
  return out;
}

inline std::vector<double> noise_or(const cfg::RunConfig& rc, int n_modes, double fallback) {
  if (static_cast<int>(rc.noise_photons.size()) == n_modes) return rc.noise_photons;
  return std::vector<double>(static_cast<std::size_t>(n_modes), fallback);
}

inline sim::SimParams base_params(const cfg::RunConfig& rc, sim::Process process, double drive,
                                  double pump_phase, double noise_fallback,
                                  std::uint64_t seed_offset = 0) {
  sim::SimParams sp;
  sp.process = process;
  sp.drive = drive;
  sp.samples = rc.samples;
  sp.seed = rc.seed + seed_offset;
  sp.noise_photons = noise_or(rc, sim::process_modes(process), noise_fallback);
  sp.gain = rc.gain;
  sp.pump_phase = pump_phase;
  sp.mode_freqs = rc.device.mode_freqs;
  return sp;
}

// ---------------------------------------------------------------------------

inline json run_fig2(const cfg::RunConfig& rc, Bundle& b) {
  const double drive =
      rc.process == sim::Process::single_mode ? rc.drive_strength : 0.05;
  sim::SimParams sp = base_params(rc, sim::Process::single_mode, drive, -0.5 * pi, 0.1);
  const auto pumped = sim::simulate_record(sp);
  sim::SimParams noise_sp = sp;
  noise_sp.drive = 0.0;
  noise_sp.seed = sp.seed + 1;
  const auto unpumped = sim::simulate_record(noise_sp);

  b.write_record("record_pumped.tpr", pumped);
  stats::HistGrid grid;
  const auto h_sig = stats::histogram2d(pumped, 0, grid);
  const auto h_ref = stats::histogram2d(unpumped, 0, grid);
  b.write_text("hist_pumped.csv", hist_csv(h_sig));
  b.write_text("hist_noise.csv", hist_csv(h_ref));
  b.write_text("hist_subtracted.csv", hist_csv(stats::subtract(h_sig, h_ref)));

  const auto polar = stats::polar_scan(pumped, 0, 120);
  b.write_text("polar.csv", polar_csv(polar));
  const auto noise_polar = stats::polar_scan(unpumped, 0, 120);
  b.write_text("polar_noise.csv", polar_csv(noise_polar));

  const double kappa = two_pi * rc.device.mode_freqs[0] * 1e9 / rc.device.quality_factors[0];
  const auto flux = meas::flux_density(pumped, 0, kappa);

  double gamma_max = 0.0;
  for (double v : polar.values) gamma_max = std::max(gamma_max, std::abs(v));
  json summary;
  summary["drive"] = sp.drive;
  summary["noise_photons"] = sp.noise_photons;
  summary["gamma_max"] = gamma_max;
  summary["node_antinode_ratio"] = polar.node_antinode_ratio;
  summary["flux_density"] = {{"value", flux.value},
                             {"bandwidth_hz", flux.bandwidth},
                             {"mean_photons", flux.mean_photons},
                             {"std_error", flux.std_error}};
  b.write_json("summary.json", summary);
  return summary;
}

inline json run_fig3(const cfg::RunConfig& rc, Bundle& b) {
  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(-two_pi + 4.0 * pi * i / 16.0);
  const std::size_t per_phase = std::max<std::size_t>(rc.samples / 8, 20000);
  json summary;
  int pipeline_index = 0;
  for (auto process : {sim::Process::two_mode, sim::Process::three_mode}) {
    auto source = [&](double phase) {
      sim::SimParams sp = base_params(rc, process, rc.drive_strength, phase, 0.3,
                                      1000u * static_cast<unsigned>(pipeline_index + 1));
      sp.samples = per_phase;
      sp.seed += static_cast<std::uint64_t>((phase + 7.0) * 4096.0);
      return sim::simulate_record(sp);
    };
    const auto sweep = stats::pump_phase_sweep(process, phases, source);
    const std::string name = sim::process_name(process);
    b.write_text("sweep_" + name + ".csv", sweep_csv(sweep));
    summary["sweep_" + name] = {{"key", sweep.key}, {"fit", fit_json(sweep.fit)}};
    ++pipeline_index;
  }
  b.write_json("summary.json", summary);
  return summary;
}

inline json run_fig4(const cfg::RunConfig& rc, Bundle& b) {
  json summary;
  for (auto process : {sim::Process::two_mode, sim::Process::three_mode}) {
    const bool two = process == sim::Process::two_mode;
    sim::SimParams sp = base_params(rc, process, rc.drive_strength, -0.5 * pi, 0.3,
                                    two ? 21u : 22u);
    const auto rec = sim::simulate_record(sp);
    const std::array<std::string, 3> quads =
        two ? std::array<std::string, 3>{"I1", "Q1", "I2"}
            : std::array<std::string, 3>{"I1", "I2", "I3"};
    std::string csvtext = "term,value,std_error\n";
    json terms;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        for (int k = j; k < 3; ++k) {
          const auto [mi, qi] = stats::parse_quad_name(quads[static_cast<std::size_t>(i)]);
          const auto [mj, qj] = stats::parse_quad_name(quads[static_cast<std::size_t>(j)]);
          const auto [mk, qk] = stats::parse_quad_name(quads[static_cast<std::size_t>(k)]);
          const auto est = stats::coskewness(stats::quadrature_stream(rec, mi, qi),
                                             stats::quadrature_stream(rec, mj, qj),
                                             stats::quadrature_stream(rec, mk, qk));
          const std::string name = quads[static_cast<std::size_t>(i)] +
                                   quads[static_cast<std::size_t>(j)] +
                                   quads[static_cast<std::size_t>(k)];
          csvtext += name + "," + fmt(est.value) + "," + fmt(est.std_error) + "\n";
          terms[name] = estimate_json(est);
        }
    const std::string name = sim::process_name(process);
    b.write_text("coskewness_" + name + ".csv", csvtext);
    summary["coskewness_" + name] = terms;
  }
  b.write_json("summary.json", summary);
  return summary;
}

inline json run_fig5(const cfg::RunConfig& rc, Bundle& b) {
  json summary;
  for (auto process : {sim::Process::two_mode, sim::Process::three_mode}) {
    const bool two = process == sim::Process::two_mode;
    const double drive = two ? std::min(rc.drive_strength, 0.1) : rc.drive_strength;
    sim::SimParams sp = base_params(rc, process, drive, -0.5 * pi, 0.0, two ? 51u : 52u);
    const auto rec = sim::simulate_record(sp);
    const auto sel = two ? stats::parse_selection({"I1", "Q1", "I2"})
                         : stats::parse_selection({"I1", "I2", "I3"});
    auto data = stats::spherical_scan(rec, sel);
    double max_abs = 0.0;
    for (double v : data.values) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs > 0.0)
      for (double& v : data.values) v /= max_abs;
    const auto eff =
        sim::make_process_hamiltonian(process, rc.device.mode_freqs, 1.0, sp.pump_phase);
    const auto theory = stats::theory_fingerprint(eff, sel, drive);
    const std::string name = sim::process_name(process);
    b.write_text("spherical_data_" + name + ".csv", spherical_csv(data));
    b.write_text("spherical_theory_" + name + ".csv", spherical_csv(theory));
    summary["fig5_" + name] = {{"cosine_similarity", stats::cosine_similarity(theory, data)},
                               {"node_antinode_ratio_data", data.node_antinode_ratio},
                               {"node_antinode_ratio_theory", theory.node_antinode_ratio},
                               {"drive", drive}};
  }
  b.write_json("summary.json", summary);
  return summary;
}

inline json run_fig6_table2(const cfg::RunConfig& rc, Bundle& b) {
  // -pi/4 makes all four recovered coefficients nonzero: II = -QQ, IQ = QI
  sim::SimParams on = base_params(rc, sim::Process::three_mode, rc.drive_strength, -0.25 * pi, 0.3);
  const auto rec_on = sim::simulate_record(on);
  sim::SimParams off = on;
  off.drive = 0.0;
  off.seed = on.seed + 1;
  const auto rec_off = sim::simulate_record(off);

  const auto ff_on = ff::apply_feedforward(rec_on, 0, ff::Protocol::three_mode);
  const auto ff_off = ff::apply_feedforward(rec_off, 0, ff::Protocol::three_mode);
  const auto raw_on = ff::correlation_table(rec_on, 1, 2);
  const auto raw_off = ff::correlation_table(rec_off, 1, 2);

  b.write_record("record_corrected.tpr", ff_on.corrected);
  std::string csvtext = "pair,ff_on_pump_on,err,ff_on_pump_off,err,ff_off_pump_on,err,ff_off_pump_off,err\n";
  json table;
  for (const std::string pair : {"I2I3", "Q2Q3", "I2Q3", "Q2I3"}) {
    const auto a = ff_on.correlation_table.at(pair);
    const auto c = ff_off.correlation_table.at(pair);
    const auto d = raw_on.at(pair);
    const auto e = raw_off.at(pair);
    csvtext += pair;
    for (const auto& est : {a, c, d, e})
      csvtext += "," + fmt(est.value) + "," + fmt(est.std_error);
    csvtext += "\n";
    table[pair] = {{"feedforward_pump_on", estimate_json(a)},
                   {"feedforward_pump_off", estimate_json(c)},
                   {"raw_pump_on", estimate_json(d)},
                   {"raw_pump_off", estimate_json(e)}};
  }
  b.write_text("table2.csv", csvtext);
  json summary;
  summary["table"] = table;
  summary["zero_phase_samples"] = ff_on.zero_phase_samples;
  b.write_json("summary.json", summary);
  return summary;
}

inline json run_fig7(const cfg::RunConfig& rc, Bundle& b) {
  const double drive =
      rc.process == sim::Process::two_mode ? rc.drive_strength : 0.12;
  sim::SimParams on = base_params(rc, sim::Process::two_mode, drive, -0.5 * pi, 0.2);
  const auto rec_on = sim::simulate_record(on);
  sim::SimParams off = on;
  off.drive = 0.0;
  off.seed = on.seed + 1;
  const auto rec_off = sim::simulate_record(off);

  // mode 2 is the reference; mode 1 is phase-corrected
  const auto ff_on = ff::apply_feedforward(rec_on, 1, ff::Protocol::two_mode);
  const auto ff_off = ff::apply_feedforward(rec_off, 1, ff::Protocol::two_mode);

  stats::HistGrid grid;
  const auto h_on = stats::histogram2d(ff_on.corrected, 0, grid);
  const auto h_off = stats::histogram2d(ff_off.corrected, 0, grid);
  b.write_text("hist_corrected.csv", hist_csv(h_on));
  b.write_text("hist_corrected_noise.csv", hist_csv(h_off));
  b.write_text("hist_subtracted.csv", hist_csv(stats::subtract(h_on, h_off)));
  b.write_record("record_corrected.tpr", ff_on.corrected);

  // uncorrected variance ratio for contrast
  const stats::StreamView views[2] = {stats::quadrature_stream(rec_on, 0, stats::Quad::I),
                                      stats::quadrature_stream(rec_on, 0, stats::Quad::Q)};
  const auto mom = stats::accumulate_moments(views);
  json summary;
  summary["variance_ratio_feedforward"] = estimate_json(ff_on.variance_ratio);
  summary["variance_ratio_feedforward_noise_only"] = estimate_json(ff_off.variance_ratio);
  summary["variance_ratio_raw"] = mom.covariance(0, 0) / mom.covariance(1, 1);
  summary["drive"] = drive;
  b.write_json("summary.json", summary);
  return summary;
}

} // namespace detail

// Runs one figure-regeneration pipeline into rc.output_dir/<name>/ and writes
// a manifest with checksums of every emitted file.
inline json run_pipeline(const cfg::RunConfig& rc, Kind kind) {
  detail::Bundle bundle(rc.output_dir + "/" + pipeline_name(kind), pipeline_name(kind));
  json summary;
  switch (kind) {
    case Kind::fig2: summary = detail::run_fig2(rc, bundle); break;
    case Kind::fig3: summary = detail::run_fig3(rc, bundle); break;
    case Kind::fig4: summary = detail::run_fig4(rc, bundle); break;
    case Kind::fig5: summary = detail::run_fig5(rc, bundle); break;
    case Kind::fig6_table2: summary = detail::run_fig6_table2(rc, bundle); break;
    case Kind::fig7: summary = detail::run_fig7(rc, bundle); break;
  }
  json parameters;
  parameters["process"] = sim::process_name(rc.process);
  parameters["drive_strength"] = rc.drive_strength;
  parameters["samples"] = rc.samples;
  parameters["seed"] = rc.seed;
  parameters["noise_photons"] = rc.noise_photons;
  parameters["pump_phase"] = rc.pump_phase;
  parameters["gain"] = rc.gain;
  parameters["mode_freqs"] = rc.device.mode_freqs;
  bundle.finish(parameters);
  return summary;
}

} // namespace triphoton::pipeline

#endif

#ifndef TRIPHOTON_CONFIG_HPP
#define TRIPHOTON_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "triphoton/device.hpp"
#include "triphoton/sim.hpp"

namespace triphoton::cfg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Value = std::variant<double, std::string, std::vector<double>>;

// Minimal structured-text config: one `key = value` per line, # comments,
// values are numbers, [comma, separated, lists] or bare strings.
class Config {
public:
  static Config parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  static Config parse(const std::string& text, const std::string& origin = "<string>") {
    Config out;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string val = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      if (val.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty value for '" + key + "'");
      out.values_[key] = parse_value(val, origin, line_no);
    }
    return out;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double number(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const double* d = std::get_if<double>(&it->second)) return *d;
    throw ConfigError("config: '" + key + "' must be a number");
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
    if (const double* d = std::get_if<double>(&it->second)) {
      std::ostringstream ss;
      ss << *d;
      return ss.str();
    }
    throw ConfigError("config: '" + key + "' must be a string");
  }

  std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
    if (const double* d = std::get_if<double>(&it->second)) return {*d};
    throw ConfigError("config: '" + key + "' must be a list of numbers");
  }

  const std::map<std::string, Value>& raw() const { return values_; }

private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }

  static Value parse_value(const std::string& val, const std::string& origin, int line_no) {
    if (val.front() == '[') {
      if (val.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated list");
      std::vector<double> items;
      std::istringstream ls(val.substr(1, val.size() - 2));
      std::string tok;
      while (std::getline(ls, tok, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) continue;
        try {
          std::size_t used = 0;
          const double d = std::stod(t, &used);
          if (used != t.size()) throw std::invalid_argument(t);
          items.push_back(d);
        } catch (const std::exception&) {
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad list entry '" + t + "'");
        }
      }
      return items;
    }
    try {
      std::size_t used = 0;
      const double d = std::stod(val, &used);
      if (used == val.size()) return d;
    } catch (const std::exception&) {
      // fall through to string
    }
    return val;
  }

  std::map<std::string, Value> values_;
};

inline device::DeviceParams device_from_config(const Config& c) {
  device::DeviceParams p;  // defaults mirror the reference device
  p.ej1 = c.number("ej1", p.ej1);
  p.ej2 = c.number("ej2", p.ej2);
  p.area_ratio = c.number("area_ratio", p.area_ratio);
  p.flux_bias = c.number("flux_bias", p.flux_bias);
  p.pump_amplitude = c.number("pump_amplitude", p.pump_amplitude);
  p.pump_phase = c.number("pump_phase", p.pump_phase);
  p.mode_freqs = c.list("mode_freqs", p.mode_freqs);
  p.quality_factors = c.list("quality_factors", p.quality_factors);
  p.impedance = c.number("impedance", p.impedance);
  p.zero_point_amplitudes = c.list("zero_point_amplitudes", p.zero_point_amplitudes);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return p;
}

// Full run description for pipelines; every field has a workable default.
struct RunConfig {
  device::DeviceParams device;
  sim::Process process = sim::Process::three_mode;
  double drive_strength = 0.15;  // g*t
  std::size_t samples = 500000;
  std::uint64_t seed = 1;
  std::vector<double> noise_photons;  // empty = per-pipeline default
  double pump_phase = -0.5 * pi;
  double gain = 1.0;
  std::string output_dir = "out";
};

inline RunConfig run_config_from_config(const Config& c) {
  RunConfig rc;
  rc.device = device_from_config(c);
  if (c.has("process")) rc.process = sim::parse_process(c.text("process", "3m"));
  rc.drive_strength = c.number("drive_strength", rc.drive_strength);
  const double samples = c.number("samples", static_cast<double>(rc.samples));
  if (samples < 1 || samples != std::floor(samples))
    throw ConfigError("config: 'samples' must be a positive integer");
  rc.samples = static_cast<std::size_t>(samples);
  const double seed = c.number("seed", static_cast<double>(rc.seed));
  if (seed < 0 || seed != std::floor(seed))
    throw ConfigError("config: 'seed' must be a non-negative integer");
  rc.seed = static_cast<std::uint64_t>(seed);
  if (c.has("noise_photons")) rc.noise_photons = c.list("noise_photons", {});
  for (double n : rc.noise_photons)
    if (n < 0.0) throw ConfigError("config: 'noise_photons' entries must be >= 0");
  rc.pump_phase = c.number("run_pump_phase", rc.pump_phase);
  rc.gain = c.number("gain", rc.gain);
  if (!(rc.gain > 0.0)) throw ConfigError("config: 'gain' must be > 0");
  if (!(rc.drive_strength >= 0.0)) throw ConfigError("config: 'drive_strength' must be >= 0");
  rc.output_dir = c.text("output_dir", rc.output_dir);
  return rc;
}

inline std::string default_config_text() {
  return R"(# triphoton device + run configuration
# -- device ------------------------------------------------------------
ej1 = 1.0                 # Josephson energy, junction 1 (GHz)
ej2 = 1.7                 # Josephson energy, junction 2 (GHz); area ratio 1:1.7
area_ratio = 1.7          # design junction-area ratio (dimensionless)
flux_bias = 0.25          # DC flux working point (flux quanta)
pump_amplitude = 1.0      # |beta_p| (dimensionless, parametric approximation)
pump_phase = 0.0          # arg(beta_p) at the device (radians)
mode_freqs = [4.2, 6.1, 7.5]        # cavity mode frequencies (GHz)
quality_factors = [7000, 7000, 7000]
impedance = 50.0          # line impedance (ohms, metadata)
zero_point_amplitudes = [0.1, 0.1, 0.1]  # per-mode zero-point cavity phase

# -- run ---------------------------------------------------------------
process = 3m              # 1m | 2m | 3m
drive_strength = 0.15     # g*t product of the simulated evolution
samples = 500000          # heterodyne samples per record
seed = 1
noise_photons = [0.3, 0.3, 0.3]  # added variance per quadrature, per mode
run_pump_phase = -1.5707963267948966  # radians; -pi/2 aligns correlators with I
gain = 1.0
output_dir = out
)";
}

} // namespace triphoton::cfg

#endif

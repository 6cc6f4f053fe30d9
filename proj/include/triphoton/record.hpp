#ifndef TRIPHOTON_RECORD_HPP
#define TRIPHOTON_RECORD_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace triphoton::meas {

struct VersionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncatedFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChecksumFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CsvParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Heterodyne time series: interleaved (I, Q) pairs per mode per time step,
// I_1 Q_1 I_2 Q_2 ... in raw (gain-scaled) units. Calibrated quadratures are
// x = I / sqrt(G), p = Q / sqrt(G).
struct QuadratureRecord {
  int n_modes = 1;
  std::size_t n_samples = 0;
  double sample_rate = 1e6;  // Hz
  double gain = 1.0;
  std::vector<double> noise_photons;  // per mode, variance added per quadrature
  double pump_phase = 0.0;
  bool pump_on = false;
  std::string calibration_note;
  std::vector<double> samples;  // n_samples * n_modes * 2, interleaved

  std::size_t row_width() const { return static_cast<std::size_t>(n_modes) * 2; }

  double raw_i(std::size_t k, int mode) const {
    return samples[k * row_width() + 2 * static_cast<std::size_t>(mode)];
  }
  double raw_q(std::size_t k, int mode) const {
    return samples[k * row_width() + 2 * static_cast<std::size_t>(mode) + 1];
  }
  double& raw_i(std::size_t k, int mode) {
    return samples[k * row_width() + 2 * static_cast<std::size_t>(mode)];
  }
  double& raw_q(std::size_t k, int mode) {
    return samples[k * row_width() + 2 * static_cast<std::size_t>(mode) + 1];
  }

  double calib_x(std::size_t k, int mode) const { return raw_i(k, mode) / std::sqrt(gain); }
  double calib_p(std::size_t k, int mode) const { return raw_q(k, mode) / std::sqrt(gain); }

  void validate() const {
    if (n_modes < 1 || n_modes > 3) throw std::invalid_argument("record: 1-3 modes supported");
    if (n_samples < 1) throw std::invalid_argument("record: need at least one sample");
    if (!(gain > 0.0)) throw std::invalid_argument("record: gain must be > 0");
    if (noise_photons.size() != static_cast<std::size_t>(n_modes))
      throw std::invalid_argument("record: one noise_photons entry per mode");
    for (double n : noise_photons)
      if (n < 0.0) throw std::invalid_argument("record: noise_photons must be >= 0");
    if (samples.size() != n_samples * row_width())
      throw std::invalid_argument("record: sample buffer size mismatch");
  }
};

// Rotates one mode's (I, Q) phasor by a fixed angle; used for the global
// digitizer-vs-pump phase offset and the feed-forward corrections.
inline void rotate_mode_phase(QuadratureRecord& rec, int mode, double delta) {
  const double c = std::cos(delta), s = std::sin(delta);
  for (std::size_t k = 0; k < rec.n_samples; ++k) {
    const double i = rec.raw_i(k, mode), q = rec.raw_q(k, mode);
    rec.raw_i(k, mode) = i * c - q * s;
    rec.raw_q(k, mode) = i * s + q * c;
  }
}

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320) over the payload.
inline std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = ~seed;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
  return ~crc;
}

namespace detail {

inline constexpr char kMagic[8] = {'T', 'P', 'H', 'R', 'E', 'C', '0', '\n'};
inline constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class Reader {
public:
  Reader(const std::string& buf) : buf_(buf) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

private:
  std::uint64_t u(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  void need(std::size_t n) {
    if (pos_ + n > buf_.size()) throw TruncatedFile("record: file shorter than header promises");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

} // namespace detail

// Versioned little-endian binary format:
//   magic(8) version(u32) n_modes(u32) n_samples(u64) sample_rate(f64)
//   gain(f64) pump_phase(f64) pump_on(u8) noise_photons(n_modes x f64)
//   note_len(u32) note  payload(n_samples*n_modes*2 x f64)  crc32(payload)
inline std::string serialize_record(const QuadratureRecord& rec) {
  rec.validate();
  std::string out;
  out.reserve(64 + rec.samples.size() * 8);
  out.append(detail::kMagic, 8);
  detail::put_u32(out, detail::kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(rec.n_modes));
  detail::put_u64(out, rec.n_samples);
  detail::put_f64(out, rec.sample_rate);
  detail::put_f64(out, rec.gain);
  detail::put_f64(out, rec.pump_phase);
  out.push_back(rec.pump_on ? '\1' : '\0');
  for (double n : rec.noise_photons) detail::put_f64(out, n);
  detail::put_u32(out, static_cast<std::uint32_t>(rec.calibration_note.size()));
  out += rec.calibration_note;
  const std::size_t payload_start = out.size();
  for (double v : rec.samples) detail::put_f64(out, v);
  const std::uint32_t crc = crc32(out.data() + payload_start, out.size() - payload_start);
  detail::put_u32(out, crc);
  return out;
}

inline QuadratureRecord deserialize_record(const std::string& buf) {
  detail::Reader r(buf);
  const std::string magic = r.bytes(8);
  if (std::memcmp(magic.data(), detail::kMagic, 8) != 0)
    throw VersionMismatch("record: bad magic string");
  const std::uint32_t version = r.u32();
  if (version != detail::kVersion)
    throw VersionMismatch("record: unsupported version " + std::to_string(version));
  QuadratureRecord rec;
  rec.n_modes = static_cast<int>(r.u32());
  if (rec.n_modes < 1 || rec.n_modes > 3) throw VersionMismatch("record: invalid mode count");
  rec.n_samples = r.u64();
  rec.sample_rate = r.f64();
  rec.gain = r.f64();
  rec.pump_phase = r.f64();
  rec.pump_on = r.bytes(1)[0] != '\0';
  rec.noise_photons.resize(static_cast<std::size_t>(rec.n_modes));
  for (auto& n : rec.noise_photons) n = r.f64();
  const std::uint32_t note_len = r.u32();
  rec.calibration_note = r.bytes(note_len);
  const std::size_t count = rec.n_samples * rec.row_width();
  const std::size_t payload_start = r.pos();
  rec.samples.resize(count);
  for (auto& v : rec.samples) v = r.f64();
  const std::uint32_t stored = r.u32();
  const std::uint32_t actual = crc32(buf.data() + payload_start, count * 8);
  if (stored != actual) throw ChecksumFailure("record: payload CRC mismatch");
  rec.validate();
  return rec;
}

inline void write_record(const std::string& path, const QuadratureRecord& rec) {
  const std::string buf = serialize_record(rec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_record: cannot open " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("write_record: write failed for " + path);
}

inline QuadratureRecord read_record(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_record: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_record(ss.str());
}

// CSV ingestion: optional "# key = value" metadata lines, then a header row
// naming the columns (I1,Q1,I2,...), then one row per time step.
inline QuadratureRecord read_record_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_record_csv: cannot open " + path);
  QuadratureRecord rec;
  rec.n_modes = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> noise;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string key = trim(body.substr(0, eq));
      const std::string val = trim(body.substr(eq + 1));
      try {
        if (key == "gain") rec.gain = std::stod(val);
        else if (key == "sample_rate") rec.sample_rate = std::stod(val);
        else if (key == "pump_phase") rec.pump_phase = std::stod(val);
        else if (key == "pump_on") rec.pump_on = (val == "1" || val == "true");
        else if (key == "noise_photons") {
          noise.clear();
          std::istringstream vs(val);
          std::string tok;
          while (std::getline(vs, tok, ',')) noise.push_back(std::stod(tok));
        } else if (key == "calibration_note") rec.calibration_note = val;
      } catch (const std::exception&) {
        throw CsvParseError("csv line " + std::to_string(line_no) + ": bad metadata value");
      }
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    if (!header_seen) {
      int cols = 0;
      while (std::getline(ls, cell, ',')) ++cols;
      if (cols < 2 || cols % 2 != 0)
        throw CsvParseError("csv line " + std::to_string(line_no) + ": expected I/Q column pairs");
      rec.n_modes = cols / 2;
      header_seen = true;
      continue;
    }
    std::size_t got = 0;
    while (std::getline(ls, cell, ',')) {
      try {
        rec.samples.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw CsvParseError("csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      ++got;
    }
    if (got != rec.row_width())
      throw CsvParseError("csv line " + std::to_string(line_no) + ": wrong column count");
    ++rec.n_samples;
  }
  if (!header_seen) throw CsvParseError("csv: missing header row");
  rec.noise_photons =
      noise.empty() ? std::vector<double>(static_cast<std::size_t>(rec.n_modes), 0.0) : noise;
  rec.validate();
  return rec;
}

inline void write_record_csv(const std::string& path, const QuadratureRecord& rec) {
  rec.validate();
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("write_record_csv: cannot open " + path);
  char buf[64];
  f.precision(17);
  f << "# gain = " << rec.gain << "\n";
  f << "# sample_rate = " << rec.sample_rate << "\n";
  f << "# pump_phase = " << rec.pump_phase << "\n";
  f << "# pump_on = " << (rec.pump_on ? 1 : 0) << "\n";
  f << "# noise_photons = ";
  for (int m = 0; m < rec.n_modes; ++m)
    f << rec.noise_photons[static_cast<std::size_t>(m)] << (m + 1 < rec.n_modes ? "," : "\n");
  if (!rec.calibration_note.empty()) f << "# calibration_note = " << rec.calibration_note << "\n";
  for (int m = 0; m < rec.n_modes; ++m)
    f << "I" << m + 1 << ",Q" << m + 1 << (m + 1 < rec.n_modes ? "," : "\n");
  for (std::size_t k = 0; k < rec.n_samples; ++k) {
    for (std::size_t c = 0; c < rec.row_width(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", rec.samples[k * rec.row_width() + c]);
      f << buf << (c + 1 < rec.row_width() ? "," : "\n");
    }
  }
}

} // namespace triphoton::meas

#endif

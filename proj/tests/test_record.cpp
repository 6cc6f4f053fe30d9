#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "triphoton/record.hpp"

using namespace triphoton::meas;

namespace {

QuadratureRecord random_record(std::mt19937_64& rng, int n_modes, std::size_t n_samples,
                               bool pump_on) {
  std::normal_distribution<double> gauss(0.0, 2.0);
  std::uniform_real_distribution<double> uni(0.1, 4.0);
  QuadratureRecord rec;
  rec.n_modes = n_modes;
  rec.n_samples = n_samples;
  rec.sample_rate = 1e6;
  rec.gain = uni(rng);
  rec.pump_phase = uni(rng) - 2.0;
  rec.pump_on = pump_on;
  rec.noise_photons.assign(static_cast<std::size_t>(n_modes), 0.0);
  for (auto& v : rec.noise_photons) v = uni(rng);
  rec.calibration_note = "fixture";
  rec.samples.resize(n_samples * rec.row_width());
  for (auto& v : rec.samples) v = gauss(rng);
  return rec;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("binary round trip is byte identical") {
  std::mt19937_64 rng(17);
  struct Case {
    int modes;
    std::size_t n;
    bool pump;
  };
  for (const Case c : {Case{3, 257, true}, Case{1, 1, false}, Case{2, 64, false}, Case{1, 1000, true}}) {
    const QuadratureRecord rec = random_record(rng, c.modes, c.n, c.pump);
    const std::string buf = serialize_record(rec);
    const QuadratureRecord back = deserialize_record(buf);
    CHECK(serialize_record(back) == buf);
    CHECK(back.n_modes == rec.n_modes);
    CHECK(back.n_samples == rec.n_samples);
    CHECK(back.samples == rec.samples);
    CHECK(back.gain == rec.gain);
    CHECK(back.pump_on == rec.pump_on);
    CHECK(back.noise_photons == rec.noise_photons);
    CHECK(back.calibration_note == rec.calibration_note);
  }
}

TEST_CASE("file round trip") {
  std::mt19937_64 rng(18);
  const QuadratureRecord rec = random_record(rng, 2, 33, true);
  const std::string path = temp_path("triphoton_roundtrip.tpr");
  write_record(path, rec);
  const QuadratureRecord back = read_record(path);
  CHECK(serialize_record(back) == serialize_record(rec));
  std::remove(path.c_str());
}

TEST_CASE("truncated file is rejected") {
  std::mt19937_64 rng(19);
  const QuadratureRecord rec = random_record(rng, 2, 40, false);
  std::string buf = serialize_record(rec);
  for (std::size_t keep : {buf.size() - 5, buf.size() / 2, std::size_t{11}})
    CHECK_THROWS_AS(deserialize_record(buf.substr(0, keep)), TruncatedFile);
}

TEST_CASE("payload corruption fails the checksum") {
  std::mt19937_64 rng(20);
  const QuadratureRecord rec = random_record(rng, 1, 25, true);
  std::string buf = serialize_record(rec);
  buf[buf.size() - 12] ^= 0x40;  // inside the payload
  CHECK_THROWS_AS(deserialize_record(buf), ChecksumFailure);
}

TEST_CASE("bad magic and bad version are rejected") {
  std::mt19937_64 rng(21);
  const QuadratureRecord rec = random_record(rng, 1, 4, true);
  std::string buf = serialize_record(rec);
  std::string bad_magic = buf;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_record(bad_magic), VersionMismatch);
  std::string bad_version = buf;
  bad_version[8] = 9;
  CHECK_THROWS_AS(deserialize_record(bad_version), VersionMismatch);
}

TEST_CASE("csv ingestion matches the binary path") {
  std::mt19937_64 rng(22);
  const QuadratureRecord rec = random_record(rng, 3, 57, true);
  const std::string bin_path = temp_path("triphoton_x.tpr");
  const std::string csv_path = temp_path("triphoton_x.csv");
  write_record(bin_path, rec);
  write_record_csv(csv_path, rec);

  const QuadratureRecord from_bin = read_record(bin_path);
  const QuadratureRecord from_csv = read_record_csv(csv_path);
  REQUIRE(from_csv.n_samples == from_bin.n_samples);
  REQUIRE(from_csv.n_modes == from_bin.n_modes);
  for (std::size_t i = 0; i < from_bin.samples.size(); ++i)
    CHECK(from_csv.samples[i] == from_bin.samples[i]);  // %.17g is lossless
  CHECK(from_csv.gain == from_bin.gain);
  CHECK(from_csv.pump_on == from_bin.pump_on);
  CHECK(from_csv.noise_photons == from_bin.noise_photons);
  std::remove(bin_path.c_str());
  std::remove(csv_path.c_str());
}

TEST_CASE("csv errors carry line numbers") {
  const std::string path = temp_path("triphoton_bad.csv");
  {
    std::ofstream f(path);
    f << "I1,Q1\n1.0,2.0\n3.0\n";
  }
  CHECK_THROWS_AS(read_record_csv(path), CsvParseError);
  std::remove(path.c_str());
}

TEST_CASE("crc32 known vector") {
  // standard check value for "123456789"
  CHECK(crc32("123456789", 9) == 0xCBF43926u);
}

TEST_CASE("mode phase rotation: quarter turns and inverses") {
  std::mt19937_64 rng(30);
  QuadratureRecord rec = random_record(rng, 2, 16, true);
  QuadratureRecord quarter = rec;
  rotate_mode_phase(quarter, 0, M_PI / 2);
  for (std::size_t k = 0; k < rec.n_samples; ++k) {
    CHECK(quarter.raw_i(k, 0) == doctest::Approx(-rec.raw_q(k, 0)).epsilon(1e-12));
    CHECK(quarter.raw_q(k, 0) == doctest::Approx(rec.raw_i(k, 0)).epsilon(1e-12));
    // untouched mode
    CHECK(quarter.raw_i(k, 1) == rec.raw_i(k, 1));
  }
  QuadratureRecord undone = quarter;
  rotate_mode_phase(undone, 0, -M_PI / 2);
  for (std::size_t k = 0; k < rec.n_samples; ++k)
    CHECK(undone.raw_i(k, 0) == doctest::Approx(rec.raw_i(k, 0)).epsilon(1e-12));
}

TEST_CASE("csv without metadata falls back to defaults") {
  const std::string path = temp_path("triphoton_plain.csv");
  {
    std::ofstream f(path);
    f << "I1,Q1\n0.5,-0.25\n1.5,2.0\n";
  }
  const QuadratureRecord rec = read_record_csv(path);
  CHECK(rec.gain == 1.0);
  CHECK(rec.sample_rate == 1e6);
  CHECK(rec.noise_photons == std::vector<double>{0.0});
  CHECK(rec.n_samples == 2);
  CHECK(rec.raw_q(1, 0) == 2.0);
  std::remove(path.c_str());
}

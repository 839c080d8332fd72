#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "dualgate/config.hpp"
#include "dualgate/errors.hpp"
#include "dualgate/kv_file.hpp"

using namespace dualgate;

namespace {

const std::string kData = DUALGATE_DATA_DIR;
const std::string kHeader = "atoms.constants_file = ba137_constants.txt\n";

RunConfig parse(const std::string& body) { return parse_config_text(kHeader + body, kData); }

int error_line(const std::string& text) {
  try {
    parse_config_text(text, kData);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("key=value reader") {
  const auto e = parse_kv_text("# comment\n\n a.b = 1 # trailing\nc=two words\n");
  REQUIRE(e.size() == 2);
  CHECK(e[0].key == "a.b");
  CHECK(e[0].value == "1");
  CHECK(e[0].line == 3);
  CHECK(e[1].value == "two words");
  CHECK_THROWS_AS(parse_kv_text("novalue\n"), ConfigError);
  CHECK_THROWS_AS(parse_kv_text("a=1\na=2\n"), ConfigError);
  CHECK(kv_to_bool({"k", "true", 1}));
  CHECK_FALSE(kv_to_bool({"k", "false", 1}));
  CHECK_THROWS_AS(kv_to_bool({"k", "yes please", 1}), ConfigError);
  CHECK(kv_to_int({"k", "42", 1}) == 42);
  CHECK_THROWS_AS(kv_to_int({"k", "4.2", 1}), ConfigError);
  CHECK(kv_to_double({"k", "1e-3", 1}) == 1e-3);
}

TEST_CASE("shipped preset parses to the built-in operating point") {
  const RunConfig c = parse_config(kData + "/paper-preset.cfg");
  const ExperimentConfig p = paper_preset();
  CHECK(c.experiment.b_gauss == p.b_gauss);
  CHECK(c.experiment.noise.tau_s == doctest::Approx(p.noise.tau_s).epsilon(1e-15));
  CHECK(c.experiment.noise.tau_m == doctest::Approx(p.noise.tau_m).epsilon(1e-15));
  CHECK(c.experiment.noise.heating_rate == p.noise.heating_rate);
  CHECK(c.experiment.noise.spam == p.noise.spam);
  CHECK(c.experiment.protocol.seed == p.protocol.seed);
  CHECK(c.experiment.protocol.pair == PairType::kSD);
  CHECK(c.experiment.gate.n_max == 7);
  REQUIRE(c.experiment.gate.measured_omega.has_value());
  CHECK((*c.experiment.gate.measured_omega)[1] == doctest::Approx(2 * kPi * 1.582e6));
  CHECK(std::filesystem::exists(c.constants_file));
  CHECK(c.canonical == canonical_text(c));
  CHECK(config_hash(c).size() == 16);

  const RunConfig alt = parse_config(kData + "/paper-preset-tau-m-supplement.cfg");
  CHECK(alt.experiment.noise.tau_m == doctest::Approx(4.92e-3));
  CHECK(config_hash(alt) != config_hash(c));
}

TEST_CASE("hash ignores comments and ordering but not values") {
  const RunConfig a = parse("noise.tau_s_ms = 2.6\nfield.b_gauss = 12.2\n");
  const RunConfig b = parse("# note\nfield.b_gauss=12.2\n\nnoise.tau_s_ms=2.6\n");
  CHECK(config_hash(a) == config_hash(b));
  const RunConfig c = parse("noise.tau_s_ms = 2.7\n");
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("values are converted to SI") {
  const RunConfig c = parse(
      "noise.tau_s_ms = 5\ndrive.wavelength_nm = 500\ndrive.beam_angle_deg = 90\n"
      "drive.mu_mhz = 1.6\nnumerics.dt_us = 0.1\nprotocol.pair = dd\nmodes.use_measured = false\n"
      "noise.laser_correlation = collective\ndrive.model = exact\n");
  CHECK(c.experiment.noise.tau_s == doctest::Approx(5e-3));
  CHECK(c.experiment.gate.wavelength_m == doctest::Approx(500e-9));
  CHECK(c.experiment.gate.beam_angle_rad == doctest::Approx(kPi / 2));
  REQUIRE(c.experiment.gate.mu.has_value());
  CHECK(*c.experiment.gate.mu == doctest::Approx(2 * kPi * 1.6e6));
  CHECK(c.experiment.gate.dt == doctest::Approx(1e-7));
  CHECK(c.experiment.protocol.pair == PairType::kDD);
  CHECK_FALSE(c.experiment.gate.measured_omega.has_value());
  CHECK(c.experiment.noise.laser_correlation == LaserCorrelation::kCollective);
  CHECK(c.experiment.gate.model == CouplingModel::kExactDisplacement);
}

TEST_CASE("type errors name the key and line") {
  const std::string text = kHeader + "field.b_gauss = 12.2\nnoise.tau_s_ms=abc\n";
  CHECK(error_line(text) == 3);
  try {
    parse_config_text(text, kData);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("noise.tau_s_ms") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
  }
}

TEST_CASE("bad configs are rejected") {
  CHECK(error_line(kHeader + "noize.tau = 1\n") == 2);
  CHECK(error_line(kHeader + "noise.spam = 1.5\n") == 2);
  CHECK(error_line(kHeader + "protocol.pair = xx\n") == 2);
  CHECK(error_line(kHeader + "protocol.phase_points = 4\n") == 2);
  CHECK(error_line(kHeader + "numerics.n_max = 0\n") == 2);
  CHECK(error_line(kHeader + "drive.model = second_order\n") == 2);
  CHECK(error_line(kHeader + "field.b_gauss = 1\nfield.b_gauss = 2\n") == 3);
  CHECK(error_line("atoms.constants_file = missing.txt\n") == 1);
  CHECK(error_line("field.b_gauss = 1\n") == 0);
  CHECK(error_line(kHeader + "trap.omega_z_mhz = 5\n") == 0);
  CHECK_THROWS_AS(parse_config("/nonexistent/dualgate.cfg"), ConfigError);
}

TEST_CASE("constants path resolves against the config directory") {
  const auto dir = std::filesystem::temp_directory_path() / "dualgate_config_test";
  std::filesystem::create_directories(dir / "sub");
  std::filesystem::copy_file(kData + "/ba137_constants.txt", dir / "sub" / "c.txt",
                             std::filesystem::copy_options::overwrite_existing);
  {
    std::ofstream f(dir / "run.cfg");
    f << "atoms.constants_file = sub/c.txt\n";
  }
  const RunConfig c = parse_config((dir / "run.cfg").string());
  CHECK(std::filesystem::equivalent(c.constants_file, dir / "sub" / "c.txt"));
  {
    std::ofstream f(dir / "sub" / "c.txt", std::ios::app);
    f << "bogus.key = 1\n";
  }
  CHECK_THROWS_AS(parse_config((dir / "run.cfg").string()), ConfigError);
  std::filesystem::remove_all(dir);
}

#include "dualgate/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "dualgate/errors.hpp"
#include "dualgate/kv_file.hpp"

namespace dualgate {

namespace {

constexpr double kTwoPiMhz = 2.0 * kPi * 1e6;

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double positive(const KvEntry& e) {
  const double v = kv_to_double(e);
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(e.key + " must be > 0", e.line);
  return v;
}

double finite(const KvEntry& e) {
  const double v = kv_to_double(e);
  if (!std::isfinite(v)) throw ConfigError(e.key + " must be finite", e.line);
  return v;
}

double unit_interval(const KvEntry& e) {
  const double v = kv_to_double(e);
  if (!(v >= 0 && v < 1)) throw ConfigError(e.key + " must be in [0, 1)", e.line);
  return v;
}

std::array<double, 2>& measured(RunConfig& c) {
  auto& m = c.experiment.gate.measured_omega;
  if (!m) m = std::array<double, 2>{1.601 * kTwoPiMhz, 1.582 * kTwoPiMhz};
  return *m;
}

using Handler = std::function<void(const KvEntry&, RunConfig&, const std::string& base)>;

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> table = {
      {"atoms.constants_file",
       [](const KvEntry& e, RunConfig& c, const std::string& base) {
         std::filesystem::path p(e.value);
         if (p.is_relative() && !base.empty()) p = std::filesystem::path(base) / p;
         if (!std::filesystem::exists(p)) {
           throw ConfigError("atomic-constants file '" + p.string() + "' not found", e.line);
         }
         c.constants_file = p.lexically_normal().string();
         try {
           c.experiment.atoms = load_atomic_constants(c.constants_file);
         } catch (const ConfigError& err) {
           throw ConfigError(std::string("in ") + c.constants_file + ": " + err.what(), e.line);
         }
       }},
      {"field.b_gauss",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         const double v = kv_to_double(e);
         if (!(v >= 0)) throw ConfigError("field.b_gauss must be >= 0", e.line);
         c.experiment.b_gauss = v;
       }},
      {"trap.omega_x_mhz", [](const KvEntry& e, RunConfig& c,
                              const std::string&) { c.experiment.gate.trap.omega_x = positive(e) * kTwoPiMhz; }},
      {"trap.omega_y_mhz", [](const KvEntry& e, RunConfig& c,
                              const std::string&) { c.experiment.gate.trap.omega_y = positive(e) * kTwoPiMhz; }},
      {"trap.omega_z_mhz", [](const KvEntry& e, RunConfig& c,
                              const std::string&) { c.experiment.gate.trap.omega_z = positive(e) * kTwoPiMhz; }},
      {"modes.use_measured",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         if (kv_to_bool(e)) {
           measured(c);
         } else {
           c.experiment.gate.measured_omega.reset();
         }
       }},
      {"modes.com_mhz", [](const KvEntry& e, RunConfig& c,
                           const std::string&) { measured(c)[0] = positive(e) * kTwoPiMhz; }},
      {"modes.rocking_mhz", [](const KvEntry& e, RunConfig& c,
                               const std::string&) { measured(c)[1] = positive(e) * kTwoPiMhz; }},
      {"drive.wavelength_nm", [](const KvEntry& e, RunConfig& c,
                                 const std::string&) { c.experiment.gate.wavelength_m = positive(e) * 1e-9; }},
      {"drive.beam_angle_deg", [](const KvEntry& e, RunConfig& c,
                                  const std::string&) { c.experiment.gate.beam_angle_rad = finite(e) * kPi / 180; }},
      {"drive.rabi_ratio", [](const KvEntry& e, RunConfig& c,
                              const std::string&) { c.experiment.gate.rabi_ratio = positive(e); }},
      {"drive.mu_mhz",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         if (e.value == "centered") {
           c.experiment.gate.mu.reset();
         } else {
           c.experiment.gate.mu = positive(e) * kTwoPiMhz;
         }
       }},
      {"drive.spin_phase1_rad", [](const KvEntry& e, RunConfig& c,
                                   const std::string&) { c.experiment.gate.spin_phase[0] = finite(e); }},
      {"drive.spin_phase2_rad", [](const KvEntry& e, RunConfig& c,
                                   const std::string&) { c.experiment.gate.spin_phase[1] = finite(e); }},
      {"drive.motional_phase_rad", [](const KvEntry& e, RunConfig& c,
                                      const std::string&) { c.experiment.gate.motional_phase = finite(e); }},
      {"drive.model",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         if (e.value == "first_order") {
           c.experiment.gate.model = CouplingModel::kFirstOrder;
         } else if (e.value == "exact") {
           c.experiment.gate.model = CouplingModel::kExactDisplacement;
         } else {
           throw ConfigError("drive.model must be first_order or exact", e.line);
         }
       }},
      {"noise.tau_s_ms", [](const KvEntry& e, RunConfig& c,
                            const std::string&) { c.experiment.noise.tau_s = positive(e) * 1e-3; }},
      {"noise.tau_m_ms", [](const KvEntry& e, RunConfig& c,
                            const std::string&) { c.experiment.noise.tau_m = positive(e) * 1e-3; }},
      {"noise.heating_rate_per_s",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         const double v = kv_to_double(e);
         if (!(v >= 0) || !std::isfinite(v)) {
           throw ConfigError("noise.heating_rate_per_s must be >= 0", e.line);
         }
         c.experiment.noise.heating_rate = v;
       }},
      {"noise.spam", [](const KvEntry& e, RunConfig& c,
                        const std::string&) { c.experiment.noise.spam = unit_interval(e); }},
      {"noise.laser_dephasing", [](const KvEntry& e, RunConfig& c,
                                   const std::string&) { c.experiment.noise.laser_dephasing = kv_to_bool(e); }},
      {"noise.motional_dephasing",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         c.experiment.noise.motional_dephasing = kv_to_bool(e);
       }},
      {"noise.heating", [](const KvEntry& e, RunConfig& c,
                           const std::string&) { c.experiment.noise.heating = kv_to_bool(e); }},
      {"noise.off_resonant", [](const KvEntry& e, RunConfig& c,
                                const std::string&) { c.experiment.noise.off_resonant = kv_to_bool(e); }},
      {"noise.laser_correlation",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         if (e.value == "independent") {
           c.experiment.noise.laser_correlation = LaserCorrelation::kIndependent;
         } else if (e.value == "collective") {
           c.experiment.noise.laser_correlation = LaserCorrelation::kCollective;
         } else {
           throw ConfigError("noise.laser_correlation must be independent or collective", e.line);
         }
       }},
      {"protocol.shots",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         const auto v = kv_to_int(e);
         if (v < 0 || v > 1'000'000'000) throw ConfigError("protocol.shots out of range", e.line);
         c.experiment.protocol.shots = static_cast<int>(v);
       }},
      {"protocol.phase_points",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         const auto v = kv_to_int(e);
         if (v < 6 || v > 100000) throw ConfigError("protocol.phase_points must be >= 6", e.line);
         c.experiment.protocol.phase_points = static_cast<int>(v);
       }},
      {"protocol.seed",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         const auto v = kv_to_int(e);
         if (v < 0) throw ConfigError("protocol.seed must be >= 0", e.line);
         c.experiment.protocol.seed = static_cast<std::uint64_t>(v);
       }},
      {"protocol.pair",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         try {
           c.experiment.protocol.pair = parse_pair_type(e.value);
         } catch (const InvalidArgument& err) {
           throw ConfigError(err.what(), e.line);
         }
       }},
      {"protocol.leak", [](const KvEntry& e, RunConfig& c,
                           const std::string&) { c.experiment.protocol.leak = unit_interval(e); }},
      {"numerics.n_max",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         const auto v = kv_to_int(e);
         if (v < 1 || v > 40) throw ConfigError("numerics.n_max must be in [1, 40]", e.line);
         c.experiment.gate.n_max = static_cast<int>(v);
       }},
      {"numerics.dt_us",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         const double v = kv_to_double(e);
         if (!(v >= 0) || !std::isfinite(v)) {
           throw ConfigError("numerics.dt_us must be >= 0 (0 = automatic)", e.line);
         }
         c.experiment.gate.dt = v * 1e-6;
       }},
      {"numerics.truncation_guard",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         c.experiment.gate.truncation_guard = kv_to_bool(e);
       }},
      {"numerics.truncation_tolerance",
       [](const KvEntry& e, RunConfig& c, const std::string&) {
         c.experiment.gate.truncation_tolerance = positive(e);
       }},
      {"levels.b_min_gauss", [](const KvEntry& e, RunConfig& c,
                                const std::string&) { c.levels.b_min = finite(e); }},
      {"levels.b_max_gauss", [](const KvEntry& e, RunConfig& c,
                                const std::string&) { c.levels.b_max = finite(e); }},
      {"levels.b_step_gauss", [](const KvEntry& e, RunConfig& c,
                                 const std::string&) { c.levels.b_step = positive(e); }},
  };
  return table;
}

void validate(const RunConfig& c) {
  const auto& g = c.experiment.gate;
  try {
    g.trap.validate();
    c.experiment.noise.validate();
  } catch (const InvalidArgument& err) {
    throw ConfigError(err.what());
  }
  if (c.levels.b_min < 0 || c.levels.b_max < c.levels.b_min) {
    throw ConfigError("levels range must satisfy 0 <= b_min_gauss <= b_max_gauss");
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  RunConfig cfg;
  cfg.experiment = paper_preset();
  bool have_constants = false;
  for (const KvEntry& e : parse_kv_text(text)) {
    const auto& table = handlers();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const auto& h) { return h.first == e.key; });
    if (it == table.end()) throw ConfigError("unknown key '" + e.key + "'", e.line);
    it->second(e, cfg, base_dir);
    have_constants |= e.key == "atoms.constants_file";
  }
  if (!have_constants) throw ConfigError("missing required key 'atoms.constants_file'");
  validate(cfg);
  cfg.canonical = canonical_text(cfg);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string base = std::filesystem::path(path).parent_path().string();
  return parse_config_text(buf.str(), base);
}

std::string canonical_text(const RunConfig& c) {
  const auto& x = c.experiment;
  const auto& g = x.gate;
  const auto& n = x.noise;
  const auto& p = x.protocol;
  const auto& a = x.atoms;
  std::ostringstream os;
  const auto put = [&](const char* k, const std::string& v) { os << k << '=' << v << '\n'; };
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  put("atoms.s12.A_hf_mhz", fmt(a.s12_a_hf_mhz));
  put("atoms.d52.A_hf_mhz", fmt(a.d52_a_hf_mhz));
  put("atoms.d52.B_quad_mhz", fmt(a.d52_b_quad_mhz));
  put("atoms.s12.gJ", fmt(a.s12_g_j));
  put("atoms.d52.gJ", fmt(a.d52_g_j));
  put("atoms.gI", fmt(a.g_i));
  put("atoms.ion.mass_amu", fmt(a.ion_mass_amu));
  put("field.b_gauss", fmt(x.b_gauss));
  put("trap.omega_x_mhz", fmt(g.trap.omega_x / kTwoPiMhz));
  put("trap.omega_y_mhz", fmt(g.trap.omega_y / kTwoPiMhz));
  put("trap.omega_z_mhz", fmt(g.trap.omega_z / kTwoPiMhz));
  put("modes.use_measured", b(g.measured_omega.has_value()));
  if (g.measured_omega) {
    put("modes.com_mhz", fmt((*g.measured_omega)[0] / kTwoPiMhz));
    put("modes.rocking_mhz", fmt((*g.measured_omega)[1] / kTwoPiMhz));
  }
  put("drive.wavelength_nm", fmt(g.wavelength_m * 1e9));
  put("drive.beam_angle_deg", fmt(g.beam_angle_rad * 180 / kPi));
  put("drive.rabi_ratio", fmt(g.rabi_ratio));
  put("drive.mu_mhz", g.mu ? fmt(*g.mu / kTwoPiMhz) : "centered");
  put("drive.spin_phase1_rad", fmt(g.spin_phase[0]));
  put("drive.spin_phase2_rad", fmt(g.spin_phase[1]));
  put("drive.motional_phase_rad", fmt(g.motional_phase));
  put("drive.model", g.model == CouplingModel::kFirstOrder ? "first_order" : "exact");
  put("noise.tau_s_ms", fmt(n.tau_s * 1e3));
  put("noise.tau_m_ms", fmt(n.tau_m * 1e3));
  put("noise.heating_rate_per_s", fmt(n.heating_rate));
  put("noise.spam", fmt(n.spam));
  put("noise.laser_dephasing", b(n.laser_dephasing));
  put("noise.motional_dephasing", b(n.motional_dephasing));
  put("noise.heating", b(n.heating));
  put("noise.off_resonant", b(n.off_resonant));
  put("noise.laser_correlation",
      n.laser_correlation == LaserCorrelation::kIndependent ? "independent" : "collective");
  put("protocol.shots", std::to_string(p.shots));
  put("protocol.phase_points", std::to_string(p.phase_points));
  put("protocol.seed", std::to_string(p.seed));
  put("protocol.pair", to_string(p.pair));
  put("protocol.leak", fmt(p.leak));
  put("numerics.n_max", std::to_string(g.n_max));
  put("numerics.dt_us", fmt(g.dt * 1e6));
  put("numerics.truncation_guard", b(g.truncation_guard));
  put("numerics.truncation_tolerance", fmt(g.truncation_tolerance));
  put("levels.b_min_gauss", fmt(c.levels.b_min));
  put("levels.b_max_gauss", fmt(c.levels.b_max));
  put("levels.b_step_gauss", fmt(c.levels.b_step));
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = cfg.canonical.empty() ? canonical_text(cfg) : cfg.canonical;
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dualgate

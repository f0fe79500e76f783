#include "gyrocal/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace gyrocal {

namespace {

constexpr double kMg = 1e-3 * 9.80665;
constexpr double kPpm = 1e-6;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  }
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  v = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, v));
}

Vec3 parse_vec3(std::string_view key, std::string_view v) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const auto comma = v.find(',');
    if ((i < 2) == (comma == std::string_view::npos)) {
      throw ConfigError(fmt::format("{}: expected three comma-separated numbers", key));
    }
    out[i] = parse_double(key, v.substr(0, comma));
    v = i < 2 ? v.substr(comma + 1) : std::string_view{};
  }
  return out;
}

std::string format_double(double v) { return fmt::format("{}", v); }

struct Entry {
  std::string key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename Ref>
Entry number(std::string key, Ref ref, double unit = 1.0) {
  return {key,
          [key, ref, unit](PipelineConfig& c, std::string_view v) { ref(c) = parse_double(key, v) * unit; },
          [ref, unit](const PipelineConfig& c) { return format_double(ref(const_cast<PipelineConfig&>(c)) / unit); }};
}

template <typename Ref>
Entry flag(std::string key, Ref ref) {
  return {key, [key, ref](PipelineConfig& c, std::string_view v) { ref(c) = parse_bool(key, v); },
          [ref](const PipelineConfig& c) { return std::string(ref(const_cast<PipelineConfig&>(c)) ? "true" : "false"); }};
}

template <typename Ref>
Entry vector3(std::string key, Ref ref, double unit = 1.0) {
  return {key, [key, ref, unit](PipelineConfig& c, std::string_view v) { ref(c) = parse_vec3(key, v) * unit; },
          [ref, unit](const PipelineConfig& c) {
            const Vec3 v = ref(const_cast<PipelineConfig&>(c)) / unit;
            return fmt::format("{},{},{}", v.x(), v.y(), v.z());
          }};
}

template <typename Ref>
Entry count(std::string key, Ref ref) {
  return {key,
          [key, ref](PipelineConfig& c, std::string_view v) {
            const auto n = parse_u64(key, v);
            if (n > 1000000) throw ConfigError(fmt::format("{}: value too large", key));
            ref(c) = static_cast<int>(n);
          },
          [ref](const PipelineConfig& c) { return fmt::format("{}", ref(const_cast<PipelineConfig&>(c))); }};
}

#define REF(expr) [](PipelineConfig & c) -> auto& { return c.expr; }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back(flag("mech.earth_rate", REF(filter.mech.earth_rate)));
    t.push_back(flag("mech.transport_rate", REF(filter.mech.transport_rate)));
    t.push_back(number("mech.max_dt_s", REF(filter.mech.max_dt)));

    t.push_back(number("gm.gyro_bias.tau_s", REF(filter.gm.gyro_bias.correlation_time)));
    t.push_back(number("gm.gyro_bias.sigma_dps", REF(filter.gm.gyro_bias.stationary_sigma), kDegToRad));
    t.push_back(number("gm.accel_bias.tau_s", REF(filter.gm.accel_bias.correlation_time)));
    t.push_back(number("gm.accel_bias.sigma_mg", REF(filter.gm.accel_bias.stationary_sigma), kMg));
    t.push_back(number("gm.gyro_scale.tau_s", REF(filter.gm.gyro_scale.correlation_time)));
    t.push_back(number("gm.gyro_scale.sigma_ppm", REF(filter.gm.gyro_scale.stationary_sigma), kPpm));
    t.push_back(number("gm.accel_scale.tau_s", REF(filter.gm.accel_scale.correlation_time)));
    t.push_back(number("gm.accel_scale.sigma_ppm", REF(filter.gm.accel_scale.stationary_sigma), kPpm));

    t.push_back(number("noise.gyro_arw_dps_rthz", REF(filter.noise.gyro_arw), kDegToRad));
    t.push_back(number("noise.accel_vrw_mps2_rthz", REF(filter.noise.accel_vrw)));
    t.push_back(number("noise.mag_ut", REF(filter.noise.mag_noise)));
    t.push_back(number("noise.sample_rate_hz", REF(filter.noise.sample_rate)));

    t.push_back(number("p0.position_m", REF(filter.initial.position)));
    t.push_back(number("p0.velocity_mps", REF(filter.initial.velocity)));
    t.push_back(number("p0.attitude_horizontal_rad", REF(filter.initial.attitude_horizontal)));
    t.push_back(number("p0.heading_rad", REF(filter.initial.heading)));
    t.push_back(number("p0.gyro_bias_dps", REF(filter.initial.gyro_bias), kDegToRad));
    t.push_back(number("p0.accel_bias_mg", REF(filter.initial.accel_bias), kMg));
    t.push_back(number("p0.gyro_scale_ppm", REF(filter.initial.gyro_scale), kPpm));
    t.push_back(number("p0.accel_scale_ppm", REF(filter.initial.accel_scale), kPpm));

    t.push_back(flag("gate.enabled", REF(filter.gate.enabled)));
    t.push_back(number("gate.sigma", REF(filter.gate.sigma)));
    t.push_back(flag("filter.health_checks", REF(filter.health_checks)));

    t.push_back(number("accel.th_acc1_mps2", REF(accel.th_acc1)));
    t.push_back(number("accel.th_acc2_mps2", REF(accel.th_acc2)));
    t.push_back(number("accel.sigma_mps2", REF(accel.sigma_a)));
    t.push_back(number("accel.sigma_max_mps2", REF(accel.sigma_a_max)));
    t.push_back(number("accel.scale", REF(accel.scale)));
    t.push_back(flag("accel.interval_average", REF(accel_interval_average)));

    t.push_back(number("qs.window_s", REF(quasi_static.window)));
    t.push_back(number("qs.gyro_std_dps", REF(quasi_static.gyro_std_max), kDegToRad));
    t.push_back(number("qs.accel_std_mps2", REF(quasi_static.accel_std_max)));
    t.push_back(number("qs.gravity_tolerance_mps2", REF(quasi_static.gravity_tolerance)));
    t.push_back(number("qs.gyro_mean_dps", REF(quasi_static.gyro_mean_max), kDegToRad));
    t.push_back(number("qs.bias_sigma_factor", REF(quasi_static.bias_sigma_factor)));
    t.push_back(number("qs.sigma_floor_dps", REF(qs_sigma_floor), kDegToRad));

    t.push_back(number("qsmf.window_s", REF(qsmf.window)));
    t.push_back(number("qsmf.range_ut", REF(qsmf.range_max)));
    t.push_back(number("qsmf.slope_utps", REF(qsmf.slope_max)));
    t.push_back(count("qsmf.smoothing", REF(qsmf.smoothing)));
    t.push_back(count("qsmf.calibration_samples", REF(qsmf.calibration_samples)));

    t.push_back(flag("mag.enabled", REF(mag_enabled)));
    t.push_back(number("mag.sigma_ut", REF(mag_sigma)));

    t.push_back(number("pp.prior_sigma_m", REF(pseudo_position.prior_sigma)));
    t.push_back(number("pp.window_s", REF(pseudo_position.window)));
    t.push_back(flag("pv.enabled", REF(pseudo_velocity)));
    t.push_back(number("pv.sigma_mps", REF(pseudo_velocity_sigma)));

    t.push_back(number("rate.pseudo_position_hz", REF(rates.pseudo_position)));
    t.push_back(number("rate.accel_hz", REF(rates.accel)));
    t.push_back(number("rate.mag_hz", REF(rates.mag)));
    t.push_back(number("rate.qsau_hz", REF(rates.qsau)));
    t.push_back(number("rate.pseudo_velocity_hz", REF(rates.pseudo_velocity)));

    t.push_back(number("align.window_s", REF(align_window)));
    t.push_back(number("feedback.publish_sigma_dps", REF(publish_sigma), kDegToRad));
    t.push_back(number("metrics.conv_threshold_dps", REF(conv_threshold), kDegToRad));
    t.push_back(number("reference.window_s", REF(reference_window)));

    t.push_back(number("start.latitude_deg", REF(start.latitude), kDegToRad));
    t.push_back(number("start.longitude_deg", REF(start.longitude), kDegToRad));
    t.push_back(number("start.height_m", REF(start.height)));

    t.push_back({"sim.motion",
                 [](PipelineConfig& c, std::string_view v) {
                   const auto m = parse_motion_mode(trim(v));
                   if (!m) throw ConfigError(fmt::format("sim.motion: unknown mode '{}'", trim(v)));
                   c.sim.motion = *m;
                 },
                 [](const PipelineConfig& c) { return std::string(to_string(c.sim.motion)); }});
    t.push_back({"sim.env",
                 [](PipelineConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "outdoor") c.sim.environment = Environment::Outdoor;
                   else if (v == "indoor") c.sim.environment = Environment::Indoor;
                   else throw ConfigError(fmt::format("sim.env: expected outdoor or indoor, got '{}'", v));
                 },
                 [](const PipelineConfig& c) { return std::string(to_string(c.sim.environment)); }});
    t.push_back({"sim.seed", [](PipelineConfig& c, std::string_view v) { c.sim.seed = parse_u64("sim.seed", v); },
                 [](const PipelineConfig& c) { return fmt::format("{}", c.sim.seed); }});
    t.push_back(number("sim.duration_s", REF(sim.duration)));
    t.push_back(number("sim.tail_s", REF(sim.tail)));
    t.push_back(number("sim.ramp_s", REF(sim.ramp)));
    t.push_back(flag("sim.with_mag", REF(sim.with_mag)));
    t.push_back(number("sim.walk_speed_mps", REF(sim.walk_speed)));
    t.push_back(number("sim.step_frequency_hz", REF(sim.step_frequency)));
    t.push_back(vector3("sim.gyro_bias_dps", REF(sim.injected.gyro_bias), kDegToRad));
    t.push_back(vector3("sim.accel_bias_mg", REF(sim.injected.accel_bias), kMg));
    t.push_back(vector3("sim.gyro_scale_ppm", REF(sim.injected.gyro_scale), kPpm));
    t.push_back(vector3("sim.accel_scale_ppm", REF(sim.injected.accel_scale), kPpm));
    return t;
  }();
  return table;
}

#undef REF

}  // namespace

double UpdateRates::fastest() const {
  return std::max({pseudo_position, accel, mag, qsau, pseudo_velocity});
}

std::string_view to_string(Environment env) { return env == Environment::Outdoor ? "outdoor" : "indoor"; }

ScenarioConfig SimulationSettings::scenario(const NoiseSpec& noise, const MechanizationConfig& mech,
                                            const GeoPosition& start) const {
  ScenarioConfig sc;
  sc.profile = MotionProfile::preset(motion);
  if (walk_speed >= 0.0) sc.profile.walk_speed = walk_speed;
  if (step_frequency > 0.0) sc.profile.step_frequency = step_frequency;
  sc.environment = environment == Environment::Outdoor ? MagEnvironment::outdoor()
                                                       : MagEnvironment::indoor(duration, seed);
  sc.errors = injected;
  sc.noise = noise;
  sc.duration = duration;
  sc.tail = tail;
  sc.ramp = ramp;
  sc.seed = seed;
  sc.start = start;
  sc.mech = mech;
  return sc;
}

void PipelineConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  const auto gm_ok = [](const GaussMarkovSpec& s) { return s.correlation_time > 0.0 && s.stationary_sigma >= 0.0; };
  require(gm_ok(filter.gm.gyro_bias) && gm_ok(filter.gm.accel_bias) && gm_ok(filter.gm.gyro_scale) &&
              gm_ok(filter.gm.accel_scale),
          "Gauss-Markov parameters need tau > 0 and sigma >= 0");
  require(filter.noise.sample_rate > 0.0 && filter.noise.gyro_arw >= 0.0 && filter.noise.accel_vrw >= 0.0,
          "noise densities must be non-negative and the sample rate positive");
  const auto& p0 = filter.initial;
  require(p0.position > 0.0 && p0.velocity > 0.0 && p0.attitude_horizontal > 0.0 && p0.heading > 0.0 &&
              p0.gyro_bias > 0.0 && p0.accel_bias > 0.0 && p0.gyro_scale > 0.0 && p0.accel_scale > 0.0,
          "initial uncertainties must be positive");
  require(filter.mech.max_dt > 0.0, "mech.max_dt_s must be positive");
  require(filter.gate.sigma > 0.0, "gate.sigma must be positive");
  require(accel.valid() && accel.sigma_a > 0.0 && accel.scale > 0.0, "accelerometer mode thresholds are inconsistent");
  require(quasi_static.window > 0.0 && qs_sigma_floor >= 0.0, "quasi-static settings are invalid");
  require(qsmf.window >= 0.5 && qsmf.range_max > 0.0 && qsmf.slope_max > 0.0 && qsmf.calibration_samples >= 1,
          "QSMF settings are invalid");
  require(mag_sigma > 0.0, "mag.sigma_ut must be positive");
  require(pseudo_position.prior_sigma > 0.0 && pseudo_position.window > 0.0, "pseudo-position settings are invalid");
  require(pseudo_velocity_sigma > 0.0, "pv.sigma_mps must be positive");
  require(rates.pseudo_position > 0.0 && rates.accel > 0.0 && rates.mag > 0.0 && rates.qsau > 0.0 &&
              rates.pseudo_velocity > 0.0,
          "update rates must be positive");
  require(align_window > 0.0, "align.window_s must be positive");
  require(publish_sigma > 0.0 && conv_threshold > 0.0 && reference_window > 0.0, "evaluation settings are invalid");
  require(start.valid(), "start position is invalid");
  require(sim.duration > 0.0 && sim.tail >= 0.0 && sim.tail < sim.duration && sim.ramp >= 0.0,
          "simulation duration, tail and ramp are inconsistent");
  require(sim.injected.valid(), "injected sensor errors are invalid");
}

void apply_config_entry(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = entries();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return e.key == key; });
  if (it == table.end()) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  it->set(cfg, value);
}

void apply_config(PipelineConfig& cfg, std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
    const auto key = trim(s.substr(0, eq));
    const auto value = trim(s.substr(eq + 1));
    try {
      apply_config_entry(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open configuration file '{}'", path));
  PipelineConfig cfg;
  apply_config(cfg, in);
  cfg.validate();
  return cfg;
}

std::string dump_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) out += fmt::format("{} = {}\n", e.key, e.get(cfg));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : entries()) keys.push_back(e.key);
  return keys;
}

}  // namespace gyrocal

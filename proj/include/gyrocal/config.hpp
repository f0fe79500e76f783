#pragma once

#include "gyrocal/constraints.hpp"
#include "gyrocal/eskf.hpp"
#include "gyrocal/simulator.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gyrocal {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How often each constraint may fire, Hz.
struct UpdateRates {
  double pseudo_position{1.0};
  double accel{10.0};
  double mag{1.0};
  double qsau{1.0};
  double pseudo_velocity{1.0};

  double fastest() const;
};

enum class Environment { Outdoor, Indoor };

std::string_view to_string(Environment env);

/// Simulated-scenario part of the configuration.
struct SimulationSettings {
  MotionMode motion{MotionMode::Handheld};
  Environment environment{Environment::Outdoor};
  double duration{120.0};
  double tail{30.0};
  double ramp{2.0};
  std::uint64_t seed{1};
  bool with_mag{true};
  /// Overrides of the motion preset; negative keeps the preset value.
  double walk_speed{-1.0};
  double step_frequency{-1.0};
  SensorErrors injected{default_injected_gyro_bias()};

  ScenarioConfig scenario(const NoiseSpec& noise, const MechanizationConfig& mech, const GeoPosition& start) const;
};

struct PipelineConfig {
  FilterConfig filter;
  AccelModeConfig accel{0.5, 2.0, 0.5, 100.0, 1.0};
  /// Use the navigation-frame specific force averaged since the previous
  /// accelerometer update instead of the latest sample.
  bool accel_interval_average{true};
  QuasiStaticConfig quasi_static;
  double qs_sigma_floor{0.002 * kDegToRad};  // rad/s
  QsmfConfig qsmf;
  bool mag_enabled{true};
  double mag_sigma{1.0};  // uT
  PseudoPositionConfig pseudo_position;
  bool pseudo_velocity{false};
  double pseudo_velocity_sigma{1.0};  // m/s
  UpdateRates rates;
  double align_window{1.0};  // s
  double publish_sigma{1.0 * kDegToRad};
  double conv_threshold{0.2 * kDegToRad};
  double reference_window{30.0};  // s
  GeoPosition start{51.0799 * kDegToRad, -114.1336 * kDegToRad, 1100.0};
  SimulationSettings sim;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

/// Flat `key = value` text; '#' starts a comment. Vector values are comma
/// separated. Unknown keys and malformed values throw ConfigError.
void apply_config(PipelineConfig& cfg, std::istream& in);
void apply_config_entry(PipelineConfig& cfg, std::string_view key, std::string_view value);
PipelineConfig load_config(const std::string& path);

/// Every recognised key with its current value, one `key = value` per line.
std::string dump_config(const PipelineConfig& cfg);
std::vector<std::string> config_keys();

}  // namespace gyrocal

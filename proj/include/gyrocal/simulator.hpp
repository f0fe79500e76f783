#pragma once

#include "gyrocal/constraints.hpp"
#include "gyrocal/core_math.hpp"
#include "gyrocal/mechanization.hpp"
#include "gyrocal/sensor_models.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace gyrocal {

enum class MotionMode { Handheld, Phoning, Dangling, Pocket, Belt, Backpack, Static };

inline constexpr std::array<MotionMode, 6> kWalkingModes = {MotionMode::Handheld, MotionMode::Phoning,
                                                            MotionMode::Dangling, MotionMode::Pocket,
                                                            MotionMode::Belt,     MotionMode::Backpack};

std::string_view to_string(MotionMode mode);
std::optional<MotionMode> parse_motion_mode(std::string_view name);

/// a * sin(2 pi * harmonic * step_frequency * t + phase)
struct Oscillation {
  double amplitude{0.0};
  double harmonic{1.0};
  double phase{0.0};
};

/// Sinusoidal gait template: device mounting attitude plus attitude and
/// linear-acceleration oscillations on top of constant-speed walking.
struct MotionProfile {
  MotionMode mode{MotionMode::Handheld};
  double walk_speed{1.2};      // m/s
  double step_frequency{1.8};  // Hz
  double heading{0.6};         // walking direction, rad from north
  Vec3 mount{Vec3::Zero()};    // roll, pitch, yaw of the device in the walking frame, rad
  std::array<Oscillation, 3> attitude{};  // roll, pitch, yaw, rad
  std::array<Oscillation, 3> accel{};     // forward, lateral, vertical, m/s^2

  static MotionProfile preset(MotionMode mode);

  /// Upper bound on |omega| from the attitude oscillations, rad/s.
  double peak_rate_bound() const;
  bool valid() const;
};

struct MagSegment {
  double start{0.0};           // s
  Vec3 field_n{Vec3::Zero()};  // uT
};

/// Piecewise-constant local magnetic field. Entering segment i > 0 the field
/// blends smoothly from the previous value over transition_duration while a
/// disturbance of disturbance_amplitude modulates it.
struct MagEnvironment {
  std::vector<MagSegment> segments;
  double transition_duration{0.5};
  double disturbance_amplitude{0.0};   // uT
  double disturbance_frequency{0.8};   // Hz

  Vec3 field_at(double t) const;
  /// False inside a transition.
  bool stable_at(double t) const;
  bool valid() const;

  static MagEnvironment outdoor();
  /// 8 segments over `duration` with direction changes up to 40 degrees and
  /// magnitude changes between 4 and 15 uT.
  static MagEnvironment indoor(double duration, std::uint64_t seed);
};

struct ScenarioConfig {
  MotionProfile profile{MotionProfile::preset(MotionMode::Handheld)};
  MagEnvironment environment{MagEnvironment::outdoor()};
  SensorErrors errors{};
  NoiseSpec noise{};
  double duration{120.0};  // s, includes the tail
  double tail{30.0};       // quasi-static period at the end, s
  double ramp{2.0};        // start/stop blending, s
  std::uint64_t seed{1};
  GeoPosition start{51.0799 * kDegToRad, -114.1336 * kDegToRad, 1100.0};
  MechanizationConfig mech{};

  double walk_end() const { return duration - tail; }
  bool valid() const;
};

/// Injected gyro biases used across the evaluation scenarios (rad/s).
inline Vec3 default_injected_gyro_bias() { return Vec3(3.0, -3.0, 3.0) * kDegToRad; }

struct TruthEpoch {
  double t{0.0};
  NavState nav;
  InertialReading reading;     // error-free gyro/accel over (t - dt, t]
  Vec3 mag{Vec3::Zero()};      // body-frame field at t
};

/// Kinematically consistent ground truth. Positions follow the same
/// trapezoidal rule as ins_step and each reading is the exact inverse of the
/// mechanization between consecutive states, so mechanizing the readings
/// reproduces the trajectory.
std::vector<TruthEpoch> generate_truth(const ScenarioConfig& cfg);

struct SensorStream {
  std::vector<ImuSample> imu;
  std::vector<MagSample> mag;  // empty when no magnetometer is present
};

/// Applies sensor errors and white noise (mag: additive noise only).
SensorStream corrupt(std::span<const TruthEpoch> truth, const SensorErrors& errors, const NoiseSpec& noise,
                     std::uint64_t seed);

class ReferenceUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean gyro output over the last `window` seconds. Throws
/// ReferenceUnavailable unless that tail is quasi-static.
Vec3 reference_bias(std::span<const ImuSample> stream, double window, double g,
                    const QuasiStaticConfig& cfg = {});

}  // namespace gyrocal

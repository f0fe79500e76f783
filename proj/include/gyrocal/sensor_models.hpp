#pragma once

#include "gyrocal/core_math.hpp"

#include <optional>
#include <random>

namespace gyrocal {

/// Deterministic sensor errors: biases and linear scale-factor errors.
/// Scale factors are dimensionless (1000 ppm == 1e-3).
struct SensorErrors {
  Vec3 gyro_bias{Vec3::Zero()};    // rad/s
  Vec3 accel_bias{Vec3::Zero()};   // m/s^2
  Vec3 gyro_scale{Vec3::Zero()};
  Vec3 accel_scale{Vec3::Zero()};

  static constexpr double kMaxScale = 0.1;

  bool valid() const;
};

/// First-order Gauss-Markov process: dx/dt = -x/tau + w.
struct GaussMarkovSpec {
  double correlation_time{3600.0};  // s
  double stationary_sigma{0.0};     // units of the driven state
};

struct GaussMarkovDiscrete {
  double phi{1.0};
  double variance{0.0};
};

GaussMarkovDiscrete gm_discretize(const GaussMarkovSpec& spec, double dt);

/// Process models for the four sensor-error triads.
struct GaussMarkovSet {
  GaussMarkovSpec gyro_bias{1.0e5, 5.0 * kDegToRad};
  GaussMarkovSpec accel_bias{3600.0, 0.060 * 9.80665};
  GaussMarkovSpec gyro_scale{7200.0, 5000e-6};
  GaussMarkovSpec accel_scale{7200.0, 5000e-6};
};

/// White-noise densities of the inertial sensors plus magnetometer noise.
struct NoiseSpec {
  double gyro_arw{0.01 * kDegToRad};  // rad/s/sqrt(Hz)
  double accel_vrw{0.001};            // m/s^2/sqrt(Hz)
  double mag_noise{0.5};              // uT, 1 sigma per axis
  double sample_rate{50.0};           // Hz

  double gyro_sample_sigma() const { return gyro_arw * std::sqrt(sample_rate); }
  double accel_sample_sigma() const { return accel_vrw * std::sqrt(sample_rate); }
};

struct InertialReading {
  Vec3 gyro{Vec3::Zero()};
  Vec3 accel{Vec3::Zero()};
};

/// Forward error model: measured = true * (1 + s) + b + w, componentwise.
InertialReading apply_errors(const InertialReading& truth, const SensorErrors& errors,
                             const InertialReading& noise = {});

/// Inverse error model. Returns nullopt when a scale correction falls outside
/// (0.5, 1.5) and the estimate must be treated as invalid.
std::optional<InertialReading> correct_measurements(const InertialReading& measured,
                                                    const SensorErrors& errors);

/// Draws one white-noise sample per axis at the rate in `spec`.
InertialReading sample_noise(const NoiseSpec& spec, std::mt19937_64& rng);

}  // namespace gyrocal

#include "gyrocal/sensor_models.hpp"

namespace gyrocal {

bool SensorErrors::valid() const {
  const auto finite = [](const Vec3& v) { return v.allFinite(); };
  return finite(gyro_bias) && finite(accel_bias) && finite(gyro_scale) && finite(accel_scale) &&
         gyro_scale.cwiseAbs().maxCoeff() < kMaxScale && accel_scale.cwiseAbs().maxCoeff() < kMaxScale;
}

GaussMarkovDiscrete gm_discretize(const GaussMarkovSpec& spec, double dt) {
  const double phi = std::exp(-dt / spec.correlation_time);
  // 1 - exp(-2dt/tau) without cancellation for small dt
  const double decay = -std::expm1(-2.0 * dt / spec.correlation_time);
  return {phi, spec.stationary_sigma * spec.stationary_sigma * decay};
}

InertialReading apply_errors(const InertialReading& truth, const SensorErrors& errors,
                             const InertialReading& noise) {
  InertialReading out;
  out.gyro = truth.gyro.cwiseProduct(Vec3::Ones() + errors.gyro_scale) + errors.gyro_bias + noise.gyro;
  out.accel = truth.accel.cwiseProduct(Vec3::Ones() + errors.accel_scale) + errors.accel_bias + noise.accel;
  return out;
}

std::optional<InertialReading> correct_measurements(const InertialReading& measured,
                                                    const SensorErrors& errors) {
  const Vec3 gyro_gain = Vec3::Ones() + errors.gyro_scale;
  const Vec3 accel_gain = Vec3::Ones() + errors.accel_scale;
  if (gyro_gain.minCoeff() <= 0.5 || accel_gain.minCoeff() <= 0.5 || gyro_gain.maxCoeff() >= 1.5 ||
      accel_gain.maxCoeff() >= 1.5) {
    return std::nullopt;
  }
  InertialReading out;
  out.gyro = (measured.gyro - errors.gyro_bias).cwiseQuotient(gyro_gain);
  out.accel = (measured.accel - errors.accel_bias).cwiseQuotient(accel_gain);
  return out;
}

InertialReading sample_noise(const NoiseSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  InertialReading w;
  const double sg = spec.gyro_sample_sigma();
  const double sa = spec.accel_sample_sigma();
  for (int i = 0; i < 3; ++i) w.gyro[i] = sg * n01(rng);
  for (int i = 0; i < 3; ++i) w.accel[i] = sa * n01(rng);
  return w;
}

}  // namespace gyrocal

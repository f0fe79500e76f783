#pragma once

#include "gyrocal/core_math.hpp"
#include "gyrocal/measurement.hpp"
#include "gyrocal/mechanization.hpp"

#include <deque>
#include <limits>
#include <optional>
#include <span>

namespace gyrocal {

struct MagSample {
  double t{0.0};
  Vec3 field{Vec3::Zero()};  // body frame, uT

  bool valid() const { return std::isfinite(t) && field.allFinite() && field.norm() < 1000.0; }
};

// ---------------------------------------------------------------------------
// Acceleration mode (adaptive accelerometer noise)

enum class AccelMode { NonAcceleration = 0, LowAcceleration = 1, HighAcceleration = 2 };

struct AccelModeConfig {
  double th_acc1{0.5};        // m/s^2
  double th_acc2{2.0};        // m/s^2
  double sigma_a{0.05};       // m/s^2
  double sigma_a_max{100.0};  // m/s^2
  double scale{1.0};

  bool valid() const { return th_acc1 > 0.0 && th_acc1 < th_acc2 && sigma_a < sigma_a_max; }
};

struct AccelModeResult {
  AccelMode mode{AccelMode::NonAcceleration};
  double variance{0.0};      // m^2/s^4
  double acceleration{0.0};  // | |f| - g |
};

/// Classifies the linear acceleration A = | |f_b| - g | and returns the
/// accelerometer measurement variance for that mode. In the low mode the
/// variance is scale * (A^2 / att_cov_trace) * sigma_a^2.
AccelModeResult acceleration_mode(const Vec3& f_b, double g, const AccelModeConfig& cfg, double att_cov_trace);

// ---------------------------------------------------------------------------
// Quasi-static detection

struct QuasiStaticConfig {
  double window{1.0};                        // s
  double gyro_std_max{0.3 * kDegToRad};      // std of |gyro|, rad/s
  double accel_std_max{0.05};                // std of |accel|, m/s^2
  double gravity_tolerance{0.1};             // | mean |accel| - g |, m/s^2
  double gyro_mean_max{0.5 * kDegToRad};     // mean |gyro - bias|, rad/s
  double bias_sigma_factor{3.0};
};

/// What is known about the gyro bias when judging stillness. The mean-rate
/// test allows gyro_mean_max + bias_sigma_factor * sigma around `estimate`;
/// an infinite sigma disables it.
struct BiasPrior {
  Vec3 estimate{Vec3::Zero()};
  double sigma{0.0};  // rad/s, norm of the per-axis 1-sigma

  static BiasPrior unknown() { return {Vec3::Zero(), std::numeric_limits<double>::infinity()}; }
};

/// Time covered by a sample sequence, counting one sample period per sample.
template <typename Sample>
double window_span(std::span<const Sample> samples) {
  if (samples.size() < 2) return 0.0;
  const double n = static_cast<double>(samples.size());
  return (samples.back().t - samples.front().t) * n / (n - 1.0);
}

/// False when the window spans less than cfg.window.
bool detect_quasi_static(std::span<const ImuSample> window, double g, const QuasiStaticConfig& cfg,
                         const BiasPrior& prior = {});

/// Sliding-window wrapper around detect_quasi_static.
class QuasiStaticDetector {
 public:
  explicit QuasiStaticDetector(QuasiStaticConfig cfg) : cfg_(cfg) {}

  void push(const ImuSample& sample);
  bool evaluate(double g, const BiasPrior& prior) const;
  const QuasiStaticConfig& config() const { return cfg_; }

 private:
  QuasiStaticConfig cfg_;
  std::deque<ImuSample> window_;
};

// ---------------------------------------------------------------------------
// Quasi-static magnetic field (QSMF)

struct QsmfConfig {
  double window{1.0};            // s
  double range_max{1.5};         // uT, max - min of the smoothed magnitude
  double slope_max{1.0};         // uT/s, least-squares trend of the magnitude
  int smoothing{5};              // moving-average length applied before the range test
  int calibration_samples{5};    // samples averaged into the LMF reference
};

/// Magnitude-only stability test. False when the window spans less than 0.5 s.
bool detect_qsmf(std::span<const MagSample> window, const QsmfConfig& cfg);

/// Local magnetic field in NED from a body-frame reading: C_b^n * m_b.
Vec3 calibrate_lmf(const Attitude& att, const Vec3& m_b);

struct QsmfState {
  bool active{false};          // reference calibrated and usable
  Vec3 m_n_ref{Vec3::Zero()};  // meaningful only when active
  int period_index{0};         // counts detected periods
  std::deque<MagSample> window;
};

/// Tracks QSMF periods and calibrates the LMF reference at the start of
/// each one by averaging the first calibration_samples projected readings.
class QsmfTracker {
 public:
  explicit QsmfTracker(QsmfConfig cfg) : cfg_(cfg) {}

  const QsmfState& push(const MagSample& sample, const Attitude& att);
  bool detected() const { return detected_; }
  const QsmfState& state() const { return state_; }
  const QsmfConfig& config() const { return cfg_; }

 private:
  QsmfConfig cfg_;
  QsmfState state_;
  bool detected_{false};
  int calibration_count_{0};
  Vec3 calibration_sum_{Vec3::Zero()};
};

// ---------------------------------------------------------------------------
// Pseudo-position noise tuning

struct PseudoPositionConfig {
  double prior_sigma{1.0};  // m
  double window{10.0};      // s
};

/// Inflates the pseudo-position variance to the largest offset from the
/// reference position seen over the last `window` seconds.
class PseudoPositionTuner {
 public:
  explicit PseudoPositionTuner(PseudoPositionConfig cfg) : cfg_(cfg) {}

  void push(double t, const Vec3& offset_ned);
  Vec3 variance() const;

 private:
  PseudoPositionConfig cfg_;
  std::deque<std::pair<double, Vec3>> history_;
};

// ---------------------------------------------------------------------------
// Measurement packets

/// z = r_hat - r_ref (NED metres), H = [I 0 ...], R = diag(r_cov).
MeasurementPacket pseudo_position_packet(const NavState& nav, const GeoPosition& r_ref, const Vec3& r_cov);

/// z = v_hat, H at dv. Optional zero-velocity constraint.
MeasurementPacket pseudo_velocity_packet(const NavState& nav, double sigma);

/// z = f^n - C_hat f_b with f^n = [0 0 -g]; H at psi = [g^n x].
MeasurementPacket accel_packet(const NavState& nav, const Vec3& f_b, double variance, double g);

/// z = C_hat m_b - m^n; H at psi = [m^n x]. Nullopt unless the QSMF reference
/// is active.
std::optional<MeasurementPacket> mag_packet(const NavState& nav, const Vec3& m_b, const QsmfState& qsmf,
                                            double mag_sigma);

/// z = gyro output (bias residual), H at b_g = I.
MeasurementPacket qsau_packet(const Vec3& gyro, double sigma);

}  // namespace gyrocal

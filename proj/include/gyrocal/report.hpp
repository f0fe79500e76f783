#pragma once

#include "gyrocal/config.hpp"
#include "gyrocal/constraints.hpp"
#include "gyrocal/eskf.hpp"
#include "gyrocal/simulator.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gyrocal {

/// State after the feedback at one update epoch.
struct EpochRecord {
  double t{0.0};
  Vec3 gyro_bias{Vec3::Zero()};        // rad/s
  Vec3 gyro_bias_sigma{Vec3::Zero()};  // rad/s
  bool qsmf{false};                    // calibrated LMF reference available
  bool quasi_static{false};
  AccelMode accel_mode{AccelMode::NonAcceleration};
  bool pseudo_position_update{false};
  bool accel_update{false};
  bool mag_update{false};
  bool qsau_update{false};
};

struct AxisMetrics {
  double mean_error{0.0};  // rad/s, signed
  double rms_error{0.0};   // rad/s
  std::optional<double> convergence_time;  // s from the first epoch; absent if never converged
};

struct Metrics {
  std::array<AxisMetrics, 3> axes;

  bool converged() const;
};

/// Convergence time is the first epoch time after which |estimate - reference|
/// stays below `threshold` until the end; mean and RMS are taken over the
/// epochs from then on. An axis that never converges uses the last 25% of
/// the epochs instead.
Metrics compute_metrics(std::span<const EpochRecord> series, const Vec3& reference, double threshold);

enum class AlignmentMethod { TwoVector, Leveling };

struct PacketCounts {
  std::size_t pseudo_position{0};
  std::size_t pseudo_velocity{0};
  std::size_t accel{0};
  std::size_t mag{0};
  std::size_t qsau{0};
};

struct CalibrationReport {
  std::vector<EpochRecord> series;
  std::optional<Vec3> reference;  // rad/s
  std::string reference_note;
  std::optional<Metrics> metrics;
  SensorErrors final_estimate;
  PublishedCalibration published;
  FilterHealth health;
  PacketCounts packets;
  AlignmentMethod alignment{AlignmentMethod::Leveling};
  bool mag_available{false};
  bool mag_used{false};
  double start_time{0.0};
  double duration{0.0};
  std::size_t samples{0};
};

/// Align, then run the per-sample mechanize/predict loop with constraint
/// updates and closed-loop feedback at each epoch. `reference` overrides the
/// tail-average evaluation reference. Throws MalformedStream for empty or
/// non-monotonic input and ConfigError for an invalid configuration.
CalibrationReport run_pipeline(const PipelineConfig& cfg, const SensorStream& stream,
                               std::optional<Vec3> reference = std::nullopt);

/// Simulates cfg.sim and calibrates the result.
CalibrationReport run_pipeline(const PipelineConfig& cfg);

/// Simulated stream for cfg.sim, without magnetometer data when disabled.
SensorStream simulate_stream(const PipelineConfig& cfg);

/// Key-value report text.
std::string format_report(const CalibrationReport& report);

inline constexpr const char* kConvergenceHeader = "t,bx,by,bz,refx,refy,refz";
inline constexpr const char* kAvailabilityHeader = "t,qsmf,qs,accel_mode";
inline constexpr const char* kSummaryHeader = "axis,mean_error,rms_error,convergence_time_s,converged";

/// Writes convergence.csv, availability.csv and summary.csv (deg/s, fixed
/// six decimals) into `dir`, creating it if needed. Throws
/// std::runtime_error when a file cannot be written.
void emit_plot_data(const CalibrationReport& report, const std::filesystem::path& dir);

struct ConvergenceRow {
  double t{0.0};
  Vec3 bias{Vec3::Zero()};       // deg/s
  Vec3 reference{Vec3::Zero()};  // deg/s
};

std::vector<ConvergenceRow> read_convergence_csv(const std::filesystem::path& path);

}  // namespace gyrocal

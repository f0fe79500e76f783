#include "gyrocal/constraints.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace gyrocal {

namespace {

struct Moments {
  double mean{0.0};
  double stddev{0.0};
};

template <typename Range, typename Fn>
Moments moments(const Range& range, Fn&& value) {
  double sum = 0.0;
  double sum_sq = 0.0;
  double n = 0.0;
  for (const auto& item : range) {
    const double v = value(item);
    sum += v;
    sum_sq += v * v;
    n += 1.0;
  }
  if (n == 0.0) return {};
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean))};
}

// Drops the oldest samples while the remainder still spans `window`.
template <typename Sample>
void trim_window(std::deque<Sample>& w, double window) {
  while (w.size() > 2) {
    const double m = static_cast<double>(w.size() - 1);
    if ((w.back().t - w[1].t) * m / (m - 1.0) < window - 1e-9) break;
    w.pop_front();
  }
}

MeasurementPacket make_packet(MeasurementKind kind, int rows) {
  MeasurementPacket p;
  p.kind = kind;
  p.z = Eigen::VectorXd::Zero(rows);
  p.H = ObservationMat::Zero(rows, kStateDim);
  p.R = Eigen::MatrixXd::Zero(rows, rows);
  return p;
}

}  // namespace

AccelModeResult acceleration_mode(const Vec3& f_b, double g, const AccelModeConfig& cfg, double att_cov_trace) {
  AccelModeResult out;
  out.acceleration = std::abs(f_b.norm() - g);
  const double var_a = cfg.sigma_a * cfg.sigma_a;
  if (out.acceleration <= cfg.th_acc1) {
    out.mode = AccelMode::NonAcceleration;
    out.variance = var_a;
  } else if (out.acceleration <= cfg.th_acc2) {
    out.mode = AccelMode::LowAcceleration;
    const double a2 = out.acceleration * out.acceleration;
    out.variance = cfg.scale * (a2 / att_cov_trace) * var_a;
    out.variance = std::min(out.variance, cfg.sigma_a_max * cfg.sigma_a_max);
  } else {
    out.mode = AccelMode::HighAcceleration;
    out.variance = cfg.sigma_a_max * cfg.sigma_a_max;
  }
  return out;
}

bool detect_quasi_static(std::span<const ImuSample> window, double g, const QuasiStaticConfig& cfg,
                         const BiasPrior& prior) {
  if (window_span(window) < cfg.window - 1e-9) return false;

  const Moments gyro = moments(window, [](const ImuSample& s) { return s.gyro.norm(); });
  const Moments accel = moments(window, [](const ImuSample& s) { return s.accel.norm(); });
  if (gyro.stddev >= cfg.gyro_std_max) return false;
  if (accel.stddev >= cfg.accel_std_max) return false;
  if (std::abs(accel.mean - g) >= cfg.gravity_tolerance) return false;

  if (std::isfinite(prior.sigma)) {
    Vec3 mean_rate = Vec3::Zero();
    for (const auto& s : window) mean_rate += s.gyro;
    mean_rate /= static_cast<double>(window.size());
    const double limit = cfg.gyro_mean_max + cfg.bias_sigma_factor * prior.sigma;
    if ((mean_rate - prior.estimate).norm() >= limit) return false;
  }
  return true;
}

void QuasiStaticDetector::push(const ImuSample& sample) {
  window_.push_back(sample);
  trim_window(window_, cfg_.window);
}

bool QuasiStaticDetector::evaluate(double g, const BiasPrior& prior) const {
  const std::vector<ImuSample> samples(window_.begin(), window_.end());
  return detect_quasi_static(samples, g, cfg_, prior);
}

bool detect_qsmf(std::span<const MagSample> window, const QsmfConfig& cfg) {
  if (window.size() < 3 || window_span(window) < 0.5 - 1e-9) return false;

  std::vector<double> mag(window.size());
  std::transform(window.begin(), window.end(), mag.begin(), [](const MagSample& s) { return s.field.norm(); });

  const std::size_t len = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(cfg.smoothing, 1)), 1, mag.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double acc = std::accumulate(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
  for (std::size_t i = len;; ++i) {
    const double avg = acc / static_cast<double>(len);
    lo = std::min(lo, avg);
    hi = std::max(hi, avg);
    if (i >= mag.size()) break;
    acc += mag[i] - mag[i - len];
  }
  if (hi - lo >= cfg.range_max) return false;

  // least-squares trend of the raw magnitude
  const Moments tm = moments(window, [](const MagSample& s) { return s.t; });
  const double mean_m = std::accumulate(mag.begin(), mag.end(), 0.0) / static_cast<double>(mag.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    const double dt = window[i].t - tm.mean;
    sxy += dt * (mag[i] - mean_m);
    sxx += dt * dt;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return std::abs(slope) < cfg.slope_max;
}

Vec3 calibrate_lmf(const Attitude& att, const Vec3& m_b) { return att.to_nav(m_b); }

const QsmfState& QsmfTracker::push(const MagSample& sample, const Attitude& att) {
  auto& w = state_.window;
  w.push_back(sample);
  trim_window(w, cfg_.window);
  const std::vector<MagSample> samples(w.begin(), w.end());
  const bool stable = window_span<MagSample>(samples) >= cfg_.window - 1e-9 && detect_qsmf(samples, cfg_);

  if (!stable) {
    detected_ = false;
    state_.active = false;
    calibration_count_ = 0;
    calibration_sum_.setZero();
    return state_;
  }
  if (!detected_) {
    detected_ = true;
    ++state_.period_index;
  }
  if (!state_.active) {
    calibration_sum_ += calibrate_lmf(att, sample.field);
    if (++calibration_count_ >= std::max(cfg_.calibration_samples, 1)) {
      state_.m_n_ref = calibration_sum_ / static_cast<double>(calibration_count_);
      state_.active = true;
    }
  }
  return state_;
}

void PseudoPositionTuner::push(double t, const Vec3& offset_ned) {
  history_.emplace_back(t, offset_ned);
  while (!history_.empty() && history_.front().first < t - cfg_.window) history_.pop_front();
}

Vec3 PseudoPositionTuner::variance() const {
  Vec3 excursion = Vec3::Zero();
  for (const auto& [t, offset] : history_) excursion = excursion.cwiseMax(offset.cwiseAbs());
  const double prior = cfg_.prior_sigma * cfg_.prior_sigma;
  return excursion.cwiseAbs2().cwiseMax(Vec3::Constant(prior));
}

MeasurementPacket pseudo_position_packet(const NavState& nav, const GeoPosition& r_ref, const Vec3& r_cov) {
  auto p = make_packet(MeasurementKind::PseudoPosition, 3);
  p.z = ned_offset(r_ref, nav.pos);
  p.H.block<3, 3>(0, idx::kPos).setIdentity();
  p.R.diagonal() = r_cov;
  return p;
}

MeasurementPacket pseudo_velocity_packet(const NavState& nav, double sigma) {
  auto p = make_packet(MeasurementKind::PseudoVelocity, 3);
  p.z = nav.vel;
  p.H.block<3, 3>(0, idx::kVel).setIdentity();
  p.R.diagonal().setConstant(sigma * sigma);
  return p;
}

MeasurementPacket accel_packet(const NavState& nav, const Vec3& f_b, double variance, double g) {
  auto p = make_packet(MeasurementKind::Accel, 3);
  const Vec3 f_n(0.0, 0.0, -g);
  p.z = f_n - nav.att.to_nav(f_b);
  p.H.block<3, 3>(0, idx::kAtt) = skew(Vec3(0.0, 0.0, g));
  p.R.diagonal().setConstant(variance);
  return p;
}

std::optional<MeasurementPacket> mag_packet(const NavState& nav, const Vec3& m_b, const QsmfState& qsmf,
                                            double mag_sigma) {
  if (!qsmf.active) return std::nullopt;
  auto p = make_packet(MeasurementKind::Mag, 3);
  p.z = nav.att.to_nav(m_b) - qsmf.m_n_ref;
  p.H.block<3, 3>(0, idx::kAtt) = skew(qsmf.m_n_ref);
  p.R.diagonal().setConstant(mag_sigma * mag_sigma);
  return p;
}

MeasurementPacket qsau_packet(const Vec3& gyro, double sigma) {
  auto p = make_packet(MeasurementKind::Qsau, 3);
  p.z = gyro;
  p.H.block<3, 3>(0, idx::kGyroBias).setIdentity();
  p.R.diagonal().setConstant(sigma * sigma);
  return p;
}

}  // namespace gyrocal

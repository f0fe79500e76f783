#include "gyrocal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gyrocal {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

// C2-continuous step from 0 to 1 over x in [0, 1]
double smoothstep5(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

Oscillation osc(double amplitude, double harmonic, double phase = 0.0) { return {amplitude, harmonic, phase}; }

constexpr double deg(double v) { return v * kDegToRad; }

double motion_envelope(const ScenarioConfig& cfg, double t) {
  if (cfg.ramp <= 0.0) return (t >= 0.0 && t <= cfg.walk_end()) ? 1.0 : 0.0;
  const double up = smoothstep5(t / cfg.ramp);
  const double down = smoothstep5((cfg.walk_end() - t) / cfg.ramp);
  return std::min(up, down);
}

struct Kinematics {
  Vec3 vel_n;
  Attitude att;
};

Kinematics kinematics_at(const ScenarioConfig& cfg, double t) {
  const MotionProfile& p = cfg.profile;
  const double w = motion_envelope(cfg, t);
  const double base = kTwoPi * p.step_frequency;

  Vec3 euler = p.mount;
  for (int i = 0; i < 3; ++i) {
    const auto& o = p.attitude[i];
    euler[i] += w * o.amplitude * std::sin(base * o.harmonic * t + o.phase);
  }

  // velocity whose derivative is the acceleration oscillation a cos(...)
  Vec3 v_walk(w * p.walk_speed, 0.0, 0.0);
  for (int i = 0; i < 3; ++i) {
    const auto& o = p.accel[i];
    const double omega = base * o.harmonic;
    v_walk[i] += w * o.amplitude / omega * std::sin(omega * t + o.phase);
  }

  const Mat3 heading = Eigen::AngleAxisd(p.heading, Vec3::UnitZ()).toRotationMatrix();
  return {heading * v_walk, Attitude::from_euler(euler[0], euler[1], euler[2] + p.heading)};
}

}  // namespace

std::string_view to_string(MotionMode mode) {
  switch (mode) {
    case MotionMode::Handheld: return "handheld";
    case MotionMode::Phoning: return "phoning";
    case MotionMode::Dangling: return "dangling";
    case MotionMode::Pocket: return "pocket";
    case MotionMode::Belt: return "belt";
    case MotionMode::Backpack: return "backpack";
    case MotionMode::Static: return "static";
  }
  return "unknown";
}

std::optional<MotionMode> parse_motion_mode(std::string_view name) {
  for (auto m : {MotionMode::Handheld, MotionMode::Phoning, MotionMode::Dangling, MotionMode::Pocket,
                 MotionMode::Belt, MotionMode::Backpack, MotionMode::Static}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

MotionProfile MotionProfile::preset(MotionMode mode) {
  MotionProfile p;
  p.mode = mode;
  // harmonic 1 = step frequency, 0.5 = stride (arm and leg swing)
  switch (mode) {
    case MotionMode::Handheld:
      p.mount = {0.0, deg(20.0), 0.0};
      p.attitude = {osc(deg(2.0), 0.5), osc(deg(1.5), 1.0, 0.4), osc(deg(2.0), 0.5, 1.1)};
      p.accel = {osc(1.0, 1.0), osc(0.5, 0.5, 0.7), osc(2.0, 1.0, 1.6)};
      break;
    case MotionMode::Phoning:
      p.mount = {deg(80.0), deg(55.0), 0.0};
      p.attitude = {osc(deg(1.5), 0.5), osc(deg(1.5), 1.0, 0.9), osc(deg(2.0), 0.5, 0.3)};
      p.accel = {osc(1.0, 1.0), osc(0.5, 0.5, 0.7), osc(2.0, 1.0, 1.6)};
      break;
    case MotionMode::Dangling:
      // arm swing about the lateral axis, about 150 deg/s peak
      p.mount = {deg(90.0), deg(-60.0), 0.0};
      p.attitude = {osc(deg(5.0), 1.0, 0.5), osc(deg(26.5), 0.5), osc(deg(5.0), 0.5, 1.3)};
      p.accel = {osc(4.0, 0.5, 0.2), osc(1.0, 0.5, 1.0), osc(3.0, 1.0, 1.6)};
      break;
    case MotionMode::Pocket:
      // thigh swing
      p.mount = {deg(90.0), deg(75.0), 0.0};
      p.attitude = {osc(deg(4.0), 1.0, 0.8), osc(deg(20.0), 0.5), osc(deg(4.0), 0.5, 2.0)};
      p.accel = {osc(3.0, 0.5, 0.4), osc(1.0, 0.5, 1.2), osc(4.0, 1.0, 1.6)};
      break;
    case MotionMode::Belt:
      p.mount = {deg(90.0), deg(5.0), 0.0};
      p.attitude = {osc(deg(2.0), 1.0), osc(deg(2.0), 0.5, 0.6), osc(deg(4.0), 0.5, 1.9)};
      p.accel = {osc(1.5, 1.0), osc(1.0, 0.5, 0.7), osc(2.5, 1.0, 1.6)};
      break;
    case MotionMode::Backpack:
      p.mount = {0.0, deg(70.0), 0.0};
      p.attitude = {osc(deg(1.5), 0.5), osc(deg(1.5), 1.0, 0.4), osc(deg(1.5), 0.5, 1.1)};
      p.accel = {osc(1.0, 1.0), osc(0.5, 0.5, 0.7), osc(2.0, 1.0, 1.6)};
      break;
    case MotionMode::Static:
      p.walk_speed = 0.0;
      p.mount = {0.0, deg(20.0), 0.0};
      break;
  }
  return p;
}

double MotionProfile::peak_rate_bound() const {
  double sum = 0.0;
  for (const auto& o : attitude) sum += std::abs(o.amplitude) * kTwoPi * step_frequency * o.harmonic;
  return sum;
}

bool MotionProfile::valid() const {
  if (!(walk_speed >= 0.0) || !mount.allFinite()) return false;
  const auto freq_ok = [this](const Oscillation& o) {
    if (o.amplitude == 0.0) return true;
    const double f = step_frequency * o.harmonic;
    return f > 0.5 && f < 3.0;
  };
  return std::all_of(attitude.begin(), attitude.end(), freq_ok) &&
         std::all_of(accel.begin(), accel.end(), freq_ok) && peak_rate_bound() <= 500.0 * kDegToRad;
}

Vec3 MagEnvironment::field_at(double t) const {
  if (segments.empty()) return Vec3::Zero();
  std::size_t i = 0;
  while (i + 1 < segments.size() && segments[i + 1].start <= t) ++i;
  const MagSegment& seg = segments[i];
  if (i == 0 || t >= seg.start + transition_duration) return seg.field_n;

  const Vec3& prev = segments[i - 1].field_n;
  const double x = (t - seg.start) / transition_duration;
  const double s = smoothstep5(x);
  const Vec3 blended = (1.0 - s) * prev + s * seg.field_n;
  const double bump = disturbance_amplitude * std::sin(kPi * x) *
                      std::sin(kTwoPi * disturbance_frequency * (t - seg.start));
  return blended + bump * blended.normalized();
}

bool MagEnvironment::stable_at(double t) const {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (t >= segments[i].start && t < segments[i].start + transition_duration) return false;
  }
  return true;
}

bool MagEnvironment::valid() const {
  if (segments.empty() || !(transition_duration >= 0.0)) return false;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const double m = segments[i].field_n.norm();
    if (!(m > 10.0 && m < 100.0)) return false;
    if (i > 0 && !(segments[i].start > segments[i - 1].start)) return false;
  }
  return true;
}

MagEnvironment MagEnvironment::outdoor() {
  MagEnvironment env;
  env.segments = {{0.0, Vec3(16.5, 3.2, 52.0)}};
  return env;
}

MagEnvironment MagEnvironment::indoor(double duration, std::uint64_t seed) {
  constexpr int kSegments = 8;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> change(4.0, 15.0);
  std::uniform_real_distribution<double> tilt(10.0 * kDegToRad, 40.0 * kDegToRad);

  MagEnvironment env;
  env.transition_duration = std::min(7.0, 0.6 * duration / kSegments);
  env.disturbance_amplitude = 6.0;
  env.disturbance_frequency = 0.8;

  Vec3 field(16.5, 3.2, 52.0);
  env.segments.push_back({0.0, field});
  for (int i = 1; i < kSegments; ++i) {
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    if (axis.norm() < 1e-3) axis = Vec3::UnitX();
    const Vec3 dir = (Eigen::AngleAxisd(tilt(rng), axis.normalized()) * field).normalized();
    double magnitude = field.norm() + (unit(rng) < 0.0 ? -1.0 : 1.0) * change(rng);
    if (magnitude < 25.0 || magnitude > 85.0) magnitude = field.norm() - (magnitude - field.norm());
    field = magnitude * dir;
    env.segments.push_back({duration * i / kSegments, field});
  }
  return env;
}

bool ScenarioConfig::valid() const {
  return profile.valid() && environment.valid() && errors.valid() && duration > 0.0 && tail >= 0.0 &&
         tail < duration && noise.sample_rate > 0.0 && start.valid();
}

std::vector<TruthEpoch> generate_truth(const ScenarioConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("invalid scenario configuration");

  const double dt = 1.0 / cfg.noise.sample_rate;
  const auto count = static_cast<std::size_t>(std::llround(cfg.duration * cfg.noise.sample_rate)) + 1;

  std::vector<TruthEpoch> out;
  out.reserve(count);

  const Kinematics k0 = kinematics_at(cfg, 0.0);
  NavState prev{cfg.start, k0.vel_n, k0.att};
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Kinematics kin = kinematics_at(cfg, t);
    NavState nav;
    nav.vel = kin.vel_n;
    nav.att = kin.att;
    nav.pos = k == 0 ? cfg.start : integrate_position(prev.pos, prev.vel, nav.vel, dt);

    TruthEpoch e;
    e.t = t;
    e.nav = nav;
    e.reading = reading_between(prev, nav, dt, cfg.mech);
    e.mag = nav.att.to_body(cfg.environment.field_at(t));
    out.push_back(e);
    prev = nav;
  }
  return out;
}

SensorStream corrupt(std::span<const TruthEpoch> truth, const SensorErrors& errors, const NoiseSpec& noise,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  SensorStream out;
  out.imu.reserve(truth.size());
  out.mag.reserve(truth.size());
  for (const auto& e : truth) {
    const InertialReading w = sample_noise(noise, rng);
    const InertialReading meas = apply_errors(e.reading, errors, w);
    out.imu.push_back({e.t, meas.gyro, meas.accel});
    Vec3 m = e.mag;
    for (int i = 0; i < 3; ++i) m[i] += noise.mag_noise * n01(rng);
    out.mag.push_back({e.t, m});
  }
  return out;
}

Vec3 reference_bias(std::span<const ImuSample> stream, double window, double g, const QuasiStaticConfig& cfg) {
  if (stream.empty()) throw ReferenceUnavailable("empty stream");
  const double t_end = stream.back().t;
  const auto first = std::find_if(stream.begin(), stream.end(),
                                  [&](const ImuSample& s) { return s.t > t_end - window + 1e-9; });
  const std::span<const ImuSample> tail(first, stream.end());

  QuasiStaticConfig tail_cfg = cfg;
  tail_cfg.window = window;
  if (!detect_quasi_static(tail, g, tail_cfg, BiasPrior::unknown())) {
    throw ReferenceUnavailable("tail of the stream is not quasi-static");
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& s : tail) mean += s.gyro;
  return mean / static_cast<double>(tail.size());
}

}  // namespace gyrocal

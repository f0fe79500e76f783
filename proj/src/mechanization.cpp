#include "gyrocal/mechanization.hpp"

namespace gyrocal {

namespace {

void check_dt(double dt, const MechanizationConfig& cfg) {
  if (!(dt > 0.0) || dt > cfg.max_dt) {
    throw MalformedStream("integration interval out of range");
  }
}

Vec3 coriolis_rate(const NavState& s, const MechanizationConfig& cfg) {
  return 2.0 * cfg.earth_rate_at(s.pos) + cfg.transport_rate_at(s.pos, s.vel);
}

Vec3 nav_frame_rate(const NavState& s, const MechanizationConfig& cfg) {
  return cfg.earth_rate_at(s.pos) + cfg.transport_rate_at(s.pos, s.vel);
}

}  // namespace

GeoPosition integrate_position(const GeoPosition& pos, const Vec3& vel_start, const Vec3& vel_end, double dt) {
  const Vec3 v = 0.5 * (vel_start + vel_end);
  const double rm = meridian_radius(pos.latitude) + pos.height;
  const double rn = normal_radius(pos.latitude) + pos.height;
  GeoPosition out;
  out.latitude = pos.latitude + v.x() / rm * dt;
  out.longitude = pos.longitude + v.y() / (rn * std::cos(pos.latitude)) * dt;
  out.height = pos.height - v.z() * dt;
  return out;
}

NavState ins_step(const NavState& state, const InertialReading& reading, double dt,
                  const MechanizationConfig& cfg) {
  check_dt(dt, cfg);

  const Vec3 w_in = nav_frame_rate(state, cfg);
  const Eigen::Quaterniond& q = state.att.quaternion();
  const Eigen::Quaterniond q_mid =
      quat_from_rotvec(-0.5 * dt * w_in) * q * quat_from_rotvec(0.5 * dt * reading.gyro);

  NavState next;
  next.att = Attitude(quat_from_rotvec(-dt * w_in) * q * quat_from_rotvec(dt * reading.gyro));

  const Vec3 f_n = q_mid * reading.accel;
  const Vec3 accel_n = f_n + gravity_n(state.pos) - coriolis_rate(state, cfg).cross(state.vel);
  next.vel = state.vel + accel_n * dt;
  next.pos = integrate_position(state.pos, state.vel, next.vel, dt);
  return next;
}

InertialReading reading_between(const NavState& from, const NavState& to, double dt,
                                const MechanizationConfig& cfg) {
  check_dt(dt, cfg);

  const Vec3 w_in = nav_frame_rate(from, cfg);
  const Eigen::Quaterniond& q0 = from.att.quaternion();
  const Eigen::Quaterniond body_increment =
      q0.conjugate() * quat_from_rotvec(dt * w_in) * to.att.quaternion();

  InertialReading out;
  out.gyro = rotvec_from_quat(body_increment) / dt;

  const Eigen::Quaterniond q_mid =
      quat_from_rotvec(-0.5 * dt * w_in) * q0 * quat_from_rotvec(0.5 * dt * out.gyro);
  const Vec3 accel_n = (to.vel - from.vel) / dt;
  const Vec3 f_n = accel_n - gravity_n(from.pos) + coriolis_rate(from, cfg).cross(from.vel);
  out.accel = q_mid.conjugate() * f_n;
  return out;
}

NavState interval_midpoint(const NavState& from, const NavState& to) {
  NavState mid;
  mid.pos = displace(from.pos, 0.5 * ned_offset(from.pos, to.pos));
  mid.vel = 0.5 * (from.vel + to.vel);
  mid.att = Attitude(from.att.quaternion().slerp(0.5, to.att.quaternion()));
  return mid;
}

}  // namespace gyrocal

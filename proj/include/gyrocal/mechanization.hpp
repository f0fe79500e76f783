#pragma once

#include "gyrocal/core_math.hpp"
#include "gyrocal/sensor_models.hpp"

#include <stdexcept>

namespace gyrocal {

/// Thrown when an input stream violates its timing or value contract.
class MalformedStream : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct NavState {
  GeoPosition pos;
  Vec3 vel{Vec3::Zero()};  // NED, m/s
  Attitude att;            // C_b^n

  bool valid() const { return pos.valid() && vel.allFinite(); }
};

/// One inertial epoch. `gyro` is the body rate over the interval ending at t.
struct ImuSample {
  double t{0.0};
  Vec3 gyro{Vec3::Zero()};   // rad/s
  Vec3 accel{Vec3::Zero()};  // m/s^2 (specific force)
};

struct MechanizationConfig {
  bool earth_rate{true};
  bool transport_rate{true};
  double max_dt{0.1};

  Vec3 earth_rate_at(const GeoPosition& pos) const {
    return earth_rate ? earth_rate_n(pos.latitude) : Vec3::Zero();
  }
  Vec3 transport_rate_at(const GeoPosition& pos, const Vec3& vel) const {
    return transport_rate ? transport_rate_n(pos, vel) : Vec3::Zero();
  }
};

/// Gravity vector in NED (positive down).
inline Vec3 gravity_n(const GeoPosition& pos) { return {0.0, 0.0, gravity_magnitude(pos.latitude, pos.height)}; }

/// One strapdown step in the local-level NED frame.
///
/// Attitude: C' = exp(-[w_in dt x]) C exp([w_ib dt x]) with w_in evaluated at
/// the start of the interval. Velocity: specific force rotated with the
/// mid-interval attitude, plus gravity and the Coriolis term. Position:
/// trapezoidal integration of velocity. `reading` must already be corrected
/// for sensor errors. Throws MalformedStream if dt is outside (0, max_dt].
NavState ins_step(const NavState& state, const InertialReading& reading, double dt,
                  const MechanizationConfig& cfg = {});

/// Trapezoidal position update used by ins_step.
GeoPosition integrate_position(const GeoPosition& pos, const Vec3& vel_start, const Vec3& vel_end, double dt);

/// State halfway through a step: attitude slerp, mean velocity, half the
/// position offset. Error dynamics are linearized here.
NavState interval_midpoint(const NavState& from, const NavState& to);

/// Exact inverse of ins_step for attitude and velocity: the reading that
/// carries `from` onto `to.att` and `to.vel` over dt.
InertialReading reading_between(const NavState& from, const NavState& to, double dt,
                                const MechanizationConfig& cfg = {});

}  // namespace gyrocal

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace gyrocal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

namespace earth {
// WGS-84
inline constexpr double kRotationRate = 7.292115e-5;  // rad/s
inline constexpr double kSemiMajorAxis = 6378137.0;   // m
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
// Somigliana normal gravity
inline constexpr double kGravityEquator = 9.7803253359;  // m/s^2
inline constexpr double kGravityPole = 9.8321849378;     // m/s^2
inline constexpr double kSomiglianaK = 0.00193185265241;
inline constexpr double kFreeAirGradient = 3.086e-6;  // (m/s^2)/m
}  // namespace earth

/// Geodetic position. Latitude and longitude in radians, height in metres.
struct GeoPosition {
  double latitude{0.0};
  double longitude{0.0};
  double height{0.0};

  bool valid() const {
    return std::isfinite(latitude) && std::isfinite(longitude) && std::isfinite(height) &&
           std::abs(latitude) <= kPi / 2.0;
  }
};

/// Body-to-navigation rotation (C_b^n) stored as a unit quaternion.
class Attitude {
 public:
  Attitude() = default;
  explicit Attitude(const Eigen::Quaterniond& q) : q_(q.normalized()) {}

  static Attitude identity() { return Attitude{}; }
  /// Nearest rotation to an arbitrary 3x3 matrix (polar decomposition).
  static Attitude from_dcm(const Mat3& m);
  /// ZYX convention: yaw about down, then pitch, then roll.
  static Attitude from_euler(double roll, double pitch, double yaw);

  Mat3 dcm() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }
  /// (roll, pitch, yaw) in radians.
  Vec3 euler() const;

  Vec3 to_nav(const Vec3& v_body) const { return q_ * v_body; }
  Vec3 to_body(const Vec3& v_nav) const { return q_.conjugate() * v_nav; }

  /// Angle of the rotation taking this attitude onto `other`.
  double angle_to(const Attitude& other) const;

 private:
  Eigen::Quaterniond q_{Eigen::Quaterniond::Identity()};
};

/// Cross-product matrix: skew(v) * w == v.cross(w).
inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Quaterniond quat_from_rotvec(const Vec3& rv);
Vec3 rotvec_from_quat(const Eigen::Quaterniond& q);

/// Normal gravity magnitude at latitude/height (Somigliana with a linear
/// free-air correction).
double gravity_magnitude(double latitude, double height);

/// Meridian (north-south) radius of curvature.
double meridian_radius(double latitude);
/// Prime-vertical (east-west) radius of curvature.
double normal_radius(double latitude);

/// Earth rotation rate resolved in NED.
Vec3 earth_rate_n(double latitude);
/// Rotation rate of NED with respect to the Earth frame.
Vec3 transport_rate_n(const GeoPosition& pos, const Vec3& vel_n);

/// North/east/down offset in metres of `to` relative to `from`
/// (linearized with the radii at `from`).
Vec3 ned_offset(const GeoPosition& from, const GeoPosition& to);
/// Position displaced by a NED offset in metres (inverse of ned_offset).
GeoPosition displace(const GeoPosition& from, const Vec3& offset_ned);

/// Removes the attitude error psi from an estimate: C = exp([psi x]) * C_hat.
/// First order identical to (I + [psi x]) C_hat; result is an exact rotation.
Attitude apply_attitude_error(const Attitude& estimate, const Vec3& psi);
/// Corrupts a true attitude with error psi: C_hat = exp(-[psi x]) * C.
Attitude inject_attitude_error(const Attitude& truth, const Vec3& psi);
/// Attitude error psi such that estimate = exp(-[psi x]) * truth.
Vec3 attitude_error(const Attitude& estimate, const Attitude& truth);

}  // namespace gyrocal

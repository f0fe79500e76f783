#include "gyrocal/core_math.hpp"

#include <Eigen/SVD>

namespace gyrocal {

Attitude Attitude::from_dcm(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) *= -1.0;
  }
  const Mat3 r = u * v.transpose();
  return Attitude(Eigen::Quaterniond(r));
}

Attitude Attitude::from_euler(double roll, double pitch, double yaw) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                               Eigen::AngleAxisd(roll, Vec3::UnitX());
  return Attitude(q);
}

Vec3 Attitude::euler() const {
  const Mat3 c = dcm();
  const double pitch = std::atan2(-c(2, 0), std::hypot(c(2, 1), c(2, 2)));
  const double roll = std::atan2(c(2, 1), c(2, 2));
  const double yaw = std::atan2(c(1, 0), c(0, 0));
  return {roll, pitch, yaw};
}

double Attitude::angle_to(const Attitude& other) const {
  return rotvec_from_quat(other.q_ * q_.conjugate()).norm();
}

Eigen::Quaterniond quat_from_rotvec(const Vec3& rv) {
  const double angle = rv.norm();
  const double half = 0.5 * angle;
  // sin(half)/angle, series near zero
  const double k = angle > 1e-6 ? std::sin(half) / angle : 0.5 - angle * angle / 48.0;
  Eigen::Quaterniond q(std::cos(half), k * rv.x(), k * rv.y(), k * rv.z());
  q.normalize();
  return q;
}

Vec3 rotvec_from_quat(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) {
    q.coeffs() *= -1.0;
  }
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-9) {
    return 2.0 * v / q.w();
  }
  const double angle = 2.0 * std::atan2(s, q.w());
  return v * (angle / s);
}

double gravity_magnitude(double latitude, double height) {
  using namespace earth;
  const double s2 = std::sin(latitude) * std::sin(latitude);
  const double g0 = kGravityEquator * (1.0 + kSomiglianaK * s2) / std::sqrt(1.0 - kEccentricitySq * s2);
  return g0 - kFreeAirGradient * height;
}

double meridian_radius(double latitude) {
  using namespace earth;
  const double s2 = std::sin(latitude) * std::sin(latitude);
  return kSemiMajorAxis * (1.0 - kEccentricitySq) / std::pow(1.0 - kEccentricitySq * s2, 1.5);
}

double normal_radius(double latitude) {
  using namespace earth;
  const double s2 = std::sin(latitude) * std::sin(latitude);
  return kSemiMajorAxis / std::sqrt(1.0 - kEccentricitySq * s2);
}

Vec3 earth_rate_n(double latitude) {
  return {earth::kRotationRate * std::cos(latitude), 0.0, -earth::kRotationRate * std::sin(latitude)};
}

Vec3 transport_rate_n(const GeoPosition& pos, const Vec3& vel_n) {
  const double rm = meridian_radius(pos.latitude) + pos.height;
  const double rn = normal_radius(pos.latitude) + pos.height;
  return {vel_n.y() / rn, -vel_n.x() / rm, -vel_n.y() * std::tan(pos.latitude) / rn};
}

Vec3 ned_offset(const GeoPosition& from, const GeoPosition& to) {
  const double rm = meridian_radius(from.latitude) + from.height;
  const double rn = normal_radius(from.latitude) + from.height;
  return {(to.latitude - from.latitude) * rm,
          (to.longitude - from.longitude) * rn * std::cos(from.latitude),
          -(to.height - from.height)};
}

GeoPosition displace(const GeoPosition& from, const Vec3& offset_ned) {
  const double rm = meridian_radius(from.latitude) + from.height;
  const double rn = normal_radius(from.latitude) + from.height;
  return {from.latitude + offset_ned.x() / rm,
          from.longitude + offset_ned.y() / (rn * std::cos(from.latitude)),
          from.height - offset_ned.z()};
}

Attitude apply_attitude_error(const Attitude& estimate, const Vec3& psi) {
  return Attitude(quat_from_rotvec(psi) * estimate.quaternion());
}

Attitude inject_attitude_error(const Attitude& truth, const Vec3& psi) {
  return Attitude(quat_from_rotvec(-psi) * truth.quaternion());
}

Vec3 attitude_error(const Attitude& estimate, const Attitude& truth) {
  // estimate * truth^T = exp(-[psi x])
  return -rotvec_from_quat(estimate.quaternion() * truth.quaternion().conjugate());
}

}  // namespace gyrocal

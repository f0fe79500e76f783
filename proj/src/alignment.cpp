#include "gyrocal/alignment.hpp"

namespace gyrocal {

namespace {

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

bool nearly_parallel(const Vec3& a, const Vec3& b) {
  const double angle = angle_between(a, b);
  return !(angle > kMinTriadAngle && angle < kPi - kMinTriadAngle);
}

}  // namespace

Attitude initial_dcm(const AlignmentInputs& in) {
  if (in.f_b.norm() == 0.0 || in.f_n.norm() == 0.0 || nearly_parallel(in.f_n, in.m_n) ||
      nearly_parallel(in.f_b, in.m_b)) {
    throw AlignmentError(AlignmentError::Kind::DegenerateTriad, "specific force and magnetic field nearly parallel");
  }
  Mat3 ref;
  ref << in.f_n, in.m_n, in.f_n.cross(in.m_n);
  Mat3 meas;
  meas << in.f_b, in.m_b, in.f_b.cross(in.m_b);
  const Mat3 raw = ref.transpose().inverse() * meas.transpose();
  return Attitude::from_dcm(raw);
}

Attitude leveling_fallback(const Vec3& f_b, double g) {
  const double norm = f_b.norm();
  if (!(std::abs(norm - g) <= 0.5 * g)) {
    throw AlignmentError(AlignmentError::Kind::RetryLater, "specific force too far from gravity to level");
  }
  const double roll = std::atan2(-f_b.y(), -f_b.z());
  const double pitch = std::atan2(f_b.x(), std::hypot(f_b.y(), f_b.z()));
  return Attitude::from_euler(roll, pitch, 0.0);
}

Vec3 reference_field_from_dip(const Vec3& f_b, const Vec3& m_b) {
  const double m = m_b.norm();
  // f points up, so the down component of m is -m cos(angle(f, m))
  const double down = -m * f_b.normalized().dot(m_b.normalized());
  const double horizontal = std::sqrt(std::max(0.0, m * m - down * down));
  return {horizontal, 0.0, down};
}

}  // namespace gyrocal

#pragma once

#include "gyrocal/core_math.hpp"

#include <stdexcept>

namespace gyrocal {

class AlignmentError : public std::runtime_error {
 public:
  enum class Kind {
    DegenerateTriad,  // reference or measured vectors nearly parallel; use leveling
    RetryLater,       // specific force too far from gravity to level
  };

  AlignmentError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct AlignmentInputs {
  Vec3 f_b{Vec3::Zero()};  // measured specific force, m/s^2
  Vec3 m_b{Vec3::Zero()};  // measured field, uT
  Vec3 f_n{Vec3::Zero()};  // reference specific force, [0 0 -g]
  Vec3 m_n{Vec3::Zero()};  // reference field, uT
};

inline constexpr double kMinTriadAngle = 5.0 * kDegToRad;

/// Two-vector attitude from one accelerometer/magnetometer pair:
/// C = ([f^n m^n l^n]')^-1 [f^b m^b l^b]' with l = f x m, projected onto the
/// nearest rotation. Throws AlignmentError::DegenerateTriad when either pair
/// is within kMinTriadAngle of parallel.
Attitude initial_dcm(const AlignmentInputs& in);

/// Roll and pitch from the gravity direction, heading zero. Throws
/// AlignmentError::RetryLater unless |f_b| is within 50% of g.
Attitude leveling_fallback(const Vec3& f_b, double g);

/// Heading 1-sigma assigned when the leveling fallback is used.
inline constexpr double kUnknownHeadingSigma = kPi / 1.7320508075688772;

/// Reference field in NED consistent with the measured dip angle, pointing to
/// magnetic north: [|m| cos(I), 0, |m| sin(I)]. Lets initial_dcm run without
/// prior knowledge of the local field; heading is then magnetic heading.
Vec3 reference_field_from_dip(const Vec3& f_b, const Vec3& m_b);

}  // namespace gyrocal

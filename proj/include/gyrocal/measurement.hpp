#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace gyrocal {

inline constexpr int kStateDim = 21;

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;
using ObservationMat = Eigen::Matrix<double, Eigen::Dynamic, kStateDim>;

/// Offsets of each 3-element block in the error state.
namespace idx {
inline constexpr int kPos = 0;
inline constexpr int kVel = 3;
inline constexpr int kAtt = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
inline constexpr int kGyroScale = 15;
inline constexpr int kAccelScale = 18;
}  // namespace idx

enum class MeasurementKind { PseudoPosition, PseudoVelocity, Accel, Mag, Qsau };

std::string_view to_string(MeasurementKind kind);

/// z = H * dx + n,  n ~ N(0, R)
struct MeasurementPacket {
  MeasurementKind kind{MeasurementKind::PseudoPosition};
  Eigen::VectorXd z;
  ObservationMat H;
  Eigen::MatrixXd R;

  bool consistent() const;
};

}  // namespace gyrocal

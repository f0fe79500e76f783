#pragma once

#include "gyrocal/measurement.hpp"
#include "gyrocal/mechanization.hpp"
#include "gyrocal/sensor_models.hpp"

#include <array>
#include <cstddef>

namespace gyrocal {

/// Nominal values the error dynamics are linearized about.
struct LinearizationPoint {
  NavState nav;
  InertialReading corrected;  // sensor output after applying `estimate`
  SensorErrors estimate;
};

/// Continuous-time psi-angle error model augmented with Gauss-Markov sensor
/// error states. Sensor-error columns are the Jacobian of the correction
/// (measured - b) / (1 + s) at the current estimate, which reduces to
/// b + diag(measured) * ds when the estimate is zero.
StateMat build_F(const LinearizationPoint& lp, const GaussMarkovSet& gm, const MechanizationConfig& mech);

/// Discrete process noise: ARW/VRW projected into NED plus exact
/// Gauss-Markov driving noise for the sensor-error states.
StateMat build_Qd(const Attitude& att, const NoiseSpec& noise, const GaussMarkovSet& gm, double dt);

/// x <- Phi x, P <- Phi P Phi' + Qd with Phi = I + F dt.
void predict(StateVec& x, StateMat& P, const StateMat& F, const StateMat& Qd, double dt);

/// Innovation test. Disabled unless `enabled`; `sigma` is converted into the
/// chi-square quantile with the same two-sided Gaussian coverage.
struct InnovationGate {
  bool enabled{false};
  double sigma{3.0};

  double threshold(int dims) const;
};

struct UpdateOutcome {
  bool accepted{true};
  Eigen::VectorXd innovation;
  double nis{0.0};  // normalized innovation squared
};

/// Kalman measurement update with the Joseph-form covariance.
UpdateOutcome update(StateVec& x, StateMat& P, const ObservationMat& H, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& z, const InnovationGate& gate = {});

/// Closed-loop correction. Navigation and sensor-error states are moved into
/// `nav` and `errors` and `x` is zeroed. Returns false, leaving all three
/// untouched, if the corrected sensor errors would be invalid.
bool feedback(NavState& nav, SensorErrors& errors, StateVec& x);

/// 1-sigma initial uncertainties.
struct InitialUncertainty {
  double position{10.0};
  double velocity{1.0};
  double attitude_horizontal{0.1};
  double heading{0.5};
  double gyro_bias{5.0 * kDegToRad};
  double accel_bias{0.060 * 9.80665};
  double gyro_scale{5000e-6};
  double accel_scale{5000e-6};

  StateMat covariance() const;
};

/// Gyro bias estimate released to consumers once its uncertainty is below the
/// evaluation threshold. The filter itself always runs closed loop.
struct PublishedCalibration {
  double bias_sigma_max{1.0 * kDegToRad};
  Vec3 gyro_bias{Vec3::Zero()};
  std::array<bool, 3> released{false, false, false};

  void evaluate(const SensorErrors& estimate, const StateMat& P);
};

struct FilterHealth {
  std::size_t predicts{0};
  std::size_t updates{0};
  std::size_t rejected_updates{0};
  std::size_t rejected_feedbacks{0};
  std::size_t nonzero_state_predicts{0};
  std::size_t asymmetric_steps{0};
  std::size_t indefinite_steps{0};

  bool healthy() const { return nonzero_state_predicts == 0 && asymmetric_steps == 0 && indefinite_steps == 0; }
};

struct FilterConfig {
  GaussMarkovSet gm;
  NoiseSpec noise;
  MechanizationConfig mech;
  InitialUncertainty initial;
  InnovationGate gate;
  /// Check symmetry and positive semi-definiteness of P after every step.
  bool health_checks{false};
};

/// Error-state filter: owns x and P and enforces the closed-loop contract.
class Eskf {
 public:
  explicit Eskf(FilterConfig cfg);

  void reset(const StateMat& P0);
  void predict(const LinearizationPoint& lp, double dt);
  UpdateOutcome update(const MeasurementPacket& packet);
  /// A rejected correction is discarded so the next predict still starts
  /// from a zero error state.
  bool feedback(NavState& nav, SensorErrors& errors);

  const StateVec& state() const { return x_; }
  const StateMat& covariance() const { return P_; }
  StateMat& covariance() { return P_; }
  const FilterHealth& health() const { return health_; }
  const FilterConfig& config() const { return cfg_; }

 private:
  void check_covariance();

  FilterConfig cfg_;
  StateVec x_{StateVec::Zero()};
  StateMat P_{StateMat::Zero()};
  FilterHealth health_;
};

/// True when P is symmetric within `sym_tol` and its smallest eigenvalue is
/// at least -psd_rel_tol * trace(P).
bool covariance_healthy(const StateMat& P, double sym_tol = 1e-10, double psd_rel_tol = 1e-9);

}  // namespace gyrocal

#include "gyrocal/eskf.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <Eigen/Eigenvalues>

namespace gyrocal {

std::string_view to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::PseudoPosition: return "pseudo_position";
    case MeasurementKind::PseudoVelocity: return "pseudo_velocity";
    case MeasurementKind::Accel: return "accel";
    case MeasurementKind::Mag: return "mag";
    case MeasurementKind::Qsau: return "qsau";
  }
  return "unknown";
}

bool MeasurementPacket::consistent() const {
  const auto m = z.size();
  if (m == 0 || H.rows() != m || R.rows() != m || R.cols() != m) return false;
  if (!z.allFinite() || !H.allFinite() || !R.allFinite()) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (R + R.transpose()));
  return llt.info() == Eigen::Success;
}

StateMat build_F(const LinearizationPoint& lp, const GaussMarkovSet& gm, const MechanizationConfig& mech) {
  using namespace idx;
  const NavState& nav = lp.nav;
  const Mat3 c = nav.att.dcm();
  const Vec3 w_ie = mech.earth_rate_at(nav.pos);
  const Vec3 w_en = mech.transport_rate_at(nav.pos, nav.vel);
  const Vec3 f_n = c * lp.corrected.accel;

  const Vec3 gyro_gain = (Vec3::Ones() + lp.estimate.gyro_scale).cwiseInverse();
  const Vec3 accel_gain = (Vec3::Ones() + lp.estimate.accel_scale).cwiseInverse();

  StateMat F = StateMat::Zero();
  F.block<3, 3>(kPos, kPos) = -skew(w_en);
  F.block<3, 3>(kPos, kVel) = Mat3::Identity();

  F.block<3, 3>(kVel, kVel) = -skew(2.0 * w_ie + w_en);
  F.block<3, 3>(kVel, kAtt) = skew(f_n);
  F.block<3, 3>(kVel, kAccelBias) = c * accel_gain.asDiagonal();
  F.block<3, 3>(kVel, kAccelScale) = c * lp.corrected.accel.cwiseProduct(accel_gain).asDiagonal();

  F.block<3, 3>(kAtt, kAtt) = -skew(w_ie + w_en);
  F.block<3, 3>(kAtt, kGyroBias) = -c * gyro_gain.asDiagonal();
  F.block<3, 3>(kAtt, kGyroScale) = -c * lp.corrected.gyro.cwiseProduct(gyro_gain).asDiagonal();

  const auto gm_block = [&F](int at, const GaussMarkovSpec& spec) {
    F.block<3, 3>(at, at) = -Mat3::Identity() / spec.correlation_time;
  };
  gm_block(kGyroBias, gm.gyro_bias);
  gm_block(kAccelBias, gm.accel_bias);
  gm_block(kGyroScale, gm.gyro_scale);
  gm_block(kAccelScale, gm.accel_scale);
  return F;
}

StateMat build_Qd(const Attitude& att, const NoiseSpec& noise, const GaussMarkovSet& gm, double dt) {
  using namespace idx;
  const Mat3 c = att.dcm();
  StateMat Q = StateMat::Zero();
  Q.block<3, 3>(kVel, kVel) = c * (noise.accel_vrw * noise.accel_vrw * Mat3::Identity()) * c.transpose() * dt;
  Q.block<3, 3>(kAtt, kAtt) = c * (noise.gyro_arw * noise.gyro_arw * Mat3::Identity()) * c.transpose() * dt;
  const auto gm_block = [&Q, dt](int at, const GaussMarkovSpec& spec) {
    Q.block<3, 3>(at, at) = gm_discretize(spec, dt).variance * Mat3::Identity();
  };
  gm_block(kGyroBias, gm.gyro_bias);
  gm_block(kAccelBias, gm.accel_bias);
  gm_block(kGyroScale, gm.gyro_scale);
  gm_block(kAccelScale, gm.accel_scale);
  return Q;
}

void predict(StateVec& x, StateMat& P, const StateMat& F, const StateMat& Qd, double dt) {
  const StateMat phi = StateMat::Identity() + F * dt;
  x = phi * x;
  P = phi * P * phi.transpose() + Qd;
  P = 0.5 * (P + P.transpose()).eval();
}

double InnovationGate::threshold(int dims) const {
  const double coverage = std::erf(sigma / std::sqrt(2.0));
  boost::math::chi_squared_distribution<double> dist(static_cast<double>(dims));
  return boost::math::quantile(dist, coverage);
}

UpdateOutcome update(StateVec& x, StateMat& P, const ObservationMat& H, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& z, const InnovationGate& gate) {
  UpdateOutcome out;
  out.innovation = z - H * x;
  const Eigen::MatrixXd S = H * P * H.transpose() + R;
  const Eigen::LDLT<Eigen::MatrixXd> s_ldlt(S);
  out.nis = out.innovation.dot(s_ldlt.solve(out.innovation));
  if (gate.enabled && out.nis > gate.threshold(static_cast<int>(z.size()))) {
    out.accepted = false;
    return out;
  }
  // K = P H' S^-1
  const Eigen::Matrix<double, kStateDim, Eigen::Dynamic> K = s_ldlt.solve(H * P).transpose();
  x += K * out.innovation;
  const StateMat ikh = StateMat::Identity() - K * H;
  P = ikh * P * ikh.transpose() + K * R * K.transpose();
  P = 0.5 * (P + P.transpose()).eval();
  return out;
}

bool feedback(NavState& nav, SensorErrors& errors, StateVec& x) {
  using namespace idx;
  SensorErrors next = errors;
  next.gyro_bias += x.segment<3>(kGyroBias);
  next.accel_bias += x.segment<3>(kAccelBias);
  next.gyro_scale += x.segment<3>(kGyroScale);
  next.accel_scale += x.segment<3>(kAccelScale);
  if (!next.valid()) {
    return false;
  }
  nav.pos = displace(nav.pos, -x.segment<3>(kPos));
  nav.vel -= x.segment<3>(kVel);
  nav.att = apply_attitude_error(nav.att, x.segment<3>(kAtt));
  errors = next;
  x.setZero();
  return true;
}

StateMat InitialUncertainty::covariance() const {
  using namespace idx;
  StateVec sd;
  sd.segment<3>(kPos).setConstant(position);
  sd.segment<3>(kVel).setConstant(velocity);
  sd.segment<3>(kAtt) << attitude_horizontal, attitude_horizontal, heading;
  sd.segment<3>(kGyroBias).setConstant(gyro_bias);
  sd.segment<3>(kAccelBias).setConstant(accel_bias);
  sd.segment<3>(kGyroScale).setConstant(gyro_scale);
  sd.segment<3>(kAccelScale).setConstant(accel_scale);
  return sd.cwiseAbs2().asDiagonal();
}

void PublishedCalibration::evaluate(const SensorErrors& estimate, const StateMat& P) {
  for (int i = 0; i < 3; ++i) {
    const double sigma = std::sqrt(P(idx::kGyroBias + i, idx::kGyroBias + i));
    if (sigma < bias_sigma_max) {
      gyro_bias[i] = estimate.gyro_bias[i];
      released[i] = true;
    }
  }
}

bool covariance_healthy(const StateMat& P, double sym_tol, double psd_rel_tol) {
  if (!P.allFinite()) return false;
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, P.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<StateMat> eig(P, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -psd_rel_tol * P.trace();
}

Eskf::Eskf(FilterConfig cfg) : cfg_(std::move(cfg)) { P_ = cfg_.initial.covariance(); }

void Eskf::reset(const StateMat& P0) {
  P_ = P0;
  x_.setZero();
}

void Eskf::predict(const LinearizationPoint& lp, double dt) {
  if (!x_.isZero(0.0)) {
    ++health_.nonzero_state_predicts;
  }
  const StateMat F = build_F(lp, cfg_.gm, cfg_.mech);
  const StateMat Qd = build_Qd(lp.nav.att, cfg_.noise, cfg_.gm, dt);
  gyrocal::predict(x_, P_, F, Qd, dt);
  ++health_.predicts;
  check_covariance();
}

UpdateOutcome Eskf::update(const MeasurementPacket& packet) {
  UpdateOutcome out = gyrocal::update(x_, P_, packet.H, packet.R, packet.z, cfg_.gate);
  if (out.accepted) {
    ++health_.updates;
    check_covariance();
  } else {
    ++health_.rejected_updates;
  }
  return out;
}

bool Eskf::feedback(NavState& nav, SensorErrors& errors) {
  const bool ok = gyrocal::feedback(nav, errors, x_);
  if (!ok) {
    ++health_.rejected_feedbacks;
    x_.setZero();
  }
  return ok;
}

void Eskf::check_covariance() {
  if (!cfg_.health_checks) return;
  if ((P_ - P_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, P_.cwiseAbs().maxCoeff())) {
    ++health_.asymmetric_steps;
  }
  Eigen::SelfAdjointEigenSolver<StateMat> eig(P_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * P_.trace()) {
    ++health_.indefinite_steps;
  }
}

}  // namespace gyrocal

#include "gyrocal/selftest.hpp"

#include "gyrocal/alignment.hpp"
#include "gyrocal/report.hpp"

#include <fmt/format.h>

#include <random>

namespace gyrocal {

namespace {

SelfTestResult mechanization_round_trip() {
  ScenarioConfig sc;
  sc.profile = MotionProfile::preset(MotionMode::Dangling);
  sc.duration = 20.0;
  sc.tail = 5.0;
  const auto truth = generate_truth(sc);
  NavState nav = truth.front().nav;
  double pos_err = 0.0;
  double att_err = 0.0;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    nav = ins_step(nav, truth[k].reading, truth[k].t - truth[k - 1].t, sc.mech);
    pos_err = std::max(pos_err, ned_offset(truth[k].nav.pos, nav.pos).norm());
    att_err = std::max(att_err, nav.att.angle_to(truth[k].nav.att));
  }
  return {"mechanization_round_trip", pos_err < 1e-3 && att_err < 1e-4,
          fmt::format("max position error {:.3e} m, attitude error {:.3e} rad", pos_err, att_err)};
}

SelfTestResult joseph_agreement(std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    StateMat a;
    for (int i = 0; i < a.size(); ++i) a.data()[i] = n01(rng);
    StateMat P = a * a.transpose() / kStateDim + 0.1 * StateMat::Identity();
    ObservationMat H = ObservationMat::Zero(3, kStateDim);
    for (int i = 0; i < H.size(); ++i) H.data()[i] = n01(rng);
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(3, 3) * 0.5;
    const Eigen::VectorXd z = Eigen::VectorXd::Random(3);

    StateVec x = StateVec::Zero();
    StateMat pj = P;
    update(x, pj, H, R, z);

    const Eigen::MatrixXd S = H * P * H.transpose() + R;
    const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
    const StateMat ps = (StateMat::Identity() - K * H) * P;
    worst = std::max(worst, (pj - ps).cwiseAbs().maxCoeff() / P.cwiseAbs().maxCoeff());
  }
  return {"joseph_update_agreement", worst < 1e-10, fmt::format("max relative difference {:.3e}", worst)};
}

SelfTestResult gauss_markov_variance(std::mt19937_64& rng) {
  const GaussMarkovSpec spec{2.0, 2.0};
  const auto d = gm_discretize(spec, 1.0);
  std::normal_distribution<double> n01;
  double x = spec.stationary_sigma * n01(rng);
  double sum_sq = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    x = d.phi * x + std::sqrt(d.variance) * n01(rng);
    sum_sq += x * x;
  }
  const double ratio = sum_sq / n / (spec.stationary_sigma * spec.stationary_sigma);
  return {"gauss_markov_variance", std::abs(ratio - 1.0) < 0.1,
          fmt::format("sample/stationary variance ratio {:.4f}", ratio)};
}

SelfTestResult alignment_recovery(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  double worst = 0.0;
  const Vec3 f_n(0.0, 0.0, -9.81);
  const Vec3 m_n(18.0, 2.0, 45.0);
  for (int i = 0; i < 100; ++i) {
    const Attitude truth = Attitude::from_euler(u(rng), 0.5 * u(rng), u(rng));
    const Attitude est = initial_dcm({truth.to_body(f_n), truth.to_body(m_n), f_n, m_n});
    worst = std::max(worst, est.angle_to(truth));
  }
  return {"two_vector_alignment", worst < 1e-9, fmt::format("max angle error {:.3e} rad", worst)};
}

SelfTestResult static_bias(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.sim.motion = MotionMode::Static;
  cfg.sim.duration = 30.0;
  cfg.sim.tail = 29.0;
  cfg.sim.seed = seed;
  cfg.filter.health_checks = true;
  const auto report = run_pipeline(cfg);
  const Vec3 err = (report.final_estimate.gyro_bias - cfg.sim.injected.gyro_bias) * kRadToDeg;
  const bool ok = err.cwiseAbs().maxCoeff() < 0.05 && report.health.healthy();
  return {"static_bias_estimate", ok,
          fmt::format("error {:.4f},{:.4f},{:.4f} deg/s, covariance {}", err.x(), err.y(), err.z(),
                      report.health.healthy() ? "healthy" : "unhealthy")};
}

}  // namespace

std::vector<SelfTestResult> run_selftest(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SelfTestResult> out;
  const auto guarded = [&out](const char* name, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, fmt::format("threw: {}", e.what())});
    }
  };
  guarded("mechanization_round_trip", [] { return mechanization_round_trip(); });
  guarded("joseph_update_agreement", [&] { return joseph_agreement(rng); });
  guarded("gauss_markov_variance", [&] { return gauss_markov_variance(rng); });
  guarded("two_vector_alignment", [&] { return alignment_recovery(rng); });
  guarded("static_bias_estimate", [&] { return static_bias(seed); });
  return out;
}

}  // namespace gyrocal

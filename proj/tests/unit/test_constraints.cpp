#include "gyrocal/constraints.hpp"
#include "gyrocal/simulator.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <type_traits>

using namespace gyrocal;

namespace {

constexpr double kG = 9.80665;

AccelModeConfig classic() { return {0.5, 2.0, 0.05, 100.0, 1.0}; }

std::vector<ImuSample> still(double seconds, double rate, const Vec3& gyro, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  std::vector<ImuSample> out;
  for (int k = 0; k < static_cast<int>(seconds * rate); ++k) {
    out.push_back({k / rate, gyro + Vec3(n(rng), n(rng), n(rng)) * 1e-3,
                   Vec3(0.0, 0.0, -kG) + Vec3(n(rng), n(rng), n(rng)) * 1e-2});
  }
  return out;
}

std::vector<MagSample> field_series(double seconds, double rate, const std::function<double(double)>& magnitude,
                                    double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  std::vector<MagSample> out;
  const Vec3 dir = Vec3(0.3, 0.1, 0.9).normalized();
  for (int k = 0; k < static_cast<int>(seconds * rate); ++k) {
    const double t = k / rate;
    out.push_back({t, dir * magnitude(t) + Vec3(n(rng), n(rng), n(rng))});
  }
  return out;
}

}  // namespace

TEST(AccelMode, WorkedExamples) {
  const auto cfg = classic();
  const auto at_rest = acceleration_mode(Vec3(0.0, 0.0, -kG), kG, cfg, 0.01);
  EXPECT_EQ(at_rest.mode, AccelMode::NonAcceleration);
  EXPECT_DOUBLE_EQ(at_rest.variance, 0.05 * 0.05);

  // A = 1, trace(P_att) = 0.01: (1 / 0.01) * 0.0025 = 0.25
  const auto low = acceleration_mode(Vec3(0.0, 0.0, -(kG + 1.0)), kG, cfg, 0.01);
  EXPECT_EQ(low.mode, AccelMode::LowAcceleration);
  EXPECT_NEAR(low.acceleration, 1.0, 1e-12);
  EXPECT_NEAR(low.variance, 0.25, 1e-12);

  const auto high = acceleration_mode(Vec3(0.0, 0.0, -(kG + 5.0)), kG, cfg, 0.01);
  EXPECT_EQ(high.mode, AccelMode::HighAcceleration);
  EXPECT_DOUBLE_EQ(high.variance, 100.0 * 100.0);
}

TEST(AccelMode, ThresholdsAreInclusive) {
  const auto cfg = classic();
  EXPECT_EQ(acceleration_mode(Vec3(0.0, 0.0, -(kG + 0.5)), kG, cfg, 0.01).mode, AccelMode::NonAcceleration);
  EXPECT_EQ(acceleration_mode(Vec3(0.0, 0.0, -(kG - 2.0)), kG, cfg, 0.01).mode, AccelMode::LowAcceleration);
}

TEST(AccelMode, RandomMagnitudesFollowThresholds) {
  const auto cfg = classic();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(-6.0, 6.0);
  std::uniform_real_distribution<double> tr(1e-6, 1.0);
  for (int i = 0; i < 1000000; ++i) {
    const double delta = a(rng);
    const double trace = tr(rng);
    const auto r = acceleration_mode(Vec3(0.0, 0.0, -(kG + delta)), kG, cfg, trace);
    const double A = std::abs(delta);
    const AccelMode expected = A <= 0.5 + 1e-12   ? AccelMode::NonAcceleration
                               : A <= 2.0 + 1e-12 ? AccelMode::LowAcceleration
                                                  : AccelMode::HighAcceleration;
    // skip rounding at the exact boundaries
    if (std::abs(A - 0.5) < 1e-9 || std::abs(A - 2.0) < 1e-9) continue;
    ASSERT_EQ(r.mode, expected) << A;
    ASSERT_GT(r.variance, 0.0);
    ASSERT_LE(r.variance, cfg.sigma_a_max * cfg.sigma_a_max);
  }
}

TEST(QuasiStatic, DetectsRestAndRejectsMotion) {
  QuasiStaticConfig cfg;
  const auto rest = still(1.0, 50.0, Vec3::Zero(), 1.0, 3);
  EXPECT_TRUE(detect_quasi_static(rest, kG, cfg));

  // steady 1 deg/s turn: smooth, but the mean rate is far from the bias estimate
  const auto turning = still(1.0, 50.0, Vec3(0.0, 0.0, 1.0 * kDegToRad), 1.0, 4);
  EXPECT_FALSE(detect_quasi_static(turning, kG, cfg));
  // unless the bias is unknown
  EXPECT_TRUE(detect_quasi_static(turning, kG, cfg, BiasPrior::unknown()));
  // or the estimate explains it
  EXPECT_TRUE(detect_quasi_static(turning, kG, cfg, {Vec3(0.0, 0.0, 1.0 * kDegToRad), 0.0}));

  auto shaken = rest;
  for (std::size_t k = 0; k < shaken.size(); ++k) shaken[k].accel.z() += 0.5 * std::sin(k * 0.7);
  EXPECT_FALSE(detect_quasi_static(shaken, kG, cfg));

  const std::vector<ImuSample> short_window(rest.begin(), rest.begin() + 20);
  EXPECT_FALSE(detect_quasi_static(short_window, kG, cfg));
}

TEST(QuasiStatic, SlidingDetector) {
  QuasiStaticDetector det{QuasiStaticConfig{}};
  const auto rest = still(3.0, 50.0, Vec3::Zero(), 1.0, 5);
  bool any = false;
  for (std::size_t k = 0; k < rest.size(); ++k) {
    det.push(rest[k]);
    if (k < 40) EXPECT_FALSE(det.evaluate(kG, {}));
    any = any || det.evaluate(kG, {});
  }
  EXPECT_TRUE(any);
}

TEST(Qsmf, StableFieldDetected) {
  QsmfConfig cfg;
  const auto w = field_series(1.0, 50.0, [](double) { return 48.0; }, 0.3, 1);
  EXPECT_TRUE(detect_qsmf(w, cfg));
}

TEST(Qsmf, StepOrRampRejected) {
  QsmfConfig cfg;
  const auto step = field_series(1.0, 50.0, [](double t) { return t < 0.5 ? 48.0 : 60.0; }, 0.3, 2);
  EXPECT_FALSE(detect_qsmf(step, cfg));
  const auto ramp = field_series(1.0, 50.0, [](double t) { return 48.0 + 1.4 * t; }, 0.05, 3);
  EXPECT_FALSE(detect_qsmf(ramp, cfg));
}

TEST(Qsmf, ShortWindowRejected) {
  const auto w = field_series(0.4, 50.0, [](double) { return 48.0; }, 0.0, 4);
  EXPECT_FALSE(detect_qsmf(w, QsmfConfig{}));
}

TEST(Qsmf, IndoorFlagsOnlyNearTransitions) {
  const double duration = 120.0;
  const auto env = MagEnvironment::indoor(duration, 11);
  QsmfTracker tracker{QsmfConfig{}};
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 0.5);
  const double window = tracker.config().window;
  for (int k = 0; k < static_cast<int>(duration * 50.0); ++k) {
    const double t = k / 50.0;
    tracker.push({t, env.field_at(t) + Vec3(n(rng), n(rng), n(rng))}, Attitude::identity());
    // a full window after a transition ends the field must be accepted again
    bool near_transition = t < window + 0.1;
    for (const auto& s : env.segments) {
      if (t >= s.start && t <= s.start + env.transition_duration + window + 0.1) near_transition = true;
    }
    if (!near_transition) ASSERT_TRUE(tracker.detected()) << t;
  }
}

TEST(Qsmf, TrackerCalibratesReference) {
  QsmfTracker tracker{QsmfConfig{}};
  const Attitude att = Attitude::from_euler(0.1, -0.2, 0.7);
  const Vec3 m_n(18.0, 2.0, 45.0);
  for (int k = 0; k < 100; ++k) tracker.push({k / 50.0, att.to_body(m_n)}, att);
  ASSERT_TRUE(tracker.state().active);
  EXPECT_LT((tracker.state().m_n_ref - m_n).norm(), 1e-12);
  EXPECT_EQ(tracker.state().period_index, 1);
  tracker.push({2.0, Vec3(0.0, 0.0, 90.0)}, att);  // jump
  EXPECT_FALSE(tracker.state().active);
}

TEST(Lmf, ProjectsIntoNavigationFrame) {
  const Attitude att = Attitude::from_euler(0.0, 0.0, kPi / 2.0);
  EXPECT_LT((calibrate_lmf(att, Vec3(1.0, 0.0, 0.0)) - Vec3(0.0, 1.0, 0.0)).norm(), 1e-15);
}

TEST(PseudoPosition, TunerInflatesToExcursion) {
  PseudoPositionTuner tuner{{1.0, 10.0}};
  tuner.push(0.0, Vec3(0.2, 0.0, 0.0));
  EXPECT_DOUBLE_EQ(tuner.variance().x(), 1.0);
  tuner.push(1.0, Vec3(20.0, -3.0, 0.0));
  EXPECT_GE(tuner.variance().x(), 400.0);
  EXPECT_DOUBLE_EQ(tuner.variance().y(), 9.0);
  tuner.push(20.0, Vec3::Zero());
  EXPECT_DOUBLE_EQ(tuner.variance().x(), 1.0);
}

TEST(PseudoPosition, InnovationIsOffsetFromReference) {
  NavState nav;
  nav.pos = {0.9, 0.1, 50.0};
  const GeoPosition ref = displace(nav.pos, Vec3(-5.0, 0.0, 0.0));
  const auto p = pseudo_position_packet(nav, ref, Vec3::Ones());
  EXPECT_LT((p.z - Eigen::Vector3d(5.0, 0.0, 0.0)).norm(), 1e-6);
  EXPECT_TRUE(p.consistent());
  EXPECT_DOUBLE_EQ(p.H(0, idx::kPos), 1.0);
}

TEST(AccelPacket, MatchesFirstOrderAttitudeError) {
  const double g = kG;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    NavState truth;
    truth.att = Attitude::from_euler(0.5 * n(rng), 0.5 * n(rng), n(rng));
    const Vec3 f_b = truth.att.to_body(Vec3(0.0, 0.0, -g));
    const Vec3 psi = Vec3(n(rng), n(rng), n(rng)) * 1e-4;
    NavState est = truth;
    est.att = inject_attitude_error(truth.att, psi);
    const auto p = accel_packet(est, f_b, 0.01, g);
    EXPECT_LT((p.z - p.H * [&] {
                 StateVec x = StateVec::Zero();
                 x.segment<3>(idx::kAtt) = psi;
                 return x;
               }()).norm(),
              1e-6 * g);
    // heading is unobservable from gravity
    EXPECT_LT(p.H.col(idx::kAtt + 2).norm(), 1e-15);
  }
}

TEST(AccelPacket, VerticalDeviceStaysFinite) {
  NavState nav;
  nav.att = Attitude::from_euler(0.0, kPi / 2.0, 0.3);
  const auto p = accel_packet(nav, nav.att.to_body(Vec3(0.0, 0.0, -kG)), 0.01, kG);
  EXPECT_TRUE(p.consistent());
  EXPECT_LT(p.z.norm(), 1e-12);
}

TEST(MagPacket, HeadingErrorAndInactiveReference) {
  QsmfState q;
  NavState nav;
  EXPECT_FALSE(mag_packet(nav, Vec3(20.0, 0.0, 40.0), q, 1.0).has_value());
  q.active = true;
  q.m_n_ref = Vec3(20.0, 0.0, 40.0);
  nav.att = inject_attitude_error(Attitude::identity(), Vec3(0.0, 0.0, 1e-3));
  const auto p = mag_packet(nav, q.m_n_ref, q, 1.0);
  ASSERT_TRUE(p.has_value());
  // 1 mrad heading error on a 20 uT horizontal field
  EXPECT_NEAR(p->z.norm(), 0.02, 1e-6);
  StateVec x = StateVec::Zero();
  x(idx::kAtt + 2) = 1e-3;
  EXPECT_LT((p->z - p->H * x).norm(), 0.5 * 1e-6 * 20.0 + 1e-9);  // second order
  // purely vertical reference carries no heading information
  q.m_n_ref = Vec3(0.0, 0.0, 50.0);
  EXPECT_LT(mag_packet(nav, q.m_n_ref, q, 1.0)->H.col(idx::kAtt + 2).norm(), 1e-15);
}

TEST(MagPacket, BuiltWithoutAccelerometerInput) {
  static_assert(std::is_invocable_r_v<std::optional<MeasurementPacket>, decltype(&mag_packet), const NavState&,
                                      const Vec3&, const QsmfState&, double>);
  SUCCEED();
}

TEST(QsauPacket, ObservesGyroBiasDirectly) {
  const auto p = qsau_packet(Vec3(1e-3, 2e-3, 3e-3), 1e-4);
  EXPECT_TRUE(p.consistent());
  EXPECT_TRUE((p.H.block<3, 3>(0, idx::kGyroBias).isIdentity()));
  EXPECT_DOUBLE_EQ(p.R(0, 0), 1e-8);
  EXPECT_DOUBLE_EQ(p.z(2), 3e-3);
}

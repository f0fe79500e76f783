#include "gyrocal/mechanization.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gyrocal;

namespace {

MechanizationConfig no_earth() {
  MechanizationConfig c;
  c.earth_rate = false;
  c.transport_rate = false;
  return c;
}

NavState level_state() {
  NavState s;
  s.pos = {51.0 * kDegToRad, -114.0 * kDegToRad, 1100.0};
  return s;
}

}  // namespace

TEST(Mechanization, NinetyDegreeTurnInOneSecond) {
  NavState s = level_state();
  const auto cfg = no_earth();
  const InertialReading r{Vec3(0.0, 0.0, 90.0 * kDegToRad), -gravity_n(s.pos)};
  for (int k = 0; k < 100; ++k) s = ins_step(s, r, 0.01, cfg);
  EXPECT_NEAR(s.att.euler().z() * kRadToDeg, 90.0, 0.01);
  EXPECT_NEAR(s.att.euler().x(), 0.0, 1e-12);
  EXPECT_NEAR(s.att.euler().y(), 0.0, 1e-12);
}

TEST(Mechanization, LevelAtRestStaysPut) {
  NavState s = level_state();
  s.att = Attitude::from_euler(0.1, -0.2, 1.0);
  const auto cfg = no_earth();
  const NavState s0 = s;
  const InertialReading r{Vec3::Zero(), s.att.to_body(-gravity_n(s.pos))};
  for (int k = 0; k < 5000; ++k) s = ins_step(s, r, 0.02, cfg);
  EXPECT_LT(s.vel.norm(), 1e-9);
  EXPECT_LT(ned_offset(s0.pos, s.pos).norm(), 1e-6);
  EXPECT_LT(s.att.angle_to(s0.att), 1e-12);
}

TEST(Mechanization, EarthRateOnlyHoldsAttitude) {
  NavState s = level_state();
  s.att = Attitude::from_euler(0.0, 0.3, -0.5);
  const MechanizationConfig cfg;
  const NavState s0 = s;
  const InertialReading r{s.att.to_body(earth_rate_n(s.pos.latitude)), s.att.to_body(-gravity_n(s.pos))};
  for (int k = 0; k < 3000; ++k) s = ins_step(s, r, 0.02, cfg);
  EXPECT_LT(s.att.angle_to(s0.att), 1e-10);
  // Coriolis only acts on nonzero velocity
  EXPECT_LT(s.vel.norm(), 1e-9);
}

TEST(Mechanization, FreeFall) {
  NavState s = level_state();
  const auto cfg = no_earth();
  const double g = gravity_n(s.pos).z();
  for (int k = 0; k < 100; ++k) s = ins_step(s, {}, 0.01, cfg);
  // gravity grows slightly while falling
  EXPECT_NEAR(s.vel.z(), g, 1e-5);
  EXPECT_NEAR(ned_offset(level_state().pos, s.pos).z(), 0.5 * g, 1e-5);
}

TEST(Mechanization, ReadingBetweenIsExactInverse) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  const MechanizationConfig cfg;
  for (int i = 0; i < 100; ++i) {
    NavState from = level_state();
    from.vel = Vec3(n(rng), n(rng), 0.1 * n(rng));
    from.att = Attitude::from_euler(n(rng), 0.5 * n(rng), n(rng));
    NavState to = from;
    to.vel += Vec3(n(rng), n(rng), n(rng)) * 0.1;
    to.att = Attitude(from.att.quaternion() * quat_from_rotvec(0.05 * Vec3(n(rng), n(rng), n(rng))));
    const double dt = 0.02;
    const auto r = reading_between(from, to, dt, cfg);
    const NavState back = ins_step(from, r, dt, cfg);
    EXPECT_LT(back.att.angle_to(to.att), 1e-12);
    EXPECT_LT((back.vel - to.vel).norm(), 1e-11);
  }
}

TEST(Mechanization, RejectsBadInterval) {
  const NavState s = level_state();
  EXPECT_THROW(ins_step(s, {}, 0.0, {}), MalformedStream);
  EXPECT_THROW(ins_step(s, {}, -0.01, {}), MalformedStream);
  EXPECT_THROW(ins_step(s, {}, 0.2, {}), MalformedStream);
  EXPECT_NO_THROW(ins_step(s, {}, 0.1, {}));
}

TEST(Mechanization, TrapezoidPosition) {
  const GeoPosition p = level_state().pos;
  const GeoPosition q = integrate_position(p, Vec3(1.0, 0.0, 0.0), Vec3(3.0, 2.0, 0.0), 1.0);
  const Vec3 d = ned_offset(p, q);
  EXPECT_NEAR(d.x(), 2.0, 1e-6);
  EXPECT_NEAR(d.y(), 1.0, 1e-6);
}

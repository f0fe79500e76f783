#include "gyrocal/alignment.hpp"
#include "gyrocal/config.hpp"
#include "gyrocal/report.hpp"
#include "support/oracles.hpp"

#include <fmt/format.h>

#include <chrono>
#include <functional>
#include <map>

using namespace gyrocal;

namespace {

struct Verdict {
  bool pass{true};
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const Verdict& v) {
  fmt::print("{} {} {}: {}\n", v.pass ? "PASS" : "FAIL", id, title, v.detail);
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

struct RunResult {
  CalibrationReport report;
  double seconds{0.0};
  double qsmf_coverage{0.0};
};

PipelineConfig scenario_config(MotionMode mode, Environment env, std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.sim.motion = mode;
  cfg.sim.environment = env;
  cfg.sim.seed = seed;
  cfg.filter.health_checks = true;
  return cfg;
}

RunResult timed_run(const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.report = run_pipeline(cfg);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t on = 0;
  for (const auto& e : r.report.series) on += e.qsmf ? 1 : 0;
  r.qsmf_coverage = r.report.series.empty() ? 0.0 : double(on) / double(r.report.series.size());
  return r;
}

double max_rms_dps(const Metrics& m) {
  double worst = 0.0;
  for (const auto& a : m.axes) worst = std::max(worst, a.rms_error * kRadToDeg);
  return worst;
}

double mean_rms_dps(const Metrics& m) {
  return (m.axes[0].rms_error + m.axes[1].rms_error + m.axes[2].rms_error) / 3.0 * kRadToDeg;
}

double max_convergence(const Metrics& m) {
  double worst = 0.0;
  for (const auto& a : m.axes) worst = std::max(worst, a.convergence_time.value_or(1e9));
  return worst;
}

using RunTable = std::map<std::pair<MotionMode, std::uint64_t>, RunResult>;

RunTable run_modes(Environment env, std::uint64_t first_seed, std::uint64_t seeds) {
  RunTable out;
  for (auto mode : kWalkingModes) {
    for (std::uint64_t s = first_seed; s < first_seed + seeds; ++s) {
      out.emplace(std::make_pair(mode, s), timed_run(scenario_config(mode, env, s)));
    }
  }
  return out;
}

// Convergence, accuracy and runtime over a table of runs.
Verdict convergence_verdict(const RunTable& runs, double conv_limit, const std::function<double(MotionMode)>& rms_limit,
                            bool check_runtime, bool check_coverage) {
  Verdict v;
  double worst_conv = 0.0;
  double worst_rms = 0.0;
  double worst_time = 0.0;
  double cov_lo = 1.0;
  double cov_hi = 0.0;
  for (const auto& [key, r] : runs) {
    const auto& [mode, seed] = key;
    const auto label = fmt::format("{}/seed{}", to_string(mode), seed);
    if (!r.report.metrics) {
      v.pass = false;
      v.detail += label + " no reference; ";
      continue;
    }
    const auto& m = *r.report.metrics;
    const double conv = max_convergence(m);
    const double rms = max_rms_dps(m);
    worst_conv = std::max(worst_conv, conv);
    worst_rms = std::max(worst_rms, rms);
    worst_time = std::max(worst_time, r.seconds);
    cov_lo = std::min(cov_lo, r.qsmf_coverage);
    cov_hi = std::max(cov_hi, r.qsmf_coverage);
    if (!m.converged() || conv >= conv_limit) {
      v.pass = false;
      v.detail += fmt::format("{} convergence {:.1f}s; ", label, conv);
    }
    if (rms > rms_limit(mode)) {
      v.pass = false;
      v.detail += fmt::format("{} rms {:.4f} dps; ", label, rms);
    }
    if (check_runtime && r.seconds >= 10.0) {
      v.pass = false;
      v.detail += fmt::format("{} runtime {:.2f}s; ", label, r.seconds);
    }
    if (check_coverage && (r.qsmf_coverage < 0.3 || r.qsmf_coverage > 0.7)) {
      v.pass = false;
      v.detail += fmt::format("{} qsmf coverage {:.2f}; ", label, r.qsmf_coverage);
    }
  }
  v.detail += fmt::format("{} runs, worst convergence {:.1f}s, worst rms {:.4f} dps, slowest run {:.2f}s", runs.size(),
                          worst_conv, worst_rms, worst_time);
  if (check_coverage) v.detail += fmt::format(", qsmf coverage {:.2f}..{:.2f}", cov_lo, cov_hi);
  return v;
}

Verdict health_verdict(const std::vector<const RunTable*>& tables) {
  Verdict v;
  std::size_t runs = 0;
  std::size_t predicts = 0;
  for (const auto* t : tables) {
    for (const auto& [key, r] : *t) {
      const auto& h = r.report.health;
      ++runs;
      predicts += h.predicts;
      if (!h.healthy()) {
        v.pass = false;
        v.detail += fmt::format("{}/seed{} asym {} indefinite {} nonzero-x {}; ", to_string(key.first), key.second,
                                h.asymmetric_steps, h.indefinite_steps, h.nonzero_state_predicts);
      }
    }
  }
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const StateMat P0 = oracle::random_spd(rng);
    const int m = 1 + i % 6;
    ObservationMat H(m, kStateDim);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < kStateDim; ++c) H(r, c) = n(rng);
    Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(m, m, [&] { return n(rng); });
    const Eigen::MatrixXd R = A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd z = Eigen::VectorXd::NullaryExpr(m, [&] { return n(rng); });
    StateVec x = StateVec::Zero();
    StateMat P = P0;
    update(x, P, H, R, z);
    worst = std::max(worst, (P - oracle::standard_update(P0, H, R)).cwiseAbs().maxCoeff());
  }
  if (worst > 1e-10) v.pass = false;
  v.detail += fmt::format("{} runs / {} predicts healthy; Joseph vs standard max diff {:.2e} over 1000 SPD instances",
                          runs, predicts, worst);
  return v;
}

Verdict a3_vertical_observability() {
  const auto run = [](bool with_mag) {
    PipelineConfig cfg;
    cfg.sim.motion = MotionMode::Handheld;
    cfg.sim.tail = 0.0;  // walking throughout: no stationary update can see the z bias
    cfg.sim.seed = 31;
    cfg.mag_enabled = with_mag;
    cfg.sim.with_mag = with_mag;
    ScenarioConfig sc = cfg.sim.scenario(cfg.filter.noise, cfg.filter.mech, cfg.start);
    sc.profile.mount = Vec3::Zero();  // device level, body z along the vertical
    SensorStream stream = corrupt(generate_truth(sc), sc.errors, sc.noise, sc.seed);
    if (!with_mag) stream.mag.clear();
    return run_pipeline(cfg, stream, sc.errors.gyro_bias);
  };
  const auto with = run(true);
  const auto without = run(false);

  const auto z_rms = [](const CalibrationReport& r) {
    const double ref = r.reference->z();
    double ss = 0.0;
    for (const auto& e : r.series) ss += std::pow(e.gyro_bias.z() - ref, 2);
    return std::sqrt(ss / double(r.series.size())) * kRadToDeg;
  };
  const auto p_zz_at = [](const CalibrationReport& r, double t) {
    const auto it = std::min_element(r.series.begin(), r.series.end(), [t](const auto& a, const auto& b) {
      return std::abs(a.t - t) < std::abs(b.t - t);
    });
    return std::pow(it->gyro_bias_sigma.z(), 2);
  };
  const double rms_ratio = z_rms(without) / z_rms(with);
  const double p_ratio = p_zz_at(without, 100.0) / p_zz_at(with, 100.0);
  Verdict v;
  v.pass = rms_ratio >= 3.0 && p_ratio >= 5.0;
  v.detail = fmt::format("z rms {:.4f} (mag) vs {:.4f} dps (no mag), ratio {:.1f}; P(11,11) at 100 s ratio {:.1f}",
                         z_rms(with), z_rms(without), rms_ratio, p_ratio);
  return v;
}

Verdict a4_mode_ordering(const RunTable& first, Environment env) {
  RunTable runs = first;
  for (auto mode : {MotionMode::Handheld, MotionMode::Dangling, MotionMode::Pocket}) {
    for (std::uint64_t s = 6; s <= 10; ++s) runs.emplace(std::make_pair(mode, s), timed_run(scenario_config(mode, env, s)));
  }
  const auto mean_over_seeds = [&](MotionMode mode) {
    double sum = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) sum += mean_rms_dps(*runs.at({mode, s}).report.metrics);
    return sum / 10.0;
  };
  const double hand = mean_over_seeds(MotionMode::Handheld);
  const double dang = mean_over_seeds(MotionMode::Dangling);
  const double pock = mean_over_seeds(MotionMode::Pocket);
  Verdict v;
  v.pass = dang >= hand && pock >= hand;
  v.detail = fmt::format("{}: mean rms handheld {:.4f}, dangling {:.4f}, pocket {:.4f} dps", to_string(env), hand, dang,
                         pock);
  return v;
}

Verdict a5_linearization() {
  std::mt19937_64 rng(505);
  const GaussMarkovSet gm;
  const MechanizationConfig mech;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto c = oracle::random_fd_case(rng);
    worst = std::max(worst, oracle::max_column_relative_error(oracle::fd_transition(c, 0.02, gm, mech),
                                                              oracle::model_transition(c, 0.02, gm, mech)));
  }
  return {worst < 1e-4, fmt::format("100 states x 21 directions, worst column relative error {:.2e} (|w| up to {} rad/s)",
                                    worst, oracle::kMaxFdRate)};
}

Verdict a7_simulator() {
  Verdict v;
  double worst_pos = 0.0;
  double worst_att = 0.0;
  for (auto mode : kWalkingModes) {
    ScenarioConfig sc;
    sc.profile = MotionProfile::preset(mode);
    sc.duration = 60.0;
    sc.tail = 0.0;
    const auto truth = generate_truth(sc);
    NavState nav = truth.front().nav;
    for (std::size_t k = 1; k < truth.size(); ++k) {
      nav = ins_step(nav, truth[k].reading, truth[k].t - truth[k - 1].t, sc.mech);
      worst_pos = std::max(worst_pos, ned_offset(truth[k].nav.pos, nav.pos).norm());
      worst_att = std::max(worst_att, nav.att.angle_to(truth[k].nav.att));
    }
  }
  v.pass = worst_pos < 1e-3 && worst_att < 1e-4;
  v.detail = fmt::format("6 modes x 60 s, worst position {:.2e} m, attitude {:.2e} rad", worst_pos, worst_att);
  return v;
}

Verdict a8_alignment() {
  std::mt19937_64 rng(808);
  const Vec3 m_n(16.5, 3.2, 52.0);
  const Vec3 f_n(0.0, 0.0, -9.80665);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Attitude truth = oracle::random_attitude(rng);
    const Attitude est = initial_dcm({truth.to_body(f_n), truth.to_body(m_n), f_n, m_n});
    worst = std::max(worst, est.angle_to(truth));
  }
  bool raised = false;
  try {
    initial_dcm({Vec3(0.0, 0.0, -9.8), Vec3(0.0, 0.0, 50.0), f_n, m_n});
  } catch (const AlignmentError& e) {
    raised = e.kind() == AlignmentError::Kind::DegenerateTriad;
  }
  return {worst < 1e-9 && raised,
          fmt::format("1000 attitudes, worst error {:.2e} rad; f||m raises DegenerateTriad: {}", worst, raised)};
}

Verdict a9_gauss_markov() {
  // 10k independent chains started at zero and run for 20 correlation times
  const GaussMarkovSet gm;
  const std::pair<const char*, GaussMarkovSpec> specs[] = {{"gyro_bias", gm.gyro_bias},
                                                           {"accel_bias", gm.accel_bias},
                                                           {"gyro_scale", gm.gyro_scale},
                                                           {"accel_scale", gm.accel_scale}};
  std::mt19937_64 rng(909);
  std::normal_distribution<double> n01;
  Verdict v;
  for (const auto& [name, spec] : specs) {
    const auto d = gm_discretize(spec, spec.correlation_time / 50.0);
    const double sd = std::sqrt(d.variance);
    double ss = 0.0;
    const int samples = 10000;
    for (int i = 0; i < samples; ++i) {
      double x = 0.0;
      for (int k = 0; k < 1000; ++k) x = d.phi * x + sd * n01(rng);
      ss += x * x;
    }
    const double ratio = ss / samples / (spec.stationary_sigma * spec.stationary_sigma);
    if (std::abs(ratio - 1.0) > 0.03) v.pass = false;
    v.detail += fmt::format("{} {:.4f} ", name, ratio);
  }
  v.detail += "(variance / sigma^2)";
  return v;
}

Verdict a10_qsau_equivalence() {
  PipelineConfig cfg;
  cfg.sim.motion = MotionMode::Static;
  cfg.sim.duration = 60.0;
  cfg.sim.tail = 0.0;
  cfg.sim.seed = 10;
  cfg.filter.mech.earth_rate = false;
  cfg.filter.mech.transport_rate = false;
  const SensorStream stream = simulate_stream(cfg);
  const auto r = run_pipeline(cfg, stream, cfg.sim.injected.gyro_bias);

  Vec3 mean = Vec3::Zero();
  for (const auto& s : stream.imu) mean += s.gyro;
  mean /= double(stream.imu.size());
  const double sigma_mean = cfg.filter.noise.gyro_sample_sigma() / std::sqrt(double(stream.imu.size()));
  const Vec3 diff = r.final_estimate.gyro_bias - mean;
  Verdict v;
  v.pass = diff.cwiseAbs().maxCoeff() <= 2.0 * sigma_mean;
  v.detail = fmt::format("|b_hat - mean| = {:.5f},{:.5f},{:.5f} dps vs 2 sigma {:.5f} dps ({} qsau updates)",
                         std::abs(diff.x()) * kRadToDeg, std::abs(diff.y()) * kRadToDeg, std::abs(diff.z()) * kRadToDeg,
                         2.0 * sigma_mean * kRadToDeg, r.packets.qsau);
  return v;
}

}  // namespace

int main() {
  const RunTable outdoor = run_modes(Environment::Outdoor, 1, 5);
  report("A1", "outdoor convergence",
         convergence_verdict(outdoor, 60.0, [](MotionMode) { return 0.15; }, true, false));

  const RunTable indoor = run_modes(Environment::Indoor, 1, 5);
  report("A2", "indoor convergence",
         convergence_verdict(
             indoor, 110.0,
             [](MotionMode m) { return m == MotionMode::Dangling || m == MotionMode::Pocket ? 0.3 : 0.25; }, true,
             true));

  report("A3", "vertical gyro observability", a3_vertical_observability());

  Verdict a4 = a4_mode_ordering(outdoor, Environment::Outdoor);
  const Verdict a4_indoor = a4_mode_ordering(indoor, Environment::Indoor);
  a4.pass = a4.pass && a4_indoor.pass;
  a4.detail += "; " + a4_indoor.detail;
  report("A4", "motion-mode ordering", a4);

  report("A5", "linearization", a5_linearization());
  report("A6", "filter health", health_verdict({&outdoor, &indoor}));
  report("A7", "simulator self-consistency", a7_simulator());
  report("A8", "alignment", a8_alignment());
  report("A9", "Gauss-Markov statistics", a9_gauss_markov());
  report("A10", "QSAU oracle equivalence", a10_qsau_equivalence());

  fmt::print("{} of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

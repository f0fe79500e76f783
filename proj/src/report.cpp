#include "gyrocal/report.hpp"

#include "gyrocal/alignment.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gyrocal {

namespace {

struct Schedule {
  double period{1.0};
  double last{0.0};

  bool due(double t, double half_dt) const { return t - last >= period - half_dt; }
};

void validate_stream(const SensorStream& s) {
  if (s.imu.size() < 2) throw MalformedStream("stream needs at least two samples");
  for (std::size_t i = 0; i < s.imu.size(); ++i) {
    const auto& x = s.imu[i];
    if (!std::isfinite(x.t) || !x.gyro.allFinite() || !x.accel.allFinite()) {
      throw MalformedStream(fmt::format("sample {} is not finite", i));
    }
    if (i > 0 && !(x.t > s.imu[i - 1].t)) throw MalformedStream(fmt::format("timestamps not increasing at {}", i));
  }
  if (s.mag.empty()) return;
  if (s.mag.size() != s.imu.size()) throw MalformedStream("magnetometer stream length differs from inertial stream");
  for (std::size_t i = 0; i < s.mag.size(); ++i) {
    if (!s.mag[i].valid() || s.mag[i].t != s.imu[i].t) {
      throw MalformedStream(fmt::format("magnetometer sample {} invalid or misaligned", i));
    }
  }
}

struct AlignmentResult {
  std::size_t start{0};
  Attitude att;
  AlignmentMethod method{AlignmentMethod::Leveling};
  double heading_sigma{kUnknownHeadingSigma};
};

AlignmentResult align(const PipelineConfig& cfg, const SensorStream& s, bool use_mag, double g) {
  std::size_t begin = 0;
  while (begin < s.imu.size()) {
    std::size_t end = begin + 1;
    while (end < s.imu.size() && s.imu[end].t - s.imu[begin].t < cfg.align_window) ++end;
    if (end >= s.imu.size()) break;

    Vec3 f = Vec3::Zero();
    Vec3 m = Vec3::Zero();
    for (std::size_t i = begin; i < end; ++i) {
      f += s.imu[i].accel;
      if (use_mag) m += s.mag[i].field;
    }
    const double n = static_cast<double>(end - begin);
    f /= n;
    m /= n;

    if (use_mag) {
      QsmfConfig qc = cfg.qsmf;
      qc.window = cfg.align_window;
      const std::span<const MagSample> window(s.mag.data() + begin, end - begin);
      if (detect_qsmf(window, qc)) {
        try {
          const AlignmentInputs in{f, m, Vec3(0.0, 0.0, -g), reference_field_from_dip(f, m)};
          return {begin, initial_dcm(in), AlignmentMethod::TwoVector, cfg.filter.initial.heading};
        } catch (const AlignmentError&) {
          // degenerate geometry: fall through to leveling
        }
      }
    }
    try {
      return {begin, leveling_fallback(f, g), AlignmentMethod::Leveling, kUnknownHeadingSigma};
    } catch (const AlignmentError&) {
      begin = end;
    }
  }
  throw MalformedStream("no window in the stream is usable for initial alignment");
}

std::string vec_dps(const Vec3& v) {
  const Vec3 d = v * kRadToDeg;
  return fmt::format("{:.6f},{:.6f},{:.6f}", d.x(), d.y(), d.z());
}

std::string fixed6(double v) { return std::isfinite(v) ? fmt::format("{:.6f}", v) : std::string("nan"); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

double parse_cell(std::string_view s, const std::filesystem::path& path) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(fmt::format("{}: bad number '{}'", path.string(), s));
  }
  return v;
}

}  // namespace

bool Metrics::converged() const {
  return std::all_of(axes.begin(), axes.end(), [](const AxisMetrics& a) { return a.convergence_time.has_value(); });
}

Metrics compute_metrics(std::span<const EpochRecord> series, const Vec3& reference, double threshold) {
  if (series.empty()) throw std::invalid_argument("empty estimate series");
  Metrics out;
  const std::size_t n = series.size();
  for (int axis = 0; axis < 3; ++axis) {
    std::size_t first_good = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!(std::abs(series[k].gyro_bias[axis] - reference[axis]) < threshold)) first_good = k + 1;
    }
    AxisMetrics& m = out.axes[axis];
    std::size_t from = first_good;
    if (first_good < n) {
      m.convergence_time = series[first_good].t;
    } else {
      from = std::min(n - 1, static_cast<std::size_t>(std::floor(0.75 * static_cast<double>(n))));
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t k = from; k < n; ++k) {
      const double e = series[k].gyro_bias[axis] - reference[axis];
      sum += e;
      sum_sq += e * e;
    }
    const double count = static_cast<double>(n - from);
    m.mean_error = sum / count;
    m.rms_error = std::sqrt(sum_sq / count);
  }
  return out;
}

SensorStream simulate_stream(const PipelineConfig& cfg) {
  const ScenarioConfig sc = cfg.sim.scenario(cfg.filter.noise, cfg.filter.mech, cfg.start);
  const auto truth = generate_truth(sc);
  SensorStream stream = corrupt(truth, sc.errors, sc.noise, sc.seed);
  if (!cfg.sim.with_mag) stream.mag.clear();
  return stream;
}

CalibrationReport run_pipeline(const PipelineConfig& cfg) { return run_pipeline(cfg, simulate_stream(cfg)); }

CalibrationReport run_pipeline(const PipelineConfig& cfg, const SensorStream& stream, std::optional<Vec3> reference) {
  cfg.validate();
  validate_stream(stream);

  CalibrationReport report;
  report.samples = stream.imu.size();
  report.start_time = stream.imu.front().t;
  report.duration = stream.imu.back().t - stream.imu.front().t;
  report.mag_available = !stream.mag.empty();
  report.mag_used = report.mag_available && cfg.mag_enabled;

  const MechanizationConfig& mech = cfg.filter.mech;
  const double g = gravity_magnitude(cfg.start.latitude, cfg.start.height);

  const AlignmentResult al = align(cfg, stream, report.mag_used, g);
  report.alignment = al.method;

  FilterConfig fc = cfg.filter;
  fc.initial.heading = al.heading_sigma;
  Eskf filter(fc);
  filter.reset(fc.initial.covariance());

  NavState nav{cfg.start, Vec3::Zero(), al.att};
  SensorErrors errors;
  report.published.bias_sigma_max = cfg.publish_sigma;

  QuasiStaticDetector qs_detector(cfg.quasi_static);
  QsmfTracker qsmf(cfg.qsmf);
  PseudoPositionTuner pp_tuner(cfg.pseudo_position);
  const GeoPosition r_ref = cfg.start;

  const double t0 = stream.imu.front().t;
  const double t_start = stream.imu[al.start].t;
  const double epoch_period = 1.0 / cfg.rates.fastest();
  Schedule epoch{epoch_period, t_start};
  Schedule pp_sched{1.0 / cfg.rates.pseudo_position, t_start};
  Schedule pv_sched{1.0 / cfg.rates.pseudo_velocity, t_start};
  Schedule accel_sched{1.0 / cfg.rates.accel, t_start};
  Schedule mag_sched{1.0 / cfg.rates.mag, t_start};
  Schedule qsau_sched{1.0 / cfg.rates.qsau, t_start};

  Vec3 f_sum = Vec3::Zero();
  int f_count = 0;
  Vec3 w_sum = Vec3::Zero();
  int w_count = 0;
  AccelMode last_mode = AccelMode::NonAcceleration;

  qs_detector.push(stream.imu[al.start]);
  if (report.mag_used) qsmf.push(stream.mag[al.start], nav.att);

  const auto apply = [&](const MeasurementPacket& p, std::size_t& counter) {
    if (filter.update(p).accepted) {
      ++counter;
      return true;
    }
    return false;
  };

  for (std::size_t k = al.start + 1; k < stream.imu.size(); ++k) {
    const ImuSample& s = stream.imu[k];
    const double dt = s.t - stream.imu[k - 1].t;
    const auto corrected = correct_measurements({s.gyro, s.accel}, errors);
    if (!corrected) throw std::logic_error("sensor error estimate became invalid");

    const NavState prev = nav;
    nav = ins_step(nav, *corrected, dt, mech);
    const NavState mid = interval_midpoint(prev, nav);
    filter.predict({mid, *corrected, errors}, dt);

    f_sum += mid.att.to_nav(corrected->accel);
    ++f_count;
    w_sum += corrected->gyro - nav.att.to_body(mech.earth_rate_at(nav.pos));
    ++w_count;
    qs_detector.push(s);
    if (report.mag_used) qsmf.push(stream.mag[k], nav.att);

    const double half_dt = 0.5 * dt;
    if (!epoch.due(s.t, half_dt)) continue;
    epoch.last = s.t;

    EpochRecord rec;
    rec.t = s.t - t0;

    if (pp_sched.due(s.t, half_dt)) {
      pp_sched.last = s.t;
      pp_tuner.push(s.t, ned_offset(r_ref, nav.pos));
      rec.pseudo_position_update =
          apply(pseudo_position_packet(nav, r_ref, pp_tuner.variance()), report.packets.pseudo_position);
    }
    if (cfg.pseudo_velocity && pv_sched.due(s.t, half_dt)) {
      pv_sched.last = s.t;
      apply(pseudo_velocity_packet(nav, cfg.pseudo_velocity_sigma), report.packets.pseudo_velocity);
    }
    if (accel_sched.due(s.t, half_dt)) {
      accel_sched.last = s.t;
      const Vec3 f_b = cfg.accel_interval_average ? nav.att.to_body(f_sum / f_count) : corrected->accel;
      const StateMat& P = filter.covariance();
      const double att_trace = P.block<3, 3>(idx::kAtt, idx::kAtt).trace();
      const AccelModeResult mode = acceleration_mode(f_b, g, cfg.accel, att_trace);
      last_mode = mode.mode;
      rec.accel_update = apply(accel_packet(nav, f_b, mode.variance, g), report.packets.accel);
      f_sum.setZero();
      f_count = 0;
    }
    rec.accel_mode = last_mode;

    rec.qsmf = report.mag_used && qsmf.state().active;
    if (rec.qsmf && mag_sched.due(s.t, half_dt)) {
      mag_sched.last = s.t;
      if (const auto p = mag_packet(nav, stream.mag[k].field, qsmf.state(), cfg.mag_sigma)) {
        rec.mag_update = apply(*p, report.packets.mag);
      }
    }

    const StateMat& P = filter.covariance();
    const double bias_sigma = std::sqrt(P.block<3, 3>(idx::kGyroBias, idx::kGyroBias).trace());
    rec.quasi_static = qs_detector.evaluate(g, BiasPrior{errors.gyro_bias, bias_sigma});
    if (qsau_sched.due(s.t, half_dt)) {
      qsau_sched.last = s.t;
      if (rec.quasi_static && w_count > 0) {
        const double sample_sigma = cfg.filter.noise.gyro_sample_sigma();
        const double sigma =
            std::sqrt(sample_sigma * sample_sigma / w_count + cfg.qs_sigma_floor * cfg.qs_sigma_floor);
        rec.qsau_update = apply(qsau_packet(w_sum / w_count, sigma), report.packets.qsau);
      }
      w_sum.setZero();
      w_count = 0;
    }

    filter.feedback(nav, errors);
    report.published.evaluate(errors, filter.covariance());

    rec.gyro_bias = errors.gyro_bias;
    rec.gyro_bias_sigma = filter.covariance().diagonal().segment<3>(idx::kGyroBias).cwiseSqrt();
    report.series.push_back(rec);
  }

  report.final_estimate = errors;
  report.health = filter.health();

  if (reference) {
    report.reference = reference;
    report.reference_note = "supplied";
  } else {
    try {
      report.reference = reference_bias(stream.imu, cfg.reference_window, g, cfg.quasi_static);
      report.reference_note = fmt::format("mean gyro over final {} s", cfg.reference_window);
    } catch (const ReferenceUnavailable& e) {
      report.reference_note = fmt::format("unavailable: {}", e.what());
    }
  }
  if (report.reference && !report.series.empty()) {
    report.metrics = compute_metrics(report.series, *report.reference, cfg.conv_threshold);
  }
  return report;
}

std::string format_report(const CalibrationReport& r) {
  std::string out;
  const auto line = [&out](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  const auto yes = [](bool b) { return std::string(b ? "true" : "false"); };

  line("samples", fmt::format("{}", r.samples));
  line("duration_s", fixed6(r.duration));
  line("epochs", fmt::format("{}", r.series.size()));
  line("alignment", r.alignment == AlignmentMethod::TwoVector ? "two_vector" : "leveling");
  line("mag_available", yes(r.mag_available));
  line("mag_used", yes(r.mag_used));
  if (!r.mag_available) line("note", "no magnetometer channel; magnetometer updates disabled");

  line("reference_dps", r.reference ? vec_dps(*r.reference) : std::string("unavailable"));
  line("reference_source", r.reference_note);

  const auto& e = r.final_estimate;
  line("estimate.gyro_bias_dps", vec_dps(e.gyro_bias));
  line("estimate.gyro_scale_ppm",
       fmt::format("{:.1f},{:.1f},{:.1f}", e.gyro_scale.x() * 1e6, e.gyro_scale.y() * 1e6, e.gyro_scale.z() * 1e6));
  line("estimate.accel_bias_mps2",
       fmt::format("{:.6f},{:.6f},{:.6f}", e.accel_bias.x(), e.accel_bias.y(), e.accel_bias.z()));
  line("estimate.accel_scale_ppm", fmt::format("{:.1f},{:.1f},{:.1f}", e.accel_scale.x() * 1e6,
                                               e.accel_scale.y() * 1e6, e.accel_scale.z() * 1e6));
  if (!r.series.empty()) line("estimate.gyro_bias_sigma_dps", vec_dps(r.series.back().gyro_bias_sigma));
  line("published.gyro_bias_dps", vec_dps(r.published.gyro_bias));
  line("published.released", fmt::format("{},{},{}", yes(r.published.released[0]), yes(r.published.released[1]),
                                         yes(r.published.released[2])));

  if (r.metrics) {
    static constexpr const char* kAxis[] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) {
      const auto& m = r.metrics->axes[i];
      const std::string prefix = fmt::format("metrics.{}.", kAxis[i]);
      line(prefix + "mean_error_dps", fixed6(m.mean_error * kRadToDeg));
      line(prefix + "rms_error_dps", fixed6(m.rms_error * kRadToDeg));
      line(prefix + "convergence_time_s", m.convergence_time ? fixed6(*m.convergence_time) : "none");
      line(prefix + "converged", yes(m.convergence_time.has_value()));
    }
  }

  line("packets.pseudo_position", fmt::format("{}", r.packets.pseudo_position));
  line("packets.pseudo_velocity", fmt::format("{}", r.packets.pseudo_velocity));
  line("packets.accel", fmt::format("{}", r.packets.accel));
  line("packets.mag", fmt::format("{}", r.packets.mag));
  line("packets.qsau", fmt::format("{}", r.packets.qsau));

  line("health.predicts", fmt::format("{}", r.health.predicts));
  line("health.updates", fmt::format("{}", r.health.updates));
  line("health.rejected_updates", fmt::format("{}", r.health.rejected_updates));
  line("health.rejected_feedbacks", fmt::format("{}", r.health.rejected_feedbacks));
  line("health.healthy", yes(r.health.healthy()));
  return out;
}

void emit_plot_data(const CalibrationReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  const Vec3 ref = report.reference.value_or(Vec3::Constant(std::numeric_limits<double>::quiet_NaN())) * kRadToDeg;
  {
    auto out = open_output(dir / "convergence.csv");
    out << kConvergenceHeader << '\n';
    for (const auto& r : report.series) {
      const Vec3 b = r.gyro_bias * kRadToDeg;
      out << fixed6(r.t) << ',' << fixed6(b.x()) << ',' << fixed6(b.y()) << ',' << fixed6(b.z()) << ','
          << fixed6(ref.x()) << ',' << fixed6(ref.y()) << ',' << fixed6(ref.z()) << '\n';
    }
    if (!out) throw std::runtime_error("write to convergence.csv failed");
  }
  {
    auto out = open_output(dir / "availability.csv");
    out << kAvailabilityHeader << '\n';
    for (const auto& r : report.series) {
      out << fixed6(r.t) << ',' << int(r.qsmf) << ',' << int(r.quasi_static) << ',' << static_cast<int>(r.accel_mode)
          << '\n';
    }
    if (!out) throw std::runtime_error("write to availability.csv failed");
  }
  {
    auto out = open_output(dir / "summary.csv");
    out << kSummaryHeader << '\n';
    if (report.metrics) {
      static constexpr const char* kAxis[] = {"x", "y", "z"};
      for (int i = 0; i < 3; ++i) {
        const auto& m = report.metrics->axes[i];
        out << kAxis[i] << ',' << fixed6(m.mean_error * kRadToDeg) << ',' << fixed6(m.rms_error * kRadToDeg) << ','
            << (m.convergence_time ? fixed6(*m.convergence_time) : std::string("nan")) << ','
            << int(m.convergence_time.has_value()) << '\n';
      }
    }
    if (!out) throw std::runtime_error("write to summary.csv failed");
  }
}

std::vector<ConvergenceRow> read_convergence_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kConvergenceHeader) {
    throw std::runtime_error(fmt::format("{}: unexpected header", path.string()));
  }
  std::vector<ConvergenceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 7> v{};
    std::string_view rest = line;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto comma = rest.find(',');
      if ((i + 1 < v.size()) == (comma == std::string_view::npos)) {
        throw std::runtime_error(fmt::format("{}: expected 7 columns", path.string()));
      }
      v[i] = parse_cell(rest.substr(0, comma), path);
      if (comma != std::string_view::npos) rest = rest.substr(comma + 1);
    }
    rows.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  }
  return rows;
}

}  // namespace gyrocal

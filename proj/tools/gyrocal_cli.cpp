#include "gyrocal/report.hpp"
#include "gyrocal/selftest.hpp"
#include "gyrocal/stream_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Options {
  std::string config;
  std::string out_dir{"."};
  std::string input;
  std::string motion;
  std::string env;
  std::optional<std::uint64_t> seed;
  bool no_mag{false};
};

gyrocal::PipelineConfig build_config(const Options& o) {
  gyrocal::PipelineConfig cfg;
  if (!o.config.empty()) cfg = gyrocal::load_config(o.config);
  if (!o.motion.empty()) gyrocal::apply_config_entry(cfg, "sim.motion", o.motion);
  if (!o.env.empty()) gyrocal::apply_config_entry(cfg, "sim.env", o.env);
  if (o.seed) cfg.sim.seed = *o.seed;
  if (o.no_mag) cfg.mag_enabled = false;
  cfg.validate();
  return cfg;
}

int simulate(const Options& o) {
  const auto cfg = build_config(o);
  auto stream = gyrocal::simulate_stream(cfg);
  if (o.no_mag) stream.mag.clear();
  std::filesystem::create_directories(o.out_dir);
  const auto path = std::filesystem::path(o.out_dir) / "stream.csv";
  gyrocal::write_stream_csv(path.string(), stream);
  fmt::print("wrote {} samples to {}\n", stream.imu.size(), path.string());
  return 0;
}

int calibrate(const Options& o) {
  const auto cfg = build_config(o);
  const auto stream = o.input.empty() ? gyrocal::simulate_stream(cfg) : gyrocal::read_stream_csv(o.input);
  const auto report = gyrocal::run_pipeline(cfg, stream);
  const auto text = gyrocal::format_report(report);
  std::filesystem::create_directories(o.out_dir);
  const auto dir = std::filesystem::path(o.out_dir);
  std::ofstream(dir / "report.txt") << text;
  gyrocal::emit_plot_data(report, dir);
  std::cout << text;
  return 0;
}

int selftest(const Options& o) {
  const auto results = gyrocal::run_selftest(o.seed.value_or(1));
  bool ok = true;
  for (const auto& r : results) {
    fmt::print("{} {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online gyroscope bias and scale-factor calibration"};
  app.require_subcommand(1);

  Options o;
  const auto common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_flag("--no-mag", o.no_mag, "ignore magnetometer data");
    cmd->add_option("--motion", o.motion, "handheld|phoning|dangling|pocket|belt|backpack|static");
    cmd->add_option("--env", o.env, "outdoor|indoor");
  };

  auto* sim = app.add_subcommand("simulate", "write a simulated sensor stream CSV");
  common(sim);
  auto* cal = app.add_subcommand("calibrate", "calibrate a CSV stream or a simulated scenario");
  common(cal);
  cal->add_option("--input", o.input, "sensor CSV (t,gx,gy,gz,ax,ay,az[,mx,my,mz])")->check(CLI::ExistingFile);
  auto* st = app.add_subcommand("selftest", "run the invariant suite");
  st->add_option("--seed", o.seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return simulate(o);
    if (cal->parsed()) return calibrate(o);
    if (st->parsed()) return selftest(o);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}

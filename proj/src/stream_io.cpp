#include "gyrocal/stream_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace gyrocal {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return out;
}

double field(std::string_view s, int lineno) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw MalformedStream(fmt::format("line {}: bad number '{}'", lineno, s));
  }
  return v;
}

}  // namespace

void write_stream_csv(std::ostream& out, const SensorStream& stream) {
  const bool mag = !stream.mag.empty();
  if (mag && stream.mag.size() != stream.imu.size()) {
    throw MalformedStream("magnetometer and inertial streams differ in length");
  }
  out << (mag ? kStreamHeader : kStreamHeaderNoMag) << '\n';
  for (std::size_t i = 0; i < stream.imu.size(); ++i) {
    const auto& s = stream.imu[i];
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", s.t, s.gyro.x(), s.gyro.y(),
                       s.gyro.z(), s.accel.x(), s.accel.y(), s.accel.z());
    if (mag) {
      const auto& m = stream.mag[i].field;
      out << fmt::format(",{:.17g},{:.17g},{:.17g}", m.x(), m.y(), m.z());
    }
    out << '\n';
  }
}

void write_stream_csv(const std::string& path, const SensorStream& stream) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  write_stream_csv(out, stream);
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path));
}

SensorStream read_stream_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedStream("empty stream file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool mag = false;
  if (line == kStreamHeader) {
    mag = true;
  } else if (line != kStreamHeaderNoMag) {
    throw MalformedStream(fmt::format("unexpected header '{}'", line));
  }
  const std::size_t columns = mag ? 10 : 7;

  SensorStream out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cols = split(line);
    if (cols.size() != columns) {
      throw MalformedStream(fmt::format("line {}: expected {} columns, got {}", lineno, columns, cols.size()));
    }
    ImuSample s;
    s.t = field(cols[0], lineno);
    s.gyro = Vec3(field(cols[1], lineno), field(cols[2], lineno), field(cols[3], lineno));
    s.accel = Vec3(field(cols[4], lineno), field(cols[5], lineno), field(cols[6], lineno));
    if (!out.imu.empty() && !(s.t > out.imu.back().t)) {
      throw MalformedStream(fmt::format("line {}: timestamps must increase", lineno));
    }
    out.imu.push_back(s);
    if (mag) {
      const MagSample m{s.t, Vec3(field(cols[7], lineno), field(cols[8], lineno), field(cols[9], lineno))};
      if (!m.valid()) throw MalformedStream(fmt::format("line {}: magnetometer value out of range", lineno));
      out.mag.push_back(m);
    }
  }
  return out;
}

SensorStream read_stream_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedStream(fmt::format("cannot open '{}'", path));
  return read_stream_csv(in);
}

}  // namespace gyrocal

#pragma once

#include "gyrocal/simulator.hpp"

#include <iosfwd>
#include <string>

namespace gyrocal {

/// Header of the sensor stream CSV; the last three columns are optional.
inline constexpr const char* kStreamHeader = "t,gx,gy,gz,ax,ay,az,mx,my,mz";
inline constexpr const char* kStreamHeaderNoMag = "t,gx,gy,gz,ax,ay,az";

/// Writes with 17 significant digits so reading back is exact.
void write_stream_csv(std::ostream& out, const SensorStream& stream);
void write_stream_csv(const std::string& path, const SensorStream& stream);

/// Throws MalformedStream on a bad header, a non-numeric field, a wrong
/// column count or a non-increasing timestamp.
SensorStream read_stream_csv(std::istream& in);
SensorStream read_stream_csv(const std::string& path);

}  // namespace gyrocal

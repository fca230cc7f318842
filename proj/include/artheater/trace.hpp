#pragma once

#include <artheater/core.hpp>

#include <vector>

namespace artheater {

ARTHEATER_DEFINE_ERROR(TraceError);

struct TraceSample {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double head_height = 1.6;
};

/// Timestamped pose stream; every metric in the library is computed on one.
struct LocomotionTrace {
  std::vector<TraceSample> samples;

  bool empty() const { return samples.empty(); }
  double start() const { return samples.front().t; }
  double end() const { return samples.back().t; }
};

/// Throws TraceError unless timestamps are strictly increasing.
void validate(const LocomotionTrace& trace);

/// Linear interpolation of position, clamped to the trace span.
Vec2 position_at(const LocomotionTrace& trace, double t);

}  // namespace artheater

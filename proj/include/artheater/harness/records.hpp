#pragma once

#include <artheater/core.hpp>
#include <artheater/trace.hpp>

#include <optional>
#include <string>
#include <vector>

namespace artheater::harness {

ARTHEATER_DEFINE_ERROR(RecordFormatError);

inline constexpr int kTraceSchemaVersion = 1;

struct TraceRecord {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  std::string stage;     // stage theme, distortion phase, or scenario label
  std::string guidance;  // aid shown to the walker, "none" without one
  std::optional<double> nearest_target_distance;

  bool operator==(const TraceRecord&) const = default;
};

/// Versioned header line, then the column line, then one row per record.
/// Numbers use the shortest round-trip form, so reading back is exact.
std::string trace_csv(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> trace_from_csv(const std::string& text);

LocomotionTrace to_locomotion(const std::vector<TraceRecord>& records, double head_height = 1.6);

}  // namespace artheater::harness

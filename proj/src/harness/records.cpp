#include <artheater/harness/records.hpp>

#include <fmt/format.h>

#include <charconv>
#include <sstream>

namespace artheater::harness {

namespace {

const std::string kColumns = "t,x,y,heading,stage,guidance,nearest_target_distance";

std::string header_line() { return fmt::format("# artheater-trace v{}", kTraceSchemaVersion); }

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw RecordFormatError(fmt::format("line {}: bad number '{}'", line, s));
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string trace_csv(const std::vector<TraceRecord>& records) {
  std::string out = header_line() + "\n" + kColumns + "\n";
  for (const auto& r : records) {
    if (r.stage.find_first_of(",\n") != std::string::npos || r.guidance.find_first_of(",\n") != std::string::npos) {
      throw RecordFormatError("stage and guidance labels may not contain commas or newlines");
    }
    out += fmt::format("{},{},{},{},{},{},", r.t, r.x, r.y, r.heading, r.stage, r.guidance);
    if (r.nearest_target_distance) out += fmt::format("{}", *r.nearest_target_distance);
    out += '\n';
  }
  return out;
}

std::vector<TraceRecord> trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header_line()) {
    throw RecordFormatError("missing or unsupported trace header (expected '" + header_line() + "')");
  }
  if (!std::getline(in, line) || line != kColumns) throw RecordFormatError("unexpected trace columns");
  std::vector<TraceRecord> out;
  int n = 2;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 7) throw RecordFormatError(fmt::format("line {}: expected 7 cells", n));
    TraceRecord r;
    r.t = parse_double(cells[0], n);
    r.x = parse_double(cells[1], n);
    r.y = parse_double(cells[2], n);
    r.heading = parse_double(cells[3], n);
    r.stage = cells[4];
    r.guidance = cells[5];
    if (!cells[6].empty()) r.nearest_target_distance = parse_double(cells[6], n);
    out.push_back(std::move(r));
  }
  return out;
}

LocomotionTrace to_locomotion(const std::vector<TraceRecord>& records, double head_height) {
  LocomotionTrace trace;
  trace.samples.reserve(records.size());
  for (const auto& r : records) trace.samples.push_back({r.t, {r.x, r.y}, r.heading, head_height});
  return trace;
}

}  // namespace artheater::harness

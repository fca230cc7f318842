#include <artheater/trace.hpp>

#include <algorithm>

namespace artheater {

void validate(const LocomotionTrace& trace) {
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    if (!(trace.samples[i].t > trace.samples[i - 1].t)) {
      throw TraceError("timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
    }
  }
}

Vec2 position_at(const LocomotionTrace& trace, double t) {
  const auto& s = trace.samples;
  if (s.empty()) throw TraceError("empty trace");
  if (t <= s.front().t) return s.front().position;
  if (t >= s.back().t) return s.back().position;
  const auto hi = std::upper_bound(s.begin(), s.end(), t, [](double v, const TraceSample& x) { return v < x.t; });
  const auto lo = hi - 1;
  const double a = (t - lo->t) / (hi->t - lo->t);
  return (1.0 - a) * lo->position + a * hi->position;
}

}  // namespace artheater

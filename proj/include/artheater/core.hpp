#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace artheater {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Base of every error thrown by the library. `kind()` is the stable name
/// used by the CLI when mapping failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define ARTHEATER_DEFINE_ERROR(Name)                                 \
  class Name : public ::artheater::Error {                          \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

/// Walker/agent pose on the floor plane. z is up everywhere in the library.
struct Pose {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;  // yaw, radians, counter-clockwise from +x
  double head_height = 1.6;

  Vec3 head() const { return {position.x(), position.y(), head_height}; }
  Vec2 forward() const { return {std::cos(heading), std::sin(heading)}; }
};

struct Box2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  Vec2 extent() const { return max - min; }
  Vec2 center() const { return 0.5 * (min + max); }
};

struct Box3 {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  double volume() const {
    const Vec3 e = max - min;
    return e.x() * e.y() * e.z();
  }
};

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Derives independent stream seeds from a run seed so
/// per-environment randomness does not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(derive_seed(seed, stream));
}

inline double uniform01(Rng& rng) {
  // 53 random bits, independent of the standard library's distribution code.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline double gaussian(Rng& rng) {
  // Box-Muller; uses two uniforms per call so the stream layout is fixed.
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline double exponential(Rng& rng, double mean) {
  return -mean * std::log(1.0 - uniform01(rng));
}

}  // namespace artheater

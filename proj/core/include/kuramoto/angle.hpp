#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kuramoto {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Canonical representative of x modulo 2*pi, in [0, 2*pi).
inline double wrap(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("wrap: non-finite angle");
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // adding 2*pi to a tiny negative can round to exactly 2*pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Point on the circle R/2piZ. Always stored in canonical range [0, 2*pi).
struct Angle {
  double value = 0.0;

  Angle() = default;
  explicit Angle(double x) : value(wrap(x)) {}

  friend bool operator==(const Angle&, const Angle&) = default;
};

/// Geodesic distance on the circle, in [0, pi].
inline double circle_distance(double a, double b) {
  double d = std::fabs(wrap(a) - wrap(b));
  return d > kPi ? kTwoPi - d : d;
}

inline double circle_distance(Angle a, Angle b) {
  return circle_distance(a.value, b.value);
}

}  // namespace kuramoto

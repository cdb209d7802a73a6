#pragma once

#include <cmath>
#include <compare>
#include <numbers>

namespace pursuit {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

inline double distance(Point2 a, Point2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// Agent state on the map. `theta` is kept in (-pi, pi] by every producer in this library.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Point2 position() const { return {x, y}; }

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Bearing of `target` seen from `from`, relative to its heading, in (-pi, pi].
double relative_bearing(const Pose& from, Point2 target);

}  // namespace pursuit

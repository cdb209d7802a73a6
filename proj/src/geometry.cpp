#include "pursuit/geometry.hpp"

namespace pursuit {

double normalize_angle(double angle) {
  double wrapped = std::remainder(angle, kTwoPi);
  if (wrapped <= -kPi) {
    wrapped += kTwoPi;
  }
  if (wrapped > kPi) {
    wrapped -= kTwoPi;
  }
  return wrapped;
}

double relative_bearing(const Pose& from, Point2 target) {
  return normalize_angle(std::atan2(target.y - from.y, target.x - from.x) - from.theta);
}

}  // namespace pursuit

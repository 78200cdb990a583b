#ifndef MAPNAV_DYNAMICS_HPP_
#define MAPNAV_DYNAMICS_HPP_

#include "mapnav/geometry.hpp"

namespace mapnav {

/// Commanded forward speed (m/s) and yaw rate (rad/s).
struct Action {
  double v = 0.0;
  double omega = 0.0;
};

inline constexpr double kActionSpeedMin = 0.0;
inline constexpr double kActionSpeedMax = 1.0;
inline constexpr double kActionOmegaMax = 1.0;

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

struct IntegrationResult {
  Pose pose;
  Vec2 velocity;  // planar velocity used for the translation
};

/// Unicycle update. The heading is advanced first and the translation uses
/// the new heading: p' = p + dt * v * (cos h', sin h').
IntegrationResult integrate(const Pose& pose, const Action& action, double dt);

/// Throws InputError when the action is non-finite or outside
/// v in [0, 1], omega in [-1, 1].
void check_action(const Action& action);

}  // namespace mapnav

#endif  // MAPNAV_DYNAMICS_HPP_

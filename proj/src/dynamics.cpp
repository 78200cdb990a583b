#include "mapnav/dynamics.hpp"

#include <cmath>
#include <string>

#include "mapnav/errors.hpp"

namespace mapnav {

IntegrationResult integrate(const Pose& pose, const Action& action, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("integrate: dt must be positive and finite");
  if (!std::isfinite(pose.position.x) || !std::isfinite(pose.position.y) ||
      !std::isfinite(pose.heading))
    throw InputError("integrate: pose is not finite");
  if (!std::isfinite(action.v) || !std::isfinite(action.omega))
    throw InputError("integrate: action is not finite");

  IntegrationResult out;
  out.pose.heading = wrap_angle(pose.heading + action.omega * dt);
  out.velocity = {action.v * std::cos(out.pose.heading), action.v * std::sin(out.pose.heading)};
  out.pose.position = pose.position + out.velocity * dt;
  return out;
}

void check_action(const Action& action) {
  if (!std::isfinite(action.v) || !std::isfinite(action.omega))
    throw InputError("action is not finite");
  if (action.v < kActionSpeedMin || action.v > kActionSpeedMax)
    throw InputError("action speed " + std::to_string(action.v) + " outside [0, 1]");
  if (std::abs(action.omega) > kActionOmegaMax)
    throw InputError("action yaw rate " + std::to_string(action.omega) + " outside [-1, 1]");
}

}  // namespace mapnav

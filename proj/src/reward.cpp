#include "mapnav/reward.hpp"

#include <cmath>

#include "mapnav/errors.hpp"

namespace mapnav {

void RewardParams::validate() const {
  for (double v : {r_arrival, r_approaching, r_collision, r_smooth, arrival_dist_m, omega_threshold}) {
    if (!std::isfinite(v)) throw ConfigError("reward: parameters must be finite");
  }
  if (!(arrival_dist_m > 0.0)) throw ConfigError("reward.arrival_dist_m must be > 0");
}

double goal_term(double prev_dist, double cur_dist, const RewardParams& params) {
  if (!std::isfinite(prev_dist) || !std::isfinite(cur_dist))
    throw InputError("goal_term: distances must be finite");
  if (prev_dist < 0.0 || cur_dist < 0.0) throw InputError("goal_term: distances must be >= 0");
  if (cur_dist < params.arrival_dist_m) return params.r_arrival;
  return params.r_approaching * (prev_dist - cur_dist);
}

double collision_term(bool collided, const RewardParams& params) {
  return collided ? params.r_collision : 0.0;
}

double smooth_term(double omega, const RewardParams& params) {
  if (!std::isfinite(omega)) throw InputError("smooth_term: omega must be finite");
  return std::abs(omega) > params.omega_threshold ? params.r_smooth * std::abs(omega) : 0.0;
}

double total_reward(const RewardTerms& terms) { return terms.goal + terms.collision + terms.smooth; }

}  // namespace mapnav

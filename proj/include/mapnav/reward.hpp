#ifndef MAPNAV_REWARD_HPP_
#define MAPNAV_REWARD_HPP_

namespace mapnav {

struct RewardParams {
  double r_arrival = 15.0;
  double r_approaching = 2.5;
  double r_collision = -15.0;
  double r_smooth = -0.1;
  double arrival_dist_m = 0.1;
  double omega_threshold = 0.7;

  void validate() const;
};

struct RewardTerms {
  double goal = 0.0;
  double collision = 0.0;
  double smooth = 0.0;
};

/// r_arrival inside the arrival radius, otherwise progress toward the goal
/// scaled by r_approaching.
double goal_term(double prev_dist, double cur_dist, const RewardParams& params);
double collision_term(bool collided, const RewardParams& params);
/// r_smooth * |omega| above the (strict) yaw-rate threshold.
double smooth_term(double omega, const RewardParams& params);
double total_reward(const RewardTerms& terms);

}  // namespace mapnav

#endif  // MAPNAV_REWARD_HPP_

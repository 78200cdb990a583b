#ifndef MAPNAV_GAUSSIAN_HPP_
#define MAPNAV_GAUSSIAN_HPP_

#include <array>

#include "mapnav/dynamics.hpp"
#include "mapnav/rng.hpp"

namespace mapnav {

// Diagonal Gaussian over a pre-squash vector u; the action is
// v = logistic(u0), omega = tanh(u1).

using Pre = std::array<double, 2>;

Action squash(const Pre& u);
/// Inverse of squash; requires v in (0,1) and omega in (-1,1).
Pre unsquash(const Action& a);

Pre sample_pre(const Pre& mean, const Pre& log_std, Rng& rng);

/// log N(u; mean, exp(log_std)) summed over both dimensions.
double gaussian_log_prob(const Pre& u, const Pre& mean, const Pre& log_std);
/// log |d squash / d u|.
double squash_log_det(const Pre& u);
/// Density of the squashed action: gaussian_log_prob - squash_log_det.
double action_log_prob(const Pre& u, const Pre& mean, const Pre& log_std);

struct LogProbGrad {
  Pre mean{};
  Pre log_std{};
};
/// Gradient of gaussian_log_prob (hence also action_log_prob) w.r.t. the
/// distribution parameters at fixed u.
LogProbGrad log_prob_grad(const Pre& u, const Pre& mean, const Pre& log_std);

/// Entropy of the pre-squash Gaussian; its gradient w.r.t. each log_std is 1.
double gaussian_entropy(const Pre& log_std);

Action deterministic_action(const Pre& mean);

}  // namespace mapnav

#endif  // MAPNAV_GAUSSIAN_HPP_

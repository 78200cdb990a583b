#include "mapnav/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "mapnav/errors.hpp"

namespace mapnav {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Action squash(const Pre& u) { return {logistic(u[0]), std::tanh(u[1])}; }

Pre unsquash(const Action& a) {
  if (!(a.v > 0.0 && a.v < 1.0) || !(a.omega > -1.0 && a.omega < 1.0))
    throw InputError("unsquash: action outside the open squash range");
  return {std::log(a.v) - std::log1p(-a.v), std::atanh(a.omega)};
}

Pre sample_pre(const Pre& mean, const Pre& log_std, Rng& rng) {
  Pre u;
  for (int i = 0; i < 2; ++i) u[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
  return u;
}

double gaussian_log_prob(const Pre& u, const Pre& mean, const Pre& log_std) {
  double lp = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double z = (u[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double squash_log_det(const Pre& u) {
  // logistic' = s(1 - s); tanh' = 1 - tanh^2 = 4 / (e^u + e^-u)^2.
  const double lv = -softplus(-u[0]) - softplus(u[0]);
  const double lw = 2.0 * (std::numbers::ln2 - u[1] - softplus(-2.0 * u[1]));
  return lv + lw;
}

double action_log_prob(const Pre& u, const Pre& mean, const Pre& log_std) {
  return gaussian_log_prob(u, mean, log_std) - squash_log_det(u);
}

LogProbGrad log_prob_grad(const Pre& u, const Pre& mean, const Pre& log_std) {
  LogProbGrad g;
  for (int i = 0; i < 2; ++i) {
    const double inv_var = std::exp(-2.0 * log_std[i]);
    const double d = u[i] - mean[i];
    g.mean[i] = d * inv_var;
    g.log_std[i] = d * d * inv_var - 1.0;
  }
  return g;
}

double gaussian_entropy(const Pre& log_std) { return log_std[0] + log_std[1] + 2.0 * (0.5 + kHalfLog2Pi); }

Action deterministic_action(const Pre& mean) { return squash(mean); }

}  // namespace mapnav

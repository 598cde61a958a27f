#pragma once

#include <string>
#include <vector>

#include "paneldesign/panel.hpp"
#include "paneldesign/selector.hpp"

namespace paneldesign {

enum class Method { PerUnit, TwoWay, OneWay, SyntheticControlRandom, DiffInMeansRandom };

struct EffectEstimate {
  Method method = Method::DiffInMeansRandom;
  double atet = 0.0;
  Eigen::VectorXd per_period_atet;      // length n_post
  Eigen::MatrixXd unit_period_effects;  // K x n_post; global methods replicate per_period_atet
  Eigen::VectorXd unit_effects;         // K, mean over treated periods
  std::vector<std::string> treated_units;
};

// tau_hat_it = Y_it - sum_j w^i_j Y_jt on post periods; needs per-unit weights.
EffectEstimate estimate_per_unit(const Panel& panel, const Design& design);
// Difference of weighted means per post period with the design's weights
// (one-way: treated side fixed at 1/K; two-way: fitted treated weights).
EffectEstimate estimate_weighted_atet(const Panel& panel, const Design& design);
// Mean of treated minus mean of controls per post period.
EffectEstimate estimate_diff_in_means(const Panel& panel, const std::vector<int>& treated_set);
EffectEstimate estimate_diff_in_means(const Panel& panel, const Design& design);

// Fit the method's weights on the pre block of `panel`, then estimate.
EffectEstimate estimate_method(const Panel& panel, const std::vector<int>& treated_set,
                               Method method, double lambda, const WeightConstraints& cons);

struct MseCheckRow {
  std::string label;
  double bias = 0.0;
  double formula_mse = 0.0;
  double empirical_mse = 0.0;
  double std_error = 0.0;
  double z = 0.0;
};

struct MseReport {
  std::vector<MseCheckRow> rows;
  int reps = 0;
  std::uint64_t seed = 0;
};

// Simulates Y = mu + noise around the fixed design and scores the empirical
// mean squared error of the estimates against the conditional closed form
// bias^2 + variance (variance divided by the number of post periods when the
// estimate averages over them).
MseReport mse_oracle_check(const Eigen::MatrixXd& mu, int t_pre, double sigma2,
                           const Design& design, int reps, std::uint64_t seed);

}  // namespace paneldesign

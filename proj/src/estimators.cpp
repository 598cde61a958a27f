#include "paneldesign/estimators.hpp"

#include <cmath>

#include "paneldesign/errors.hpp"
#include "paneldesign/rng.hpp"

namespace paneldesign {

namespace {

std::vector<std::string> treated_ids(const Panel& panel, const std::vector<int>& treated) {
  std::vector<std::string> out;
  out.reserve(treated.size());
  for (int i : treated) out.push_back(panel.unit_ids[static_cast<std::size_t>(i)]);
  return out;
}

void finish_from_unit_matrix(EffectEstimate& est) {
  est.per_period_atet = est.unit_period_effects.colwise().mean();
  est.unit_effects = est.unit_period_effects.rowwise().mean();
  est.atet = est.per_period_atet.mean();
}

EffectEstimate global_estimate(const Panel& panel, const std::vector<int>& treated,
                               const Eigen::VectorXd& weights, Method method) {
  const int p = panel.n_post();
  if (p < 1) throw DataError("panel has no post-treatment periods");
  const Eigen::MatrixXd post = panel.post_block();

  Eigen::VectorXd signed_w = -weights;
  for (int i : treated) signed_w(i) = weights(i);

  EffectEstimate est;
  est.method = method;
  est.per_period_atet = post.transpose() * signed_w;
  est.atet = est.per_period_atet.mean();
  // Global methods report every unit effect as the ATET path.
  est.unit_period_effects = est.per_period_atet.transpose().replicate(
      static_cast<Eigen::Index>(treated.size()), 1);
  est.unit_effects =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(treated.size()), est.atet);
  est.treated_units = treated_ids(panel, treated);
  return est;
}

}  // namespace

EffectEstimate estimate_per_unit(const Panel& panel, const Design& design) {
  const std::vector<int> treated = treated_indices(design.d);
  validate_treated(panel.n_units(), treated);
  if (!design.weights.per_unit || design.weights.unit_weights.rows() !=
                                      static_cast<Eigen::Index>(treated.size())) {
    throw UsageError("per-unit estimation needs per-unit weights");
  }
  const int p = panel.n_post();
  if (p < 1) throw DataError("panel has no post-treatment periods");
  const Eigen::MatrixXd post = panel.post_block();

  EffectEstimate est;
  est.method = Method::PerUnit;
  est.unit_period_effects.resize(static_cast<Eigen::Index>(treated.size()), p);
  for (std::size_t r = 0; r < treated.size(); ++r) {
    const Eigen::VectorXd w = design.weights.unit_weights.row(static_cast<Eigen::Index>(r)).transpose();
    est.unit_period_effects.row(static_cast<Eigen::Index>(r)) =
        post.row(treated[r]) - (post.transpose() * w).transpose();
  }
  finish_from_unit_matrix(est);
  est.treated_units = treated_ids(panel, treated);
  return est;
}

EffectEstimate estimate_weighted_atet(const Panel& panel, const Design& design) {
  const std::vector<int> treated = treated_indices(design.d);
  validate_treated(panel.n_units(), treated);
  if (design.weights.per_unit || design.weights.weights.size() != panel.n_units()) {
    throw UsageError("weighted ATET estimation needs a global weight vector");
  }
  const Method tag =
      design.problem.variant == Variant::OneWay ? Method::OneWay : Method::TwoWay;
  return global_estimate(panel, treated, design.weights.weights, tag);
}

EffectEstimate estimate_diff_in_means(const Panel& panel, const std::vector<int>& treated_set) {
  validate_treated(panel.n_units(), treated_set);
  const double k = static_cast<double>(treated_set.size());
  const double m = static_cast<double>(panel.n_units()) - k;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(panel.n_units(), 1.0 / m);
  for (int i : treated_set) w(i) = 1.0 / k;
  return global_estimate(panel, treated_set, w, Method::DiffInMeansRandom);
}

EffectEstimate estimate_diff_in_means(const Panel& panel, const Design& design) {
  return estimate_diff_in_means(panel, treated_indices(design.d));
}

EffectEstimate estimate_method(const Panel& panel, const std::vector<int>& treated_set,
                               Method method, double lambda, const WeightConstraints& cons) {
  validate_treated(panel.n_units(), treated_set);
  const Eigen::MatrixXd pre = panel.pre_block();

  switch (method) {
    case Method::PerUnit:
    case Method::SyntheticControlRandom: {
      Design d;
      d.d = indicator_of(panel.n_units(), treated_set);
      d.problem.variant = Variant::PerUnit;
      d.weights = solve_per_unit_weights(pre, treated_set, lambda, cons);
      EffectEstimate est = estimate_per_unit(panel, d);
      est.method = method;
      return est;
    }
    case Method::TwoWay: {
      const WeightSolution w = solve_two_way_weights(pre, treated_set, lambda, cons);
      return global_estimate(panel, treated_set, w.weights, Method::TwoWay);
    }
    case Method::OneWay: {
      const WeightSolution w = solve_one_way_weights(pre, treated_set, lambda, cons);
      return global_estimate(panel, treated_set, w.weights, Method::OneWay);
    }
    case Method::DiffInMeansRandom:
      return estimate_diff_in_means(panel, treated_set);
  }
  throw UsageError("unknown method");
}

MseReport mse_oracle_check(const Eigen::MatrixXd& mu, int t_pre, double sigma2,
                           const Design& design, int reps, std::uint64_t seed) {
  const int n = static_cast<int>(mu.rows());
  const int s = static_cast<int>(mu.cols());
  if (t_pre < 1 || t_pre >= s) throw UsageError("t_pre out of range for the mean matrix");
  if (sigma2 < 0.0) throw UsageError("sigma2 must be nonnegative");
  if (reps < 2) throw UsageError("need at least 2 replications");
  const std::vector<int> treated = treated_indices(design.d);
  validate_treated(n, treated);
  if (!design.weights.fitted()) throw UsageError("design carries no fitted weights");
  const int p = s - t_pre;
  const double sd = std::sqrt(sigma2);

  // Effective ATET weights: treated 1/K against either the fitted global
  // vector or the column means of the per-unit rows.
  const double k = static_cast<double>(treated.size());
  Eigen::VectorXd atet_w(n);
  if (design.weights.per_unit) {
    atet_w = design.weights.unit_weights.colwise().mean().transpose();
    for (int i : treated) atet_w(i) = 1.0 / k;
  } else {
    atet_w = design.weights.weights;
  }

  // Closed-form rows: bias^2 + variance / n_post.
  MseReport report;
  report.reps = reps;
  report.seed = seed;
  const Eigen::MatrixXd mu_post = mu.rightCols(p);

  Eigen::VectorXd signed_atet_w = -atet_w;
  for (int i : treated) signed_atet_w(i) = atet_w(i);
  {
    MseCheckRow row;
    row.label = "atet";
    row.bias = (mu_post.transpose() * signed_atet_w).mean();
    row.formula_mse = row.bias * row.bias + sigma2 * atet_w.squaredNorm() / p;
    report.rows.push_back(row);
  }
  if (design.weights.per_unit) {
    for (std::size_t r = 0; r < treated.size(); ++r) {
      const Eigen::VectorXd w = design.weights.unit_weights.row(static_cast<Eigen::Index>(r)).transpose();
      MseCheckRow row;
      row.label = "unit_" + std::to_string(treated[r]);
      row.bias = (mu_post.row(treated[r]).transpose() - mu_post.transpose() * w).mean();
      row.formula_mse = row.bias * row.bias + sigma2 * (1.0 + w.squaredNorm()) / p;
      report.rows.push_back(row);
    }
  }

  // Monte Carlo through the estimator path itself.
  std::vector<double> sum_sq(report.rows.size(), 0.0);
  std::vector<double> sum_sq2(report.rows.size(), 0.0);
  Rng rng(seed);
  Panel sim;
  sim.t_pre = t_pre;
  sim.y = mu;
  for (int i = 0; i < n; ++i) sim.unit_ids.push_back("u" + std::to_string(i + 1));
  for (int t = 0; t < s; ++t) sim.period_ids.push_back("t" + std::to_string(t + 1));

  for (int rep = 0; rep < reps; ++rep) {
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < s; ++t) sim.y(i, t) = mu(i, t) + sd * rng.normal();
    }
    const EffectEstimate est = design.weights.per_unit
                                   ? estimate_per_unit(sim, design)
                                   : estimate_weighted_atet(sim, design);
    auto accumulate = [&](std::size_t slot, double err) {
      const double sq = err * err;
      sum_sq[slot] += sq;
      sum_sq2[slot] += sq * sq;
    };
    accumulate(0, est.atet);  // true effect is zero: tau = 0 everywhere
    if (design.weights.per_unit) {
      for (std::size_t r = 0; r < treated.size(); ++r) {
        accumulate(r + 1, est.unit_effects(static_cast<Eigen::Index>(r)));
      }
    }
  }

  for (std::size_t rix = 0; rix < report.rows.size(); ++rix) {
    auto& row = report.rows[rix];
    row.empirical_mse = sum_sq[rix] / reps;
    const double var_sq =
        std::max(0.0, sum_sq2[rix] / reps - row.empirical_mse * row.empirical_mse);
    row.std_error = std::sqrt(var_sq / reps);
    row.z = row.std_error > 0.0 ? (row.empirical_mse - row.formula_mse) / row.std_error : 0.0;
  }
  return report;
}

}  // namespace paneldesign

#include "paneldesign/objectives.hpp"

#include <cmath>

#include "paneldesign/errors.hpp"

namespace paneldesign {

namespace {

struct Split {
  double mean_treated = 0.0, mean_control = 0.0;
  double v2_treated = 0.0, v2_control = 0.0;
  double k = 0.0, m = 0.0;
};

Split split_of(const ClosedFormInputs& in) {
  const int n = static_cast<int>(in.a.size());
  validate_treated(n, in.treated);
  if (in.sigma2 <= 0.0) throw UsageError("sigma2 must be positive");
  const std::vector<int> controls = control_indices(n, in.treated);

  Split s;
  s.k = static_cast<double>(in.treated.size());
  s.m = static_cast<double>(controls.size());
  for (int i : in.treated) s.mean_treated += in.a(i);
  s.mean_treated /= s.k;
  for (int j : controls) s.mean_control += in.a(j);
  s.mean_control /= s.m;
  for (int i : in.treated) {
    s.v2_treated += (in.a(i) - s.mean_treated) * (in.a(i) - s.mean_treated);
  }
  for (int j : controls) {
    s.v2_control += (in.a(j) - s.mean_control) * (in.a(j) - s.mean_control);
  }
  return s;
}

}  // namespace

double closed_form_per_unit_objective(const ClosedFormInputs& in) {
  const Split s = split_of(in);
  const double gap = s.mean_treated - s.mean_control;
  return in.sigma2 *
         (1.0 / s.m + (gap * gap + s.v2_treated / s.k) / (in.sigma2 + s.v2_control));
}

double closed_form_two_way_objective(const ClosedFormInputs& in) {
  const Split s = split_of(in);
  const double gap = s.mean_treated - s.mean_control;
  // Group the variance terms before adding sigma2 so the value is bitwise
  // identical for a treated set and its complement.
  const double denom = in.sigma2 + (s.v2_treated + s.v2_control);
  return in.sigma2 * (1.0 / s.k + 1.0 / s.m + gap * gap / denom);
}

double closed_form_one_way_objective(const ClosedFormInputs& in) {
  const Split s = split_of(in);
  const double gap = s.mean_treated - s.mean_control;
  return in.sigma2 * (1.0 / s.k + 1.0 / s.m + gap * gap / (in.sigma2 + s.v2_control));
}

double evaluate_objective(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                          double lambda, Variant variant, const WeightSolution& w) {
  const int n = static_cast<int>(pre.rows());
  const int t = static_cast<int>(pre.cols());
  validate_treated(n, treated);
  if (!w.fitted()) throw UsageError("weight solution is not fitted");

  if (variant == Variant::PerUnit) {
    if (!w.per_unit || w.unit_weights.rows() != static_cast<Eigen::Index>(treated.size()) ||
        w.unit_weights.cols() != n) {
      throw UsageError("per-unit objective needs a K x N weight matrix");
    }
    double total = 0.0;
    for (std::size_t r = 0; r < treated.size(); ++r) {
      const Eigen::VectorXd row = w.unit_weights.row(static_cast<Eigen::Index>(r)).transpose();
      const Eigen::VectorXd fitted = pre.transpose() * row;  // length t
      const Eigen::VectorXd resid = pre.row(treated[r]).transpose() - fitted;
      total += resid.squaredNorm() / static_cast<double>(t) + lambda * row.squaredNorm();
    }
    return total / static_cast<double>(treated.size());
  }

  if (w.per_unit || w.weights.size() != n) {
    throw UsageError("global objective needs a length-N weight vector");
  }
  Eigen::VectorXd signed_w = -w.weights;
  for (int i : treated) signed_w(i) = w.weights(i);
  const Eigen::VectorXd gap = pre.transpose() * signed_w;  // length t
  return gap.squaredNorm() / static_cast<double>(t) + lambda * w.weights.squaredNorm();
}

double empirical_objective(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                           double lambda, Variant variant, const WeightConstraints& cons) {
  const WeightSolution w = solve_weights(pre, treated, lambda, variant, cons);
  return evaluate_objective(pre, treated, lambda, variant, w);
}

}  // namespace paneldesign

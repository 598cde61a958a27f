#pragma once

#include <Eigen/Dense>
#include <vector>

#include "paneldesign/weights.hpp"

namespace paneldesign {

// Single-period design inputs: outcomes a_i, noise variance sigma2, and the
// candidate treated set.
struct ClosedFormInputs {
  Eigen::VectorXd a;
  double sigma2 = 1.0;
  std::vector<int> treated;
};

// Optimal objective values with the inner weight problem solved exactly
// (single-period, unconstrained weight signs). Written so that the two-way
// value is bitwise symmetric under complementing the treated set.
double closed_form_per_unit_objective(const ClosedFormInputs& in);
double closed_form_two_way_objective(const ClosedFormInputs& in);
double closed_form_one_way_objective(const ClosedFormInputs& in);

// Objective value attained by a given weight solution: discrepancy fit
// averaged over the pre-period columns plus the ridge penalty; the per-unit
// variant averages across treated units.
double evaluate_objective(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                          double lambda, Variant variant, const WeightSolution& w);

// Solve the inner weight problem and report the attained objective value.
double empirical_objective(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                           double lambda, Variant variant, const WeightConstraints& cons);

}  // namespace paneldesign

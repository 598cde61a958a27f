#pragma once

#include <Eigen/Dense>
#include <vector>

#include "paneldesign/qp.hpp"

namespace paneldesign {

enum class Variant { PerUnit, OneWay, TwoWay };

struct WeightConstraints {
  bool nonnegative = true;
  bool normalize = true;      // each group's weights sum to one
  bool treated_equal = false;  // fix every treated weight at 1/K
};

// Weights for one treatment set. Global problems fill `weights` (length N);
// the per-unit problem fills `unit_weights`, one row per treated unit in
// ascending index order, columns over all N units with zeros outside the
// control set.
struct WeightSolution {
  bool per_unit = false;
  Eigen::VectorXd weights;
  Eigen::MatrixXd unit_weights;
  double kkt_residual = 0.0;
  int iterations = 0;

  bool fitted() const { return weights.size() > 0 || unit_weights.size() > 0; }
};

void validate_treated(int n, const std::vector<int>& treated);
std::vector<int> control_indices(int n, const std::vector<int>& treated);

// Inner weight problems for a fixed treatment set: ridge fit of weighted
// treated-vs-control discrepancy over the pre-period columns.
WeightSolution solve_two_way_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                     double lambda, const WeightConstraints& cons);
WeightSolution solve_one_way_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                     double lambda, const WeightConstraints& cons);
WeightSolution solve_per_unit_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                      double lambda, const WeightConstraints& cons);
WeightSolution solve_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                             double lambda, Variant variant, const WeightConstraints& cons);

// Single-period stationarity solutions with unconstrained signs; exact
// formula evaluation used as oracles for the QP path.
Eigen::VectorXd closed_form_two_way_weights(const Eigen::VectorXd& a,
                                            const std::vector<int>& treated, double sigma2);
Eigen::VectorXd closed_form_one_way_weights(const Eigen::VectorXd& a,
                                            const std::vector<int>& treated, double sigma2);
Eigen::MatrixXd closed_form_per_unit_weights(const Eigen::VectorXd& a,
                                             const std::vector<int>& treated, double sigma2);

// Max-norm KKT certificate of a weight solution against the variant's QP
// (stationarity, feasibility, complementary slackness, dual signs). For the
// per-unit variant this is the worst row.
KktBreakdown weight_kkt_breakdown(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                  double lambda, Variant variant, const WeightConstraints& cons,
                                  const WeightSolution& sol);
double weight_kkt_residual(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                           double lambda, Variant variant, const WeightConstraints& cons,
                           const WeightSolution& sol);

// QP assembly, exposed for tests and the KKT wrappers. The control-side
// problems carry a constant term (treated fit energy plus any fixed treated
// penalty) that the QP objective omits.
struct BuiltQp {
  QpProblem qp;
  double constant = 0.0;
};
BuiltQp build_two_way_qp(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                         double lambda, const WeightConstraints& cons);
BuiltQp build_control_qp(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                         const Eigen::VectorXd& target, double lambda, double constant_penalty,
                         const WeightConstraints& cons);

}  // namespace paneldesign

#pragma once

#include <Eigen/Dense>

namespace paneldesign {

// min 0.5 x'Gx + c'x  s.t.  a_eq x = b_eq,  and x >= 0 when nonneg is set.
// G must be symmetric positive semi-definite (positive definite whenever a
// ridge term is present). When nonneg is set, the equality rows must be
// disjoint indicator rows with positive right-hand sides; that is the shape
// every weight problem here produces, and it gives a trivial feasible start.
struct QpProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd c;
  Eigen::MatrixXd a_eq;  // may have zero rows
  Eigen::VectorXd b_eq;
  bool nonneg = false;
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_multipliers;
  double objective = 0.0;  // 0.5 x'Gx + c'x
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct KktBreakdown {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double dual = 0.0;
  double max() const;
};

QpSolution solve_qp(const QpProblem& qp);
// Warm start; x0 must satisfy the constraints (checked).
QpSolution solve_qp(const QpProblem& qp, const Eigen::VectorXd& x0);

KktBreakdown kkt_breakdown(const QpProblem& qp, const Eigen::VectorXd& x);
double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& x);

}  // namespace paneldesign

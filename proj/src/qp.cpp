#include "paneldesign/qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "paneldesign/errors.hpp"

/*
 * Primal active-set method over the nonnegativity bounds. Every iteration
 * fixes a working set of variables at zero and solves the remaining
 * equality-constrained problem through its KKT system; bound multipliers
 * decide which fixed variable (if any) is released. The weight problems this
 * backs have at most a few dozen variables and one or two equality rows, so
 * dense full-pivot LU on the KKT matrix is both simplest and certifiable:
 * the returned kkt_residual is recomputed from scratch at the solution.
 */

namespace paneldesign {

namespace {

constexpr double kFeasTol = 1e-10;
constexpr double kMultiplierTol = 1e-10;
constexpr double kStepTol = 1e-12;

struct KktSolve {
  Eigen::VectorXd x;   // full length, fixed coordinates at zero
  Eigen::VectorXd nu;  // equality multipliers
};

// Solves the subproblem with `fixed` coordinates pinned at zero.
KktSolve solve_fixed_kkt(const QpProblem& qp, const std::vector<char>& fixed) {
  const int n = static_cast<int>(qp.G.rows());
  const int m = static_cast<int>(qp.a_eq.rows());

  std::vector<int> free_idx;
  free_idx.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    if (!fixed[static_cast<std::size_t>(j)]) free_idx.push_back(j);
  }
  const int f = static_cast<int>(free_idx.size());
  if (f == 0) {
    if (m > 0 && qp.b_eq.cwiseAbs().maxCoeff() > kFeasTol) {
      throw SolverError("active-set subproblem lost all free variables of a constrained group");
    }
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(m)};
  }

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f + m, f + m);
  Eigen::VectorXd rhs(f + m);
  for (int a = 0; a < f; ++a) {
    for (int b = 0; b < f; ++b) kkt(a, b) = qp.G(free_idx[a], free_idx[b]);
    rhs(a) = -qp.c(free_idx[a]);
  }
  for (int r = 0; r < m; ++r) {
    for (int a = 0; a < f; ++a) {
      kkt(f + r, a) = qp.a_eq(r, free_idx[a]);
      kkt(a, f + r) = qp.a_eq(r, free_idx[a]);
    }
    rhs(f + r) = qp.b_eq(r);
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  const Eigen::VectorXd sol = lu.solve(rhs);
  // A singular-but-consistent system (lambda = 0 oracle mode) is fine; an
  // inconsistent one is not.
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-7 * scale) {
    throw SolverError("KKT system is inconsistent; the subproblem has no stationary point");
  }

  KktSolve out;
  out.x = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < f; ++a) out.x(free_idx[a]) = sol(a);
  // The assembled block system solves G x + A' s = -c, so the Lagrangian
  // multiplier of A x = b (convention G x + c - A' nu = 0) is nu = -s.
  out.nu = -sol.tail(m);
  return out;
}

double objective_of(const QpProblem& qp, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(qp.G * x) + qp.c.dot(x);
}

// Feasible start when bounds are active: spread each equality row's target
// uniformly over its support. Requires disjoint indicator rows.
Eigen::VectorXd default_start(const QpProblem& qp) {
  const int n = static_cast<int>(qp.G.rows());
  const int m = static_cast<int>(qp.a_eq.rows());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (!qp.nonneg || m == 0) return x;

  std::vector<char> claimed(static_cast<std::size_t>(n), 0);
  for (int r = 0; r < m; ++r) {
    std::vector<int> support;
    for (int j = 0; j < n; ++j) {
      const double a = qp.a_eq(r, j);
      if (a == 0.0) continue;
      if (a != 1.0 || claimed[static_cast<std::size_t>(j)]) {
        throw SolverError("nonnegative mode requires disjoint unit-coefficient equality rows");
      }
      claimed[static_cast<std::size_t>(j)] = 1;
      support.push_back(j);
    }
    if (support.empty() || qp.b_eq(r) < 0.0) {
      throw SolverError("equality row has no feasible nonnegative point");
    }
    const double v = qp.b_eq(r) / static_cast<double>(support.size());
    for (int j : support) x(j) = v;
  }
  return x;
}

}  // namespace

double KktBreakdown::max() const {
  return std::max(std::max(stationarity, feasibility), std::max(complementarity, dual));
}

KktBreakdown kkt_breakdown(const QpProblem& qp, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(qp.G.rows());
  const int m = static_cast<int>(qp.a_eq.rows());
  KktBreakdown out;

  if (m > 0) out.feasibility = (qp.a_eq * x - qp.b_eq).cwiseAbs().maxCoeff();
  if (qp.nonneg && n > 0) {
    out.feasibility = std::max(out.feasibility, std::max(0.0, -x.minCoeff()));
  }

  const Eigen::VectorXd g = qp.G * x + qp.c;
  std::vector<int> active;
  if (qp.nonneg) {
    for (int j = 0; j < n; ++j) {
      if (x(j) <= 1e-8) active.push_back(j);
    }
  }
  const int w = static_cast<int>(active.size());
  Eigen::MatrixXd basis(n, m + w);
  for (int r = 0; r < m; ++r) basis.col(r) = qp.a_eq.row(r).transpose();
  for (int a = 0; a < w; ++a) {
    basis.col(m + a).setZero();
    basis(active[static_cast<std::size_t>(a)], m + a) = 1.0;
  }

  Eigen::VectorXd mult = Eigen::VectorXd::Zero(m + w);
  if (m + w > 0) mult = basis.colPivHouseholderQr().solve(g);
  out.stationarity = (g - basis * mult).cwiseAbs().maxCoeff();
  for (int a = 0; a < w; ++a) {
    const double mu = mult(m + a);
    out.dual = std::max(out.dual, -mu);
    out.complementarity =
        std::max(out.complementarity, std::abs(mu * x(active[static_cast<std::size_t>(a)])));
  }
  out.dual = std::max(out.dual, 0.0);
  return out;
}

double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& x) {
  return kkt_breakdown(qp, x).max();
}

QpSolution solve_qp(const QpProblem& qp, const Eigen::VectorXd& x0) {
  const int n = static_cast<int>(qp.G.rows());
  const int m = static_cast<int>(qp.a_eq.rows());
  if (qp.G.cols() != n || qp.c.size() != n || (m > 0 && qp.a_eq.cols() != n) ||
      qp.b_eq.size() != m) {
    throw UsageError("QP dimensions are inconsistent");
  }

  QpSolution sol;
  if (!qp.nonneg) {
    std::vector<char> fixed(static_cast<std::size_t>(n), 0);
    KktSolve k = solve_fixed_kkt(qp, fixed);
    sol.x = std::move(k.x);
    sol.eq_multipliers = std::move(k.nu);
    sol.iterations = 1;
    sol.objective = objective_of(qp, sol.x);
    sol.kkt_residual = kkt_residual(qp, sol.x);
    return sol;
  }

  Eigen::VectorXd x = x0;
  if (static_cast<int>(x.size()) != n) throw UsageError("warm start has wrong length");
  if (m > 0 && (qp.a_eq * x - qp.b_eq).cwiseAbs().maxCoeff() > 1e-8) {
    throw UsageError("warm start violates the equality constraints");
  }
  if (x.minCoeff() < -1e-8) throw UsageError("warm start violates nonnegativity");
  x = x.cwiseMax(0.0);

  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) fixed[static_cast<std::size_t>(j)] = (x(j) <= 0.0);

  const int max_iter = 10 * n + 10;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(m);
  int iter = 0;
  while (iter < max_iter) {
    ++iter;
    KktSolve k = solve_fixed_kkt(qp, fixed);
    nu = k.nu;

    double min_free = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!fixed[static_cast<std::size_t>(j)]) min_free = std::min(min_free, k.x(j));
    }

    if (min_free >= -kFeasTol) {
      x = k.x.cwiseMax(0.0);
      // Bound multipliers on the working set decide optimality.
      const Eigen::VectorXd g = qp.G * x + qp.c - qp.a_eq.transpose() * nu;
      int release = -1;
      double worst = -kMultiplierTol;
      for (int j = 0; j < n; ++j) {
        if (fixed[static_cast<std::size_t>(j)] && g(j) < worst) {
          worst = g(j);
          release = j;  // ties keep the smallest index: strict < above
        }
      }
      if (release < 0) break;
      fixed[static_cast<std::size_t>(release)] = 0;
      continue;
    }

    // Step toward the subproblem solution until a bound blocks.
    const Eigen::VectorXd d = k.x - x;
    double alpha = 1.0;
    int blocker = -1;
    for (int j = 0; j < n; ++j) {
      if (fixed[static_cast<std::size_t>(j)] || d(j) >= -kStepTol) continue;
      const double a = x(j) / (-d(j));
      if (a < alpha - 1e-15) {
        alpha = a;
        blocker = j;
      }
    }
    if (blocker < 0) {
      x = k.x.cwiseMax(0.0);
      continue;
    }
    x += alpha * d;
    x(blocker) = 0.0;
    x = x.cwiseMax(0.0);
    fixed[static_cast<std::size_t>(blocker)] = 1;
  }
  if (iter >= max_iter) {
    throw SolverError("active-set solver exceeded " + std::to_string(max_iter) + " iterations");
  }

  sol.x = x;
  sol.eq_multipliers = nu;
  sol.iterations = iter;
  sol.objective = objective_of(qp, x);
  sol.kkt_residual = kkt_residual(qp, x);
  return sol;
}

QpSolution solve_qp(const QpProblem& qp) { return solve_qp(qp, default_start(qp)); }

}  // namespace paneldesign

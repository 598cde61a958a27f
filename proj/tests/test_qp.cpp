#include <doctest.h>

#include <Eigen/Dense>

#include "paneldesign/errors.hpp"
#include "paneldesign/qp.hpp"
#include "paneldesign/rng.hpp"

using namespace paneldesign;

namespace {

// Dense brute-force reference: project a fine random search with Nelder-like
// refinement would be overkill; for the bound-constrained simplex problems
// used here we instead check the solver against exhaustive active-set
// enumeration, which is exact for small n.
QpSolution brute_force_simplex_qp(const QpProblem& qp) {
  const int n = static_cast<int>(qp.G.rows());
  REQUIRE(qp.nonneg);
  QpSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  // Enumerate every subset of variables allowed to be nonzero.
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<char> fixed(static_cast<std::size_t>(n), 1);
    for (int j = 0; j < n; ++j) {
      if (mask & (1 << j)) fixed[static_cast<std::size_t>(j)] = 0;
    }
    // Solve the equality-constrained problem on the free set.
    std::vector<int> free_idx;
    for (int j = 0; j < n; ++j) {
      if (!fixed[static_cast<std::size_t>(j)]) free_idx.push_back(j);
    }
    const int f = static_cast<int>(free_idx.size());
    const int m = static_cast<int>(qp.a_eq.rows());
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
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    bool ok = true;
    for (int a = 0; a < f; ++a) {
      x(free_idx[a]) = sol(a);
      if (sol(a) < -1e-12) ok = false;
    }
    if (!ok) continue;
    if (m > 0 && (qp.a_eq * x - qp.b_eq).cwiseAbs().maxCoeff() > 1e-9) continue;
    const double obj = 0.5 * x.dot(qp.G * x) + qp.c.dot(x);
    if (obj < best.objective) {
      best.objective = obj;
      best.x = x;
    }
  }
  return best;
}

QpProblem random_simplex_qp(Rng& rng, int n) {
  // PD Hessian via A'A + ridge, random linear term, single sum-to-one row.
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  QpProblem qp;
  qp.G = a.transpose() * a;
  qp.G.diagonal().array() += 0.5;
  qp.c = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) qp.c(i) = rng.normal();
  qp.a_eq = Eigen::MatrixXd::Ones(1, n);
  qp.b_eq = Eigen::VectorXd::Ones(1);
  qp.nonneg = true;
  return qp;
}

}  // namespace

TEST_CASE("equality-only QP solves the KKT system directly") {
  QpProblem qp;
  qp.G = Eigen::MatrixXd::Identity(3, 3) * 2.0;
  qp.c = Eigen::VectorXd::Zero(3);
  qp.a_eq = Eigen::MatrixXd::Ones(1, 3);
  qp.b_eq = Eigen::VectorXd::Ones(1);
  const QpSolution sol = solve_qp(qp);
  for (int j = 0; j < 3; ++j) CHECK(sol.x(j) == doctest::Approx(1.0 / 3.0));
  CHECK(sol.kkt_residual <= 1e-12);
}

TEST_CASE("active-set solution matches exhaustive enumeration on random simplex QPs") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed);
    const int n = 2 + static_cast<int>(rng.below(6));
    const QpProblem qp = random_simplex_qp(rng, n);
    const QpSolution got = solve_qp(qp);
    const QpSolution want = brute_force_simplex_qp(qp);
    REQUIRE(std::isfinite(want.objective));
    CHECK(got.objective == doctest::Approx(want.objective).epsilon(1e-9));
    CHECK((got.x - want.x).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(got.kkt_residual <= 1e-9);
  }
}

TEST_CASE("nonnegativity constraints never improve the optimum") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    Rng rng(seed);
    const int n = 2 + static_cast<int>(rng.below(5));
    QpProblem qp = random_simplex_qp(rng, n);
    const double constrained = solve_qp(qp).objective;
    qp.nonneg = false;
    const double unconstrained = solve_qp(qp).objective;
    CHECK(constrained >= unconstrained - 1e-10);
  }
}

TEST_CASE("warm starts land on the same unique optimum") {
  Rng rng(7);
  const QpProblem qp = random_simplex_qp(rng, 5);
  const QpSolution cold = solve_qp(qp);
  for (int trial = 0; trial < 5; ++trial) {
    // Random feasible point on the simplex.
    Eigen::VectorXd x0(5);
    double total = 0.0;
    for (int j = 0; j < 5; ++j) {
      x0(j) = -std::log(1.0 - rng.uniform01());
      total += x0(j);
    }
    x0 /= total;
    const QpSolution warm = solve_qp(qp, x0);
    CHECK((warm.x - cold.x).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("kkt_breakdown flags perturbed and infeasible points") {
  Rng rng(11);
  const QpProblem qp = random_simplex_qp(rng, 4);
  const QpSolution sol = solve_qp(qp);
  CHECK(kkt_residual(qp, sol.x) <= 1e-9);

  Eigen::VectorXd bad = sol.x;
  bad(0) += 0.01;
  bad(1) -= 0.01;  // keeps the sum, breaks stationarity
  CHECK(kkt_residual(qp, bad) > 1e-3);

  // A point that is stationary for the sum-to-two problem violates only the
  // feasibility block of the sum-to-one problem.
  QpProblem shifted = qp;
  shifted.b_eq(0) = 2.0;
  const Eigen::VectorXd x2 = solve_qp(shifted).x;
  const KktBreakdown b = kkt_breakdown(qp, x2);
  CHECK(b.feasibility == doctest::Approx(1.0));
  CHECK(b.feasibility == doctest::Approx(b.max()));
}

TEST_CASE("inconsistent warm starts are rejected") {
  Rng rng(13);
  const QpProblem qp = random_simplex_qp(rng, 3);
  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3);  // sums to 3, not 1
  CHECK_THROWS_AS(solve_qp(qp, x0), UsageError);
}

#include "paneldesign/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "paneldesign/errors.hpp"
#include "paneldesign/rng.hpp"

namespace paneldesign {

namespace {

void validate_problem(const Panel& panel, const DesignProblem& p) {
  if (p.k < 1 || p.k > panel.n_units() - 1) {
    throw UsageError("K=" + std::to_string(p.k) + " must be in [1, " +
                     std::to_string(panel.n_units() - 1) + "]");
  }
  if (panel.t_pre < 1) throw UsageError("panel has no pre-treatment periods");
  // Zero is reserved for the closed-form oracle paths; selection needs the
  // strict convexity of a positive ridge so duplicate series cannot tie.
  if (p.lambda <= 0.0) throw UsageError("selection requires a positive ridge penalty");
}

// Lexicographically next K-combination of {0..n-1}; false when exhausted.
bool next_combination(std::vector<int>& comb, int n) {
  const int k = static_cast<int>(comb.size());
  int i = k - 1;
  while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++comb[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j) {
    comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  }
  return true;
}

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct Candidate {
  std::vector<int> treated;
  double objective = std::numeric_limits<double>::infinity();
};

// Better objective wins; exact ties go to the lexicographically smaller set.
bool better(const Candidate& a, const Candidate& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  return lex_less(a.treated, b.treated);
}

Candidate enumerate_all(const Eigen::MatrixXd& pre, const DesignProblem& p) {
  const int n = static_cast<int>(pre.rows());
  std::vector<int> comb(static_cast<std::size_t>(p.k));
  for (int i = 0; i < p.k; ++i) comb[static_cast<std::size_t>(i)] = i;

  Candidate best;
  do {
    const double obj = empirical_objective(pre, comb, p.lambda, p.variant, p.cons);
    if (obj < best.objective) {
      best.objective = obj;
      best.treated = comb;
    }
  } while (next_combination(comb, n));
  return best;
}

Candidate local_search(const Eigen::MatrixXd& pre, const DesignProblem& p) {
  const int n = static_cast<int>(pre.rows());
  Candidate best;
  for (int r = 0; r < std::max(1, p.restarts); ++r) {
    Rng rng = Rng::stream(p.seed, 0x10ca15ea, static_cast<std::uint64_t>(r));
    Candidate cur;
    cur.treated = rng.sample_without_replacement(n, p.k);
    cur.objective = empirical_objective(pre, cur.treated, p.lambda, p.variant, p.cons);

    for (;;) {
      Candidate step = cur;
      const std::vector<int> controls = control_indices(n, cur.treated);
      for (std::size_t out = 0; out < cur.treated.size(); ++out) {
        for (int in : controls) {
          std::vector<int> next = cur.treated;
          next[out] = in;
          std::sort(next.begin(), next.end());
          Candidate cand{next, empirical_objective(pre, next, p.lambda, p.variant, p.cons)};
          if (better(cand, step)) step = cand;
        }
      }
      if (step.objective < cur.objective - 1e-12) {
        cur = step;
      } else {
        break;
      }
    }
    if (better(cur, best)) best = cur;
  }
  return best;
}

}  // namespace

std::vector<int> treated_indices(const std::vector<int>& d) {
  std::vector<int> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] != 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> indicator_of(int n, const std::vector<int>& treated) {
  std::vector<int> d(static_cast<std::size_t>(n), 0);
  for (int i : treated) d[static_cast<std::size_t>(i)] = 1;
  return d;
}

std::int64_t n_choose_k(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t c = 1;
  const std::int64_t cap = std::numeric_limits<std::int64_t>::max();
  for (int i = 1; i <= k; ++i) {
    if (c > cap / (n - k + i)) return cap;
    c = c * (n - k + i) / i;
  }
  return c;
}

Design select_design(const Panel& panel, const DesignProblem& problem) {
  validate_problem(panel, problem);
  const Eigen::MatrixXd pre = panel.pre_block();
  const std::int64_t subsets = n_choose_k(panel.n_units(), problem.k);

  SelectMode mode = problem.mode;
  if (mode == SelectMode::Auto) {
    mode = subsets <= problem.enum_limit ? SelectMode::ExactEnum : SelectMode::LocalSearch;
  }
  if (mode == SelectMode::ExactEnum && subsets > problem.enum_limit) {
    throw SolverError("exact enumeration refused: C(" + std::to_string(panel.n_units()) + "," +
                      std::to_string(problem.k) + ") = " + std::to_string(subsets) +
                      " subsets exceeds the limit of " + std::to_string(problem.enum_limit));
  }

  const Candidate best = mode == SelectMode::ExactEnum ? enumerate_all(pre, problem)
                                                       : local_search(pre, problem);

  Design design;
  design.problem = problem;
  design.d = indicator_of(panel.n_units(), best.treated);
  design.weights = solve_weights(pre, best.treated, problem.lambda, problem.variant, problem.cons);
  design.objective = evaluate_objective(pre, best.treated, problem.lambda, problem.variant,
                                        design.weights);
  design.exact = (mode == SelectMode::ExactEnum);
  return design;
}

Design random_design(int n, int k, std::uint64_t seed) {
  if (n < 2) throw UsageError("need at least 2 units");
  if (k < 1 || k > n - 1) {
    throw UsageError("K=" + std::to_string(k) + " must leave at least one treated and one control unit");
  }
  Rng rng(seed);
  Design design;
  design.d = indicator_of(n, rng.sample_without_replacement(n, k));
  design.objective = std::numeric_limits<double>::quiet_NaN();
  design.exact = false;
  design.problem.k = k;
  design.problem.seed = seed;
  return design;
}

bool VerifyReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

VerifyReport verify_design(const Panel& panel, const DesignProblem& problem, const Design& design) {
  VerifyReport report;
  auto add = [&](std::string name, bool pass, double value, double limit, std::string note = "") {
    report.checks.push_back({std::move(name), pass, value, limit, std::move(note)});
  };

  const int n = panel.n_units();
  const std::vector<int> treated = treated_indices(design.d);
  const int card = static_cast<int>(treated.size());
  add("cardinality", static_cast<int>(design.d.size()) == n && card == problem.k,
      static_cast<double>(card), static_cast<double>(problem.k),
      "sum of treatment indicators equals K");
  if (card < 1 || card > n - 1) return report;

  if (!design.weights.fitted()) {
    add("weights-fitted", false, 0.0, 1.0, "design carries no fitted weights");
    return report;
  }

  const Eigen::MatrixXd pre = panel.pre_block();

  if (problem.cons.normalize) {
    double worst = 0.0;
    if (design.weights.per_unit) {
      for (Eigen::Index r = 0; r < design.weights.unit_weights.rows(); ++r) {
        worst = std::max(worst, std::abs(design.weights.unit_weights.row(r).sum() - 1.0));
      }
    } else {
      double st = 0.0, sc = 0.0;
      for (int i = 0; i < n; ++i) {
        (design.d[static_cast<std::size_t>(i)] != 0 ? st : sc) += design.weights.weights(i);
      }
      worst = std::max(std::abs(st - 1.0), std::abs(sc - 1.0));
    }
    add("group-sums", worst <= 1e-8, worst, 1e-8);
  }

  if (problem.cons.nonnegative) {
    const double min_w = design.weights.per_unit ? design.weights.unit_weights.minCoeff()
                                                 : design.weights.weights.minCoeff();
    add("nonnegativity", min_w >= -1e-10, min_w, -1e-10);
  }

  const double recomputed =
      evaluate_objective(pre, treated, problem.lambda, problem.variant, design.weights);
  add("objective-consistent", std::abs(recomputed - design.objective) <= 1e-10,
      std::abs(recomputed - design.objective), 1e-10,
      "stored objective matches its stored weights");

  const double resolved =
      empirical_objective(pre, treated, problem.lambda, problem.variant, problem.cons);
  add("objective-optimal", std::abs(resolved - design.objective) <= 1e-10,
      std::abs(resolved - design.objective), 1e-10,
      "stored objective matches a fresh inner solve");

  const double kkt =
      weight_kkt_residual(pre, treated, problem.lambda, problem.variant, problem.cons,
                          design.weights);
  add("kkt-residual", kkt <= 1e-9, kkt, 1e-9);
  return report;
}

}  // namespace paneldesign

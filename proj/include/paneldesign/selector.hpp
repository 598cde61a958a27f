#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paneldesign/objectives.hpp"
#include "paneldesign/panel.hpp"

namespace paneldesign {

enum class SelectMode { ExactEnum, LocalSearch, Auto };

struct DesignProblem {
  Variant variant = Variant::TwoWay;
  int k = 1;
  double lambda = 1.0;
  WeightConstraints cons;
  SelectMode mode = SelectMode::Auto;
  std::int64_t enum_limit = 200000;
  int restarts = 20;
  std::uint64_t seed = 0;
};

struct Design {
  std::vector<int> d;  // 0/1 indicator, length N
  WeightSolution weights;
  double objective = 0.0;
  bool exact = false;  // true iff produced by full enumeration
  DesignProblem problem;
};

std::vector<int> treated_indices(const std::vector<int>& d);
std::vector<int> indicator_of(int n, const std::vector<int>& treated);

// C(n, k), saturating at the maximum representable value.
std::int64_t n_choose_k(int n, int k);

// Chooses the treated set by minimizing the variant's design objective over
// K-subsets: full enumeration when C(N,K) fits the limit, otherwise
// restarted single-swap descent. Ties break toward the lexicographically
// smallest sorted treated tuple; deterministic given problem.seed.
Design select_design(const Panel& panel, const DesignProblem& problem);

// Uniform K-subset; weights left unfitted.
Design random_design(int n, int k, std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string note;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

// Re-checks feasibility, constraint satisfaction, objective value, and the
// KKT certificate of a design against its problem.
VerifyReport verify_design(const Panel& panel, const DesignProblem& problem, const Design& design);

}  // namespace paneldesign

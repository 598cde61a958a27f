#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paneldesign/estimators.hpp"

namespace paneldesign {

enum class Scheme { IID, MovingBlock };

struct PermutationTest {
  Scheme scheme = Scheme::IID;
  int n_draws = 0;
  double alpha = 0.1;
  double observed_stat = 0.0;
  std::vector<double> reference;
  double p_value = 1.0;
  bool reject = false;
  std::vector<std::string> warnings;
  std::uint64_t seed = 0;
};

// |ATET| / sqrt(number of treated periods).
double test_statistic(const Eigen::VectorXd& per_period_atet, int n_treated_periods);

// Period ordering for one draw. MovingBlock: `draw` is the cyclic shift
// (mod s), so there are at most s distinct orderings. IID: `draw` seeds a
// full shuffle.
std::vector<int> permute_periods(int s, Scheme scheme, std::uint64_t draw);

// Sharp-null test with the treated set held fixed: each draw reorders the
// periods, refits the method's weights on the permuted pre block, and scores
// the statistic on the permuted treated block. p-value uses the add-one
// convention (1 + #{reference >= observed}) / (1 + n_draws); rejection
// compares the observed statistic against the (1 - alpha) empirical quantile
// of the reference draws.
PermutationTest permutation_test(const Panel& panel, const Design& design, Method method,
                                 Scheme scheme, int n_draws, double alpha, std::uint64_t seed,
                                 int threads = 1);

}  // namespace paneldesign

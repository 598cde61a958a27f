#include "paneldesign/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "paneldesign/errors.hpp"
#include "paneldesign/parallel.hpp"
#include "paneldesign/rng.hpp"

namespace paneldesign {

namespace {

Panel reorder_periods(const Panel& p, const std::vector<int>& order) {
  Panel out = p;
  for (std::size_t t = 0; t < order.size(); ++t) {
    out.y.col(static_cast<Eigen::Index>(t)) = p.y.col(order[t]);
    out.period_ids[t] = p.period_ids[static_cast<std::size_t>(order[t])];
  }
  return out;
}

}  // namespace

double test_statistic(const Eigen::VectorXd& per_period_atet, int n_treated_periods) {
  if (n_treated_periods < 1) throw UsageError("need at least one treated period");
  if (per_period_atet.size() != n_treated_periods) {
    throw UsageError("per-period estimate length does not match the treated period count");
  }
  return std::abs(per_period_atet.mean()) / std::sqrt(static_cast<double>(n_treated_periods));
}

std::vector<int> permute_periods(int s, Scheme scheme, std::uint64_t draw) {
  if (s < 1) throw UsageError("need at least one period");
  std::vector<int> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  if (scheme == Scheme::MovingBlock) {
    const int shift = static_cast<int>(draw % static_cast<std::uint64_t>(s));
    std::rotate(order.begin(), order.begin() + shift, order.end());
  } else {
    Rng rng(draw);
    rng.shuffle(order);
  }
  return order;
}

PermutationTest permutation_test(const Panel& panel, const Design& design, Method method,
                                 Scheme scheme, int n_draws, double alpha, std::uint64_t seed,
                                 int threads) {
  const int s = panel.n_periods();
  const int p = panel.n_post();
  if (p < 1) throw DataError("panel has no treated periods to test");
  if (n_draws < 1) throw UsageError("need at least one permutation draw");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  const std::vector<int> treated = treated_indices(design.d);
  validate_treated(panel.n_units(), treated);

  PermutationTest test;
  test.scheme = scheme;
  test.alpha = alpha;
  test.seed = seed;
  if (scheme == Scheme::MovingBlock && n_draws > s) {
    test.warnings.push_back("moving-block draws capped at the " + std::to_string(s) +
                            " distinct cyclic shifts");
    n_draws = s;
  }
  test.n_draws = n_draws;

  const double lambda = design.problem.lambda;
  const WeightConstraints cons = design.problem.cons;
  auto stat_for_order = [&](const std::vector<int>& order) {
    const Panel permuted = reorder_periods(panel, order);
    const EffectEstimate est = estimate_method(permuted, treated, method, lambda, cons);
    return test_statistic(est.per_period_atet, p);
  };

  std::vector<int> identity(static_cast<std::size_t>(s));
  std::iota(identity.begin(), identity.end(), 0);
  test.observed_stat = stat_for_order(identity);

  test.reference.assign(static_cast<std::size_t>(n_draws), 0.0);
  parallel_for(n_draws, threads, [&](std::int64_t d) {
    const std::uint64_t draw_key =
        scheme == Scheme::MovingBlock
            ? static_cast<std::uint64_t>(d + 1)
            : Rng::stream(seed, 0x9e2f, static_cast<std::uint64_t>(d + 1)).next_u64();
    const std::vector<int> order = permute_periods(s, scheme, draw_key);
    test.reference[static_cast<std::size_t>(d)] = stat_for_order(order);
  });

  int n_ge = 0;
  for (double r : test.reference) n_ge += (r >= test.observed_stat) ? 1 : 0;
  test.p_value = (1.0 + n_ge) / (1.0 + n_draws);

  std::vector<double> sorted = test.reference;
  std::sort(sorted.begin(), sorted.end());
  // Smallest reference value with at least a (1 - alpha) fraction at or
  // below it. The epsilon keeps 0.9 * 40 from rounding up to 37 entries.
  const int idx = std::max(
      0, static_cast<int>(std::ceil((1.0 - alpha) * n_draws - 1e-9)) - 1);
  const double quantile = sorted[static_cast<std::size_t>(std::min(idx, n_draws - 1))];
  test.reject = test.observed_stat > quantile;
  return test;
}

}  // namespace paneldesign

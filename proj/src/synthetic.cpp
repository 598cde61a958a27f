#include "paneldesign/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "paneldesign/rng.hpp"

namespace paneldesign {

namespace {

const char* kStateCodes[50] = {
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "ID", "IL",
    "IN", "IA", "KS", "KY", "LA", "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT",
    "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI",
    "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY"};

// AR(1) path started from its stationary distribution.
std::vector<double> ar1_path(Rng& rng, int len, double rho, double innovation_sd) {
  std::vector<double> path(static_cast<std::size_t>(len));
  const double stationary_sd = innovation_sd / std::sqrt(1.0 - rho * rho);
  path[0] = stationary_sd * rng.normal();
  for (int t = 1; t < len; ++t) {
    path[static_cast<std::size_t>(t)] =
        rho * path[static_cast<std::size_t>(t - 1)] + innovation_sd * rng.normal();
  }
  return path;
}

}  // namespace

Panel make_synthetic_urate_panel(int n_units, int n_periods, int t_pre, std::uint64_t seed) {
  Rng rng(seed);

  // Unit heterogeneity is dominated by time-constant levels and factor
  // loadings; the shocks themselves are only mildly persistent, which keeps
  // time periods close to exchangeable for the permutation machinery.
  std::vector<double> level(static_cast<std::size_t>(n_units));
  std::vector<double> national_load(static_cast<std::size_t>(n_units));
  std::vector<double> cyclical_load(static_cast<std::size_t>(n_units));
  for (int i = 0; i < n_units; ++i) {
    level[static_cast<std::size_t>(i)] = 0.035 + 0.045 * rng.uniform01();
    national_load[static_cast<std::size_t>(i)] = rng.normal(1.0, 0.50);
    cyclical_load[static_cast<std::size_t>(i)] = rng.normal(0.0, 1.0);
  }

  const std::vector<double> national = ar1_path(rng, n_periods, 0.25, 0.0020);
  const std::vector<double> cyclical = ar1_path(rng, n_periods, 0.20, 0.0020);

  Eigen::MatrixXd y(n_units, n_periods);
  for (int i = 0; i < n_units; ++i) {
    const std::vector<double> idio = ar1_path(rng, n_periods, 0.15, 0.0010);
    for (int t = 0; t < n_periods; ++t) {
      double v = level[static_cast<std::size_t>(i)] +
                 national_load[static_cast<std::size_t>(i)] * national[static_cast<std::size_t>(t)] +
                 cyclical_load[static_cast<std::size_t>(i)] * cyclical[static_cast<std::size_t>(t)] +
                 idio[static_cast<std::size_t>(t)];
      y(i, t) = std::clamp(v, 0.008, 0.25);
    }
  }

  std::vector<std::string> unit_ids;
  unit_ids.reserve(static_cast<std::size_t>(n_units));
  for (int i = 0; i < n_units; ++i) {
    unit_ids.push_back(i < 50 ? std::string(kStateCodes[i]) : "U" + std::to_string(i + 1));
  }
  std::vector<std::string> period_ids;
  period_ids.reserve(static_cast<std::size_t>(n_periods));
  for (int t = 0; t < n_periods; ++t) period_ids.push_back("m" + std::to_string(t + 1));

  return make_panel(std::move(unit_ids), std::move(period_ids), std::move(y), t_pre);
}

}  // namespace paneldesign

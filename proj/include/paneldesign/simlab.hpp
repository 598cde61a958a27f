#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paneldesign/inference.hpp"

namespace paneldesign {

enum class EffectMode { Homogeneous, HeterogeneousLinear, PowerStudy };
enum class LambdaRule { VarianceAvg, CrossValidation, Fixed };

struct SimConfig {
  int n_sims = 500;
  int sub_units = 10;
  int sub_periods = 10;
  int t_pre = 7;
  int k = 3;
  EffectMode effect_mode = EffectMode::Homogeneous;
  double tau = 0.05;
  std::vector<Method> methods = {Method::PerUnit, Method::TwoWay, Method::OneWay,
                                 Method::SyntheticControlRandom, Method::DiffInMeansRandom};
  LambdaRule lambda_rule = LambdaRule::VarianceAvg;
  double fixed_lambda = 0.0;
  std::vector<double> cv_grid;  // empty -> multiplicative grid around the variance rule
  int cv_split = 0;             // 0 -> floor(2/3 * t_pre)
  WeightConstraints cons;
  SelectMode mode = SelectMode::Auto;
  std::int64_t enum_limit = 200000;
  int restarts = 20;
  // power study
  std::vector<double> tau_grid = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
  int n_draws = 40;
  double alpha = 0.10;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all cores
};

struct MethodRmse {
  Method method = Method::DiffInMeansRandom;
  double atet_rmse = 0.0;
  double unit_rmse = 0.0;
};

struct PowerPoint {
  Method method = Method::DiffInMeansRandom;
  Scheme scheme = Scheme::IID;
  double tau = 0.0;
  double reject_rate = 0.0;
};

struct SimulationReport {
  SimConfig config;
  std::vector<MethodRmse> rmse;
  std::vector<PowerPoint> power;
  std::vector<std::string> warnings;
};

// Mean over units of the per-unit population variance (divide by T) of the
// pre-period outcomes. Returns 0 for constant rows; callers must replace a
// degenerate zero before solving.
double select_lambda_variance(const Eigen::MatrixXd& pre);

// Splits the pre block into consecutive training and validation periods,
// designs on the training block per grid value, and scores the validation
// block as a zero-effect experiment; returns the grid value with the lowest
// validation RMSE (ties go to the smaller penalty).
double select_lambda_cv(const Panel& panel, const DesignProblem& problem,
                        const std::vector<double>& grid, int split);

// Effects vector over all units for the chosen mode, masked to the treated
// set. Homogeneous: tau everywhere. HeterogeneousLinear: 0..2*tau by row
// position. PowerStudy: ramp 0..tau over the treated units in row order.
Eigen::VectorXd effect_vector(EffectMode mode, double tau, int n_units,
                              const std::vector<int>& treated);

SimulationReport run_rmse_experiment(const Panel& source, const SimConfig& config);
SimulationReport run_power_experiment(const Panel& source, const SimConfig& config);

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);
std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);
std::string mode_name(SelectMode m);
SelectMode mode_from_name(const std::string& name);
std::string effect_mode_name(EffectMode m);
EffectMode effect_mode_from_name(const std::string& name);

std::string rmse_report_csv(const SimulationReport& report);
std::string power_report_csv(const SimulationReport& report);
std::string power_report_svg(const SimulationReport& report);

}  // namespace paneldesign

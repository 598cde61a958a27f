#include <doctest.h>

#include "paneldesign/errors.hpp"
#include "paneldesign/estimators.hpp"
#include "paneldesign/rng.hpp"

using namespace paneldesign;

namespace {

Panel panel_from_matrix(const Eigen::MatrixXd& y, int t_pre) {
  std::vector<std::string> units, periods;
  for (int i = 0; i < y.rows(); ++i) units.push_back("u" + std::to_string(i + 1));
  for (int t = 0; t < y.cols(); ++t) periods.push_back("t" + std::to_string(t + 1));
  return make_panel(units, periods, y, t_pre);
}

// Four identical units, two pre periods, two post periods.
Panel duplicate_unit_panel() {
  Eigen::MatrixXd y(4, 4);
  for (int i = 0; i < 4; ++i) {
    y.row(i) << 0.05, 0.06, 0.055, 0.052;
  }
  return panel_from_matrix(y, 2);
}

Design fitted_design(const Panel& panel, Variant variant, const std::vector<int>& treated,
                     double lambda) {
  Design d;
  d.d = indicator_of(panel.n_units(), treated);
  d.problem.variant = variant;
  d.problem.k = static_cast<int>(treated.size());
  d.problem.lambda = lambda;
  d.weights = solve_weights(panel.pre_block(), treated, lambda, variant, d.problem.cons);
  d.objective = evaluate_objective(panel.pre_block(), treated, lambda, variant, d.weights);
  return d;
}

}  // namespace

TEST_CASE("per-unit estimates on noiseless duplicate units recover effects exactly") {
  const Panel base = duplicate_unit_panel();
  const std::vector<int> treated = {0, 1, 2};

  SUBCASE("homogeneous 0.05") {
    Eigen::VectorXd tau(4);
    tau << 0.05, 0.05, 0.05, 0.0;
    const Panel outcome = apply_treatment(base, indicator_of(4, treated), {tau, 2});
    const Design d = fitted_design(outcome, Variant::PerUnit, treated, 1e-8);
    const EffectEstimate est = estimate_per_unit(outcome, d);
    for (int r = 0; r < 3; ++r) CHECK(est.unit_effects(r) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(est.atet == doctest::Approx(0.05).epsilon(1e-9));
  }

  SUBCASE("heterogeneous (0, 0.05, 0.1) recovered per unit; ATET is their mean") {
    Eigen::VectorXd tau(4);
    tau << 0.0, 0.05, 0.1, 0.0;
    const Panel outcome = apply_treatment(base, indicator_of(4, treated), {tau, 2});
    const Design d = fitted_design(outcome, Variant::PerUnit, treated, 1e-8);
    const EffectEstimate est = estimate_per_unit(outcome, d);
    CHECK(est.unit_effects(0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(est.unit_effects(1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(est.unit_effects(2) == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(est.atet == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(est.method == Method::PerUnit);
  }

  SUBCASE("a unit whose weights sit on its duplicate recovers tau for any mean pattern") {
    Eigen::MatrixXd y(3, 3);
    y << 0.2, 0.9, 0.4,   // treated, arbitrary path
        0.2, 0.9, 0.4,    // its duplicate
        0.7, 0.1, 0.8;
    Panel p = panel_from_matrix(y, 2);
    Eigen::VectorXd tau(3);
    tau << 0.37, 0.0, 0.0;
    const Panel outcome = apply_treatment(p, {1, 0, 0}, {tau, 1});
    const Design d = fitted_design(outcome, Variant::PerUnit, {0}, 1e-10);
    const EffectEstimate est = estimate_per_unit(outcome, d);
    CHECK(est.unit_effects(0) == doctest::Approx(0.37).epsilon(1e-8));
  }
}

TEST_CASE("weighted ATET estimates") {
  SUBCASE("equal units, homogeneous effect comes back exactly") {
    const Panel base = duplicate_unit_panel();
    Eigen::VectorXd tau = Eigen::VectorXd::Constant(4, 0.05);
    tau(3) = 0.0;
    const Panel outcome = apply_treatment(base, {1, 1, 1, 0}, {tau, 2});
    const Design d = fitted_design(outcome, Variant::TwoWay, {0, 1, 2}, 1e-8);
    const EffectEstimate est = estimate_weighted_atet(outcome, d);
    CHECK(est.atet == doctest::Approx(0.05).epsilon(1e-9));
    // Global methods report all unit effects as the ATET.
    CHECK(est.unit_effects(0) == est.atet);
    CHECK(est.unit_effects(2) == est.atet);
  }

  SUBCASE("one-way averages heterogeneous effects across the treated") {
    const Panel base = duplicate_unit_panel();
    Eigen::VectorXd tau(4);
    tau << 0.0, 0.05, 0.1, 0.0;
    const Panel outcome = apply_treatment(base, {1, 1, 1, 0}, {tau, 2});
    const Design d = fitted_design(outcome, Variant::OneWay, {0, 1, 2}, 1e-8);
    const EffectEstimate est = estimate_weighted_atet(outcome, d);
    CHECK(est.atet == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(est.method == Method::OneWay);
  }

  SUBCASE("the estimand follows the fitted treated weights, not the simple mean") {
    const Panel base = duplicate_unit_panel();
    Eigen::VectorXd tau(4);
    tau << 0.0, 0.05, 0.1, 0.0;
    const Panel outcome = apply_treatment(base, {1, 1, 1, 0}, {tau, 2});
    Design d = fitted_design(outcome, Variant::TwoWay, {0, 1, 2}, 1e-8);
    d.weights.weights(0) = 0.5;  // hand-set treated weights (0.5, 0.5, 0)
    d.weights.weights(1) = 0.5;
    d.weights.weights(2) = 0.0;
    const EffectEstimate est = estimate_weighted_atet(outcome, d);
    CHECK(est.atet == doctest::Approx(0.025).epsilon(1e-9));
  }
}

TEST_CASE("difference in means") {
  SUBCASE("constant panel plus homogeneous effect") {
    Eigen::MatrixXd y = Eigen::MatrixXd::Constant(5, 3, 0.07);
    const Panel base = panel_from_matrix(y, 2);
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(5);
    tau(1) = tau(3) = 0.05;
    const Panel outcome = apply_treatment(base, {0, 1, 0, 1, 0}, {tau, 1});
    const EffectEstimate est = estimate_diff_in_means(outcome, {1, 3});
    CHECK(est.atet == doctest::Approx(0.05));
  }

  SUBCASE("a shifted control group biases the estimate by exactly -delta") {
    Eigen::MatrixXd y(4, 3);
    const double delta = 0.013;
    y.row(0).setConstant(0.05);
    y.row(1).setConstant(0.05);
    y.row(2).setConstant(0.05 + delta);
    y.row(3).setConstant(0.05 + delta);
    const Panel base = panel_from_matrix(y, 2);
    const EffectEstimate est = estimate_diff_in_means(base, {0, 1});  // no effects applied
    CHECK(est.atet == doctest::Approx(-delta).epsilon(1e-12));
  }

  SUBCASE("equals the weighted estimator with uniform weights") {
    Rng rng(113);
    Eigen::MatrixXd y(6, 4);
    for (int i = 0; i < 6; ++i)
      for (int t = 0; t < 4; ++t) y(i, t) = rng.normal();
    const Panel p = panel_from_matrix(y, 2);
    const std::vector<int> treated = {1, 4};
    const EffectEstimate dim = estimate_diff_in_means(p, treated);

    Design d;
    d.d = indicator_of(6, treated);
    d.problem.variant = Variant::OneWay;
    d.weights.weights = Eigen::VectorXd::Constant(6, 0.25);
    d.weights.weights(1) = d.weights.weights(4) = 0.5;
    const EffectEstimate manual = estimate_weighted_atet(p, d);
    CHECK(dim.atet == doctest::Approx(manual.atet).epsilon(1e-12));
  }
}

TEST_CASE("estimators are affine-equivariant in the applied effect") {
  Rng rng(127);
  Eigen::MatrixXd y(6, 5);
  for (int i = 0; i < 6; ++i)
    for (int t = 0; t < 5; ++t) y(i, t) = 0.05 + 0.01 * rng.normal();
  const Panel base = panel_from_matrix(y, 3);
  const std::vector<int> treated = {0, 2};
  const double delta = 0.04;
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(6);
  shift(0) = shift(2) = delta;
  const Panel shifted = apply_treatment(base, indicator_of(6, treated), {shift, 2});

  WeightConstraints cons;
  for (Method m : {Method::PerUnit, Method::TwoWay, Method::OneWay, Method::DiffInMeansRandom}) {
    const double before = estimate_method(base, treated, m, 0.01, cons).atet;
    const double after = estimate_method(shifted, treated, m, 0.01, cons).atet;
    CHECK(after - before == doctest::Approx(delta).epsilon(1e-9));
  }
}

TEST_CASE("Monte-Carlo MSE agrees with the conditional closed form") {
  // Treated unit with an exact-fit duplicate whose weight is one: the
  // squared-weight sum is one, so the unit MSE must equal 2 sigma^2.
  Eigen::MatrixXd mu(3, 3);
  mu << 0.3, 0.7, 0.5,
      0.3, 0.7, 0.5,
      0.9, 0.2, 0.4;
  Design d;
  d.d = {1, 0, 0};
  d.problem.variant = Variant::PerUnit;
  d.weights.per_unit = true;
  d.weights.unit_weights = Eigen::MatrixXd::Zero(1, 3);
  d.weights.unit_weights(0, 1) = 1.0;
  const double sigma2 = 0.01;

  const MseReport report = mse_oracle_check(mu, 2, sigma2, d, 100000, 2024);
  REQUIRE(report.rows.size() == 2);  // atet + one unit row
  const MseCheckRow& unit = report.rows[1];
  CHECK(unit.formula_mse == doctest::Approx(2.0 * sigma2));
  CHECK(std::abs(unit.z) <= 3.0);
  CHECK(std::abs(report.rows[0].z) <= 3.0);

  SUBCASE("zero noise collapses the empirical MSE onto the squared bias") {
    Design biased = d;
    biased.weights.unit_weights(0, 1) = 0.0;
    biased.weights.unit_weights(0, 2) = 1.0;  // mismatched control
    const MseReport exact = mse_oracle_check(mu, 2, 0.0, biased, 100, 1);
    const double bias = mu(0, 2) - mu(2, 2);
    CHECK(exact.rows[1].empirical_mse == doctest::Approx(bias * bias).epsilon(1e-12));
    CHECK(exact.rows[1].formula_mse == doctest::Approx(bias * bias).epsilon(1e-12));
  }

  SUBCASE("doubling sigma^2 doubles the variance component of the formula") {
    const MseReport r1 = mse_oracle_check(mu, 2, sigma2, d, 100, 1);
    const MseReport r2 = mse_oracle_check(mu, 2, 2.0 * sigma2, d, 100, 1);
    const double var1 = r1.rows[1].formula_mse - r1.rows[1].bias * r1.rows[1].bias;
    const double var2 = r2.rows[1].formula_mse - r2.rows[1].bias * r2.rows[1].bias;
    CHECK(var2 == doctest::Approx(2.0 * var1).epsilon(1e-12));
  }
}

TEST_CASE("weighted-design MSE check uses the global weight vector") {
  Eigen::MatrixXd mu(4, 3);
  mu << 0.5, 0.6, 0.55,
      0.4, 0.5, 0.45,
      0.5, 0.6, 0.52,
      0.4, 0.5, 0.48;
  Design d;
  d.d = {1, 1, 0, 0};
  d.problem.variant = Variant::TwoWay;
  d.weights.weights = Eigen::VectorXd(4);
  d.weights.weights << 0.5, 0.5, 0.6, 0.4;
  const double sigma2 = 0.0025;
  const MseReport report = mse_oracle_check(mu, 2, sigma2, d, 100000, 77);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].formula_mse ==
        doctest::Approx(report.rows[0].bias * report.rows[0].bias +
                        sigma2 * d.weights.weights.squaredNorm()));
  CHECK(std::abs(report.rows[0].z) <= 3.0);
}

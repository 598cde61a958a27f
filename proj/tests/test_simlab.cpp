#include <doctest.h>

#include "paneldesign/errors.hpp"
#include "paneldesign/rng.hpp"
#include "paneldesign/simlab.hpp"
#include "paneldesign/synthetic.hpp"

using namespace paneldesign;

namespace {

Panel panel_from_matrix(const Eigen::MatrixXd& y, int t_pre) {
  std::vector<std::string> units, periods;
  for (int i = 0; i < y.rows(); ++i) units.push_back("u" + std::to_string(i + 1));
  for (int t = 0; t < y.cols(); ++t) periods.push_back("t" + std::to_string(t + 1));
  return make_panel(units, periods, y, t_pre);
}

}  // namespace

TEST_CASE("variance penalty rule") {
  SUBCASE("constant rows are degenerate") {
    CHECK(select_lambda_variance(Eigen::MatrixXd::Constant(4, 3, 0.9)) == 0.0);
  }
  SUBCASE("two-period formula") {
    Eigen::MatrixXd pre(2, 2);
    pre << 0.0, 2.0,
        2.0, 4.0;
    // sum_i (y_i1 - y_i2)^2 / (4N) = (4 + 4) / 8 = 1.
    CHECK(select_lambda_variance(pre) == doctest::Approx(1.0));
  }
  SUBCASE("quadratic in the outcome scale") {
    Rng rng(149);
    Eigen::MatrixXd pre(5, 4);
    for (int i = 0; i < 5; ++i)
      for (int t = 0; t < 4; ++t) pre(i, t) = rng.normal();
    const double base = select_lambda_variance(pre);
    CHECK(select_lambda_variance(3.0 * pre) == doctest::Approx(9.0 * base).epsilon(1e-12));
  }
}

TEST_CASE("cross-validated penalty selection") {
  // Controls span the treated series exactly with weights (0.6, 0.4): a
  // small penalty wins the validation score; a huge one forces near-uniform
  // weights and loses.
  Rng rng(151);
  const int periods = 12;
  Eigen::MatrixXd y(5, periods);
  for (int t = 0; t < periods; ++t) {
    y(1, t) = 0.05 + 0.02 * rng.normal();
    y(2, t) = 0.05 + 0.02 * rng.normal();
    y(3, t) = 0.11 + 0.015 * rng.normal();
    y(4, t) = 0.02 + 0.01 * rng.normal();
    y(0, t) = 0.6 * y(1, t) + 0.4 * y(2, t);
  }
  const Panel panel = panel_from_matrix(y, 10);
  DesignProblem p;
  p.variant = Variant::PerUnit;
  p.k = 1;
  p.mode = SelectMode::ExactEnum;

  SUBCASE("single-element grids are returned unchanged") {
    CHECK(select_lambda_cv(panel, p, {0.37}, 6) == 0.37);
  }
  SUBCASE("a well-fitting penalty beats a huge one") {
    CHECK(select_lambda_cv(panel, p, {1e-4, 1e6}, 6) == 1e-4);
  }
  SUBCASE("deterministic") {
    const double a = select_lambda_cv(panel, p, {1e-4, 1e-2, 1.0}, 6);
    const double b = select_lambda_cv(panel, p, {1e-4, 1e-2, 1.0}, 6);
    CHECK(a == b);
  }
  SUBCASE("bad splits are rejected") {
    CHECK_THROWS_AS(select_lambda_cv(panel, p, {0.1}, 0), UsageError);
    CHECK_THROWS_AS(select_lambda_cv(panel, p, {0.1}, 10), UsageError);
  }
}

TEST_CASE("effect vectors") {
  SUBCASE("homogeneous masks to the treated set") {
    const Eigen::VectorXd e = effect_vector(EffectMode::Homogeneous, 0.05, 5, {1, 3});
    CHECK(e(1) == 0.05);
    CHECK(e(3) == 0.05);
    CHECK(e(0) == 0.0);
    CHECK(e(4) == 0.0);
  }
  SUBCASE("heterogeneous ramps 0..2tau by row position") {
    const Eigen::VectorXd e = effect_vector(EffectMode::HeterogeneousLinear, 0.05, 5, {0, 2, 4});
    CHECK(e(0) == doctest::Approx(0.0));
    CHECK(e(2) == doctest::Approx(0.05));
    CHECK(e(4) == doctest::Approx(0.1));
    CHECK(e(1) == 0.0);  // untreated stays zero
  }
  SUBCASE("power ramp covers 0, tau/2, tau for three treated units") {
    const Eigen::VectorXd e = effect_vector(EffectMode::PowerStudy, 0.04, 6, {1, 2, 5});
    CHECK(e(1) == doctest::Approx(0.0));
    CHECK(e(2) == doctest::Approx(0.02));
    CHECK(e(5) == doctest::Approx(0.04));
  }
}

TEST_CASE("zero-noise identical units give zero RMSE for every method") {
  // Constant rows also force the degenerate-penalty fallback.
  const Eigen::MatrixXd y = Eigen::MatrixXd::Constant(12, 8, 0.05);
  const Panel source = panel_from_matrix(y, 6);

  SimConfig config;
  config.n_sims = 5;
  config.sub_units = 5;
  config.sub_periods = 8;
  config.t_pre = 6;
  config.k = 2;
  config.tau = 0.05;
  config.seed = 9;
  config.threads = 1;
  const SimulationReport report = run_rmse_experiment(source, config);
  REQUIRE(report.rmse.size() == 5);
  for (const auto& row : report.rmse) {
    CHECK(row.atet_rmse <= 1e-9);
    CHECK(row.unit_rmse <= 1e-9);
  }
  // Constant rows force the degenerate-penalty fallback.
  CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("rmse experiment reproduces bitwise under one seed") {
  const Panel source = make_synthetic_urate_panel(30, 20, 16, 5);
  SimConfig config;
  config.n_sims = 6;
  config.sub_units = 8;
  config.sub_periods = 10;
  config.t_pre = 7;
  config.k = 3;
  config.seed = 1234;
  config.threads = 4;

  const SimulationReport a = run_rmse_experiment(source, config);
  const SimulationReport b = run_rmse_experiment(source, config);
  CHECK(rmse_report_csv(a) == rmse_report_csv(b));

  SimConfig serial = config;
  serial.threads = 1;
  const SimulationReport c = run_rmse_experiment(source, serial);
  CHECK(rmse_report_csv(a) == rmse_report_csv(c));  // thread count cannot matter
}

TEST_CASE("per-unit rows match across homogeneous and heterogeneous effects") {
  const Panel source = make_synthetic_urate_panel(30, 20, 16, 6);
  SimConfig config;
  config.n_sims = 8;
  config.sub_units = 8;
  config.sub_periods = 10;
  config.t_pre = 7;
  config.k = 3;
  config.seed = 777;
  config.threads = 2;
  config.methods = {Method::PerUnit};

  config.effect_mode = EffectMode::Homogeneous;
  const SimulationReport homo = run_rmse_experiment(source, config);
  config.effect_mode = EffectMode::HeterogeneousLinear;
  const SimulationReport hetero = run_rmse_experiment(source, config);

  CHECK(homo.rmse[0].atet_rmse == doctest::Approx(hetero.rmse[0].atet_rmse).epsilon(1e-9));
  CHECK(homo.rmse[0].unit_rmse == doctest::Approx(hetero.rmse[0].unit_rmse).epsilon(1e-9));
}

TEST_CASE("power experiment smoke run") {
  const Panel source = make_synthetic_urate_panel(30, 16, 12, 8);
  SimConfig config;
  config.n_sims = 10;
  config.sub_units = 8;
  config.sub_periods = 12;
  config.t_pre = 9;
  config.k = 3;
  config.methods = {Method::OneWay, Method::DiffInMeansRandom};
  config.tau_grid = {0.0, 0.5};
  config.n_draws = 9;
  config.alpha = 0.10;
  config.seed = 4321;
  config.threads = 4;

  const SimulationReport report = run_power_experiment(source, config);
  REQUIRE(report.power.size() == 2 * 2 * 2);  // methods x schemes x taus
  for (const auto& pt : report.power) {
    CHECK(pt.reject_rate >= 0.0);
    CHECK(pt.reject_rate <= 1.0);
  }
  // A ten-sigma effect must dominate the null rejection rate.
  for (Method m : config.methods) {
    for (Scheme s : {Scheme::IID, Scheme::MovingBlock}) {
      double at_zero = -1.0, at_big = -1.0;
      for (const auto& pt : report.power) {
        if (pt.method == m && pt.scheme == s) {
          (pt.tau == 0.0 ? at_zero : at_big) = pt.reject_rate;
        }
      }
      CHECK(at_big >= at_zero);
      CHECK(at_big >= 0.8);
    }
  }

  const SimulationReport again = run_power_experiment(source, config);
  CHECK(power_report_csv(report) == power_report_csv(again));
  const std::string svg = power_report_svg(report);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

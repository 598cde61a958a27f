#include <doctest.h>

#include "paneldesign/errors.hpp"
#include "paneldesign/mip.hpp"
#include "paneldesign/rng.hpp"

using namespace paneldesign;

namespace {

Panel panel_from_matrix(const Eigen::MatrixXd& y, int t_pre) {
  std::vector<std::string> units, periods;
  for (int i = 0; i < y.rows(); ++i) units.push_back("u" + std::to_string(i + 1));
  for (int t = 0; t < y.cols(); ++t) periods.push_back("t" + std::to_string(t + 1));
  return make_panel(units, periods, y, t_pre);
}

Panel random_panel(Rng& rng, int n, int s, int t_pre) {
  Eigen::MatrixXd y(n, s);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < s; ++t) y(i, t) = rng.normal();
  return panel_from_matrix(y, t_pre);
}

const MipRow* find_row(const MipModel& m, const std::string& name) {
  for (const auto& r : m.rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("per-unit model has the expected variable counts") {
  Rng rng(89);
  const Panel panel = random_panel(rng, 3, 3, 2);  // N=3, T=2 pre periods
  DesignProblem p;
  p.variant = Variant::PerUnit;
  p.k = 1;
  p.lambda = 0.5;
  const MipModel m = export_mip(panel, p);
  CHECK(m.count(VarKind::Binary) == 3);
  CHECK(m.count(VarKind::Continuous) == 9 + 9);  // w and q
  CHECK(m.count(VarKind::Free) == 6);            // z, one per unit-period
  CHECK(m.var_index("D_1") >= 0);
  CHECK(m.var_index("W_3_2") >= 0);
  CHECK(m.var_index("Q_2_3") >= 0);
  CHECK(m.var_index("Z_3_2") >= 0);
}

TEST_CASE("two-way model carries the sum-to-two weight row") {
  Rng rng(97);
  const Panel panel = random_panel(rng, 5, 4, 3);
  DesignProblem p;
  p.variant = Variant::TwoWay;
  p.k = 2;
  p.lambda = 0.5;
  const MipModel m = export_mip(panel, p);

  const MipRow* wsum = find_row(m, "WSUM");
  REQUIRE(wsum != nullptr);
  CHECK(wsum->sense == RowSense::Eq);
  CHECK(wsum->rhs == 2.0);
  CHECK(wsum->terms.size() == 5);
  for (const auto& term : wsum->terms) {
    CHECK(term.coef == 1.0);
    CHECK(m.vars[static_cast<std::size_t>(term.var)].name.starts_with("W_"));
  }

  const MipRow* card = find_row(m, "CARD");
  REQUIRE(card != nullptr);
  CHECK(card->rhs == 2.0);

  const std::string mps = to_mps(m);
  CHECK(mps.find("NAME          TWOWAY") != std::string::npos);
  CHECK(mps.find("QMATRIX") != std::string::npos);
  CHECK(mps.find("ENDATA") != std::string::npos);
  CHECK(mps.find("WSUM") != std::string::npos);
}

TEST_CASE("one-way model pins q to D/K") {
  Rng rng(101);
  const Panel panel = random_panel(rng, 4, 3, 2);
  DesignProblem p;
  p.variant = Variant::OneWay;
  p.k = 2;
  p.lambda = 0.5;
  const MipModel m = export_mip(panel, p);
  const MipRow* qf = find_row(m, "QFRAC_1");
  REQUIRE(qf != nullptr);
  CHECK(qf->sense == RowSense::Eq);
  REQUIRE(qf->terms.size() == 2);
  CHECK(qf->terms[1].coef == doctest::Approx(-0.5));
}

TEST_CASE("round trip: induced assignments are feasible and reproduce the objective") {
  Rng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(4));
    const int t_pre = 1 + static_cast<int>(rng.below(3));
    const Panel panel = random_panel(rng, n, t_pre + 1, t_pre);
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));

    for (Variant v : {Variant::PerUnit, Variant::OneWay, Variant::TwoWay}) {
      DesignProblem p;
      p.variant = v;
      p.k = k;
      p.lambda = 0.4 + rng.uniform01();
      p.mode = SelectMode::ExactEnum;
      const Design design = select_design(panel, p);
      const MipModel model = export_mip(panel, p);
      const MipAssignment values = mip_assignment_for_design(panel, p, design);

      CHECK(mip_max_violation(model, values) <= 1e-9);
      const double model_obj = mip_objective(model, values);
      CHECK(model_obj == doctest::Approx(design.objective).epsilon(1e-9));
    }
  }
}

TEST_CASE("k-free exports") {
  Rng rng(107);
  const Panel panel = random_panel(rng, 4, 3, 2);
  DesignProblem p;
  p.k = 2;
  p.lambda = 0.5;

  SUBCASE("per-unit gains the fractional objective machinery") {
    p.variant = Variant::PerUnit;
    const MipModel m = export_mip(panel, p, true);
    CHECK(m.var_index("Y") >= 0);
    CHECK(find_row(m, "CARD") == nullptr);
    CHECK(find_row(m, "DMIN") != nullptr);
    REQUIRE(m.quad_rows.size() == 1);
    CHECK(m.quad_rows[0].name == "FRAC");
    CHECK(m.obj_quad.empty());  // objective is the single linear y term
    REQUIRE(m.obj_linear.size() == 1);

    const std::string mps = to_mps(m);
    CHECK(mps.find("QCMATRIX FRAC") != std::string::npos);

    // A feasible fixed-K design satisfies the fractional constraint when the
    // auxiliary objective variable carries the per-unit objective value.
    DesignProblem fixed = p;
    fixed.mode = SelectMode::ExactEnum;
    const Design design = select_design(panel, fixed);
    MipAssignment values = mip_assignment_for_design(panel, fixed, design);
    values["Y"] = design.objective;
    CHECK(mip_max_violation(m, values) <= 1e-9);
    CHECK(mip_objective(m, values) == doctest::Approx(design.objective));
  }

  SUBCASE("two-way merely drops the cardinality row") {
    p.variant = Variant::TwoWay;
    const MipModel m = export_mip(panel, p, true);
    CHECK(find_row(m, "CARD") == nullptr);
    CHECK(m.var_index("Y") == -1);
  }

  SUBCASE("one-way k-free is refused") {
    p.variant = Variant::OneWay;
    CHECK_THROWS_AS(export_mip(panel, p, true), UsageError);
  }
}

TEST_CASE("assignment evaluation catches tampering") {
  Rng rng(109);
  const Panel panel = random_panel(rng, 4, 3, 2);
  DesignProblem p;
  p.variant = Variant::TwoWay;
  p.k = 1;
  p.lambda = 0.8;
  p.mode = SelectMode::ExactEnum;
  const Design design = select_design(panel, p);
  const MipModel model = export_mip(panel, p);
  MipAssignment values = mip_assignment_for_design(panel, p, design);
  values["W_2"] += 0.25;  // breaks WSUM (and possibly the q linking rows)
  CHECK(mip_max_violation(model, values) > 0.2);
}

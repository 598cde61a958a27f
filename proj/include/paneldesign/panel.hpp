#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace paneldesign {

// Wide outcome panel: one row per unit, one column per period. The first
// t_pre columns are the periods observed before any treatment decision.
// Immutable after construction; safe to share across threads.
struct Panel {
  std::vector<std::string> unit_ids;
  std::vector<std::string> period_ids;
  Eigen::MatrixXd y;  // n_units x n_periods, outcome levels
  int t_pre = 0;

  int n_units() const { return static_cast<int>(y.rows()); }
  int n_periods() const { return static_cast<int>(y.cols()); }
  int n_post() const { return n_periods() - t_pre; }
  Eigen::MatrixXd pre_block() const { return y.leftCols(t_pre); }
  Eigen::MatrixXd post_block() const { return y.rightCols(n_post()); }
};

// Additive per-unit effect applied to every post-treatment period.
struct TreatmentScenario {
  Eigen::VectorXd effects;  // length n_units; zero for untreated units
  int treated_periods = 0;  // must equal n_periods - t_pre
};

// Validates invariants (finite outcomes, N >= 2, 1 <= t_pre <= S, unique
// unit ids) and throws DataError on violation.
Panel make_panel(std::vector<std::string> unit_ids, std::vector<std::string> period_ids,
                 Eigen::MatrixXd y, int t_pre);

// Wide CSV: header row of period labels (first cell ignored), then one row
// per unit: id followed by one numeric cell per period.
Panel load_panel_csv(const std::string& csv_text, int t_pre);
Panel load_panel_file(const std::string& path, int t_pre);
std::string panel_to_csv(const Panel& p);

// Uniform unit subset (source row order preserved) and a uniform contiguous
// period window; deterministic given seed.
Panel subsample(const Panel& src, int n_units, int n_periods, int t_pre, std::uint64_t seed);

// Y_it += d_i * effects_i on post-treatment columns only.
Panel apply_treatment(const Panel& p, const std::vector<int>& d, const TreatmentScenario& s);

}  // namespace paneldesign

#include "paneldesign/weights.hpp"

#include <algorithm>
#include <cmath>

#include "paneldesign/errors.hpp"

namespace paneldesign {

namespace {

void check_lambda(double lambda, const WeightConstraints& cons) {
  if (lambda < 0.0) throw UsageError("ridge penalty must be nonnegative");
  if (lambda == 0.0 && cons.nonnegative) {
    throw UsageError("ridge penalty must be positive when nonnegativity is enforced");
  }
}

struct GroupStats {
  double mean_treated = 0.0;
  double mean_control = 0.0;
  double v2_treated = 0.0;  // sum of squared deviations, not divided by size
  double v2_control = 0.0;
};

GroupStats group_stats(const Eigen::VectorXd& a, const std::vector<int>& treated,
                       const std::vector<int>& controls) {
  GroupStats g;
  for (int i : treated) g.mean_treated += a(i);
  g.mean_treated /= static_cast<double>(treated.size());
  for (int j : controls) g.mean_control += a(j);
  g.mean_control /= static_cast<double>(controls.size());
  for (int i : treated) g.v2_treated += (a(i) - g.mean_treated) * (a(i) - g.mean_treated);
  for (int j : controls) g.v2_control += (a(j) - g.mean_control) * (a(j) - g.mean_control);
  return g;
}

}  // namespace

void validate_treated(int n, const std::vector<int>& treated) {
  if (treated.empty()) throw UsageError("treated set is empty");
  if (static_cast<int>(treated.size()) >= n) {
    throw UsageError("treated set leaves no control units");
  }
  int prev = -1;
  for (int i : treated) {
    if (i < 0 || i >= n) throw UsageError("treated index " + std::to_string(i) + " out of range");
    if (i <= prev) throw UsageError("treated indices must be strictly ascending");
    prev = i;
  }
}

std::vector<int> control_indices(int n, const std::vector<int>& treated) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - treated.size());
  std::size_t p = 0;
  for (int j = 0; j < n; ++j) {
    if (p < treated.size() && treated[p] == j) {
      ++p;
    } else {
      out.push_back(j);
    }
  }
  return out;
}

BuiltQp build_two_way_qp(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                         double lambda, const WeightConstraints& cons) {
  const int n = static_cast<int>(pre.rows());
  const int t = static_cast<int>(pre.cols());
  validate_treated(n, treated);

  // Signed outcome rows: +1 for treated, -1 for control; the fit term is
  // then (s.w row-weighted column sum)^2 averaged over periods.
  Eigen::MatrixXd signed_pre = -pre;
  for (int i : treated) signed_pre.row(i) = pre.row(i);

  BuiltQp built;
  built.qp.G = (2.0 / static_cast<double>(t)) * (signed_pre * signed_pre.transpose());
  built.qp.G.diagonal().array() += 2.0 * lambda;
  built.qp.c = Eigen::VectorXd::Zero(n);
  built.qp.nonneg = cons.nonnegative;
  if (cons.normalize) {
    built.qp.a_eq = Eigen::MatrixXd::Zero(2, n);
    for (int i : treated) built.qp.a_eq(0, i) = 1.0;
    for (int j : control_indices(n, treated)) built.qp.a_eq(1, j) = 1.0;
    built.qp.b_eq = Eigen::VectorXd::Ones(2);
  } else {
    built.qp.a_eq = Eigen::MatrixXd(0, n);
    built.qp.b_eq = Eigen::VectorXd(0);
  }
  return built;
}

BuiltQp build_control_qp(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                         const Eigen::VectorXd& target, double lambda, double constant_penalty,
                         const WeightConstraints& cons) {
  const int n = static_cast<int>(pre.rows());
  const int t = static_cast<int>(pre.cols());
  validate_treated(n, treated);
  const std::vector<int> controls = control_indices(n, treated);
  const int nc = static_cast<int>(controls.size());

  Eigen::MatrixXd yc(nc, t);
  for (int r = 0; r < nc; ++r) yc.row(r) = pre.row(controls[static_cast<std::size_t>(r)]);

  BuiltQp built;
  built.qp.G = (2.0 / static_cast<double>(t)) * (yc * yc.transpose());
  built.qp.G.diagonal().array() += 2.0 * lambda;
  built.qp.c = (-2.0 / static_cast<double>(t)) * (yc * target);
  built.qp.nonneg = cons.nonnegative;
  if (cons.normalize) {
    built.qp.a_eq = Eigen::MatrixXd::Ones(1, nc);
    built.qp.b_eq = Eigen::VectorXd::Ones(1);
  } else {
    built.qp.a_eq = Eigen::MatrixXd(0, nc);
    built.qp.b_eq = Eigen::VectorXd(0);
  }
  built.constant = target.squaredNorm() / static_cast<double>(t) + constant_penalty;
  return built;
}

WeightSolution solve_two_way_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                     double lambda, const WeightConstraints& cons) {
  if (cons.treated_equal) return solve_one_way_weights(pre, treated, lambda, cons);
  check_lambda(lambda, cons);
  const BuiltQp built = build_two_way_qp(pre, treated, lambda, cons);
  const QpSolution qs = solve_qp(built.qp);

  WeightSolution out;
  out.weights = qs.x;
  out.kkt_residual = qs.kkt_residual;
  out.iterations = qs.iterations;
  return out;
}

WeightSolution solve_one_way_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                     double lambda, const WeightConstraints& cons) {
  check_lambda(lambda, cons);
  if (!cons.normalize) {
    throw UsageError("fixed treated weights of 1/K require the normalization constraint");
  }
  const int n = static_cast<int>(pre.rows());
  validate_treated(n, treated);
  const double k = static_cast<double>(treated.size());

  Eigen::VectorXd target = Eigen::VectorXd::Zero(pre.cols());
  for (int i : treated) target += pre.row(i).transpose();
  target /= k;

  const BuiltQp built = build_control_qp(pre, treated, target, lambda, lambda / k, cons);
  const QpSolution qs = solve_qp(built.qp);

  WeightSolution out;
  out.weights = Eigen::VectorXd::Zero(n);
  for (int i : treated) out.weights(i) = 1.0 / k;
  const std::vector<int> controls = control_indices(n, treated);
  for (std::size_t r = 0; r < controls.size(); ++r) {
    out.weights(controls[r]) = qs.x(static_cast<Eigen::Index>(r));
  }
  out.kkt_residual = qs.kkt_residual;
  out.iterations = qs.iterations;
  return out;
}

WeightSolution solve_per_unit_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                      double lambda, const WeightConstraints& cons) {
  check_lambda(lambda, cons);
  const int n = static_cast<int>(pre.rows());
  validate_treated(n, treated);
  const std::vector<int> controls = control_indices(n, treated);

  WeightSolution out;
  out.per_unit = true;
  out.unit_weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(treated.size()), n);
  for (std::size_t r = 0; r < treated.size(); ++r) {
    const Eigen::VectorXd target = pre.row(treated[r]).transpose();
    const BuiltQp built = build_control_qp(pre, treated, target, lambda, 0.0, cons);
    const QpSolution qs = solve_qp(built.qp);
    for (std::size_t c = 0; c < controls.size(); ++c) {
      out.unit_weights(static_cast<Eigen::Index>(r), controls[c]) = qs.x(static_cast<Eigen::Index>(c));
    }
    out.kkt_residual = std::max(out.kkt_residual, qs.kkt_residual);
    out.iterations += qs.iterations;
  }
  return out;
}

WeightSolution solve_weights(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                             double lambda, Variant variant, const WeightConstraints& cons) {
  switch (variant) {
    case Variant::PerUnit:
      return solve_per_unit_weights(pre, treated, lambda, cons);
    case Variant::OneWay:
      return solve_one_way_weights(pre, treated, lambda, cons);
    case Variant::TwoWay:
      return solve_two_way_weights(pre, treated, lambda, cons);
  }
  throw UsageError("unknown variant");
}

Eigen::VectorXd closed_form_two_way_weights(const Eigen::VectorXd& a,
                                            const std::vector<int>& treated, double sigma2) {
  const int n = static_cast<int>(a.size());
  validate_treated(n, treated);
  if (sigma2 <= 0.0) throw UsageError("sigma2 must be positive");
  const std::vector<int> controls = control_indices(n, treated);
  const GroupStats g = group_stats(a, treated, controls);
  const double k = static_cast<double>(treated.size());
  const double m = static_cast<double>(controls.size());
  const double gap = g.mean_treated - g.mean_control;
  const double denom = sigma2 + (g.v2_treated + g.v2_control);

  Eigen::VectorXd w(n);
  for (int i : treated) w(i) = 1.0 / k + gap * (g.mean_treated - a(i)) / denom;
  for (int j : controls) w(j) = 1.0 / m - gap * (g.mean_control - a(j)) / denom;
  return w;
}

Eigen::VectorXd closed_form_one_way_weights(const Eigen::VectorXd& a,
                                            const std::vector<int>& treated, double sigma2) {
  const int n = static_cast<int>(a.size());
  validate_treated(n, treated);
  if (sigma2 <= 0.0) throw UsageError("sigma2 must be positive");
  const std::vector<int> controls = control_indices(n, treated);
  const GroupStats g = group_stats(a, treated, controls);
  const double k = static_cast<double>(treated.size());
  const double m = static_cast<double>(controls.size());
  const double gap = g.mean_treated - g.mean_control;
  const double denom = sigma2 + g.v2_control;

  Eigen::VectorXd w(n);
  for (int i : treated) w(i) = 1.0 / k;
  for (int j : controls) w(j) = 1.0 / m - gap * (g.mean_control - a(j)) / denom;
  return w;
}

Eigen::MatrixXd closed_form_per_unit_weights(const Eigen::VectorXd& a,
                                             const std::vector<int>& treated, double sigma2) {
  const int n = static_cast<int>(a.size());
  validate_treated(n, treated);
  if (sigma2 <= 0.0) throw UsageError("sigma2 must be positive");
  const std::vector<int> controls = control_indices(n, treated);
  const GroupStats g = group_stats(a, treated, controls);
  const double m = static_cast<double>(controls.size());
  const double denom = sigma2 + g.v2_control;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(treated.size()), n);
  for (std::size_t r = 0; r < treated.size(); ++r) {
    const double gap = a(treated[r]) - g.mean_control;
    for (int j : controls) {
      w(static_cast<Eigen::Index>(r), j) = 1.0 / m - gap * (g.mean_control - a(j)) / denom;
    }
  }
  return w;
}

KktBreakdown weight_kkt_breakdown(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                                  double lambda, Variant variant, const WeightConstraints& cons,
                                  const WeightSolution& sol) {
  const int n = static_cast<int>(pre.rows());
  validate_treated(n, treated);
  const std::vector<int> controls = control_indices(n, treated);

  auto control_subvector = [&](const Eigen::VectorXd& full) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(controls.size()));
    for (std::size_t c = 0; c < controls.size(); ++c) u(static_cast<Eigen::Index>(c)) = full(controls[c]);
    return u;
  };

  switch (variant) {
    case Variant::TwoWay: {
      if (cons.treated_equal) {
        return weight_kkt_breakdown(pre, treated, lambda, Variant::OneWay, cons, sol);
      }
      const BuiltQp built = build_two_way_qp(pre, treated, lambda, cons);
      return kkt_breakdown(built.qp, sol.weights);
    }
    case Variant::OneWay: {
      const double k = static_cast<double>(treated.size());
      Eigen::VectorXd target = Eigen::VectorXd::Zero(pre.cols());
      for (int i : treated) target += pre.row(i).transpose();
      target /= k;
      const BuiltQp built = build_control_qp(pre, treated, target, lambda, lambda / k, cons);
      KktBreakdown out = kkt_breakdown(built.qp, control_subvector(sol.weights));
      // Treated weights are pinned at 1/K; any drift counts as infeasibility.
      for (int i : treated) {
        out.feasibility = std::max(out.feasibility, std::abs(sol.weights(i) - 1.0 / k));
      }
      return out;
    }
    case Variant::PerUnit: {
      KktBreakdown worst;
      for (std::size_t r = 0; r < treated.size(); ++r) {
        const Eigen::VectorXd target = pre.row(treated[r]).transpose();
        const BuiltQp built = build_control_qp(pre, treated, target, lambda, 0.0, cons);
        const KktBreakdown b =
            kkt_breakdown(built.qp, control_subvector(sol.unit_weights.row(static_cast<Eigen::Index>(r)).transpose()));
        worst.stationarity = std::max(worst.stationarity, b.stationarity);
        worst.feasibility = std::max(worst.feasibility, b.feasibility);
        worst.complementarity = std::max(worst.complementarity, b.complementarity);
        worst.dual = std::max(worst.dual, b.dual);
        for (int i : treated) {
          worst.feasibility =
              std::max(worst.feasibility, std::abs(sol.unit_weights(static_cast<Eigen::Index>(r), i)));
        }
      }
      return worst;
    }
  }
  throw UsageError("unknown variant");
}

double weight_kkt_residual(const Eigen::MatrixXd& pre, const std::vector<int>& treated,
                           double lambda, Variant variant, const WeightConstraints& cons,
                           const WeightSolution& sol) {
  return weight_kkt_breakdown(pre, treated, lambda, variant, cons, sol).max();
}

}  // namespace paneldesign

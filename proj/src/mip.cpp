#include "paneldesign/mip.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "paneldesign/errors.hpp"

/*
 * The exported models linearize every weight x indicator product through
 * auxiliary q variables and carry the fit residuals in free z variables, so
 * the objective is quadratic (diagonal Hessian) and all constraints are
 * linear. The two-way residual rows are written as
 *     z_t = sum_i (2 q_i - w_i) Y_it
 * which reproduces the treated-minus-control weighted gap for any feasible
 * (D, w, q); see the decisions ledger for why the w_i coefficient matters.
 */

namespace paneldesign {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class ModelBuilder {
 public:
  explicit ModelBuilder(std::string name) { model_.name = std::move(name); }

  int var(const std::string& name, VarKind kind) {
    model_.vars.push_back({name, kind});
    return static_cast<int>(model_.vars.size()) - 1;
  }

  MipRow& row(const std::string& name, RowSense sense, double rhs) {
    model_.rows.push_back({name, sense, rhs, {}});
    return model_.rows.back();
  }

  MipModel take() { return std::move(model_); }
  MipModel model_;
};

std::string dname(int i) { return "D_" + std::to_string(i + 1); }
std::string wname2(int i) { return "W_" + std::to_string(i + 1); }
std::string qname2(int i) { return "Q_" + std::to_string(i + 1); }
std::string zname2(int t) { return "Z_" + std::to_string(t + 1); }
std::string wname(int i, int j) {
  return "W_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}
std::string qname(int i, int j) {
  return "Q_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}
std::string zname(int i, int t) {
  return "Z_" + std::to_string(i + 1) + "_" + std::to_string(t + 1);
}

MipModel export_per_unit(const Eigen::MatrixXd& pre, const DesignProblem& p, bool k_free) {
  const int n = static_cast<int>(pre.rows());
  const int t = static_cast<int>(pre.cols());
  const double k = static_cast<double>(p.k);
  ModelBuilder b(k_free ? "PERUNIT_KFREE" : "PERUNIT");

  std::vector<int> d(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> w(static_cast<std::size_t>(n), std::vector<int>(n));
  std::vector<std::vector<int>> q(static_cast<std::size_t>(n), std::vector<int>(n));
  std::vector<std::vector<int>> z(static_cast<std::size_t>(n), std::vector<int>(t));
  for (int i = 0; i < n; ++i) d[i] = b.var(dname(i), VarKind::Binary);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w[i][j] = b.var(wname(i, j), VarKind::Continuous);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q[i][j] = b.var(qname(i, j), VarKind::Continuous);
  for (int i = 0; i < n; ++i)
    for (int tt = 0; tt < t; ++tt) z[i][tt] = b.var(zname(i, tt), VarKind::Free);
  int y = -1;
  if (k_free) y = b.var("Y", VarKind::Continuous);

  if (k_free) {
    b.model_.obj_linear.push_back({y, 1.0});
  } else {
    for (int i = 0; i < n; ++i)
      for (int tt = 0; tt < t; ++tt)
        b.model_.obj_quad.push_back({z[i][tt], z[i][tt], 2.0 / (k * t)});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        b.model_.obj_quad.push_back({w[i][j], w[i][j], 2.0 * p.lambda / k});
  }

  if (k_free) {
    auto& dmin = b.row("DMIN", RowSense::Ge, 1.0);
    for (int i = 0; i < n; ++i) dmin.terms.push_back({d[i], 1.0});
  } else {
    auto& card = b.row("CARD", RowSense::Eq, k);
    for (int i = 0; i < n; ++i) card.terms.push_back({d[i], 1.0});
  }

  for (int i = 0; i < n; ++i) {
    auto& qsum = b.row("QSUM_" + std::to_string(i + 1), RowSense::Eq, 0.0);
    for (int j = 0; j < n; ++j) qsum.terms.push_back({q[i][j], 1.0});
    qsum.terms.push_back({d[i], -1.0});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::string suffix = "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
      auto& qub = b.row("QUB" + suffix, RowSense::Le, 1.0);  // q_ij + D_j <= 1
      qub.terms.push_back({q[i][j], 1.0});
      qub.terms.push_back({d[j], 1.0});
      auto& qw = b.row("QW" + suffix, RowSense::Le, 0.0);  // q_ij - w_ij <= 0
      qw.terms.push_back({q[i][j], 1.0});
      qw.terms.push_back({w[i][j], -1.0});
      auto& qlb = b.row("QLB" + suffix, RowSense::Ge, 0.0);  // q_ij - w_ij + D_j >= 0
      qlb.terms.push_back({q[i][j], 1.0});
      qlb.terms.push_back({w[i][j], -1.0});
      qlb.terms.push_back({d[j], 1.0});
      auto& wub = b.row("WUB" + suffix, RowSense::Le, 0.0);  // w_ij - D_i <= 0
      wub.terms.push_back({w[i][j], 1.0});
      wub.terms.push_back({d[i], -1.0});
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int tt = 0; tt < t; ++tt) {
      auto& zdef = b.row("ZDEF_" + std::to_string(i + 1) + "_" + std::to_string(tt + 1),
                         RowSense::Eq, 0.0);  // z_it - Y_it D_i + sum_j Y_jt q_ij = 0
      zdef.terms.push_back({z[i][tt], 1.0});
      zdef.terms.push_back({d[i], -pre(i, tt)});
      for (int j = 0; j < n; ++j) zdef.terms.push_back({q[i][j], pre(j, tt)});
    }
  }

  if (k_free) {
    // y * sum_i D_i >= (1/T) sum z^2 + lambda sum w^2
    MipQuadRow frac;
    frac.name = "FRAC";
    frac.sense = RowSense::Ge;
    frac.rhs = 0.0;
    for (int i = 0; i < n; ++i) {
      frac.quad.push_back({y, d[i], 0.5});
      frac.quad.push_back({d[i], y, 0.5});
    }
    for (int i = 0; i < n; ++i)
      for (int tt = 0; tt < t; ++tt) frac.quad.push_back({z[i][tt], z[i][tt], -1.0 / t});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) frac.quad.push_back({w[i][j], w[i][j], -p.lambda});
    b.model_.quad_rows.push_back(std::move(frac));
  }
  return b.take();
}

MipModel export_global(const Eigen::MatrixXd& pre, const DesignProblem& p, bool one_way,
                       bool k_free) {
  const int n = static_cast<int>(pre.rows());
  const int t = static_cast<int>(pre.cols());
  ModelBuilder b(one_way ? "ONEWAY" : (k_free ? "TWOWAY_KFREE" : "TWOWAY"));

  std::vector<int> d(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n)),
      q(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(t));
  for (int i = 0; i < n; ++i) d[i] = b.var(dname(i), VarKind::Binary);
  for (int i = 0; i < n; ++i) w[i] = b.var(wname2(i), VarKind::Continuous);
  for (int i = 0; i < n; ++i) q[i] = b.var(qname2(i), VarKind::Continuous);
  for (int tt = 0; tt < t; ++tt) z[tt] = b.var(zname2(tt), VarKind::Free);

  for (int tt = 0; tt < t; ++tt) b.model_.obj_quad.push_back({z[tt], z[tt], 2.0 / t});
  for (int i = 0; i < n; ++i) b.model_.obj_quad.push_back({w[i], w[i], 2.0 * p.lambda});

  if (!k_free) {
    auto& card = b.row("CARD", RowSense::Eq, static_cast<double>(p.k));
    for (int i = 0; i < n; ++i) card.terms.push_back({d[i], 1.0});
  }
  auto& qsum = b.row("QSUM", RowSense::Eq, 1.0);
  for (int i = 0; i < n; ++i) qsum.terms.push_back({q[i], 1.0});
  auto& wsum = b.row("WSUM", RowSense::Eq, 2.0);
  for (int i = 0; i < n; ++i) wsum.terms.push_back({w[i], 1.0});

  for (int i = 0; i < n; ++i) {
    const std::string suffix = "_" + std::to_string(i + 1);
    auto& qub = b.row("QUB" + suffix, RowSense::Le, 0.0);  // q_i - D_i <= 0
    qub.terms.push_back({q[i], 1.0});
    qub.terms.push_back({d[i], -1.0});
    auto& qw = b.row("QW" + suffix, RowSense::Le, 0.0);  // q_i - w_i <= 0
    qw.terms.push_back({q[i], 1.0});
    qw.terms.push_back({w[i], -1.0});
    auto& qlb = b.row("QLB" + suffix, RowSense::Ge, -1.0);  // q_i - w_i - D_i >= -1
    qlb.terms.push_back({q[i], 1.0});
    qlb.terms.push_back({w[i], -1.0});
    qlb.terms.push_back({d[i], -1.0});
  }
  if (one_way) {
    for (int i = 0; i < n; ++i) {
      auto& qf = b.row("QFRAC_" + std::to_string(i + 1), RowSense::Eq, 0.0);  // q_i = D_i / K
      qf.terms.push_back({q[i], 1.0});
      qf.terms.push_back({d[i], -1.0 / static_cast<double>(p.k)});
    }
  }
  for (int tt = 0; tt < t; ++tt) {
    auto& zdef = b.row("ZDEF_" + std::to_string(tt + 1), RowSense::Eq, 0.0);
    zdef.terms.push_back({z[tt], 1.0});
    for (int i = 0; i < n; ++i) {
      zdef.terms.push_back({q[i], -2.0 * pre(i, tt)});
      zdef.terms.push_back({w[i], pre(i, tt)});
    }
  }
  return b.take();
}

double lookup(const MipAssignment& values, const std::string& name) {
  const auto it = values.find(name);
  if (it == values.end()) throw UsageError("assignment misses variable '" + name + "'");
  return it->second;
}

}  // namespace

int MipModel::var_index(const std::string& vname) const {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].name == vname) return static_cast<int>(i);
  }
  return -1;
}

int MipModel::count(VarKind kind) const {
  int c = 0;
  for (const auto& v : vars) c += (v.kind == kind) ? 1 : 0;
  return c;
}

MipModel export_mip(const Panel& panel, const DesignProblem& problem, bool k_free) {
  if (problem.k < 1 || problem.k > panel.n_units() - 1) {
    throw UsageError("K out of range for MIP export");
  }
  if (problem.lambda < 0.0) throw UsageError("ridge penalty must be nonnegative");
  const Eigen::MatrixXd pre = panel.pre_block();
  switch (problem.variant) {
    case Variant::PerUnit:
      return export_per_unit(pre, problem, k_free);
    case Variant::TwoWay:
      return export_global(pre, problem, false, k_free);
    case Variant::OneWay:
      if (k_free) {
        throw UsageError(
            "one-way export without a fixed treated count is unsupported: the 1/K "
            "coefficient appears in the q rows");
      }
      return export_global(pre, problem, true, false);
  }
  throw UsageError("unknown variant");
}

std::string to_mps(const MipModel& model) {
  std::ostringstream out;
  out << "NAME          " << model.name << "\n";
  out << "ROWS\n";
  out << " N  OBJ\n";
  auto sense_char = [](RowSense s) { return s == RowSense::Eq ? 'E' : (s == RowSense::Le ? 'L' : 'G'); };
  for (const auto& r : model.rows) out << " " << sense_char(r.sense) << "  " << r.name << "\n";
  for (const auto& r : model.quad_rows) out << " " << sense_char(r.sense) << "  " << r.name << "\n";

  // COLUMNS is grouped by variable; gather every linear occurrence first.
  std::vector<std::vector<std::pair<std::string, double>>> entries(model.vars.size());
  for (const auto& term : model.obj_linear) {
    entries[static_cast<std::size_t>(term.var)].push_back({"OBJ", term.coef});
  }
  for (const auto& r : model.rows) {
    for (const auto& term : r.terms) {
      entries[static_cast<std::size_t>(term.var)].push_back({r.name, term.coef});
    }
  }
  for (const auto& r : model.quad_rows) {
    for (const auto& term : r.lin) {
      entries[static_cast<std::size_t>(term.var)].push_back({r.name, term.coef});
    }
  }

  out << "COLUMNS\n";
  bool in_integer = false;
  int marker = 0;
  for (std::size_t v = 0; v < model.vars.size(); ++v) {
    const bool is_int = model.vars[v].kind == VarKind::Binary;
    if (is_int && !in_integer) {
      out << "    MARKER" << marker++ << "    'MARKER'    'INTORG'\n";
      in_integer = true;
    } else if (!is_int && in_integer) {
      out << "    MARKER" << marker++ << "    'MARKER'    'INTEND'\n";
      in_integer = false;
    }
    if (entries[v].empty()) {
      out << "    " << model.vars[v].name << "    OBJ    0\n";  // register the variable
      continue;
    }
    for (const auto& [row, coef] : entries[v]) {
      out << "    " << model.vars[v].name << "    " << row << "    " << fmt(coef) << "\n";
    }
  }
  if (in_integer) out << "    MARKER" << marker++ << "    'MARKER'    'INTEND'\n";

  out << "RHS\n";
  for (const auto& r : model.rows) {
    if (r.rhs != 0.0) out << "    RHS    " << r.name << "    " << fmt(r.rhs) << "\n";
  }
  for (const auto& r : model.quad_rows) {
    if (r.rhs != 0.0) out << "    RHS    " << r.name << "    " << fmt(r.rhs) << "\n";
  }

  out << "BOUNDS\n";
  for (const auto& v : model.vars) {
    if (v.kind == VarKind::Binary) out << " BV BND    " << v.name << "\n";
    if (v.kind == VarKind::Free) out << " FR BND    " << v.name << "\n";
  }

  if (!model.obj_quad.empty()) {
    out << "QMATRIX\n";
    for (const auto& qt : model.obj_quad) {
      out << "    " << model.vars[static_cast<std::size_t>(qt.v1)].name << "    "
          << model.vars[static_cast<std::size_t>(qt.v2)].name << "    " << fmt(qt.coef) << "\n";
    }
  }
  for (const auto& r : model.quad_rows) {
    out << "QCMATRIX " << r.name << "\n";
    for (const auto& qt : r.quad) {
      out << "    " << model.vars[static_cast<std::size_t>(qt.v1)].name << "    "
          << model.vars[static_cast<std::size_t>(qt.v2)].name << "    " << fmt(qt.coef) << "\n";
    }
  }
  out << "ENDATA\n";
  return out.str();
}

double mip_objective(const MipModel& model, const MipAssignment& values) {
  double obj = 0.0;
  for (const auto& term : model.obj_linear) {
    obj += term.coef * lookup(values, model.vars[static_cast<std::size_t>(term.var)].name);
  }
  for (const auto& qt : model.obj_quad) {
    obj += 0.5 * qt.coef * lookup(values, model.vars[static_cast<std::size_t>(qt.v1)].name) *
           lookup(values, model.vars[static_cast<std::size_t>(qt.v2)].name);
  }
  return obj;
}

double mip_max_violation(const MipModel& model, const MipAssignment& values) {
  double worst = 0.0;
  auto apply_sense = [&](RowSense sense, double lhs, double rhs) {
    switch (sense) {
      case RowSense::Eq: return std::abs(lhs - rhs);
      case RowSense::Le: return std::max(0.0, lhs - rhs);
      case RowSense::Ge: return std::max(0.0, rhs - lhs);
    }
    return 0.0;
  };
  for (const auto& v : model.vars) {
    const double x = lookup(values, v.name);
    if (v.kind == VarKind::Continuous) worst = std::max(worst, -x);
    if (v.kind == VarKind::Binary) {
      worst = std::max(worst, std::abs(x - std::round(x)));
      worst = std::max(worst, std::max(-x, x - 1.0));
    }
  }
  for (const auto& r : model.rows) {
    double lhs = 0.0;
    for (const auto& term : r.terms) {
      lhs += term.coef * lookup(values, model.vars[static_cast<std::size_t>(term.var)].name);
    }
    worst = std::max(worst, apply_sense(r.sense, lhs, r.rhs));
  }
  for (const auto& r : model.quad_rows) {
    double lhs = 0.0;
    for (const auto& term : r.lin) {
      lhs += term.coef * lookup(values, model.vars[static_cast<std::size_t>(term.var)].name);
    }
    for (const auto& qt : r.quad) {
      lhs += qt.coef * lookup(values, model.vars[static_cast<std::size_t>(qt.v1)].name) *
             lookup(values, model.vars[static_cast<std::size_t>(qt.v2)].name);
    }
    worst = std::max(worst, apply_sense(r.sense, lhs, r.rhs));
  }
  return worst;
}

MipAssignment mip_assignment_for_design(const Panel& panel, const DesignProblem& problem,
                                        const Design& design) {
  const int n = panel.n_units();
  const Eigen::MatrixXd pre = panel.pre_block();
  const int t = static_cast<int>(pre.cols());
  const std::vector<int> treated = treated_indices(design.d);
  validate_treated(n, treated);
  if (!design.weights.fitted()) throw UsageError("design carries no fitted weights");

  MipAssignment values;
  for (int i = 0; i < n; ++i) {
    values[dname(i)] = static_cast<double>(design.d[static_cast<std::size_t>(i)]);
  }

  if (problem.variant == Variant::PerUnit) {
    Eigen::MatrixXd w_full = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t r = 0; r < treated.size(); ++r) {
      w_full.row(treated[r]) = design.weights.unit_weights.row(static_cast<Eigen::Index>(r));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double wv = w_full(i, j);
        const double qv = wv * (1.0 - static_cast<double>(design.d[static_cast<std::size_t>(j)]));
        values[wname(i, j)] = wv;
        values[qname(i, j)] = qv;
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int tt = 0; tt < t; ++tt) {
        double acc = pre(i, tt) * static_cast<double>(design.d[static_cast<std::size_t>(i)]);
        for (int j = 0; j < n; ++j) acc -= values[qname(i, j)] * pre(j, tt);
        values[zname(i, tt)] = acc;
      }
    }
    return values;
  }

  for (int i = 0; i < n; ++i) {
    const double wv = design.weights.weights(i);
    values[wname2(i)] = wv;
    values[qname2(i)] = wv * static_cast<double>(design.d[static_cast<std::size_t>(i)]);
  }
  for (int tt = 0; tt < t; ++tt) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += (2.0 * values[qname2(i)] - values[wname2(i)]) * pre(i, tt);
    }
    values[zname2(tt)] = acc;
  }
  return values;
}

}  // namespace paneldesign

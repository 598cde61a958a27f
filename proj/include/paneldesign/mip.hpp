#pragma once

#include <map>
#include <string>
#include <vector>

#include "paneldesign/selector.hpp"

namespace paneldesign {

enum class VarKind { Binary, Continuous, Free };  // Continuous means >= 0
enum class RowSense { Eq, Le, Ge };

struct MipVar {
  std::string name;
  VarKind kind = VarKind::Continuous;
};

struct MipTerm {
  int var = -1;
  double coef = 0.0;
};

struct MipRow {
  std::string name;
  RowSense sense = RowSense::Eq;
  double rhs = 0.0;
  std::vector<MipTerm> terms;
};

struct MipQuadTerm {
  int v1 = -1, v2 = -1;
  double coef = 0.0;
};

// Quadratic constraint row: linear part + sum of quadratic entries exactly as
// listed (no halving), compared against rhs under sense.
struct MipQuadRow {
  std::string name;
  RowSense sense = RowSense::Ge;
  double rhs = 0.0;
  std::vector<MipTerm> lin;
  std::vector<MipQuadTerm> quad;
};

// Objective follows the MPS QMATRIX convention: linear + 0.5 * x'Qx, with
// every off-diagonal entry listed in both orders.
struct MipModel {
  std::string name;
  std::vector<MipVar> vars;
  std::vector<MipTerm> obj_linear;
  std::vector<MipQuadTerm> obj_quad;
  std::vector<MipRow> rows;
  std::vector<MipQuadRow> quad_rows;

  int var_index(const std::string& name) const;  // -1 when absent
  int count(VarKind kind) const;
};

// Exact mixed-integer formulation of the design problem with the weight ×
// indicator products linearized through auxiliary q variables and the fit
// residuals carried by free z variables. With k_free the cardinality row is
// dropped: the two-way model needs no other change, the per-unit model
// switches to a linear objective in an auxiliary variable Y bounded by a
// quadratic constraint that divides the fit energy by the treated count.
MipModel export_mip(const Panel& panel, const DesignProblem& problem, bool k_free = false);

std::string to_mps(const MipModel& model);

using MipAssignment = std::map<std::string, double>;

double mip_objective(const MipModel& model, const MipAssignment& values);
double mip_max_violation(const MipModel& model, const MipAssignment& values);

// The feasible point of the exported model induced by a concrete design:
// D from the treated set, W from the fitted weights, Q and Z from their
// defining identities on the panel data.
MipAssignment mip_assignment_for_design(const Panel& panel, const DesignProblem& problem,
                                        const Design& design);

}  // namespace paneldesign

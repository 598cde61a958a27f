#include "paneldesign/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "paneldesign/errors.hpp"

namespace paneldesign {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(vector_to_json(m.row(r).transpose()));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace

json problem_to_json(const DesignProblem& p) {
  return json{{"variant", variant_name(p.variant)},
              {"k", p.k},
              {"lambda", p.lambda},
              {"nonnegative", p.cons.nonnegative},
              {"normalize", p.cons.normalize},
              {"treated_equal", p.cons.treated_equal},
              {"mode", mode_name(p.mode)},
              {"enum_limit", p.enum_limit},
              {"restarts", p.restarts},
              {"seed", p.seed}};
}

DesignProblem problem_from_json(const json& j) {
  DesignProblem p;
  p.variant = variant_from_name(j.at("variant").get<std::string>());
  p.k = j.at("k").get<int>();
  p.lambda = j.at("lambda").get<double>();
  p.cons.nonnegative = j.at("nonnegative").get<bool>();
  p.cons.normalize = j.at("normalize").get<bool>();
  p.cons.treated_equal = j.at("treated_equal").get<bool>();
  p.mode = mode_from_name(j.at("mode").get<std::string>());
  p.enum_limit = j.at("enum_limit").get<std::int64_t>();
  p.restarts = j.at("restarts").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json design_to_json(const Design& d, const std::vector<std::string>& unit_ids) {
  json out;
  out["d"] = d.d;
  out["exact"] = d.exact;
  if (std::isfinite(d.objective)) {
    out["objective"] = d.objective;
  } else {
    out["objective"] = nullptr;
  }
  if (d.weights.fitted()) {
    json w;
    w["per_unit"] = d.weights.per_unit;
    w["values"] = d.weights.per_unit ? matrix_to_json(d.weights.unit_weights)
                                     : vector_to_json(d.weights.weights);
    w["kkt_residual"] = d.weights.kkt_residual;
    w["iterations"] = d.weights.iterations;
    out["weights"] = w;
  } else {
    out["weights"] = nullptr;
  }
  out["problem"] = problem_to_json(d.problem);
  out["unit_ids"] = unit_ids;
  return out;
}

Design design_from_json(const json& j) {
  Design d;
  d.d = j.at("d").get<std::vector<int>>();
  d.exact = j.at("exact").get<bool>();
  d.objective = j.at("objective").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : j.at("objective").get<double>();
  if (!j.at("weights").is_null()) {
    const json& w = j.at("weights");
    d.weights.per_unit = w.at("per_unit").get<bool>();
    if (d.weights.per_unit) {
      d.weights.unit_weights = matrix_from_json(w.at("values"));
    } else {
      d.weights.weights = vector_from_json(w.at("values"));
    }
    d.weights.kkt_residual = w.at("kkt_residual").get<double>();
    d.weights.iterations = w.at("iterations").get<int>();
  }
  d.problem = problem_from_json(j.at("problem"));
  return d;
}

json estimate_to_json(const EffectEstimate& e) {
  json units = json::object();
  for (std::size_t r = 0; r < e.treated_units.size(); ++r) {
    units[e.treated_units[r]] = e.unit_effects(static_cast<Eigen::Index>(r));
  }
  return json{{"method", method_name(e.method)},
              {"atet", e.atet},
              {"per_period_atet", vector_to_json(e.per_period_atet)},
              {"unit_effects", units},
              {"unit_period_effects", matrix_to_json(e.unit_period_effects)},
              {"treated_units", e.treated_units}};
}

json permutation_test_to_json(const PermutationTest& t) {
  json ref = json::array();
  for (double v : t.reference) ref.push_back(v);
  return json{{"scheme", scheme_name(t.scheme)},
              {"n_draws", t.n_draws},
              {"alpha", t.alpha},
              {"observed_stat", t.observed_stat},
              {"reference", ref},
              {"p_value", t.p_value},
              {"reject", t.reject},
              {"warnings", t.warnings},
              {"seed", t.seed}};
}

json verify_report_to_json(const VerifyReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back(json{{"name", c.name},
                          {"pass", c.pass},
                          {"value", c.value},
                          {"limit", c.limit},
                          {"note", c.note}});
  }
  return json{{"checks", checks}, {"all_pass", r.all_pass()}};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace paneldesign

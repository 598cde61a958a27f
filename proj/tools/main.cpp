#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "paneldesign/errors.hpp"
#include "paneldesign/io.hpp"
#include "paneldesign/mip.hpp"
#include "paneldesign/synthetic.hpp"

/*
 * Command-line front end. Subcommands:
 *   design      choose a treated set and weights, write design JSON (+MPS)
 *   estimate    effect estimates from a panel and a stored design
 *   infer       permutation test over time periods
 *   verify      re-check a stored design against its panel
 *   simulate    RMSE or power study over subsampled experiments
 *   synth-data  regenerate the bundled synthetic outcome panel
 *
 * Every run writes a manifest JSON next to the primary output recording the
 * exact flags, so a run can be reproduced byte for byte.
 */

namespace pd = paneldesign;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
  std::string panel_path;
  int t_pre = 0;
  std::uint64_t seed = 0;
  int threads = 0;
};

json manifest_base(const std::string& command) {
  json m;
  m["tool"] = "paneldesign";
  m["version"] = kVersion;
  m["command"] = command;
  return m;
}

void write_manifest(const std::string& out_path, const json& manifest) {
  pd::write_text_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

pd::WeightConstraints make_cons(bool negative_weights, bool no_normalize) {
  pd::WeightConstraints cons;
  cons.nonnegative = !negative_weights;
  cons.normalize = !no_normalize;
  return cons;
}

std::vector<pd::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<pd::Method> out;
  for (const auto& n : names) out.push_back(pd::method_from_name(n));
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Design and analysis of panel experiments with synthetic controls"};
  app.require_subcommand(1);
  // Flags are the primary interface; a TOML file can supply them instead,
  // with one [section] per subcommand. The file is echoed into the manifest.
  std::string config_path;
  app.set_config("--config", "", "Read options from a TOML file")->each([&](const std::string& p) {
    config_path = p;
  });

  // ---- design ----
  auto* design_cmd = app.add_subcommand("design", "Select treated units and weights");
  design_cmd->configurable();
  CommonOpts dopt;
  std::string d_variant = "two-way", d_mode = "auto", d_lambda_rule = "variance", d_out;
  std::string d_mps;
  int d_k = 3, d_restarts = 20, d_cv_split = 0;
  std::int64_t d_enum_limit = 200000;
  double d_lambda = -1.0;
  bool d_negative = false, d_no_normalize = false, d_random = false, d_k_free = false;
  bool d_verify = false;
  std::vector<double> d_cv_grid;
  design_cmd->add_option("--panel", dopt.panel_path, "Panel CSV path")->required();
  design_cmd->add_option("--t-pre", dopt.t_pre, "Number of pre-treatment periods")->required();
  design_cmd->add_option("--variant", d_variant, "per-unit | one-way | two-way");
  design_cmd->add_option("--k", d_k, "Number of treated units")->required();
  design_cmd->add_option("--lambda", d_lambda, "Ridge penalty (overrides --lambda-rule)");
  design_cmd->add_option("--lambda-rule", d_lambda_rule, "variance | cv");
  design_cmd->add_option("--cv-grid", d_cv_grid, "Penalty grid for --lambda-rule cv");
  design_cmd->add_option("--cv-split", d_cv_split, "Training periods for --lambda-rule cv");
  design_cmd->add_option("--mode", d_mode, "auto | exact | local");
  design_cmd->add_option("--enum-limit", d_enum_limit, "Max subsets for exact enumeration");
  design_cmd->add_option("--restarts", d_restarts, "Local search restarts");
  design_cmd->add_option("--seed", dopt.seed, "RNG seed");
  design_cmd->add_option("--threads", dopt.threads, "Worker threads (0 = all cores)");
  design_cmd->add_flag("--negative-weights", d_negative, "Drop the nonnegativity constraint");
  design_cmd->add_flag("--no-normalize", d_no_normalize, "Drop the group sum constraints");
  design_cmd->add_flag("--random", d_random, "Randomize the treated set instead of optimizing");
  design_cmd->add_option("--out", d_out, "Design JSON output path")->required();
  design_cmd->add_option("--export-mps", d_mps, "Also write the exact MIP as an MPS file");
  design_cmd->add_flag("--k-free", d_k_free, "Export the MPS without the treated-count row");
  design_cmd->add_flag("--verify", d_verify, "Re-check the design before writing");

  // ---- estimate ----
  auto* est_cmd = app.add_subcommand("estimate", "Estimate treatment effects");
  est_cmd->configurable();
  CommonOpts eopt;
  std::string e_design, e_method, e_out;
  est_cmd->add_option("--panel", eopt.panel_path, "Panel CSV path")->required();
  est_cmd->add_option("--t-pre", eopt.t_pre, "Number of pre-treatment periods")->required();
  est_cmd->add_option("--design", e_design, "Design JSON path")->required();
  est_cmd->add_option("--method", e_method,
                      "per-unit | two-way | one-way | synthetic-control-random | "
                      "diff-in-means-random (default: design variant)");
  est_cmd->add_option("--out", e_out, "Estimate JSON output path")->required();

  // ---- infer ----
  auto* infer_cmd = app.add_subcommand("infer", "Permutation test over time periods");
  infer_cmd->configurable();
  CommonOpts iopt;
  std::string i_design, i_method, i_scheme = "iid", i_out;
  int i_draws = 40;
  double i_alpha = 0.10;
  infer_cmd->add_option("--panel", iopt.panel_path, "Panel CSV path")->required();
  infer_cmd->add_option("--t-pre", iopt.t_pre, "Number of pre-treatment periods")->required();
  infer_cmd->add_option("--design", i_design, "Design JSON path")->required();
  infer_cmd->add_option("--method", i_method, "Estimator (default: design variant)");
  infer_cmd->add_option("--scheme", i_scheme, "iid | moving-block");
  infer_cmd->add_option("--draws", i_draws, "Permutation draws");
  infer_cmd->add_option("--alpha", i_alpha, "Significance level");
  infer_cmd->add_option("--seed", iopt.seed, "RNG seed");
  infer_cmd->add_option("--threads", iopt.threads, "Worker threads (0 = all cores)");
  infer_cmd->add_option("--out", i_out, "Test JSON output path")->required();

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "Re-check a stored design");
  verify_cmd->configurable();
  CommonOpts vopt;
  std::string v_design, v_out;
  verify_cmd->add_option("--panel", vopt.panel_path, "Panel CSV path")->required();
  verify_cmd->add_option("--t-pre", vopt.t_pre, "Number of pre-treatment periods")->required();
  verify_cmd->add_option("--design", v_design, "Design JSON path")->required();
  verify_cmd->add_option("--out", v_out, "Optional report JSON output path");

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "Run a subsampled experiment study");
  sim_cmd->configurable();
  CommonOpts sopt;
  std::string s_study = "rmse", s_effect = "homogeneous", s_lambda_rule = "variance", s_out;
  std::string s_svg, s_mode = "auto";
  std::vector<std::string> s_methods = {"per-unit", "two-way", "one-way",
                                        "synthetic-control-random", "diff-in-means-random"};
  int s_sims = 500, s_sub_units = 10, s_sub_periods = 10, s_k = 3, s_draws = 40;
  double s_tau = 0.05, s_alpha = 0.10, s_lambda = -1.0;
  std::vector<double> s_tau_grid;
  bool s_negative = false, s_no_normalize = false;
  sim_cmd->add_option("--study", s_study, "rmse | power")->required();
  sim_cmd->add_option("--panel", sopt.panel_path, "Source panel CSV path")->required();
  sim_cmd->add_option("--sims", s_sims, "Number of simulations");
  sim_cmd->add_option("--sub-units", s_sub_units, "Units per subsample");
  sim_cmd->add_option("--sub-periods", s_sub_periods, "Periods per subsample");
  sim_cmd->add_option("--t-pre", sopt.t_pre, "Pre-treatment periods in the subsample")->required();
  sim_cmd->add_option("--k", s_k, "Treated units per simulation");
  sim_cmd->add_option("--effect", s_effect, "homogeneous | heterogeneous (rmse study)");
  sim_cmd->add_option("--tau", s_tau, "Effect level");
  sim_cmd->add_option("--methods", s_methods, "Methods to run");
  sim_cmd->add_option("--lambda", s_lambda, "Fixed ridge penalty (overrides --lambda-rule)");
  sim_cmd->add_option("--lambda-rule", s_lambda_rule, "variance | cv");
  sim_cmd->add_option("--mode", s_mode, "auto | exact | local");
  sim_cmd->add_option("--tau-grid", s_tau_grid, "Effect grid for the power study");
  sim_cmd->add_option("--draws", s_draws, "Permutation draws (power study)");
  sim_cmd->add_option("--alpha", s_alpha, "Significance level (power study)");
  sim_cmd->add_option("--seed", sopt.seed, "RNG seed");
  sim_cmd->add_option("--threads", sopt.threads, "Worker threads (0 = all cores)");
  sim_cmd->add_flag("--negative-weights", s_negative, "Drop the nonnegativity constraint");
  sim_cmd->add_flag("--no-normalize", s_no_normalize, "Drop the group sum constraints");
  sim_cmd->add_option("--out", s_out, "Report CSV output path")->required();
  sim_cmd->add_option("--svg", s_svg, "Optional SVG chart path (power study)");

  // ---- synth-data ----
  auto* synth_cmd = app.add_subcommand("synth-data", "Regenerate the synthetic outcome panel");
  synth_cmd->configurable();
  std::string g_out;
  int g_units = 50, g_periods = 40;
  std::uint64_t g_seed = 987654321;
  synth_cmd->add_option("--units", g_units, "Number of units");
  synth_cmd->add_option("--periods", g_periods, "Number of periods");
  synth_cmd->add_option("--seed", g_seed, "RNG seed");
  synth_cmd->add_option("--out", g_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto make_manifest = [&](const std::string& command) {
    json m = manifest_base(command);
    if (!config_path.empty()) {
      m["config_file"] = config_path;
      m["config_text"] = pd::read_text_file(config_path);
    }
    return m;
  };

  if (design_cmd->parsed()) {
    const pd::Panel panel = pd::load_panel_file(dopt.panel_path, dopt.t_pre);
    pd::DesignProblem problem;
    problem.variant = pd::variant_from_name(d_variant);
    problem.k = d_k;
    problem.cons = make_cons(d_negative, d_no_normalize);
    problem.mode = pd::mode_from_name(d_mode);
    problem.enum_limit = d_enum_limit;
    problem.restarts = d_restarts;
    problem.seed = dopt.seed;

    if (d_lambda >= 0.0) {
      problem.lambda = d_lambda;
    } else if (d_lambda_rule == "variance") {
      problem.lambda = pd::select_lambda_variance(panel.pre_block());
      if (problem.lambda <= 0.0) {
        std::cerr << "warning: degenerate variance penalty, using 1e-8\n";
        problem.lambda = 1e-8;
      }
    } else if (d_lambda_rule == "cv") {
      std::vector<double> grid = d_cv_grid;
      if (grid.empty()) {
        const double anchor = std::max(pd::select_lambda_variance(panel.pre_block()), 1e-6);
        grid = {0.25 * anchor, 0.5 * anchor, anchor, 2.0 * anchor, 4.0 * anchor};
      }
      const int split = d_cv_split > 0 ? d_cv_split : std::max(1, 2 * panel.t_pre / 3);
      problem.lambda = pd::select_lambda_cv(panel, problem, grid, split);
    } else {
      throw pd::UsageError("unknown lambda rule '" + d_lambda_rule + "'");
    }

    pd::Design design;
    if (d_random) {
      design = pd::random_design(panel.n_units(), d_k, dopt.seed);
      design.problem = problem;
      design.weights = pd::solve_weights(panel.pre_block(), pd::treated_indices(design.d),
                                         problem.lambda, problem.variant, problem.cons);
      design.objective = pd::evaluate_objective(panel.pre_block(), pd::treated_indices(design.d),
                                                problem.lambda, problem.variant, design.weights);
    } else {
      design = pd::select_design(panel, problem);
    }

    if (d_verify) {
      const pd::VerifyReport report = pd::verify_design(panel, problem, design);
      if (!report.all_pass()) {
        std::cerr << pd::verify_report_to_json(report).dump(2) << "\n";
        throw pd::SolverError("design verification failed");
      }
    }

    pd::write_text_file(d_out, pd::design_to_json(design, panel.unit_ids).dump(2) + "\n");
    if (!d_mps.empty()) {
      const pd::MipModel model = pd::export_mip(panel, problem, d_k_free);
      pd::write_text_file(d_mps, pd::to_mps(model));
    }

    json manifest = make_manifest("design");
    manifest["options"] = {
        {"panel", dopt.panel_path}, {"t_pre", dopt.t_pre},     {"variant", d_variant},
        {"k", d_k},                 {"lambda", problem.lambda}, {"lambda_rule", d_lambda_rule},
        {"mode", d_mode},           {"enum_limit", d_enum_limit}, {"restarts", d_restarts},
        {"seed", dopt.seed},        {"negative_weights", d_negative},
        {"no_normalize", d_no_normalize}, {"random", d_random}, {"k_free", d_k_free}};
    manifest["outputs"] = json::array({d_out});
    if (!d_mps.empty()) manifest["outputs"].push_back(d_mps);
    write_manifest(d_out, manifest);

    std::cout << "treated:";
    for (int i : pd::treated_indices(design.d)) std::cout << ' ' << panel.unit_ids[i];
    std::cout << "\nobjective: " << design.objective << (design.exact ? " (exact)" : " (heuristic)")
              << "\n";
    return 0;
  }

  if (est_cmd->parsed()) {
    const pd::Panel panel = pd::load_panel_file(eopt.panel_path, eopt.t_pre);
    const pd::Design design = pd::design_from_json(json::parse(pd::read_text_file(e_design)));
    const pd::Method method = e_method.empty()
                                  ? pd::method_from_name(pd::variant_name(design.problem.variant))
                                  : pd::method_from_name(e_method);
    const pd::EffectEstimate est =
        pd::estimate_method(panel, pd::treated_indices(design.d), method, design.problem.lambda,
                            design.problem.cons);
    pd::write_text_file(e_out, pd::estimate_to_json(est).dump(2) + "\n");

    json manifest = make_manifest("estimate");
    manifest["options"] = {{"panel", eopt.panel_path},
                           {"t_pre", eopt.t_pre},
                           {"design", e_design},
                           {"method", pd::method_name(method)}};
    manifest["outputs"] = json::array({e_out});
    write_manifest(e_out, manifest);

    std::cout << "atet: " << est.atet << "\n";
    return 0;
  }

  if (infer_cmd->parsed()) {
    const pd::Panel panel = pd::load_panel_file(iopt.panel_path, iopt.t_pre);
    const pd::Design design = pd::design_from_json(json::parse(pd::read_text_file(i_design)));
    const pd::Method method = i_method.empty()
                                  ? pd::method_from_name(pd::variant_name(design.problem.variant))
                                  : pd::method_from_name(i_method);
    const pd::PermutationTest test =
        pd::permutation_test(panel, design, method, pd::scheme_from_name(i_scheme), i_draws,
                             i_alpha, iopt.seed, iopt.threads);
    pd::write_text_file(i_out, pd::permutation_test_to_json(test).dump(2) + "\n");

    json manifest = make_manifest("infer");
    manifest["options"] = {{"panel", iopt.panel_path}, {"t_pre", iopt.t_pre},
                           {"design", i_design},       {"method", pd::method_name(method)},
                           {"scheme", i_scheme},       {"draws", i_draws},
                           {"alpha", i_alpha},         {"seed", iopt.seed}};
    manifest["outputs"] = json::array({i_out});
    write_manifest(i_out, manifest);

    std::cout << "observed: " << test.observed_stat << "  p-value: " << test.p_value
              << (test.reject ? "  (reject)" : "  (no rejection)") << "\n";
    return 0;
  }

  if (verify_cmd->parsed()) {
    const pd::Panel panel = pd::load_panel_file(vopt.panel_path, vopt.t_pre);
    const pd::Design design = pd::design_from_json(json::parse(pd::read_text_file(v_design)));
    const pd::VerifyReport report = pd::verify_design(panel, design.problem, design);
    const json out = pd::verify_report_to_json(report);
    if (!v_out.empty()) {
      pd::write_text_file(v_out, out.dump(2) + "\n");
      json manifest = make_manifest("verify");
      manifest["options"] = {{"panel", vopt.panel_path}, {"t_pre", vopt.t_pre},
                             {"design", v_design}};
      manifest["outputs"] = json::array({v_out});
      write_manifest(v_out, manifest);
    }
    std::cout << out.dump(2) << "\n";
    if (!report.all_pass()) throw pd::SolverError("design verification failed");
    return 0;
  }

  if (sim_cmd->parsed()) {
    const pd::Panel source = pd::load_panel_file(sopt.panel_path, sopt.t_pre);
    pd::SimConfig config;
    config.n_sims = s_sims;
    config.sub_units = s_sub_units;
    config.sub_periods = s_sub_periods;
    config.t_pre = sopt.t_pre;
    config.k = s_k;
    config.effect_mode = pd::effect_mode_from_name(s_effect);
    config.tau = s_tau;
    config.methods = parse_methods(s_methods);
    config.cons = make_cons(s_negative, s_no_normalize);
    config.mode = pd::mode_from_name(s_mode);
    config.seed = sopt.seed;
    config.threads = sopt.threads;
    config.alpha = s_alpha;
    config.n_draws = s_draws;
    if (!s_tau_grid.empty()) config.tau_grid = s_tau_grid;
    if (s_lambda >= 0.0) {
      config.lambda_rule = pd::LambdaRule::Fixed;
      config.fixed_lambda = s_lambda;
    } else if (s_lambda_rule == "variance") {
      config.lambda_rule = pd::LambdaRule::VarianceAvg;
    } else if (s_lambda_rule == "cv") {
      config.lambda_rule = pd::LambdaRule::CrossValidation;
    } else {
      throw pd::UsageError("unknown lambda rule '" + s_lambda_rule + "'");
    }

    pd::SimulationReport report;
    std::string csv;
    if (s_study == "rmse") {
      report = pd::run_rmse_experiment(source, config);
      csv = pd::rmse_report_csv(report);
    } else if (s_study == "power") {
      report = pd::run_power_experiment(source, config);
      csv = pd::power_report_csv(report);
      if (!s_svg.empty()) pd::write_text_file(s_svg, pd::power_report_svg(report));
    } else {
      throw pd::UsageError("unknown study '" + s_study + "'");
    }
    pd::write_text_file(s_out, csv);

    json manifest = make_manifest("simulate");
    manifest["options"] = {{"study", s_study},       {"panel", sopt.panel_path},
                           {"sims", s_sims},         {"sub_units", s_sub_units},
                           {"sub_periods", s_sub_periods}, {"t_pre", sopt.t_pre},
                           {"k", s_k},               {"effect", s_effect},
                           {"tau", s_tau},           {"methods", s_methods},
                           {"lambda", s_lambda},     {"lambda_rule", s_lambda_rule},
                           {"mode", s_mode},         {"tau_grid", config.tau_grid},
                           {"draws", s_draws},       {"alpha", s_alpha},
                           {"seed", sopt.seed},      {"negative_weights", s_negative},
                           {"no_normalize", s_no_normalize}};
    manifest["outputs"] = json::array({s_out});
    if (!s_svg.empty()) manifest["outputs"].push_back(s_svg);
    write_manifest(s_out, manifest);

    std::cout << csv;
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
  }

  if (synth_cmd->parsed()) {
    const pd::Panel panel = pd::make_synthetic_urate_panel(g_units, g_periods,
                                                           std::max(1, g_periods - 5), g_seed);
    pd::write_text_file(g_out, pd::panel_to_csv(panel));
    json manifest = make_manifest("synth-data");
    manifest["options"] = {{"units", g_units}, {"periods", g_periods}, {"seed", g_seed}};
    manifest["outputs"] = json::array({g_out});
    write_manifest(g_out, manifest);
    std::cout << "wrote " << g_out << " (" << g_units << " units x " << g_periods << " periods)\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const pd::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const pd::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const pd::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

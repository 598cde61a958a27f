#include "paneldesign/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "paneldesign/errors.hpp"
#include "paneldesign/parallel.hpp"
#include "paneldesign/rng.hpp"

namespace paneldesign {

namespace {

constexpr std::uint64_t kSaltSubsample = 0x51;
constexpr std::uint64_t kSaltDesign = 0xd5;
constexpr std::uint64_t kSaltRandomSet = 0x7a;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

Variant variant_of(Method m) {
  switch (m) {
    case Method::PerUnit:
    case Method::SyntheticControlRandom:
      return Variant::PerUnit;
    case Method::TwoWay:
      return Variant::TwoWay;
    case Method::OneWay:
    case Method::DiffInMeansRandom:
      return Variant::OneWay;
  }
  throw UsageError("unknown method");
}

bool is_random_method(Method m) {
  return m == Method::SyntheticControlRandom || m == Method::DiffInMeansRandom;
}

double resolve_lambda(const Panel& sub, const SimConfig& config,
                      std::vector<std::string>* warnings) {
  double lambda = 0.0;
  switch (config.lambda_rule) {
    case LambdaRule::Fixed:
      lambda = config.fixed_lambda;
      break;
    case LambdaRule::VarianceAvg:
      lambda = select_lambda_variance(sub.pre_block());
      break;
    case LambdaRule::CrossValidation: {
      const double base = select_lambda_variance(sub.pre_block());
      std::vector<double> grid = config.cv_grid;
      if (grid.empty()) {
        const double anchor = base > 0.0 ? base : 1e-6;
        grid = {0.25 * anchor, 0.5 * anchor, anchor, 2.0 * anchor, 4.0 * anchor};
      }
      DesignProblem p;
      p.variant = Variant::TwoWay;
      p.k = config.k;
      p.cons = config.cons;
      p.mode = config.mode;
      p.enum_limit = config.enum_limit;
      p.restarts = config.restarts;
      p.seed = config.seed;
      const int split = config.cv_split > 0 ? config.cv_split : std::max(1, 2 * sub.t_pre / 3);
      lambda = select_lambda_cv(sub, p, grid, split);
      break;
    }
  }
  if (lambda <= 0.0) {
    if (warnings) warnings->push_back("degenerate penalty replaced by 1e-8");
    lambda = 1e-8;
  }
  return lambda;
}

// Design (or redraw) the treated set for one method inside one simulation.
Design design_for_method(const Panel& sub, const SimConfig& config, Method method, double lambda,
                         std::uint64_t sim_seed) {
  if (is_random_method(method)) {
    return random_design(sub.n_units(), config.k,
                         Rng::stream(sim_seed, kSaltRandomSet, static_cast<std::uint64_t>(method))
                             .next_u64());
  }
  DesignProblem problem;
  problem.variant = variant_of(method);
  problem.k = config.k;
  problem.lambda = lambda;
  problem.cons = config.cons;
  problem.mode = config.mode;
  problem.enum_limit = config.enum_limit;
  problem.restarts = config.restarts;
  problem.seed = Rng::stream(sim_seed, kSaltDesign, static_cast<std::uint64_t>(method)).next_u64();
  return select_design(sub, problem);
}

struct SimAccum {
  double atet_sq = 0.0;
  std::int64_t atet_n = 0;
  double unit_sq = 0.0;
  std::int64_t unit_n = 0;
};

}  // namespace

double select_lambda_variance(const Eigen::MatrixXd& pre) {
  const int t = static_cast<int>(pre.cols());
  if (t < 1) throw UsageError("empty pre block");
  double total = 0.0;
  for (int i = 0; i < pre.rows(); ++i) {
    const double mean = pre.row(i).mean();
    total += (pre.row(i).array() - mean).square().sum() / static_cast<double>(t);
  }
  const double lambda = total / static_cast<double>(pre.rows());
  // Constant rows produce rounding dust instead of an exact zero; snap it so
  // callers can detect the degenerate case.
  const double scale = pre.array().square().mean();
  return lambda <= 1e-24 * scale ? 0.0 : lambda;
}

double select_lambda_cv(const Panel& panel, const DesignProblem& problem,
                        const std::vector<double>& grid, int split) {
  if (grid.empty()) throw UsageError("empty penalty grid");
  if (split < 1 || split >= panel.t_pre) {
    throw UsageError("cross-validation split must leave both training and validation periods");
  }
  // Training block = first `split` pre periods; validation = the rest of the
  // pre block, scored as a zero-effect experiment.
  Panel train;
  train.unit_ids = panel.unit_ids;
  train.period_ids.assign(panel.period_ids.begin(), panel.period_ids.begin() + panel.t_pre);
  train.y = panel.y.leftCols(panel.t_pre);
  train.t_pre = split;

  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  double best_lambda = sorted.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double lambda : sorted) {
    if (lambda <= 0.0) throw UsageError("penalty grid values must be positive");
    DesignProblem p = problem;
    p.lambda = lambda;
    const Design design = select_design(train, p);
    const EffectEstimate est = estimate_method(
        train, treated_indices(design.d),
        p.variant == Variant::PerUnit ? Method::PerUnit
                                      : (p.variant == Variant::OneWay ? Method::OneWay
                                                                      : Method::TwoWay),
        lambda, p.cons);
    const double score = std::sqrt(est.per_period_atet.squaredNorm() /
                                   static_cast<double>(est.per_period_atet.size()));
    if (score < best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

Eigen::VectorXd effect_vector(EffectMode mode, double tau, int n_units,
                              const std::vector<int>& treated) {
  Eigen::VectorXd effects = Eigen::VectorXd::Zero(n_units);
  switch (mode) {
    case EffectMode::Homogeneous:
      for (int i : treated) effects(i) = tau;
      break;
    case EffectMode::HeterogeneousLinear:
      // 0 .. 2*tau by row position in the panel, so the overall ATE is tau.
      for (int i : treated) {
        effects(i) = n_units > 1 ? 2.0 * tau * static_cast<double>(i) /
                                       static_cast<double>(n_units - 1)
                                 : tau;
      }
      break;
    case EffectMode::PowerStudy: {
      // Ramp 0 .. tau over the treated units in row order; ATET = tau / 2.
      const int k = static_cast<int>(treated.size());
      for (int r = 0; r < k; ++r) {
        effects(treated[static_cast<std::size_t>(r)]) =
            k > 1 ? tau * static_cast<double>(r) / static_cast<double>(k - 1) : tau;
      }
      break;
    }
  }
  return effects;
}

SimulationReport run_rmse_experiment(const Panel& source, const SimConfig& config) {
  if (config.n_sims < 1) throw UsageError("need at least one simulation");
  if (config.sub_periods <= config.t_pre) {
    throw UsageError("subsample needs post-treatment periods (sub_periods > t_pre)");
  }
  if (config.k >= config.sub_units) throw UsageError("K must be below the subsample unit count");

  SimulationReport report;
  report.config = config;
  const int n_methods = static_cast<int>(config.methods.size());
  std::vector<std::vector<SimAccum>> per_sim(
      static_cast<std::size_t>(config.n_sims),
      std::vector<SimAccum>(static_cast<std::size_t>(n_methods)));
  std::vector<std::vector<std::string>> sim_warnings(static_cast<std::size_t>(config.n_sims));

  parallel_for(config.n_sims, config.threads, [&](std::int64_t sim) {
    const std::uint64_t sim_seed =
        Rng::stream(config.seed, kSaltSubsample, static_cast<std::uint64_t>(sim)).next_u64();
    const Panel sub =
        subsample(source, config.sub_units, config.sub_periods, config.t_pre, sim_seed);
    const double lambda = resolve_lambda(sub, config, &sim_warnings[static_cast<std::size_t>(sim)]);
    const int n_post = sub.n_post();

    for (int mi = 0; mi < n_methods; ++mi) {
      const Method method = config.methods[static_cast<std::size_t>(mi)];
      const Design design = design_for_method(sub, config, method, lambda, sim_seed);
      const std::vector<int> treated = treated_indices(design.d);

      const Eigen::VectorXd effects =
          effect_vector(config.effect_mode, config.tau, sub.n_units(), treated);
      const Panel outcome = apply_treatment(sub, design.d, {effects, n_post});
      const EffectEstimate est = estimate_method(outcome, treated, method, lambda, config.cons);

      double true_atet = 0.0;
      for (int i : treated) true_atet += effects(i);
      true_atet /= static_cast<double>(treated.size());

      SimAccum& acc = per_sim[static_cast<std::size_t>(sim)][static_cast<std::size_t>(mi)];
      for (int t = 0; t < n_post; ++t) {
        const double err = est.per_period_atet(t) - true_atet;
        acc.atet_sq += err * err;
        ++acc.atet_n;
      }
      for (std::size_t r = 0; r < treated.size(); ++r) {
        for (int t = 0; t < n_post; ++t) {
          const double err =
              est.unit_period_effects(static_cast<Eigen::Index>(r), t) - effects(treated[r]);
          acc.unit_sq += err * err;
          ++acc.unit_n;
        }
      }
    }
  });

  for (int mi = 0; mi < n_methods; ++mi) {
    SimAccum total;
    for (int sim = 0; sim < config.n_sims; ++sim) {
      const SimAccum& acc = per_sim[static_cast<std::size_t>(sim)][static_cast<std::size_t>(mi)];
      total.atet_sq += acc.atet_sq;
      total.atet_n += acc.atet_n;
      total.unit_sq += acc.unit_sq;
      total.unit_n += acc.unit_n;
    }
    MethodRmse row;
    row.method = config.methods[static_cast<std::size_t>(mi)];
    row.atet_rmse = std::sqrt(total.atet_sq / static_cast<double>(total.atet_n));
    row.unit_rmse = std::sqrt(total.unit_sq / static_cast<double>(total.unit_n));
    report.rmse.push_back(row);
  }
  for (auto& w : sim_warnings) {
    report.warnings.insert(report.warnings.end(), w.begin(), w.end());
  }
  return report;
}

SimulationReport run_power_experiment(const Panel& source, const SimConfig& config) {
  if (config.n_sims < 1) throw UsageError("need at least one simulation");
  if (config.sub_periods <= config.t_pre) {
    throw UsageError("power study needs post-treatment periods (sub_periods > t_pre)");
  }
  if (config.tau_grid.empty()) throw UsageError("empty tau grid");

  SimulationReport report;
  report.config = config;
  const int n_methods = static_cast<int>(config.methods.size());
  const int n_taus = static_cast<int>(config.tau_grid.size());
  const std::vector<Scheme> schemes = {Scheme::IID, Scheme::MovingBlock};

  // reject[sim][method][scheme][tau]
  std::vector<std::vector<std::vector<std::vector<char>>>> reject(
      static_cast<std::size_t>(config.n_sims),
      std::vector<std::vector<std::vector<char>>>(
          static_cast<std::size_t>(n_methods),
          std::vector<std::vector<char>>(schemes.size(),
                                         std::vector<char>(static_cast<std::size_t>(n_taus), 0))));

  parallel_for(config.n_sims, config.threads, [&](std::int64_t sim) {
    const std::uint64_t sim_seed =
        Rng::stream(config.seed, kSaltSubsample, static_cast<std::uint64_t>(sim)).next_u64();
    const Panel sub =
        subsample(source, config.sub_units, config.sub_periods, config.t_pre, sim_seed);
    const double lambda = resolve_lambda(sub, config, nullptr);
    const int n_post = sub.n_post();

    for (int mi = 0; mi < n_methods; ++mi) {
      const Method method = config.methods[static_cast<std::size_t>(mi)];
      // The design depends only on the pre block, so it is shared across the
      // effect grid.
      const Design design = design_for_method(sub, config, method, lambda, sim_seed);
      const std::vector<int> treated = treated_indices(design.d);
      Design carrier = design;
      carrier.problem.lambda = lambda;
      carrier.problem.cons = config.cons;

      for (int ti = 0; ti < n_taus; ++ti) {
        const double tau = config.tau_grid[static_cast<std::size_t>(ti)];
        const Eigen::VectorXd effects =
            effect_vector(EffectMode::PowerStudy, tau, sub.n_units(), treated);
        const Panel outcome = apply_treatment(sub, design.d, {effects, n_post});
        for (std::size_t si = 0; si < schemes.size(); ++si) {
          const PermutationTest test = permutation_test(
              outcome, carrier, method, schemes[si], config.n_draws, config.alpha,
              Rng::stream(sim_seed, 0x1e57, static_cast<std::uint64_t>(mi * 2 + static_cast<int>(si)))
                  .next_u64());
          reject[static_cast<std::size_t>(sim)][static_cast<std::size_t>(mi)][si]
                [static_cast<std::size_t>(ti)] = test.reject ? 1 : 0;
        }
      }
    }
  });

  for (int mi = 0; mi < n_methods; ++mi) {
    for (std::size_t si = 0; si < schemes.size(); ++si) {
      for (int ti = 0; ti < n_taus; ++ti) {
        int hits = 0;
        for (int sim = 0; sim < config.n_sims; ++sim) {
          hits += reject[static_cast<std::size_t>(sim)][static_cast<std::size_t>(mi)][si]
                        [static_cast<std::size_t>(ti)];
        }
        PowerPoint pt;
        pt.method = config.methods[static_cast<std::size_t>(mi)];
        pt.scheme = schemes[si];
        pt.tau = config.tau_grid[static_cast<std::size_t>(ti)];
        pt.reject_rate = static_cast<double>(hits) / static_cast<double>(config.n_sims);
        report.power.push_back(pt);
      }
    }
  }
  return report;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::PerUnit: return "per-unit";
    case Method::TwoWay: return "two-way";
    case Method::OneWay: return "one-way";
    case Method::SyntheticControlRandom: return "synthetic-control-random";
    case Method::DiffInMeansRandom: return "diff-in-means-random";
  }
  throw UsageError("unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "per-unit") return Method::PerUnit;
  if (name == "two-way") return Method::TwoWay;
  if (name == "one-way") return Method::OneWay;
  if (name == "synthetic-control-random" || name == "sc-random") {
    return Method::SyntheticControlRandom;
  }
  if (name == "diff-in-means-random" || name == "diff-in-means") {
    return Method::DiffInMeansRandom;
  }
  throw UsageError("unknown method '" + name + "'");
}

std::string scheme_name(Scheme s) { return s == Scheme::IID ? "iid" : "moving-block"; }

Scheme scheme_from_name(const std::string& name) {
  if (name == "iid") return Scheme::IID;
  if (name == "moving-block") return Scheme::MovingBlock;
  throw UsageError("unknown permutation scheme '" + name + "'");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::PerUnit: return "per-unit";
    case Variant::OneWay: return "one-way";
    case Variant::TwoWay: return "two-way";
  }
  throw UsageError("unknown variant");
}

Variant variant_from_name(const std::string& name) {
  if (name == "per-unit") return Variant::PerUnit;
  if (name == "one-way") return Variant::OneWay;
  if (name == "two-way") return Variant::TwoWay;
  throw UsageError("unknown variant '" + name + "'");
}

std::string mode_name(SelectMode m) {
  switch (m) {
    case SelectMode::ExactEnum: return "exact";
    case SelectMode::LocalSearch: return "local";
    case SelectMode::Auto: return "auto";
  }
  throw UsageError("unknown mode");
}

SelectMode mode_from_name(const std::string& name) {
  if (name == "exact") return SelectMode::ExactEnum;
  if (name == "local") return SelectMode::LocalSearch;
  if (name == "auto") return SelectMode::Auto;
  throw UsageError("unknown mode '" + name + "'");
}

std::string effect_mode_name(EffectMode m) {
  switch (m) {
    case EffectMode::Homogeneous: return "homogeneous";
    case EffectMode::HeterogeneousLinear: return "heterogeneous";
    case EffectMode::PowerStudy: return "power-ramp";
  }
  throw UsageError("unknown effect mode");
}

EffectMode effect_mode_from_name(const std::string& name) {
  if (name == "homogeneous") return EffectMode::Homogeneous;
  if (name == "heterogeneous") return EffectMode::HeterogeneousLinear;
  if (name == "power-ramp") return EffectMode::PowerStudy;
  throw UsageError("unknown effect mode '" + name + "'");
}

std::string rmse_report_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "method,k,effect_mode,metric,value\n";
  for (const auto& row : report.rmse) {
    out << method_name(row.method) << ',' << report.config.k << ','
        << effect_mode_name(report.config.effect_mode) << ",atet_rmse," << fmt(row.atet_rmse)
        << '\n';
    out << method_name(row.method) << ',' << report.config.k << ','
        << effect_mode_name(report.config.effect_mode) << ",unit_rmse," << fmt(row.unit_rmse)
        << '\n';
  }
  return out.str();
}

std::string power_report_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "method,scheme,tau,reject_rate\n";
  for (const auto& pt : report.power) {
    out << method_name(pt.method) << ',' << scheme_name(pt.scheme) << ',' << fmt(pt.tau) << ','
        << fmt(pt.reject_rate) << '\n';
  }
  return out.str();
}

std::string power_report_svg(const SimulationReport& report) {
  const int width = 720, height = 420;
  const int ml = 60, mr = 180, mt = 30, mb = 50;
  const double plot_w = width - ml - mr, plot_h = height - mt - mb;
  double tau_max = 1e-12;
  for (const auto& pt : report.power) tau_max = std::max(tau_max, pt.tau);

  auto x_of = [&](double tau) { return ml + plot_w * (tau / tau_max); };
  auto y_of = [&](double rate) { return mt + plot_h * (1.0 - rate); };

  const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> series;
  for (const auto& pt : report.power) {
    series[{method_name(pt.method), scheme_name(pt.scheme)}].push_back({pt.tau, pt.reject_rate});
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
      << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int g = 0; g <= 5; ++g) {
    const double rate = g / 5.0;
    out << "<text x=\"" << ml - 8 << "\" y=\"" << y_of(rate) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(rate) << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << y_of(rate) << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << y_of(rate) << "\" stroke=\"#dddddd\"/>\n";
  }
  out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">average effect on the treated</text>\n";
  out << "<text x=\"16\" y=\"" << mt + plot_h / 2
      << "\" font-size=\"12\" transform=\"rotate(-90 16 " << mt + plot_h / 2
      << ")\" text-anchor=\"middle\">rejection rate</text>\n";

  int color = 0, legend_y = mt + 10;
  for (const auto& [key, pts] : series) {
    const std::string stroke = palette[color % 10];
    const std::string dash = key.second == "moving-block" ? " stroke-dasharray=\"6,3\"" : "";
    out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"" << dash
        << " points=\"";
    for (const auto& [tau, rate] : pts) out << fmt(x_of(tau)) << ',' << fmt(y_of(rate)) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << ml + plot_w + 10 << "\" y=\"" << legend_y << "\" font-size=\"11\" fill=\""
        << stroke << "\">" << key.first << " (" << key.second << ")</text>\n";
    legend_y += 16;
    ++color;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace paneldesign

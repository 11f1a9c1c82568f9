// Command-line front end: run, infogain, eval, plot, gen.
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bilin/ellipsoid.hpp"
#include "bilin/envs.hpp"
#include "bilin/error.hpp"
#include "bilin/harness.hpp"
#include "bilin/serialize.hpp"

namespace {

using namespace bilin;
using nlohmann::json;

constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "expected key=value, got '" + item + "'");
    try {
      out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "parameter value is not a number: " + item);
    }
  }
  return out;
}

CandidateSet read_candidates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  CandidateSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "non-numeric candidate entry: " + cell);
      }
    }
    if (!out.empty() && row.size() != out.front().size()) {
      throw Error(ErrorCode::DimensionMismatch, "candidate rows have different lengths");
    }
    out.push_back(std::move(row));
  }
  if (out.empty()) throw Error(ErrorCode::EmptyCandidates, "candidate file has no rows");
  return out;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InfeasibleProgram:
      return kExitInfeasible;
    case ErrorCode::ConfigError:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyCandidates:
    case ErrorCode::BudgetExceeded:
    case ErrorCode::NotIrrelevant:
    case ErrorCode::PlanningUnavailable:
      return kExitConfig;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BiLin-UCB experiments over bilinear hypothesis classes"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file or flags");
  std::string config_path;
  ExperimentConfig cfg;
  std::vector<std::string> env_params;
  std::string m_list;
  run_cmd->add_option("--config", config_path, "Flat key=value experiment file");
  run_cmd->add_option("--env", cfg.env, "Generator name");
  run_cmd->add_option("--param", env_params, "Generator parameter key=value (repeatable)");
  run_cmd->add_option("--spec", cfg.spec, "Bilinear class family");
  run_cmd->add_option("--class-file", cfg.class_file, "Class JSON replacing the generated class");
  run_cmd->add_option("--m", m_list, "Batch size or comma-separated sweep");
  run_cmd->add_option("--T", cfg.T, "Iterations");
  run_cmd->add_option("--R", cfg.R, "Confidence radius");
  run_cmd->add_flag("--auto-params", cfg.auto_params, "Set T and R from the theory schedule");
  run_cmd->add_option("--delta", cfg.delta, "Failure probability for --auto-params");
  run_cmd->add_option("--max-T", cfg.max_T, "Cap on the theory iteration count");
  run_cmd->add_option("--target-eps", cfg.target_eps, "Solve the batch size for this suboptimality");
  run_cmd->add_option("--n-eval", cfg.n_eval, "Monte Carlo rollouts per evaluation");
  run_cmd->add_option("--repetitions", cfg.repetitions, "Independent repetitions");
  run_cmd->add_option("--seed", cfg.seed, "Top-level seed");
  run_cmd->add_option("--out", cfg.out, "Results JSON path");
  run_cmd->add_option("--csv", cfg.csv, "CSV file to append one row per repetition");
  run_cmd->add_flag("--auto-relax", cfg.auto_relax, "Double R instead of failing on an empty version space");

  // infogain
  auto* gain_cmd = app.add_subcommand("infogain", "Information gain of a candidate set (CSV rows = vectors)");
  std::string cand_path;
  double lambda = 1.0;
  std::size_t n = 1;
  std::string method = "greedy";
  bool critical = false;
  double cover_bw = 0.0, cover_eps = 0.0;
  int cover_t = 0;
  gain_cmd->add_option("candidates", cand_path, "Candidate CSV")->required();
  gain_cmd->add_option("--lambda", lambda, "Regularization");
  gain_cmd->add_option("--n", n, "Sequence length");
  gain_cmd->add_option("--method", method, "exact or greedy");
  gain_cmd->add_flag("--critical", critical, "Also report the critical information gain");
  gain_cmd->add_option("--cover-bw", cover_bw, "Weight-norm bound for a cover certificate");
  gain_cmd->add_option("--cover-eps", cover_eps, "Accuracy for a cover certificate");
  gain_cmd->add_option("--cover-T", cover_t, "Sequence length for a cover certificate");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the greedy policy of one class member");
  std::string eval_env = "mixture";
  std::vector<std::string> eval_params;
  int member = -1;
  std::size_t n_eval = 10000;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--env", eval_env, "Generator name");
  eval_cmd->add_option("--param", eval_params, "Generator parameter key=value (repeatable)");
  eval_cmd->add_option("--member", member, "Member index (default: the true member)");
  eval_cmd->add_option("--n-eval", n_eval, "Monte Carlo rollouts");
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Suboptimality curves from result files");
  std::vector<std::string> plot_files;
  std::string plot_out = "plot";
  plot_cmd->add_option("results", plot_files, "Results JSON files")->required();
  plot_cmd->add_option("--out", plot_out, "Output prefix for .csv and .svg");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate an instance and write its class JSON");
  std::string gen_env = "mixture";
  std::vector<std::string> gen_params;
  std::string gen_out = "class.json";
  gen_cmd->add_option("--env", gen_env, "Generator name");
  gen_cmd->add_option("--param", gen_params, "Generator parameter key=value (repeatable)");
  gen_cmd->add_option("--out", gen_out, "Class JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) {
      ExperimentConfig config = cfg;
      if (!config_path.empty()) config = load_config(config_path);
      for (const auto& [k, v] : parse_params(env_params)) config.env_params[k] = v;
      if (!m_list.empty()) {
        std::istringstream in("m=" + m_list);
        config.m_values = parse_config(in).m_values;
      }
      validate(config);
      const ResultRecord rec = run_experiment(config);
      persist(rec);
      for (const auto& a : rec.aggregates) {
        std::cout << rec.instance.generator << '/' << rec.spec_name << " m=" << a.m << " runs=" << a.count
                  << " median_subopt=" << a.median << " q1=" << a.q1 << " q3=" << a.q3
                  << " trajectories=" << a.total_trajectories << '\n';
      }
      for (const auto& r : rec.runs) {
        if (r.status != "ok") std::cerr << "repetition " << r.repetition << " (m=" << r.m << "): " << r.message << '\n';
      }
      std::cout << "results written to " << config.out << '\n';
      return rec.any_infeasible() ? kExitInfeasible : 0;
    }
    if (*gain_cmd) {
      const auto cands = read_candidates(cand_path);
      const auto m = parse_gain_method(method);
      const auto report = max_info_gain(cands, lambda, n, m);
      json out = {{"gamma", report.gamma},
                  {"sequence", report.sequence},
                  {"per_step_terms", report.per_step_terms},
                  {"method", to_string(report.method)},
                  {"lambda", lambda},
                  {"n", n}};
      if (critical) out["critical"] = critical_info_gain(cands, lambda, m);
      if (cover_bw > 0.0 && cover_eps > 0.0 && cover_t > 0) {
        const auto cert = cover_certificate(cands, cover_bw, cover_eps, cover_t);
        out["cover"] = {{"lambda", cert.lambda},
                        {"t_star", cert.t_star},
                        {"gamma", cert.gamma},
                        {"sup_norm_bound", cert.sup_norm_bound},
                        {"weight_gap_bound", cert.weight_gap_bound},
                        {"cover_size_log", cert.cover_size_log}};
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*eval_cmd) {
      auto params = parse_params(eval_params);
      if (!params.contains("seed")) params["seed"] = 0;
      const auto bundle = make_bundle(eval_env, params);
      const int idx = member >= 0 ? member : bundle.cls->truth_index.value_or(0);
      if (idx >= static_cast<int>(bundle.cls->size())) throw Error(ErrorCode::ConfigError, "member out of range");
      const GreedyPolicy pi((*bundle.cls)[idx]);
      Rng rng = make_rng(eval_seed, 0, "eval");
      const auto est = monte_carlo_value(*bundle.mdp, pi, n_eval, rng);
      json out = {{"descriptor", bundle.meta.descriptor()},
                  {"member", idx},
                  {"mc_mean", est.mean},
                  {"half_width", est.half_width},
                  {"n", est.n},
                  {"v_star", bundle.meta.v_star}};
      if (bundle.mdp->is_tabular()) {
        out["exact_value"] = evaluate_policy_exact(*bundle.mdp, pi).v_at(0, bundle.mdp->initial_state().id);
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*plot_cmd) {
      const auto art = emit_plots(plot_files, plot_out);
      std::cout << "curves=" << art.curves << " points=" << art.points << " csv=" << art.csv_path
                << " svg=" << art.svg_path << '\n';
      return 0;
    }
    if (*gen_cmd) {
      const auto bundle = make_bundle(gen_env, parse_params(gen_params));
      save_class(gen_out, *bundle.cls, bundle.meta.descriptor(), bundle.spec.get());
      std::cout << bundle.meta.descriptor() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

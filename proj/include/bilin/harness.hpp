#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilin/bilin_ucb.hpp"
#include "bilin/envs.hpp"

namespace bilin {

inline constexpr const char* kResultsSchema = "bilin.results/1";

// Flat key=value experiment description. Recognized keys:
//   env, env.<param>, spec, class_file, m (comma list), T, R, auto_params, delta, target_eps,
//   max_T, n_eval, repetitions, seed, out, csv, auto_relax
// Lines starting with '#' are comments.
struct ExperimentConfig {
  std::string env = "mixture";
  std::map<std::string, double> env_params;
  std::string spec;  // empty: the generator's own family
  std::string class_file;
  std::vector<int> m_values{1000};
  int T = 10;
  double R = std::numeric_limits<double>::infinity();
  bool auto_params = false;
  double delta = 0.1;
  double target_eps = 0.0;  // > 0: derive m from the sample-size rule instead of m_values
  int max_T = 0;            // > 0: cap on the theory iteration count
  std::size_t n_eval = 2000;
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::string out = "results.json";
  std::string csv;
  bool auto_relax = false;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
// Checks names and ranges; throws ConfigError.
void validate(const ExperimentConfig& config);
// Canonical key=value text of a config (round-trips through parse_config).
std::string config_text(const ExperimentConfig& config);

// Solution of m >= a ln^alpha(b m) by m = c a ln^alpha(a b c), verified by substitution
// (logarithms of arguments below 1 count as 0).
struct LogDominance {
  double a = 0.0;
  double b = 0.0;
  double alpha = 0.0;
  double c = 0.0;
  double m = 0.0;
  bool verified = false;
};

LogDominance log_dominance(double a, double b, double alpha, std::optional<double> c = std::nullopt);

// Batch size for a target suboptimality on a finite class with d-dimensional witnesses:
// m >= a ln^2(b m) with a = 720 d H^5 ln(4 d H^2)(1 + ln|H|) ln(1/delta) / eps^2, b = 4 B_X^2 B_W^2.
LogDominance solve_sample_size(double target_eps, int d, int H, double b_x, double b_w, double class_size,
                               double delta);

// Bundle for an experiment: generator, optional spec override and optional class file.
InstanceBundle prepare_instance(const ExperimentConfig& config);

// Iteration count and radius from the theory schedule for the bundle's family and batch size.
TheoryParams theory_params_for(const InstanceBundle& bundle, int m, double delta);

struct RepetitionResult {
  int m = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  int T = 0;
  double R = 0.0;
  std::string status = "ok";  // ok | infeasible | error
  std::string message;
  RunResult run;
  std::optional<double> exact_value;
  double suboptimality = 0.0;
  double suboptimality_half_width = 0.0;
};

struct Aggregate {
  int m = 0;
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double mean_trajectories = 0.0;
  std::size_t total_trajectories = 0;
};

struct ResultRecord {
  ExperimentConfig config;
  InstanceMetadata instance;
  std::string spec_name;
  std::size_t class_size = 0;
  std::vector<RepetitionResult> runs;
  std::vector<Aggregate> aggregates;
  std::size_t total_trajectories = 0;

  bool any_infeasible() const;
};

// Linear-interpolated quantile of unsorted data.
double quantile(std::vector<double> values, double q);

// Runs every (m, repetition) pair; repetitions run in parallel (BILIN_THREADS caps workers).
ResultRecord run_experiment(const ExperimentConfig& config);

nlohmann::json to_json(const ResultRecord& record);
// Writes the JSON record and appends one CSV row per repetition when configured.
void persist(const ResultRecord& record);
std::string csv_header();
std::vector<std::string> csv_rows(const ResultRecord& record);

struct PlotArtifacts {
  std::string csv_path;
  std::string svg_path;
  std::size_t curves = 0;
  std::size_t points = 0;
};

// Suboptimality-vs-trajectories curves (median and quartiles) per (env, spec).
// Throws SchemaMismatch on malformed inputs.
PlotArtifacts emit_plots(const std::vector<std::string>& result_files, const std::string& out_prefix);

unsigned worker_count();

}  // namespace bilin

#include "bilin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "bilin/error.hpp"
#include "bilin/serialize.hpp"

namespace bilin {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "value of '" + key + "' is not a number: " + v);
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 2e9) throw Error(ErrorCode::ConfigError, "'" + key + "' must be an integer");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ConfigError, "'" + key + "' must be true or false");
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Log with arguments below one counted as zero.
double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("env.", 0) == 0) {
      c.env_params[key.substr(4)] = to_double(key, value);
    } else if (key == "env") {
      c.env = value;
    } else if (key == "spec") {
      c.spec = value;
    } else if (key == "class_file") {
      c.class_file = value;
    } else if (key == "m") {
      c.m_values.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) c.m_values.push_back(to_int(key, trim(item)));
    } else if (key == "T") {
      c.T = to_int(key, value);
    } else if (key == "R") {
      c.R = to_double(key, value);
    } else if (key == "auto_params") {
      c.auto_params = to_bool(key, value);
    } else if (key == "delta") {
      c.delta = to_double(key, value);
    } else if (key == "target_eps") {
      c.target_eps = to_double(key, value);
    } else if (key == "max_T") {
      c.max_T = to_int(key, value);
    } else if (key == "n_eval") {
      c.n_eval = static_cast<std::size_t>(to_int(key, value));
    } else if (key == "repetitions") {
      c.repetitions = to_int(key, value);
    } else if (key == "seed") {
      const double d = to_double(key, value);
      if (d < 0 || d != std::floor(d)) throw Error(ErrorCode::ConfigError, "seed must be a natural number");
      c.seed = std::stoull(value);
    } else if (key == "out") {
      c.out = value;
    } else if (key == "csv") {
      c.csv = value;
    } else if (key == "auto_relax") {
      c.auto_relax = to_bool(key, value);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  return parse_config(in);
}

void validate(const ExperimentConfig& c) {
  const auto names = generator_names();
  if (std::find(names.begin(), names.end(), c.env) == names.end()) {
    throw Error(ErrorCode::ConfigError, "unknown generator '" + c.env + "'");
  }
  if (!c.spec.empty()) parse_family(c.spec);
  if (c.m_values.empty() && !(c.target_eps > 0.0)) throw Error(ErrorCode::ConfigError, "m needs at least one value");
  for (int m : c.m_values) {
    if (m < 1) throw Error(ErrorCode::ConfigError, "m values must be >= 1");
  }
  if (c.auto_params || c.target_eps > 0.0) {
    if (!(c.delta > 0.0 && c.delta < 1.0 / 3.0)) throw Error(ErrorCode::ConfigError, "delta must lie in (0, 1/3)");
  } else if (c.T < 1) {
    throw Error(ErrorCode::ConfigError, "T must be >= 1");
  }
  if (!(c.R >= 0.0)) throw Error(ErrorCode::ConfigError, "R must be non-negative");
  if (c.repetitions < 1) throw Error(ErrorCode::ConfigError, "repetitions must be >= 1");
  if (c.n_eval < 1) throw Error(ErrorCode::ConfigError, "n_eval must be >= 1");
  if (c.max_T < 0) throw Error(ErrorCode::ConfigError, "max_T must be >= 0");
}

std::string config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "env=" << c.env << '\n';
  for (const auto& [k, v] : c.env_params) out << "env." << k << '=' << fmt(v) << '\n';
  if (!c.spec.empty()) out << "spec=" << c.spec << '\n';
  if (!c.class_file.empty()) out << "class_file=" << c.class_file << '\n';
  out << "m=";
  for (std::size_t i = 0; i < c.m_values.size(); ++i) out << (i ? "," : "") << c.m_values[i];
  out << "\nT=" << c.T << "\nR=" << fmt(c.R) << "\nauto_params=" << (c.auto_params ? "true" : "false")
      << "\ndelta=" << fmt(c.delta) << "\ntarget_eps=" << fmt(c.target_eps) << "\nmax_T=" << c.max_T
      << "\nn_eval=" << c.n_eval << "\nrepetitions=" << c.repetitions << "\nseed=" << c.seed << "\nout=" << c.out
      << '\n';
  if (!c.csv.empty()) out << "csv=" << c.csv << '\n';
  out << "auto_relax=" << (c.auto_relax ? "true" : "false") << '\n';
  return out.str();
}

LogDominance log_dominance(double a, double b, double alpha, std::optional<double> c) {
  if (a < 0 || b < 0 || alpha < 0) throw Error(ErrorCode::ConfigError, "log dominance needs a, b, alpha >= 0");
  LogDominance r;
  r.a = a;
  r.b = b;
  r.alpha = alpha;
  r.c = c.value_or(std::pow(1.0 + alpha, alpha));
  if (r.c < std::pow(1.0 + alpha, alpha)) throw Error(ErrorCode::ConfigError, "c must be at least (1 + alpha)^alpha");
  // ln(abc) is floored at 1 so that ln ln(abc) <= ln(abc) holds in the substitution argument.
  const double l = std::max(1.0, log_plus(a * b * r.c));
  r.m = r.c * a * std::pow(l, alpha);
  r.verified = r.m >= a * std::pow(log_plus(b * r.m), alpha);
  return r;
}

LogDominance solve_sample_size(double target_eps, int d, int H, double b_x, double b_w, double class_size,
                               double delta) {
  if (!(target_eps > 0.0 && target_eps < H) || d < 1 || H < 1 || !(class_size >= 1.0) ||
      !(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::ConfigError, "solve_sample_size needs eps in (0, H) and positive sizes");
  }
  const double bx = std::max(1.0, b_x);
  const double bw = std::max(1.0, b_w);
  const double a = 720.0 * d * std::pow(H, 5) * std::log(4.0 * d * H * H) * (1.0 + std::log(class_size)) *
                   std::log(1.0 / delta) / (target_eps * target_eps);
  const double b = 4.0 * bx * bx * bw * bw;
  return log_dominance(a, b, 2.0, 9.0);
}

InstanceBundle prepare_instance(const ExperimentConfig& config) {
  validate(config);
  auto params = config.env_params;
  if (!params.contains("seed")) params["seed"] = static_cast<double>(config.seed);
  InstanceBundle b = make_bundle(config.env, params);

  if (!config.spec.empty()) {
    const Family wanted = parse_family(config.spec);
    if (wanted != b.spec->family) {
      const bool table_only =
          wanted == Family::q_rank || wanted == Family::v_rank || wanted == Family::low_occupancy;
      if (!table_only || !b.mdp->is_tabular()) {
        throw Error(ErrorCode::ConfigError,
                    std::string("spec ") + config.spec + " is not available for generator " + config.env);
      }
      auto spec = std::make_shared<BilinearSpec>();
      spec->family = wanted;
      spec->horizon = b.spec->horizon;
      spec->num_actions = b.spec->num_actions;
      spec->num_states = b.spec->num_states;
      spec->estimation = wanted == Family::v_rank ? EstimationRule::uniform : EstimationRule::on_policy;
      spec->loss_bound = (wanted == Family::v_rank ? spec->num_actions : 1.0) * (spec->horizon + 1.0);
      b.spec = spec;
      b.witness.reset();
      b.meta.witness_dim = 0;
    }
  }

  if (!config.class_file.empty()) {
    auto loaded = load_class(config.class_file, b.cls->members.front().indexer());
    const auto& ref = b.cls->members.front().tables();
    for (const auto& f : loaded.cls.members) {
      const auto& t = f.tables();
      if (t.horizon != ref.horizon || t.rows != ref.rows || t.actions != ref.actions) {
        throw Error(ErrorCode::SchemaMismatch, "class file does not match the instance dimensions");
      }
    }
    if (loaded.cls.size() == 0) throw Error(ErrorCode::SchemaMismatch, "class file has no members");
    b.cls = std::make_shared<const HypothesisClass>(std::move(loaded.cls));
  }
  return b;
}

TheoryParams theory_params_for(const InstanceBundle& b, int m, double delta) {
  if (b.meta.witness_dim < 1) {
    throw Error(ErrorCode::ConfigError, "automatic parameters need a bilinear witness for the instance");
  }
  const int H = b.spec->horizon;
  const int d = b.meta.witness_dim;
  const double log_class = std::log(static_cast<double>(b.cls->size()));
  switch (b.spec->family) {
    case Family::witness: {
      const double log_f = std::log(static_cast<double>(b.spec->num_discriminators(0)));
      return set_parameters_from(d, b.meta.b_x, b.meta.b_w, eps_gen_witness(m, log_class, log_f, b.spec->num_actions),
                                 conf_witness, delta, H);
    }
    case Family::factored: {
      const double log_f = static_cast<double>(b.spec->factors->model_size()) * std::log(2.0);
      return set_parameters_from(d, b.meta.b_x, b.meta.b_w, eps_gen_witness(m, log_class, log_f, b.spec->num_actions),
                                 conf_witness, delta, H);
    }
    case Family::glm_complete: {
      std::size_t most = 1;
      for (int h = 0; h < H; ++h) most = std::max(most, b.spec->num_discriminators(h));
      const double log_count = log_class + std::log(static_cast<double>(most));
      return set_parameters_from(d, b.meta.b_x, b.meta.b_w, eps_gen_hoeffding(m, log_count, b.spec->loss_bound),
                                 conf_finite, delta, H);
    }
    case Family::knr:
      return set_parameters_from(d, b.meta.b_x, b.meta.b_w, eps_gen_hoeffding(m, log_class, b.spec->loss_bound),
                                 conf_finite, delta, H);
    default:
      return set_parameters(d, b.meta.b_x, b.meta.b_w, m, delta, static_cast<double>(b.cls->size()), H);
  }
}

bool ResultRecord::any_infeasible() const {
  return std::any_of(runs.begin(), runs.end(), [](const RepetitionResult& r) { return r.status == "infeasible"; });
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BILIN_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

ResultRecord run_experiment(const ExperimentConfig& config) {
  const InstanceBundle bundle = prepare_instance(config);
  ResultRecord record;
  record.config = config;
  record.instance = bundle.meta;
  record.spec_name = to_string(bundle.spec->family);
  record.class_size = bundle.cls->size();

  std::vector<int> m_values = config.m_values;
  if (config.target_eps > 0.0) {
    if (bundle.meta.witness_dim < 1) throw Error(ErrorCode::ConfigError, "target_eps needs a bilinear witness");
    const auto sol = solve_sample_size(config.target_eps, bundle.meta.witness_dim, bundle.spec->horizon,
                                       bundle.meta.b_x, bundle.meta.b_w, static_cast<double>(bundle.cls->size()),
                                       config.delta);
    if (sol.m > 2e9) throw Error(ErrorCode::BudgetExceeded, "solved batch size exceeds 2e9");
    m_values = {static_cast<int>(std::ceil(sol.m))};
    record.config.m_values = m_values;
  }

  const bool tabular = bundle.mdp->is_tabular();
  const double v_star = tabular ? value_iteration(*bundle.mdp).values.v_at(0, bundle.mdp->initial_state().id)
                                : bundle.meta.v_star;
  record.instance.v_star = v_star;

  for (int m : m_values) {
    for (int rep = 0; rep < config.repetitions; ++rep) {
      RepetitionResult r;
      r.m = m;
      r.repetition = rep;
      r.seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep), "repetition");
      if (config.auto_params) {
        const auto tp = theory_params_for(bundle, m, config.delta);
        r.T = config.max_T > 0 ? std::min(tp.T, config.max_T) : tp.T;
        r.R = tp.R;
      } else {
        r.T = config.T;
        r.R = config.R;
      }
      record.runs.push_back(std::move(r));
    }
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < record.runs.size(); i = next++) {
      auto& r = record.runs[i];
      UcbParams p;
      p.T = r.T;
      p.R = r.R;
      p.m = r.m;
      p.n_eval = config.n_eval;
      p.seed = r.seed;
      p.auto_relax = config.auto_relax;
      try {
        r.run = bundle.spec->generalized() ? run_generalized(*bundle.mdp, *bundle.cls, *bundle.spec, p)
                                           : run(*bundle.mdp, *bundle.cls, *bundle.spec, p);
        const Hypothesis& chosen = (*bundle.cls)[static_cast<std::size_t>(r.run.chosen_member)];
        if (tabular) {
          const auto values = evaluate_policy_exact(*bundle.mdp, GreedyPolicy(chosen));
          r.exact_value = values.v_at(0, bundle.mdp->initial_state().id);
          r.suboptimality = v_star - *r.exact_value;
        } else {
          r.suboptimality = v_star - r.run.chosen_value;
          r.suboptimality_half_width = r.run.chosen_half_width;
        }
      } catch (const InfeasibleError& e) {
        r.status = "infeasible";
        r.message = e.what();
      } catch (const std::exception& e) {
        r.status = "error";
        r.message = e.what();
      }
    }
  };
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(record.runs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (int m : m_values) {
    Aggregate agg;
    agg.m = m;
    std::vector<double> subs;
    double traj = 0.0;
    for (const auto& r : record.runs) {
      if (r.m != m) continue;
      agg.total_trajectories += r.run.trajectories;
      if (r.status != "ok") continue;
      subs.push_back(r.suboptimality);
      traj += static_cast<double>(r.run.trajectories);
    }
    agg.count = subs.size();
    if (!subs.empty()) {
      agg.median = quantile(subs, 0.5);
      agg.q1 = quantile(subs, 0.25);
      agg.q3 = quantile(subs, 0.75);
      agg.mean_trajectories = traj / static_cast<double>(subs.size());
    }
    record.total_trajectories += agg.total_trajectories;
    record.aggregates.push_back(agg);
  }
  return record;
}

json to_json(const ResultRecord& rec) {
  const auto& c = rec.config;
  json doc;
  doc["schema"] = kResultsSchema;
  doc["config"] = {{"env", c.env},
                   {"env_params", c.env_params},
                   {"spec", c.spec},
                   {"class_file", c.class_file},
                   {"m", c.m_values},
                   {"T", c.T},
                   {"R", number_or_null(c.R)},
                   {"auto_params", c.auto_params},
                   {"delta", c.delta},
                   {"target_eps", c.target_eps},
                   {"max_T", c.max_T},
                   {"n_eval", c.n_eval},
                   {"repetitions", c.repetitions},
                   {"seed", c.seed},
                   {"auto_relax", c.auto_relax}};
  doc["instance"] = {{"generator", rec.instance.generator},
                     {"descriptor", rec.instance.descriptor()},
                     {"v_star", rec.instance.v_star},
                     {"witness_dim", rec.instance.witness_dim},
                     {"b_x", rec.instance.b_x},
                     {"b_w", rec.instance.b_w},
                     {"occupancy_rank", rec.instance.occupancy_rank ? json(*rec.instance.occupancy_rank) : json(nullptr)}};
  doc["spec"] = rec.spec_name;
  doc["class_size"] = rec.class_size;
  json runs = json::array();
  for (const auto& r : rec.runs) {
    json iters = json::array();
    for (const auto& it : r.run.iterations) {
      iters.push_back({{"t", it.t},
                       {"member", it.member},
                       {"optimistic_value", it.optimistic_value},
                       {"mc_mean", it.mc_mean},
                       {"mc_half_width", it.mc_half_width},
                       {"feasible_count", it.feasible_count},
                       {"radius", number_or_null(it.radius)},
                       {"truth_slack", it.truth_slack ? number_or_null(*it.truth_slack) : json(nullptr)}});
    }
    runs.push_back({{"m", r.m},
                    {"repetition", r.repetition},
                    {"seed", r.seed},
                    {"T", r.T},
                    {"R", number_or_null(r.R)},
                    {"status", r.status},
                    {"message", r.message},
                    {"chosen_member", r.run.chosen_member},
                    {"chosen_iteration", r.run.chosen_iteration},
                    {"chosen_value", r.run.chosen_value},
                    {"chosen_half_width", r.run.chosen_half_width},
                    {"exact_value", r.exact_value ? json(*r.exact_value) : json(nullptr)},
                    {"suboptimality", r.suboptimality},
                    {"suboptimality_half_width", r.suboptimality_half_width},
                    {"trajectories", r.run.trajectories},
                    {"eval_trajectories", r.run.eval_trajectories},
                    {"final_radius", number_or_null(r.run.final_radius)},
                    {"relaxations", r.run.relaxations},
                    {"truth_always_feasible", r.run.truth_always_feasible()},
                    {"wall_seconds", r.run.wall_seconds},
                    {"iterations", std::move(iters)}});
  }
  doc["runs"] = std::move(runs);
  json aggs = json::array();
  for (const auto& a : rec.aggregates) {
    aggs.push_back({{"m", a.m},
                    {"count", a.count},
                    {"median", a.median},
                    {"q1", a.q1},
                    {"q3", a.q3},
                    {"mean_trajectories", a.mean_trajectories},
                    {"total_trajectories", a.total_trajectories}});
  }
  doc["aggregates"] = std::move(aggs);
  doc["total_trajectories"] = rec.total_trajectories;
  return doc;
}

std::string csv_header() { return "env,spec,m,T,R,seed,suboptimality,trajectories"; }

std::vector<std::string> csv_rows(const ResultRecord& rec) {
  std::vector<std::string> rows;
  for (const auto& r : rec.runs) {
    std::ostringstream row;
    row << rec.instance.generator << ',' << rec.spec_name << ',' << r.m << ',' << r.T << ',' << fmt(r.R) << ','
        << r.seed << ',' << (r.status == "ok" ? fmt(r.suboptimality) : std::string("nan")) << ','
        << r.run.trajectories;
    rows.push_back(row.str());
  }
  return rows;
}

void persist(const ResultRecord& rec) {
  write_json_file(rec.config.out, to_json(rec));
  if (rec.config.csv.empty()) return;
  const bool fresh = !std::filesystem::exists(rec.config.csv) || std::filesystem::file_size(rec.config.csv) == 0;
  std::ofstream out(rec.config.csv, std::ios::app);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + rec.config.csv);
  if (fresh) out << csv_header() << '\n';
  for (const auto& row : csv_rows(rec)) out << row << '\n';
}

}  // namespace bilin

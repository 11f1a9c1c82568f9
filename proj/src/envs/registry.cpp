#include <cmath>
#include <functional>
#include <set>

#include "bilin/envs.hpp"
#include "bilin/error.hpp"

namespace bilin {

namespace {

using Params = std::map<std::string, double>;

struct Generator {
  std::string name;
  Params defaults;
  std::function<InstanceBundle(const Params&, std::uint64_t)> make;
};

int as_int(const Params& p, const std::string& key) {
  const double v = p.at(key);
  if (v != std::floor(v)) throw Error(ErrorCode::ConfigError, "parameter " + key + " must be an integer");
  return static_cast<int>(v);
}

const std::vector<Generator>& generators() {
  static const std::vector<Generator> list = {
      {"q_rank", {{"S", 5}, {"A", 2}, {"H", 3}, {"class_size", 12}},
       [](const Params& p, std::uint64_t seed) {
         return make_q_rank(as_int(p, "S"), as_int(p, "A"), as_int(p, "H"), as_int(p, "class_size"), seed);
       }},
      {"v_rank", {{"S", 5}, {"A", 2}, {"H", 3}, {"class_size", 12}},
       [](const Params& p, std::uint64_t seed) {
         return make_v_rank(as_int(p, "S"), as_int(p, "A"), as_int(p, "H"), as_int(p, "class_size"), seed);
       }},
      {"low_occupancy", {{"S", 6}, {"A", 2}, {"H", 3}, {"d", 2}, {"class_size", 12}, {"uniform", 0}},
       [](const Params& p, std::uint64_t seed) {
         return make_low_occupancy(as_int(p, "S"), as_int(p, "A"), as_int(p, "H"), as_int(p, "d"),
                                   as_int(p, "class_size"), seed, p.at("uniform") != 0.0);
       }},
      {"mixture", {{"S", 5}, {"A", 2}, {"H", 3}, {"K", 3}, {"grid", 0.1}, {"identical", 0}},
       [](const Params& p, std::uint64_t seed) {
         return make_tabular_mixture(as_int(p, "S"), as_int(p, "A"), as_int(p, "H"), as_int(p, "K"), p.at("grid"),
                                     seed, p.at("identical") != 0.0);
       }},
      {"linear_qv", {{"base_states", 4}, {"duplicates", 2}, {"A", 2}, {"H", 3}, {"class_size", 12}},
       [](const Params& p, std::uint64_t seed) {
         return make_linear_qv_random(as_int(p, "base_states"), as_int(p, "duplicates"), as_int(p, "A"),
                                      as_int(p, "H"), seed, static_cast<std::size_t>(as_int(p, "class_size")));
       }},
      {"bellman_complete", {{"S", 4}, {"A", 2}, {"H", 3}, {"d", 8}, {"class_size", 12}},
       [](const Params& p, std::uint64_t seed) {
         return make_bellman_complete(as_int(p, "S"), as_int(p, "A"), as_int(p, "H"), as_int(p, "d"), seed,
                                      as_int(p, "class_size"));
       }},
      {"glm", {{"S", 4}, {"A", 2}, {"H", 3}, {"class_size", 12}},
       [](const Params& p, std::uint64_t seed) {
         return make_glm(as_int(p, "S"), as_int(p, "A"), as_int(p, "H"), as_int(p, "class_size"), seed);
       }},
      {"knr", {{"d_s", 1}, {"d_phi", 2}, {"sigma", 0.1}, {"H", 3}, {"A", 2}, {"radius", 2}, {"step", 0.1}},
       [](const Params& p, std::uint64_t seed) {
         return make_knr(as_int(p, "d_s"), as_int(p, "d_phi"), p.at("sigma"), as_int(p, "H"), as_int(p, "A"), seed,
                         as_int(p, "radius"), p.at("step"));
       }},
      {"witness", {{"S", 2}, {"A", 2}, {"H", 2}, {"class_size", 8}},
       [](const Params& p, std::uint64_t seed) {
         return make_witness(as_int(p, "S"), as_int(p, "A"), as_int(p, "H"), as_int(p, "class_size"), seed);
       }},
      {"factored", {{"d", 2}, {"O", 2}, {"A", 2}, {"H", 3}, {"candidates", 4}},
       [](const Params& p, std::uint64_t seed) {
         return make_factored(as_int(p, "d"), as_int(p, "O"), {}, as_int(p, "A"), as_int(p, "H"), seed,
                              as_int(p, "candidates"));
       }},
      {"binary_tree", {{"H", 4}, {"leaf", 0}, {"action", 0}},
       [](const Params& p, std::uint64_t seed) {
         return make_binary_tree(as_int(p, "H"), as_int(p, "leaf"), as_int(p, "action"), seed);
       }},
  };
  return list;
}

}  // namespace

std::vector<std::string> generator_names() {
  std::vector<std::string> out;
  for (const auto& g : generators()) out.push_back(g.name);
  return out;
}

InstanceBundle make_bundle(const std::string& generator, const std::map<std::string, double>& params) {
  for (const auto& g : generators()) {
    if (g.name != generator) continue;
    Params merged = g.defaults;
    std::uint64_t seed = 0;
    for (const auto& [key, value] : params) {
      if (key == "seed") {
        if (value < 0 || value != std::floor(value)) throw Error(ErrorCode::ConfigError, "seed must be a natural number");
        seed = static_cast<std::uint64_t>(value);
        continue;
      }
      if (!merged.contains(key)) throw Error(ErrorCode::ConfigError, "unknown parameter '" + key + "' for " + generator);
      merged[key] = value;
    }
    return g.make(merged, seed);
  }
  throw Error(ErrorCode::ConfigError, "unknown generator '" + generator + "'");
}

}  // namespace bilin

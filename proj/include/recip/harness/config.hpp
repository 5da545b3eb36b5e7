#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "recip/agents/kind.hpp"
#include "recip/error.hpp"
#include "recip/influence/learned.hpp"
#include "recip/training/match.hpp"

namespace recip::harness {

enum class EnvironmentId { IpdAnalytic, IpdRollout, Coins };

inline EnvironmentId parse_environment(const std::string& s) {
  if (s == "ipd-analytic") return EnvironmentId::IpdAnalytic;
  if (s == "ipd-rollout") return EnvironmentId::IpdRollout;
  if (s == "coins") return EnvironmentId::Coins;
  throw ConfigError("unknown environment '" + s + "' (expected ipd-analytic, ipd-rollout or coins)");
}

inline std::string to_string(EnvironmentId e) {
  switch (e) {
    case EnvironmentId::IpdAnalytic:
      return "ipd-analytic";
    case EnvironmentId::IpdRollout:
      return "ipd-rollout";
    default:
      return "coins";
  }
}

struct AgentSpec {
  agents::AgentKind kind = agents::AgentKind::NlAnalytic;
  double learning_rate = 1.0;
  double lookahead = 5.0;  // LOLA
  double reciprocal_weight = 5.0;
};

struct InfluenceSpec {
  int buffer_episodes = 5;
  int target_period = 10;
  int target_epochs = 20;
  double target_learning_rate = 0.01;
  int target_batch = 1024;
  std::vector<int> hidden{32, 32};
  double q_scale = 1.0;
  bool reset_balance = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvironmentId environment = EnvironmentId::IpdAnalytic;
  int episodes = 1000;
  std::vector<unsigned long long> seeds{0, 1, 2, 3, 4, 5, 6, 7};
  int lanes = 256;
  int horizon = 32;
  std::string output = "runs";
  int summary_window = 1;  // trailing episodes averaged per seed in summaries
  std::vector<std::string> roster{"RC", "NL", "LOLA"};
  std::array<AgentSpec, 2> agents{};
  training::PpoConfig ppo{};
  std::vector<int> hidden{2, 2};
  int recurrent = 0;
  InfluenceSpec influence{};
  double gamma = 0.96;       // analytic discount
  double init_scale = 0.1;   // analytic logit init std
  int grid = 3;

  void validate() const;
};

// Defaults before any file value is applied.
inline ExperimentConfig defaults_for(EnvironmentId env) {
  ExperimentConfig c;
  c.environment = env;
  switch (env) {
    case EnvironmentId::IpdAnalytic:
      c.lanes = 1024;
      c.episodes = 3000;
      c.influence = {5, 10, 0, 0.0, 0, {}, 2.0, true};
      c.agents[0] = {agents::AgentKind::RcAnalytic, 1.0, 5.0, 5.0};
      c.agents[1] = {agents::AgentKind::NlAnalytic, 1.0, 5.0, 5.0};
      c.summary_window = 1;
      break;
    case EnvironmentId::IpdRollout:
      c.episodes = 2000;
      c.ppo = training::PpoConfig::ipd();
      c.hidden = {2, 2};
      c.influence = {1, 3, 0, 0.0, 0, {}, 1.0, true};
      c.agents[0] = {agents::AgentKind::RcPpo, c.ppo.learning_rate, 0.0, 5.0};
      c.agents[1] = {agents::AgentKind::NlPpo, c.ppo.learning_rate, 0.0, 5.0};
      c.summary_window = 50;
      break;
    case EnvironmentId::Coins:
      c.episodes = 1000;
      c.ppo = training::PpoConfig::coins();
      c.hidden = {16, 16};
      c.recurrent = 16;
      c.influence = {4, 1, 20, 0.01, 1024, {32, 32}, 1.0, true};
      c.agents[0] = {agents::AgentKind::RcPpo, c.ppo.learning_rate, 0.0, 1.0};
      c.agents[1] = {agents::AgentKind::RcPpo, c.ppo.learning_rate, 0.0, 1.0};
      c.summary_window = 50;
      break;
  }
  return c;
}

inline void ExperimentConfig::validate() const {
  if (episodes <= 0) throw ConfigError("experiment.episodes must be positive");
  if (seeds.empty()) throw ConfigError("experiment.seeds must list at least one seed");
  if (lanes <= 0 || horizon <= 0) throw ConfigError("experiment.lanes and experiment.horizon must be positive");
  if (summary_window <= 0) throw ConfigError("experiment.summary_window must be positive");
  if (name.empty() || name.find_first_of("/\\,") != std::string::npos)
    throw ConfigError("experiment.name must be non-empty and free of '/', '\\' and ','");
  const bool analytic_env = environment == EnvironmentId::IpdAnalytic;
  for (int k = 0; k < 2; ++k) {
    const auto& a = agents[k];
    if (agents::is_analytic(a.kind) != analytic_env)
      throw ConfigError("agent" + std::to_string(k + 1) + ": " + std::string(agents::to_string(a.kind)) +
                        (analytic_env ? " cannot play ipd-analytic" : " needs ipd-analytic"));
    if (a.learning_rate < 0) throw ConfigError("agent learning_rate must be non-negative");
    if (a.reciprocal_weight < 0) throw ConfigError("agent reciprocal_weight must be non-negative");
  }
  if (!analytic_env) ppo.validate();
  if (!(gamma >= 0 && gamma < 1)) throw ConfigError("analytic.gamma must lie in [0, 1)");
  if (influence.buffer_episodes <= 0 || influence.target_period <= 0)
    throw ConfigError("influence.buffer_episodes and influence.target_period must be positive");
  if (environment == EnvironmentId::Coins && (influence.target_epochs < 0 || influence.target_batch <= 0))
    throw ConfigError("influence.target_epochs must be non-negative and target_batch positive");
  if (grid < 2) throw ConfigError("coins.grid must be at least 2");
  for (const auto& r : roster) agents::parse_agent_kind(r);
}

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  std::istringstream in(raw);
  T v{};
  if (!(in >> v) || !(in >> std::ws).eof()) throw ConfigError("config key '" + key + "': cannot parse '" + raw + "'");
  return v;
}

template <>
inline std::string parse_value<std::string>(const std::string&, const std::string& raw) {
  return raw;
}

template <>
inline bool parse_value<bool>(const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + raw + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::string item;
  std::istringstream in(raw);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(parse_value<T>(key, item));
  }
  return out;
}

}  // namespace detail

// Reads the flat INI format:
//
//   [experiment]  environment, name, episodes, seeds, lanes, horizon, output,
//                 summary_window, roster
//   [agent1] / [agent2]  kind, learning_rate, lookahead, reciprocal_weight
//   [ppo]         clip, epochs, entropy, gamma, learning_rate, value_coef,
//                 max_grad_norm, hidden, recurrent
//   [influence]   buffer_episodes, target_period, target_epochs,
//                 target_learning_rate, target_batch, hidden, q_scale,
//                 reset_balance
//   [analytic]    gamma, init_scale
//   [coins]       grid
//
// experiment.environment selects the defaults the other keys override.
// Unknown sections or keys are errors.
inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto env = tree.get_optional<std::string>("experiment.environment");
  if (!env) throw ConfigError("config: experiment.environment is required");
  ExperimentConfig c = defaults_for(parse_environment(*env));
  bool ppo_lr_set = false;
  std::array<bool, 2> agent_lr_set{};

  using Setter = std::function<void(const std::string&, const std::string&)>;
  std::map<std::string, std::map<std::string, Setter>> table;
  auto& ex = table["experiment"];
  ex["environment"] = [](const std::string&, const std::string&) {};
  ex["name"] = [&](auto& k, auto& v) { c.name = detail::parse_value<std::string>(k, v); };
  ex["episodes"] = [&](auto& k, auto& v) { c.episodes = detail::parse_value<int>(k, v); };
  ex["seeds"] = [&](auto& k, auto& v) { c.seeds = detail::parse_list<unsigned long long>(k, v); };
  ex["lanes"] = [&](auto& k, auto& v) { c.lanes = detail::parse_value<int>(k, v); };
  ex["horizon"] = [&](auto& k, auto& v) { c.horizon = detail::parse_value<int>(k, v); };
  ex["output"] = [&](auto& k, auto& v) { c.output = detail::parse_value<std::string>(k, v); };
  ex["summary_window"] = [&](auto& k, auto& v) { c.summary_window = detail::parse_value<int>(k, v); };
  ex["roster"] = [&](auto& k, auto& v) { c.roster = detail::parse_list<std::string>(k, v); };
  for (int i = 0; i < 2; ++i) {
    auto& ag = table["agent" + std::to_string(i + 1)];
    ag["kind"] = [&, i](auto&, auto& v) { c.agents[i].kind = agents::parse_agent_kind(v); };
    ag["learning_rate"] = [&, i](auto& k, auto& v) {
      c.agents[i].learning_rate = detail::parse_value<double>(k, v);
      agent_lr_set[i] = true;
    };
    ag["lookahead"] = [&, i](auto& k, auto& v) { c.agents[i].lookahead = detail::parse_value<double>(k, v); };
    ag["reciprocal_weight"] = [&, i](auto& k, auto& v) {
      c.agents[i].reciprocal_weight = detail::parse_value<double>(k, v);
    };
  }
  auto& pp = table["ppo"];
  pp["clip"] = [&](auto& k, auto& v) { c.ppo.clip = detail::parse_value<double>(k, v); };
  pp["epochs"] = [&](auto& k, auto& v) { c.ppo.epochs = detail::parse_value<int>(k, v); };
  pp["entropy"] = [&](auto& k, auto& v) { c.ppo.entropy = detail::parse_value<double>(k, v); };
  pp["gamma"] = [&](auto& k, auto& v) { c.ppo.gamma = detail::parse_value<double>(k, v); };
  pp["learning_rate"] = [&](auto& k, auto& v) {
    c.ppo.learning_rate = detail::parse_value<double>(k, v);
    ppo_lr_set = true;
  };
  pp["value_coef"] = [&](auto& k, auto& v) { c.ppo.value_coef = detail::parse_value<double>(k, v); };
  pp["max_grad_norm"] = [&](auto& k, auto& v) { c.ppo.max_grad_norm = detail::parse_value<double>(k, v); };
  pp["hidden"] = [&](auto& k, auto& v) { c.hidden = detail::parse_list<int>(k, v); };
  pp["recurrent"] = [&](auto& k, auto& v) { c.recurrent = detail::parse_value<int>(k, v); };
  auto& in_ = table["influence"];
  in_["buffer_episodes"] = [&](auto& k, auto& v) { c.influence.buffer_episodes = detail::parse_value<int>(k, v); };
  in_["target_period"] = [&](auto& k, auto& v) { c.influence.target_period = detail::parse_value<int>(k, v); };
  in_["target_epochs"] = [&](auto& k, auto& v) { c.influence.target_epochs = detail::parse_value<int>(k, v); };
  in_["target_learning_rate"] = [&](auto& k, auto& v) {
    c.influence.target_learning_rate = detail::parse_value<double>(k, v);
  };
  in_["target_batch"] = [&](auto& k, auto& v) { c.influence.target_batch = detail::parse_value<int>(k, v); };
  in_["hidden"] = [&](auto& k, auto& v) { c.influence.hidden = detail::parse_list<int>(k, v); };
  in_["q_scale"] = [&](auto& k, auto& v) { c.influence.q_scale = detail::parse_value<double>(k, v); };
  in_["reset_balance"] = [&](auto& k, auto& v) { c.influence.reset_balance = detail::parse_value<bool>(k, v); };
  auto& an = table["analytic"];
  an["gamma"] = [&](auto& k, auto& v) { c.gamma = detail::parse_value<double>(k, v); };
  an["init_scale"] = [&](auto& k, auto& v) { c.init_scale = detail::parse_value<double>(k, v); };
  table["coins"]["grid"] = [&](auto& k, auto& v) { c.grid = detail::parse_value<int>(k, v); };

  for (const auto& [section, keys] : tree) {
    auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, node] : keys) {
      auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      it->second(section + "." + key, node.data());
    }
  }
  // PPO agents inherit [ppo] learning_rate unless given their own.
  if (c.environment != EnvironmentId::IpdAnalytic)
    for (int i = 0; i < 2; ++i)
      if (!agent_lr_set[i] && ppo_lr_set) c.agents[i].learning_rate = c.ppo.learning_rate;
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace recip::harness

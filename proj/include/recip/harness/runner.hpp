#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "recip/harness/config.hpp"
#include "recip/harness/metrics.hpp"

namespace recip::harness {

struct SeedResult {
  unsigned long long seed = 0;
  std::vector<MetricsRow> rows;
  bool failed = false;
  std::string error;
};

struct SummaryStat {
  double mean = 0;
  double stderr_ = 0;
  int n = 0;
};

// Agent settings used when a roster names only the kind.
inline AgentSpec default_agent(agents::AgentKind kind) {
  AgentSpec a;
  a.kind = kind;
  return a;
}

inline agents::NetworkShape network_shape(const ExperimentConfig& c) {
  if (c.environment == EnvironmentId::Coins) return {4 * c.grid * c.grid + 1, 4, c.hidden, c.recurrent};
  return {ipd::kNumStates, 2, c.hidden, c.recurrent};
}

template <class Env, class MakeModel>
training::RolloutTrainer<Env> make_rollout_trainer(const ExperimentConfig& c, Env env, MakeModel make_model,
                                                   const Rng& master) {
  using State = typename Env::State;
  std::array<agents::RolloutAgent<State>, 2> seats;
  for (int k = 0; k < 2; ++k) {
    Rng init = master.stream("agent", static_cast<std::uint64_t>(k));
    seats[k] = {agents::AgentKind::NlPpo, agents::ActorCritic(network_shape(c), c.agents[k].learning_rate, init), {}};
    if (c.agents[k].kind == agents::AgentKind::RcPpo) {
      auto rc = std::make_shared<agents::Reciprocator<State>>(
          make_model(master.stream("estimator", static_cast<std::uint64_t>(k))), c.influence.buffer_episodes, c.lanes,
          c.agents[k].reciprocal_weight, k, 1 - k, c.influence.reset_balance);
      seats[k] = agents::reciprocator_wrap(std::move(seats[k]), std::move(rc));
    }
  }
  return training::RolloutTrainer<Env>(std::move(env), std::move(seats), c.ppo, master.stream("match"));
}

inline training::AnalyticTrainer make_analytic_trainer(const ExperimentConfig& c, const Rng& master) {
  std::array<agents::AnalyticAgent, 2> seats;
  for (int k = 0; k < 2; ++k) {
    Rng init = master.stream("agent", static_cast<std::uint64_t>(k));
    const auto& a = c.agents[k];
    seats[k] = {a.kind, agents::random_logits(init, c.init_scale), a.learning_rate, a.lookahead, a.reciprocal_weight};
  }
  training::AnalyticOptions o;
  o.gamma = c.gamma;
  o.lanes = c.lanes;
  o.horizon = c.horizon;
  o.buffer_episodes = c.influence.buffer_episodes;
  o.target_period = c.influence.target_period;
  o.q_scale = c.influence.q_scale;
  o.reset_balance = c.influence.reset_balance;
  return training::AnalyticTrainer(seats, o, master.stream("match"));
}

// Trains one seed; every row is passed to on_row and returned.
inline std::vector<MetricsRow> run_seed(const ExperimentConfig& c, unsigned long long seed,
                                        const training::MetricsCallback& on_row = {}) {
  c.validate();
  const Rng master(seed);
  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(c.episodes));
  auto collect = [&](const MetricsRow& r) {
    MetricsRow row = r;
    row.run_id = c.name;
    row.seed = seed;
    rows.push_back(row);
    if (on_row) on_row(row);
  };
  switch (c.environment) {
    case EnvironmentId::IpdAnalytic: {
      auto tr = make_analytic_trainer(c, master);
      training::train_match(tr, c.episodes, collect);
      break;
    }
    case EnvironmentId::IpdRollout: {
      const influence::AnalyticInfluence::Options io{{}, c.ppo.gamma, c.influence.target_period, c.influence.q_scale};
      auto tr = make_rollout_trainer(
          c, env::IpdEnv(c.lanes, c.horizon),
          [&](Rng) { return std::make_unique<influence::AnalyticInfluence>(io); }, master);
      training::train_match(tr, c.episodes, collect);
      break;
    }
    case EnvironmentId::Coins: {
      const influence::CoinsInfluence::Options io{c.influence.hidden, c.influence.target_learning_rate,
                                                  c.influence.target_epochs, c.influence.target_batch,
                                                  c.influence.target_period};
      const influence::CoinsFeaturizer feat{c.grid, c.horizon};
      auto tr = make_rollout_trainer(
          c, env::CoinsEnv(c.lanes, c.grid, c.horizon),
          [&](Rng rng) { return std::make_unique<influence::CoinsInfluence>(feat, io, rng); }, master);
      training::train_match(tr, c.episodes, collect);
      break;
    }
  }
  return rows;
}

// Mean and standard error across seeds of each seed's average over its last
// `window` episodes. Failed seeds are skipped.
inline std::array<SummaryStat, kMetricNames.size()> summarize(const std::vector<SeedResult>& results, int window) {
  std::array<SummaryStat, kMetricNames.size()> out{};
  std::vector<std::array<double, kMetricNames.size()>> per_seed;
  for (const auto& r : results) {
    if (r.failed || r.rows.empty()) continue;
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(window), r.rows.size());
    std::array<double, kMetricNames.size()> avg{};
    for (std::size_t i = r.rows.size() - w; i < r.rows.size(); ++i) {
      const auto v = metric_values(r.rows[i]);
      for (std::size_t m = 0; m < avg.size(); ++m) avg[m] += v[m] / static_cast<double>(w);
    }
    per_seed.push_back(avg);
  }
  const int n = static_cast<int>(per_seed.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m].n = n;
    if (n == 0) continue;
    double mean = 0;
    for (const auto& s : per_seed) mean += s[m];
    mean /= n;
    double ss = 0;
    for (const auto& s : per_seed) ss += (s[m] - mean) * (s[m] - mean);
    out[m].mean = mean;
    out[m].stderr_ = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  }
  return out;
}

inline void write_summary(std::ostream& out, const std::string& run_id,
                          const std::array<SummaryStat, kMetricNames.size()>& stats, int window) {
  const auto old = out.precision(17);
  out << "run_id,metric,mean,stderr,n,window\n";
  for (std::size_t m = 0; m < stats.size(); ++m)
    out << run_id << ',' << kMetricNames[m] << ',' << stats[m].mean << ',' << stats[m].stderr_ << ',' << stats[m].n
        << ',' << window << '\n';
  out.precision(old);
}

struct RunOutcome {
  std::vector<SeedResult> seeds;
  std::array<SummaryStat, kMetricNames.size()> summary{};
  std::vector<std::filesystem::path> files;
  bool ok() const {
    for (const auto& s : seeds)
      if (s.failed) return false;
    return true;
  }
};

inline std::filesystem::path seed_file(const ExperimentConfig& c, unsigned long long seed) {
  return std::filesystem::path(c.output) / (c.name + "_seed" + std::to_string(seed) + ".csv");
}

// Trains every seed, writing <output>/<name>_seed<k>.csv and
// <output>/<name>_summary.csv. A seed that hits a numeric failure is recorded
// in the summary directory as <name>_seed<k>.failed and skipped.
inline RunOutcome run(const ExperimentConfig& c, std::ostream* log = nullptr) {
  c.validate();
  std::filesystem::create_directories(c.output);
  RunOutcome outcome;
  for (auto seed : c.seeds) {
    SeedResult res;
    res.seed = seed;
    const auto path = seed_file(c, seed);
    std::ofstream csv(path);
    if (!csv) throw ConfigError("cannot write '" + path.string() + "'");
    write_metrics_header(csv);
    try {
      res.rows = run_seed(c, seed, [&](const MetricsRow& r) { write_metrics_row(csv, r); });
    } catch (const TrainingError& e) {
      res.failed = true;
      res.error = e.what();
      std::ofstream(std::filesystem::path(c.output) / (c.name + "_seed" + std::to_string(seed) + ".failed"))
          << e.what() << '\n';
    }
    outcome.files.push_back(path);
    if (log) {
      *log << c.name << " seed " << seed << ": ";
      if (res.failed)
        *log << "FAILED (" << res.error << ")\n";
      else
        *log << "returns " << res.rows.back().ext_return[0] << ", " << res.rows.back().ext_return[1] << '\n';
    }
    outcome.seeds.push_back(std::move(res));
  }
  outcome.summary = summarize(outcome.seeds, c.summary_window);
  const auto summary_path = std::filesystem::path(c.output) / (c.name + "_summary.csv");
  std::ofstream sum(summary_path);
  write_summary(sum, c.name, outcome.summary, c.summary_window);
  outcome.files.push_back(summary_path);
  return outcome;
}

// Both agents better than -1.25 per step and within 0.10 of each other.
inline bool cooperative_cell(double row_return, double col_return) {
  return row_return > -1.25 && col_return > -1.25 && std::abs(row_return - col_return) <= 0.10 + 1e-12;
}

struct RoundRobinCell {
  std::string row, col;
  SummaryStat row_return, col_return;
  bool cooperative = false;
};

inline void write_round_robin(std::ostream& out, const std::vector<RoundRobinCell>& cells) {
  const auto old = out.precision(17);
  out << "row,col,row_return,row_stderr,col_return,col_stderr,n,cooperative\n";
  for (const auto& c : cells)
    out << c.row << ',' << c.col << ',' << c.row_return.mean << ',' << c.row_return.stderr_ << ','
        << c.col_return.mean << ',' << c.col_return.stderr_ << ',' << c.row_return.n << ','
        << (c.cooperative ? 1 : 0) << '\n';
  out.precision(old);
}

// Every ordered pair of roster kinds in ipd-analytic: the row agent takes
// seat 1. Writes per-pair runs and <output>/<name>_round_robin.csv.
inline std::vector<RoundRobinCell> round_robin(const ExperimentConfig& c, std::ostream* log = nullptr) {
  if (c.environment != EnvironmentId::IpdAnalytic) throw ConfigError("round-robin requires environment ipd-analytic");
  std::vector<agents::AgentKind> kinds;
  for (const auto& r : c.roster) {
    const auto k = agents::parse_agent_kind(r);
    if (!agents::is_analytic(k)) throw ConfigError("round-robin roster supports RC, NL and LOLA only, got '" + r + "'");
    kinds.push_back(k);
  }
  std::vector<RoundRobinCell> cells;
  for (auto row : kinds)
    for (auto col : kinds) {
      ExperimentConfig pair = c;
      pair.agents = {default_agent(row), default_agent(col)};
      for (int k = 0; k < 2; ++k)
        if (c.agents[k].kind == pair.agents[k].kind) pair.agents[k] = c.agents[k];
      pair.name = c.name + "_" + std::string(agents::short_name(row)) + "_vs_" + std::string(agents::short_name(col));
      const auto outcome = run(pair, log);
      RoundRobinCell cell;
      cell.row = agents::short_name(row);
      cell.col = agents::short_name(col);
      cell.row_return = outcome.summary[0];
      cell.col_return = outcome.summary[1];
      cell.cooperative = cooperative_cell(cell.row_return.mean, cell.col_return.mean);
      cells.push_back(cell);
    }
  std::ofstream out(std::filesystem::path(c.output) / (c.name + "_round_robin.csv"));
  write_round_robin(out, cells);
  return cells;
}

}  // namespace recip::harness

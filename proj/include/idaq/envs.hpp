#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "idaq/belief.hpp"
#include "idaq/core.hpp"
#include "idaq/dataset.hpp"
#include "idaq/mdp.hpp"

namespace idaq {

/// A built family: tasks, their expert behaviors, the task prior and defaults.
struct EnvInstance {
  std::string name;
  std::map<std::string, std::string> parameters;
  std::vector<TaskSpec> tasks;
  BehaviorMap behavior;
  std::vector<double> task_prior;
  AdaptationBudget default_budget;
  double default_k_percent = 20.0;

  const TaskShape& shape() const { return tasks.front().shape(); }

  /// Hypotheses built from the true tasks and behaviors.
  HypothesisSet true_hypotheses(BeliefMode mode) const {
    std::vector<Hypothesis> h;
    for (std::size_t i = 0; i < tasks.size(); ++i) h.push_back({tasks[i], behavior[i]});
    return HypothesisSet(std::move(h), mode);
  }
};

/// One state, v arms, horizon 1. Task i pays 1 for arm i and 0 otherwise.
inline EnvInstance build_v_arm(std::size_t v) {
  if (v < 1) throw ConfigError("v_arm: v must be at least 1");
  EnvInstance env;
  env.name = "v_arm";
  env.parameters["v"] = std::to_string(v);
  TaskShape shape{1, v, {0.0, 1.0}, 1, 0};
  for (std::size_t i = 0; i < v; ++i) {
    Table trans(v, 1, 1.0), rew(v, 2);
    for (std::size_t a = 0; a < v; ++a) rew(a, a == i ? 1 : 0) = 1.0;
    env.tasks.emplace_back(shape, std::move(trans), std::move(rew));
    env.behavior.assignment.push_back(StationaryPolicy::constant(1, v, i));
  }
  env.task_prior.assign(v, 1.0 / static_cast<double>(v));
  env.default_budget = AdaptationBudget::episodes(v, 1);
  return env;
}

/// Index layout of the three-path corridor.
struct ThreePathLayout {
  std::size_t length = 0;
  StateIndex fork() const { return 0; }
  StateIndex cell(std::size_t path, std::size_t x) const { return 1 + path * length + (x - 1); }
  StateIndex terminal() const { return 1 + 3 * length; }
  std::size_t num_states() const { return 2 + 3 * length; }
};

/// A fork opening onto three corridors of `length` cells. Action j at the
/// fork enters corridor j; inside a corridor actions 0/1/2 step forward while
/// drifting left, straight or right. Slip shifts the lateral outcome by
/// one either way with probability slip/2 each. Leaving the last cell of
/// corridor p pays 1 iff p is the task's goal, then the episode idles in a
/// terminal state.
inline EnvInstance build_three_path(std::size_t length, double slip) {
  if (length < 2) throw ConfigError("three_path: length must be at least 2");
  if (!(slip >= 0.0 && slip <= 0.2)) throw ConfigError("three_path: slip must lie in [0, 0.2]");
  const ThreePathLayout lay{length};
  const std::size_t S = lay.num_states(), A = 3;
  const TaskShape shape{S, A, {0.0, 1.0}, length + 1, lay.fork()};

  auto lateral = [&](Table& trans, std::size_t pair, std::size_t intended, std::size_t x) {
    auto add = [&](long p, double w) {
      const auto q = static_cast<std::size_t>(std::clamp<long>(p, 0, 2));
      trans(pair, lay.cell(q, x)) += w;
    };
    add(static_cast<long>(intended), 1.0 - slip);
    add(static_cast<long>(intended) - 1, slip / 2.0);
    add(static_cast<long>(intended) + 1, slip / 2.0);
  };

  EnvInstance env;
  env.name = "three_path";
  env.parameters["length"] = std::to_string(length);
  env.parameters["slip"] = format_double(slip);
  for (std::size_t goal = 0; goal < 3; ++goal) {
    Table trans(S * A, S), rew(S * A, 2);
    for (ActionIndex a = 0; a < A; ++a) {
      lateral(trans, shape.pair(lay.fork(), a), a, 1);
      rew(shape.pair(lay.fork(), a), 0) = 1.0;
      for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t x = 1; x <= length; ++x) {
          const std::size_t pair = shape.pair(lay.cell(p, x), a);
          if (x < length) {
            const long intended = std::clamp<long>(static_cast<long>(p) + static_cast<long>(a) - 1, 0, 2);
            lateral(trans, pair, static_cast<std::size_t>(intended), x + 1);
            rew(pair, 0) = 1.0;
          } else {
            trans(pair, lay.terminal()) = 1.0;
            rew(pair, p == goal ? 1 : 0) = 1.0;
          }
        }
      trans(shape.pair(lay.terminal(), a), lay.terminal()) = 1.0;
      rew(shape.pair(lay.terminal(), a), 0) = 1.0;
    }
    env.tasks.emplace_back(shape, std::move(trans), std::move(rew));

    std::vector<ActionIndex> expert(S, 1);
    expert[lay.fork()] = goal;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t x = 1; x < length; ++x) expert[lay.cell(p, x)] = p < goal ? 2 : (p > goal ? 0 : 1);
    env.behavior.assignment.push_back(StationaryPolicy::deterministic(A, expert));
  }
  env.task_prior.assign(3, 1.0 / 3.0);
  env.default_budget = AdaptationBudget::episodes(6, shape.horizon);
  return env;
}

struct PointGridLayout {
  std::size_t grid = 0;
  StateIndex cell(std::size_t row, std::size_t col) const { return row * grid + col; }
  std::size_t row(StateIndex s) const { return s / grid; }
  std::size_t col(StateIndex s) const { return s % grid; }
  StateIndex centre() const { return cell(grid / 2, grid / 2); }
};

/// Goal cells on the upper semicircle of radius floor(grid/2) around the centre.
inline std::vector<StateIndex> point_grid_goals(std::size_t grid, std::size_t num_goals) {
  const PointGridLayout lay{grid};
  const double radius = static_cast<double>(grid / 2);
  const double c = static_cast<double>(grid / 2);
  std::vector<StateIndex> goals;
  for (std::size_t k = 0; k < num_goals; ++k) {
    const double theta =
        num_goals == 1 ? std::numbers::pi / 2 : std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_goals - 1);
    const double x = std::clamp(std::round(c + radius * std::cos(theta)), 0.0, static_cast<double>(grid - 1));
    const double y = std::clamp(std::round(c - radius * std::sin(theta)), 0.0, static_cast<double>(grid - 1));
    const StateIndex g = lay.cell(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    if (std::find(goals.begin(), goals.end(), g) != goals.end())
      throw ConfigError("point_grid: goals collide; use a larger grid or fewer goals");
    goals.push_back(g);
  }
  return goals;
}

/// Discretized point robot: a grid x grid board, actions stay/up/down/left/right,
/// start at the centre, horizon 20. Reward depends on the current cell: dense
/// rewards are 1 - distance/diagonal rounded to twentieths, sparse rewards
/// are 1 on the goal cell only. Experts walk a shortest path and then stay.
inline EnvInstance build_point_grid(std::size_t grid, std::size_t num_goals, bool sparse) {
  if (grid < 5) throw ConfigError("point_grid: grid must be at least 5");
  if (num_goals < 1) throw ConfigError("point_grid: at least one goal is required");
  const PointGridLayout lay{grid};
  const std::size_t S = grid * grid, A = 5, H = 20;
  constexpr std::size_t kLevels = 20;
  std::vector<double> support;
  if (sparse)
    support = {0.0, 1.0};
  else
    for (std::size_t k = 0; k <= kLevels; ++k) support.push_back(static_cast<double>(k) / kLevels);
  const TaskShape shape{S, A, support, H, lay.centre()};
  const auto goals = point_grid_goals(grid, num_goals);
  const double diagonal = std::sqrt(2.0) * static_cast<double>(grid - 1);

  auto move = [&](StateIndex s, ActionIndex a) {
    std::size_t r = lay.row(s), c = lay.col(s);
    if (a == 1 && r > 0) --r;
    if (a == 2 && r + 1 < grid) ++r;
    if (a == 3 && c > 0) --c;
    if (a == 4 && c + 1 < grid) ++c;
    return lay.cell(r, c);
  };

  EnvInstance env;
  env.name = "point_grid";
  env.parameters["grid"] = std::to_string(grid);
  env.parameters["goals"] = std::to_string(num_goals);
  env.parameters["sparse"] = sparse ? "1" : "0";
  for (StateIndex goal : goals) {
    Table trans(S * A, S), rew(S * A, support.size());
    std::vector<ActionIndex> expert(S, 0);
    for (StateIndex s = 0; s < S; ++s) {
      const double dr = static_cast<double>(lay.row(s)) - static_cast<double>(lay.row(goal));
      const double dc = static_cast<double>(lay.col(s)) - static_cast<double>(lay.col(goal));
      std::size_t level;
      if (sparse)
        level = s == goal ? 1 : 0;
      else
        level = static_cast<std::size_t>(std::lround((1.0 - std::hypot(dr, dc) / diagonal) * kLevels));
      for (ActionIndex a = 0; a < A; ++a) {
        trans(shape.pair(s, a), move(s, a)) = 1.0;
        rew(shape.pair(s, a), level) = 1.0;
      }
      // Close the larger gap first.
      if (std::abs(dc) >= std::abs(dr) && dc != 0.0)
        expert[s] = dc > 0 ? 3 : 4;
      else if (dr != 0.0)
        expert[s] = dr > 0 ? 1 : 2;
    }
    env.tasks.emplace_back(shape, std::move(trans), std::move(rew));
    env.behavior.assignment.push_back(StationaryPolicy::deterministic(A, expert));
  }
  env.task_prior.assign(goals.size(), 1.0 / static_cast<double>(goals.size()));
  env.default_budget = AdaptationBudget::episodes(2 * goals.size(), H);
  env.default_k_percent = 10.0;
  return env;
}

/// Medium-quality stand-in: each behavior mixed with the uniform policy.
inline BehaviorMap perturb_behavior(const BehaviorMap& experts, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("perturb_behavior: epsilon must lie in [0, 1]");
  BehaviorMap out;
  for (const auto& pi : experts.assignment) {
    Table t = pi.table();
    for (double& x : t.data()) x = (1.0 - epsilon) * x + epsilon / static_cast<double>(t.cols());
    out.assignment.emplace_back(std::move(t));
  }
  return out;
}

/// Random MDP with Bernoulli rewards, for property checks.
inline TaskSpec random_task(Rng& rng, std::size_t S = 3, std::size_t A = 2, std::size_t H = 4) {
  TaskShape shape{S, A, {0.0, 1.0}, H, 0};
  Table trans(S * A, S), rew(S * A, 2);
  for (std::size_t p = 0; p < S * A; ++p) {
    double total = 0.0;
    for (std::size_t n = 0; n < S; ++n) total += trans(p, n) = uniform01(rng) + 0.05;
    for (std::size_t n = 0; n < S; ++n) trans(p, n) /= total;
    const double q = uniform01(rng);
    rew(p, 1) = q;
    rew(p, 0) = 1.0 - q;
  }
  return TaskSpec(shape, std::move(trans), std::move(rew));
}

/// Uniformly random stochastic policy.
inline StationaryPolicy random_policy(Rng& rng, std::size_t S, std::size_t A) {
  Table t(S, A);
  for (std::size_t s = 0; s < S; ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < A; ++a) total += t(s, a) = uniform01(rng) + 0.05;
    for (std::size_t a = 0; a < A; ++a) t(s, a) /= total;
  }
  return StationaryPolicy(std::move(t));
}

/// Single-state task whose every action pays 1 with probability p.
inline TaskSpec bernoulli_task(double p, std::size_t horizon = 1, std::size_t actions = 1) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("bernoulli_task: p must lie in [0, 1]");
  TaskShape shape{1, actions, {0.0, 1.0}, horizon, 0};
  Table trans(actions, 1, 1.0), rew(actions, 2);
  for (std::size_t a = 0; a < actions; ++a) {
    rew(a, 0) = 1.0 - p;
    rew(a, 1) = p;
  }
  return TaskSpec(shape, std::move(trans), std::move(rew));
}

/// Parses "family:key=value,key=value".
inline EnvInstance build_env(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    for (std::string item; std::getline(ss, item, ',');) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("environment parameter '" + item + "' lacks '='");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  auto take = [&](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    std::string v = it == kv.end() ? fallback : it->second;
    if (it != kv.end()) kv.erase(it);
    return v;
  };
  auto as_count = [&](const std::string& key, const std::string& text) {
    try {
      return parse_index(text);
    } catch (const ParseError&) {
      throw ConfigError("environment parameter '" + key + "' must be a count, got '" + text + "'");
    }
  };
  auto as_real = [&](const std::string& key, const std::string& text) {
    try {
      return parse_double(text);
    } catch (const ParseError&) {
      throw ConfigError("environment parameter '" + key + "' must be a number, got '" + text + "'");
    }
  };
  EnvInstance env;
  if (family == "v_arm") {
    env = build_v_arm(as_count("v", take("v", "5")));
  } else if (family == "three_path") {
    const auto len = as_count("length", take("length", "4"));
    env = build_three_path(len, as_real("slip", take("slip", "0.05")));
  } else if (family == "point_grid") {
    const auto grid = as_count("grid", take("grid", "7"));
    const auto goals = as_count("goals", take("goals", "4"));
    env = build_point_grid(grid, goals, as_count("sparse", take("sparse", "1")) != 0);
  } else {
    throw ConfigError("unknown environment family '" + family + "'");
  }
  if (!kv.empty()) throw ConfigError("unknown parameter '" + kv.begin()->first + "' for " + family);
  return env;
}

}  // namespace idaq

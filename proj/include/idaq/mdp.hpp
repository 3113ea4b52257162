#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idaq/core.hpp"

namespace idaq {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

/// Dimensions shared by every task of a family.
struct TaskShape {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> reward_support;
  std::size_t horizon = 0;
  StateIndex initial_state = 0;

  std::size_t num_rewards() const { return reward_support.size(); }
  std::size_t num_pairs() const { return num_states * num_actions; }
  std::size_t pair(StateIndex s, ActionIndex a) const { return s * num_actions + a; }

  /// Index of `reward` in the support by exact equality.
  std::optional<std::size_t> reward_index(double reward) const {
    for (std::size_t i = 0; i < reward_support.size(); ++i)
      if (reward_support[i] == reward) return i;
    return std::nullopt;
  }

  bool operator==(const TaskShape&) const = default;
};

/// A finite-horizon MDP with a finite reward support and a fixed initial state.
///
/// Transition rows are indexed by the (state, action) pair and hold a
/// distribution over next states; reward rows hold a distribution over the
/// reward support. Dataset-induced models may leave unsupported rows all
/// zero, which is allowed only with `Rows::allow_empty`.
class TaskSpec {
 public:
  enum class Rows { complete, allow_empty };

  TaskSpec(TaskShape shape, Table transition, Table reward, Rows rows = Rows::complete)
      : shape_(std::move(shape)), transition_(std::move(transition)), reward_(std::move(reward)) {
    validate(rows);
    mean_reward_.resize(shape_.num_pairs());
    for (std::size_t p = 0; p < shape_.num_pairs(); ++p) {
      double m = 0.0;
      auto row = reward_.row(p);
      for (std::size_t r = 0; r < row.size(); ++r) m += row[r] * shape_.reward_support[r];
      mean_reward_[p] = m;
    }
  }

  const TaskShape& shape() const { return shape_; }
  std::size_t num_states() const { return shape_.num_states; }
  std::size_t num_actions() const { return shape_.num_actions; }
  std::size_t num_rewards() const { return shape_.num_rewards(); }
  std::size_t horizon() const { return shape_.horizon; }
  StateIndex initial_state() const { return shape_.initial_state; }
  const std::vector<double>& reward_support() const { return shape_.reward_support; }

  std::span<const double> transition_row(StateIndex s, ActionIndex a) const {
    return transition_.row(shape_.pair(s, a));
  }
  std::span<const double> reward_row(StateIndex s, ActionIndex a) const {
    return reward_.row(shape_.pair(s, a));
  }
  double transition(StateIndex s, ActionIndex a, StateIndex next) const {
    return transition_(shape_.pair(s, a), next);
  }
  double reward_prob(StateIndex s, ActionIndex a, std::size_t reward_index) const {
    return reward_(shape_.pair(s, a), reward_index);
  }
  /// E[r | s, a]; zero on empty rows.
  double mean_reward(StateIndex s, ActionIndex a) const { return mean_reward_[shape_.pair(s, a)]; }

  /// False only for the all-zero rows of a dataset-induced model.
  bool has_row(StateIndex s, ActionIndex a) const {
    return sum(transition_row(s, a)) > 0.0;
  }

  const Table& transition_table() const { return transition_; }
  const Table& reward_table() const { return reward_; }

 private:
  void validate(Rows rows) const {
    const auto& sh = shape_;
    if (sh.num_states == 0 || sh.num_actions == 0 || sh.reward_support.empty() || sh.horizon == 0)
      throw ConfigError("TaskSpec: dimensions must be positive");
    if (sh.initial_state >= sh.num_states) throw ConfigError("TaskSpec: initial state out of range");
    for (double r : sh.reward_support)
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("TaskSpec: reward support must lie in [0,1]");
    if (transition_.rows() != sh.num_pairs() || transition_.cols() != sh.num_states)
      throw ConfigError("TaskSpec: transition table has wrong shape");
    if (reward_.rows() != sh.num_pairs() || reward_.cols() != sh.num_rewards())
      throw ConfigError("TaskSpec: reward table has wrong shape");
    for (std::size_t p = 0; p < sh.num_pairs(); ++p) {
      check_row(transition_.row(p), rows, "transition", p);
      check_row(reward_.row(p), rows, "reward", p);
      if ((sum(transition_.row(p)) > 0.0) != (sum(reward_.row(p)) > 0.0))
        throw ConfigError("TaskSpec: row " + std::to_string(p) + " is empty in only one table");
    }
  }

  static void check_row(std::span<const double> row, Rows rows, const char* what, std::size_t p) {
    bool all_zero = true;
    for (double x : row) {
      if (!(x >= 0.0) || !std::isfinite(x))
        throw ConfigError(std::string("TaskSpec: negative entry in ") + what + " row " + std::to_string(p));
      if (x != 0.0) all_zero = false;
    }
    if (all_zero && rows == Rows::allow_empty) return;
    const double tol = rows == Rows::allow_empty ? kArithmeticTolerance : kConstructionTolerance;
    if (std::abs(sum(row) - 1.0) > tol)
      throw ConfigError(std::string("TaskSpec: ") + what + " row " + std::to_string(p) + " does not sum to 1");
  }

  TaskShape shape_;
  Table transition_;
  Table reward_;
  std::vector<double> mean_reward_;
};

/// pi(a|s) as a dense state-by-action table.
class StationaryPolicy {
 public:
  StationaryPolicy() = default;
  explicit StationaryPolicy(Table action_probs) : probs_(std::move(action_probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw ConfigError("StationaryPolicy: empty table");
    for (std::size_t s = 0; s < probs_.rows(); ++s)
      if (!is_distribution(probs_.row(s), kConstructionTolerance))
        throw ConfigError("StationaryPolicy: row " + std::to_string(s) + " is not a distribution");
  }

  static StationaryPolicy deterministic(std::size_t num_actions, const std::vector<ActionIndex>& actions) {
    Table t(actions.size(), num_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
      if (actions[s] >= num_actions) throw ConfigError("StationaryPolicy: action out of range");
      t(s, actions[s]) = 1.0;
    }
    return StationaryPolicy(std::move(t));
  }

  static StationaryPolicy constant(std::size_t num_states, std::size_t num_actions, ActionIndex action) {
    return deterministic(num_actions, std::vector<ActionIndex>(num_states, action));
  }

  static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions) {
    return StationaryPolicy(Table(num_states, num_actions, 1.0 / static_cast<double>(num_actions)));
  }

  std::size_t num_states() const { return probs_.rows(); }
  std::size_t num_actions() const { return probs_.cols(); }
  std::span<const double> row(StateIndex s) const { return probs_.row(s); }
  double prob(StateIndex s, ActionIndex a) const { return probs_(s, a); }
  const Table& table() const { return probs_; }

  bool operator==(const StationaryPolicy&) const = default;

 private:
  Table probs_;
};

struct Step {
  StateIndex state = 0;
  ActionIndex action = 0;
  double reward = 0.0;
  StateIndex next_state = 0;

  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::vector<Step> steps;

  double total_return() const {
    double g = 0.0;
    for (const auto& st : steps) g += st.reward;
    return g;
  }
  std::size_t size() const { return steps.size(); }
  bool operator==(const Trajectory&) const = default;
};

inline void check_dimensions(const TaskShape& shape, const StationaryPolicy& policy) {
  if (policy.num_states() != shape.num_states || policy.num_actions() != shape.num_actions)
    throw ConfigError("policy dimensions (" + std::to_string(policy.num_states()) + "x" +
                      std::to_string(policy.num_actions()) + ") do not match task (" +
                      std::to_string(shape.num_states) + "x" + std::to_string(shape.num_actions) + ")");
}

/// Rolls one H-step episode from the initial state.
inline Trajectory sample_episode(const TaskSpec& task, const StationaryPolicy& policy, Rng& rng) {
  check_dimensions(task.shape(), policy);
  Trajectory traj;
  traj.steps.reserve(task.horizon());
  StateIndex s = task.initial_state();
  for (std::size_t t = 0; t < task.horizon(); ++t) {
    const ActionIndex a = sample_index(policy.row(s), rng);
    if (!task.has_row(s, a))
      throw ContractViolation("sample_episode: (state, action) has no model row");
    const std::size_t r = sample_index(task.reward_row(s, a), rng);
    const StateIndex next = sample_index(task.transition_row(s, a), rng);
    traj.steps.push_back({s, a, task.reward_support()[r], next});
    s = next;
  }
  return traj;
}

/// Probability of a trajectory under (task, policy): the product of
/// pi(a_t|s_t) R(r_t|s_t,a_t) over all steps times P(s_{t+1}|s_t,a_t) over the
/// first H-1 steps. Zero when the trajectory does not start at s0.
inline double trajectory_probability(const TaskSpec& task, const StationaryPolicy& policy,
                                     const Trajectory& traj) {
  check_dimensions(task.shape(), policy);
  if (traj.steps.empty() || traj.steps.front().state != task.initial_state()) return 0.0;
  double p = 1.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const Step& st = traj.steps[t];
    const auto r = task.shape().reward_index(st.reward);
    if (!r) return 0.0;
    p *= policy.prob(st.state, st.action) * task.reward_prob(st.state, st.action, *r);
    if (t + 1 < traj.steps.size()) {
      if (traj.steps[t + 1].state != st.next_state) return 0.0;
      p *= task.transition(st.state, st.action, st.next_state);
    }
  }
  return p;
}

/// J_M(pi) = V_pi(s0) by backward induction over the horizon.
inline double exact_policy_value(const TaskSpec& task, const StationaryPolicy& policy) {
  check_dimensions(task.shape(), policy);
  const std::size_t S = task.num_states(), A = task.num_actions();
  std::vector<double> next_value(S, 0.0), value(S, 0.0);
  for (std::size_t h = task.horizon(); h-- > 0;) {
    for (StateIndex s = 0; s < S; ++s) {
      double v = 0.0;
      for (ActionIndex a = 0; a < A; ++a) {
        const double pa = policy.prob(s, a);
        if (pa == 0.0) continue;
        double q = task.mean_reward(s, a);
        if (h + 1 < task.horizon()) {
          auto row = task.transition_row(s, a);
          for (StateIndex n = 0; n < S; ++n) q += row[n] * next_value[n];
        }
        v += pa * q;
      }
      value[s] = v;
    }
    std::swap(value, next_value);
  }
  return next_value[task.initial_state()];
}

/// Visitation distribution rho_pi, kept per timestep.
///
/// state(h, s) carries the 1/H normalization, so summing over every
/// (h, s) gives one. The `*_total` accessors sum over timesteps.
class Visitation {
 public:
  Visitation(TaskShape shape, Table state_mass, Table pair_mass, Table triple_mass)
      : shape_(std::move(shape)),
        state_(std::move(state_mass)),
        pair_(std::move(pair_mass)),
        triple_(std::move(triple_mass)) {}

  const TaskShape& shape() const { return shape_; }
  double state(std::size_t h, StateIndex s) const { return state_(h, s); }
  double state_action(std::size_t h, StateIndex s, ActionIndex a) const {
    return pair_(h, shape_.pair(s, a));
  }
  double state_action_reward(std::size_t h, StateIndex s, ActionIndex a, std::size_t r) const {
    return triple_(h, shape_.pair(s, a) * shape_.num_rewards() + r);
  }

  double state_total(StateIndex s) const { return column_sum(state_, s); }
  double state_action_total(StateIndex s, ActionIndex a) const {
    return column_sum(pair_, shape_.pair(s, a));
  }
  double state_action_reward_total(StateIndex s, ActionIndex a, std::size_t r) const {
    return column_sum(triple_, shape_.pair(s, a) * shape_.num_rewards() + r);
  }
  double total() const { return sum(state_.data()); }

  /// Smallest positive timestep-summed rho(s, a); zero when nothing is visited.
  double min_positive_state_action() const {
    double best = 0.0;
    for (StateIndex s = 0; s < shape_.num_states; ++s)
      for (ActionIndex a = 0; a < shape_.num_actions; ++a) {
        const double m = state_action_total(s, a);
        if (m > 0.0 && (best == 0.0 || m < best)) best = m;
      }
    return best;
  }

 private:
  static double column_sum(const Table& t, std::size_t c) {
    double total = 0.0;
    for (std::size_t h = 0; h < t.rows(); ++h) total += t(h, c);
    return total;
  }

  TaskShape shape_;
  Table state_;   // H x S
  Table pair_;    // H x (S*A)
  Table triple_;  // H x (S*A*|R|)
};

inline Visitation visitation_distribution(const TaskSpec& task, const StationaryPolicy& policy) {
  check_dimensions(task.shape(), policy);
  const auto& sh = task.shape();
  const std::size_t H = sh.horizon, S = sh.num_states, A = sh.num_actions, R = sh.num_rewards();
  Table state(H, S), pair(H, S * A), triple(H, S * A * R);
  state(0, sh.initial_state) = 1.0 / static_cast<double>(H);
  for (std::size_t h = 0; h < H; ++h) {
    for (StateIndex s = 0; s < S; ++s) {
      const double ms = state(h, s);
      if (ms == 0.0) continue;
      for (ActionIndex a = 0; a < A; ++a) {
        const double msa = ms * policy.prob(s, a);
        if (msa == 0.0) continue;
        pair(h, sh.pair(s, a)) = msa;
        auto rrow = task.reward_row(s, a);
        for (std::size_t r = 0; r < R; ++r) triple(h, sh.pair(s, a) * R + r) = msa * rrow[r];
        if (h + 1 < H) {
          auto prow = task.transition_row(s, a);
          for (StateIndex n = 0; n < S; ++n) state(h + 1, n) += msa * prow[n];
        }
      }
    }
  }
  return Visitation(sh, std::move(state), std::move(pair), std::move(triple));
}

}  // namespace idaq

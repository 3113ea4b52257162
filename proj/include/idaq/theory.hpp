#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idaq/belief.hpp"
#include "idaq/core.hpp"
#include "idaq/dataset.hpp"
#include "idaq/mdp.hpp"
#include "idaq/meta_policy.hpp"

namespace idaq {

struct Summary3 {
  double min = 0.0, median = 0.0, max = 0.0;

  static Summary3 of(const std::vector<double>& xs) {
    if (xs.empty()) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return {nan, nan, nan};
    }
    return {*std::min_element(xs.begin(), xs.end()), idaq::median(xs), *std::max_element(xs.begin(), xs.end())};
  }
};

/// Outcome of a bound check over repeated trials.
struct BoundReport {
  std::string name;
  std::string parameter;
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double confidence_delta = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> empirical;
  std::vector<double> bound;

  Summary3 empirical_summary() const { return Summary3::of(empirical); }
  Summary3 bound_summary() const { return Summary3::of(bound); }
  double violation_rate() const {
    const std::size_t used = trials - skipped;
    return used == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(used);
  }
};

namespace detail {
inline nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
inline nlohmann::json summary_json(const Summary3& s) {
  return {{"min", number_or_null(s.min)}, {"median", number_or_null(s.median)}, {"max", number_or_null(s.max)}};
}
}  // namespace detail

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json raw_e = nlohmann::json::array(), raw_b = nlohmann::json::array();
  for (double x : r.empirical) raw_e.push_back(detail::number_or_null(x));
  for (double x : r.bound) raw_b.push_back(detail::number_or_null(x));
  return {{"name", r.name},
          {"parameter", r.parameter},
          {"trials", r.trials},
          {"violations", r.violations},
          {"skipped", r.skipped},
          {"violation_rate", r.violation_rate()},
          {"confidence_delta", r.confidence_delta},
          {"seed", r.seed},
          {"empirical", detail::summary_json(r.empirical_summary())},
          {"bound", detail::summary_json(r.bound_summary())},
          {"empirical_values", raw_e},
          {"bound_values", raw_b}};
}

// ---------------------------------------------------------------------------
// Transition-reward distribution shift

struct ShiftReport {
  double max_tv = 0.0;
  StateIndex witness_state = 0;
  std::vector<double> witness_belief;
  ActionIndex witness_action = 0;
  std::size_t pairs_checked = 0;
  std::size_t beliefs_reached = 0;
};

/// Offline and online (reward, next-state) distributions at a hyper-state.
/// Offline weighs each hypothesis by b_i mu_i(a|s), online by b_i alone.
/// nullopt when no behavior in the belief support takes the action.
inline std::optional<std::pair<std::vector<double>, std::vector<double>>> shift_distributions(
    const HypothesisSet& truth, const Belief& b, StateIndex s, ActionIndex a) {
  const TaskShape& sh = truth.shape();
  const std::size_t R = sh.num_rewards(), S = sh.num_states;
  std::vector<double> off(R * S, 0.0), on(R * S, 0.0);
  double off_mass = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (b[i] == 0.0) continue;
    const TaskSpec& t = truth[i].task;
    const double wmu = b[i] * truth[i].behavior.prob(s, a);
    off_mass += wmu;
    for (std::size_t r = 0; r < R; ++r)
      for (StateIndex n = 0; n < S; ++n) {
        const double p = t.reward_prob(s, a, r) * t.transition(s, a, n);
        on[r * S + n] += b[i] * p;
        off[r * S + n] += wmu * p;
      }
  }
  if (!(off_mass > 0.0)) return std::nullopt;
  for (double& x : off) x /= off_mass;
  return std::make_pair(std::move(off), std::move(on));
}

/// Largest TV distance between the offline and online (reward, next-state)
/// distributions over hyper-states the meta-policy reaches in `episodes`
/// episodes. Beliefs follow exact updates on the true tasks.
inline ShiftReport check_shift_exists(const std::vector<TaskSpec>& tasks, const BehaviorMap& behavior,
                                      const MetaPolicyTS& meta, const std::vector<double>& task_prior,
                                      std::size_t episodes, std::size_t max_nodes = 100000) {
  if (tasks.size() != behavior.size()) throw ConfigError("check_shift_exists: one behavior per task is required");
  std::vector<Hypothesis> entries;
  for (std::size_t i = 0; i < tasks.size(); ++i) entries.push_back({tasks[i], behavior[i]});
  const HypothesisSet truth(std::move(entries), BeliefMode::plain);
  if (meta.size() != truth.size()) throw ConfigError("check_shift_exists: meta-policy size mismatch");

  ShiftReport rep;
  rep.max_tv = -1.0;
  using Node = std::pair<std::vector<double>, std::vector<bool>>;
  std::map<Node, bool> seen;
  std::vector<Node> frontier{{task_prior, std::vector<bool>(truth.size(), false)}};
  std::map<std::pair<std::vector<double>, std::size_t>, bool> pair_seen;
  for (std::size_t ep = 0; ep < episodes && !frontier.empty(); ++ep) {
    std::vector<Node> next;
    for (const Node& node : frontier) {
      if (seen.count(node)) continue;
      seen[node] = true;
      if (seen.size() > max_nodes) throw ConfigError("check_shift_exists: reachable hyper-state set too large");
      const Belief b(node.first);
      const auto w = sampling_weights(b, node.second, meta.sampler_mode);
      for (std::size_t z = 0; z < w.size(); ++z) {
        if (w[z] == 0.0) continue;
        for (std::size_t i = 0; i < truth.size(); ++i) {
          if (b[i] == 0.0) continue;
          std::size_t leaves = 0;
          detail::for_each_episode(
              truth[i].task, meta.policy(z),
              [&](const Trajectory& traj, double) {
                for (const Step& st : traj.steps) {
                  const std::size_t key = truth.shape().pair(st.state, st.action);
                  if (pair_seen.count({node.first, key})) continue;
                  pair_seen[{node.first, key}] = true;
                  auto d = shift_distributions(truth, b, st.state, st.action);
                  if (!d) continue;
                  ++rep.pairs_checked;
                  const double tv = shift_tv(d->first, d->second);
                  if (tv > rep.max_tv) {
                    rep.max_tv = tv;
                    rep.witness_state = st.state;
                    rep.witness_action = st.action;
                    rep.witness_belief = node.first;
                  }
                }
                auto tried = node.second;
                tried[z] = true;
                next.push_back({advance_belief(b, truth, traj).weights(), std::move(tried)});
              },
              leaves, kExactLeafLimit);
        }
      }
    }
    frontier = std::move(next);
  }
  rep.beliefs_reached = seen.size();
  if (rep.max_tv < 0.0) rep.max_tv = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Offline / online evaluation gap

/// Bayes-optimal value of the plain BAMDP over `steps` steps, restricted to
/// actions allowed by `allowed(s, a)`. The belief is updated after every step.
inline double bamdp_optimal_value(const HypothesisSet& hyp, const Belief& prior, std::size_t steps,
                                  const std::function<bool(StateIndex, ActionIndex)>& allowed) {
  const HypothesisSet plain = hyp.with_mode(BeliefMode::plain);
  const TaskShape& sh = plain.shape();
  std::map<std::tuple<std::size_t, StateIndex, std::vector<double>>, double> memo;
  std::function<double(std::size_t, StateIndex, const Belief&)> value = [&](std::size_t left, StateIndex s,
                                                                            const Belief& b) -> double {
    if (left == 0) return 0.0;
    auto key = std::make_tuple(left, s, b.weights());
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a = 0; a < sh.num_actions; ++a) {
      if (!allowed(s, a)) continue;
      const HyperState hs{s, b};
      const auto pr = bamdp_reward(hs, plain, a);
      const auto pn = bamdp_transition(hs, plain, a);
      double q = 0.0;
      for (std::size_t r = 0; r < pr.size(); ++r) {
        if (pr[r] == 0.0) continue;
        for (StateIndex n = 0; n < pn.size(); ++n) {
          const Step st{s, a, sh.reward_support[r], n};
          auto post = posterior_update(b, plain, st);
          if (!post) continue;
          // Joint probability of (r, n) under the belief.
          double joint = 0.0;
          for (std::size_t i = 0; i < plain.size(); ++i)
            joint += b[i] * plain[i].task.reward_prob(s, a, r) * plain[i].task.transition(s, a, n);
          if (joint == 0.0) continue;
          // A new episode restarts at s0 every H steps.
          const std::size_t done = steps - left + 1;
          const StateIndex next_state = done % sh.horizon == 0 ? sh.initial_state : n;
          q += joint * (sh.reward_support[r] + value(left - 1, next_state, *post));
        }
      }
      best = std::max(best, q);
    }
    if (!std::isfinite(best)) throw ContractViolation("bamdp_optimal_value: no allowed action in a reachable state");
    memo[key] = best;
    return best;
  };
  return value(steps, sh.initial_state, prior);
}

struct GapReport {
  double offline_value = 0.0;   // J_D+ of the batch-constrained meta-policy
  double online_optimum = 0.0;  // best J_M+ over batch-constrained meta-policies
  double gap = 0.0;
  double lower_bound = 0.0;     // (H+ - 1) / 2
  bool holds = false;
};

/// Offline value of the per-hypothesis policies over the budget against the
/// Bayes-optimal online value of any policy confined to the union dataset.
inline GapReport check_offline_online_gap(const std::vector<TaskSpec>& tasks, const BehaviorMap& behavior,
                                          const std::vector<double>& task_prior, const MultiTaskDataset& data,
                                          const MetaPolicyTS& meta, const AdaptationBudget& budget) {
  if (data.num_tasks() != tasks.size() || meta.size() != tasks.size())
    throw ConfigError("check_offline_online_gap: sizes differ");
  GapReport g;
  double offline = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const InducedMdp m = induced_mdp(data.sub_datasets[i], data.shape);
    offline = std::min(offline, offline_policy_evaluation(m, meta.policy(i)));
  }
  g.offline_value = static_cast<double>(budget.episodes_total) * offline;
  const InducedMdp all = induced_mdp(data.all(), data.shape);
  std::vector<Hypothesis> entries;
  for (std::size_t i = 0; i < tasks.size(); ++i) entries.push_back({tasks[i], behavior[i]});
  const HypothesisSet truth(std::move(entries), BeliefMode::plain);
  g.online_optimum = bamdp_optimal_value(truth, Belief(task_prior), budget.horizon_total,
                                         [&](StateIndex s, ActionIndex a) { return all.supported(s, a); });
  g.gap = g.offline_value - g.online_optimum;
  g.lower_bound = (static_cast<double>(budget.horizon_total) - 1.0) / 2.0;
  g.holds = g.gap >= g.lower_bound - kArithmeticTolerance;
  return g;
}

// ---------------------------------------------------------------------------
// Simulation lemma

struct SimulationReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double eps_r = 0.0;
  double eps_p = 0.0;
  bool holds = true;
};

inline SimulationReport check_simulation_lemma(const TaskSpec& m1, const TaskSpec& m2, const StationaryPolicy& pi) {
  if (m1.num_states() != m2.num_states() || m1.num_actions() != m2.num_actions() || m1.horizon() != m2.horizon() ||
      m1.initial_state() != m2.initial_state())
    throw ConfigError("check_simulation_lemma: tasks have different dimensions");
  SimulationReport rep;
  for (StateIndex s = 0; s < m1.num_states(); ++s)
    for (ActionIndex a = 0; a < m1.num_actions(); ++a) {
      rep.eps_r = std::max(rep.eps_r, std::abs(m1.mean_reward(s, a) - m2.mean_reward(s, a)));
      double l1 = 0.0;
      for (StateIndex n = 0; n < m1.num_states(); ++n) l1 += std::abs(m1.transition(s, a, n) - m2.transition(s, a, n));
      rep.eps_p = std::max(rep.eps_p, l1);
    }
  double r_max = 0.0;
  for (double r : m1.reward_support()) r_max = std::max(r_max, r);
  for (double r : m2.reward_support()) r_max = std::max(r_max, r);
  const double H = static_cast<double>(m1.horizon());
  rep.lhs = std::abs(exact_policy_value(m1, pi) - exact_policy_value(m2, pi));
  rep.rhs = H * rep.eps_r + H * (H - 1.0) * r_max / 2.0 * rep.eps_p;
  rep.holds = rep.lhs <= rep.rhs + kArithmeticTolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Consistency of offline evaluation

/// pi restricted to supported actions in every state the data visits.
/// Rows with no overlap fall back to uniform over the supported actions.
inline StationaryPolicy project_onto_support(const StationaryPolicy& pi, const InducedMdp& induced) {
  Table t = pi.table();
  for (StateIndex s = 0; s < t.rows(); ++s) {
    if (!induced.state_seen(s)) continue;
    double mass = 0.0, n_supported = 0.0;
    for (ActionIndex a = 0; a < t.cols(); ++a) {
      if (!induced.supported(s, a)) t(s, a) = 0.0;
      mass += t(s, a);
      n_supported += induced.supported(s, a) ? 1.0 : 0.0;
    }
    for (ActionIndex a = 0; a < t.cols(); ++a)
      t(s, a) = mass > 0.0 ? t(s, a) / mass : (induced.supported(s, a) ? 1.0 / n_supported : 0.0);
  }
  return StationaryPolicy(std::move(t));
}

/// H^2 |S| sqrt((log(1/delta) + log(2|S|^2|A|)) / (K d_mu)).
inline double consistency_bound(const TaskShape& sh, std::size_t K, double d_mu, double delta) {
  const double S = static_cast<double>(sh.num_states), A = static_cast<double>(sh.num_actions);
  const double H = static_cast<double>(sh.horizon);
  return H * H * S * std::sqrt((std::log(1.0 / delta) + std::log(2.0 * S * S * A)) / (static_cast<double>(K) * d_mu));
}

/// For each K: datasets of K behavior episodes, |J_D(pi) - J_M(pi)| for pi
/// projected onto the data, against the high-probability bound.
inline std::vector<BoundReport> check_consistency(const TaskSpec& task, const StationaryPolicy& behavior,
                                                  const StationaryPolicy& policy,
                                                  const std::vector<std::size_t>& dataset_sizes, std::size_t trials,
                                                  double confidence_delta, std::uint64_t seed) {
  if (!(confidence_delta > 0.0 && confidence_delta < 1.0))
    throw ConfigError("check_consistency: confidence delta must lie in (0, 1)");
  std::vector<BoundReport> out;
  for (std::size_t ki = 0; ki < dataset_sizes.size(); ++ki) {
    const std::size_t K = dataset_sizes[ki];
    if (K == 0) throw ConfigError("check_consistency: dataset size must be positive");
    BoundReport rep;
    rep.name = "consistency";
    rep.parameter = "K=" + std::to_string(K);
    rep.trials = trials;
    rep.confidence_delta = confidence_delta;
    rep.seed = derive_seed(seed, ki);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(rep.seed, t));
      std::vector<Trajectory> trajs;
      for (std::size_t k = 0; k < K; ++k) trajs.push_back(sample_episode(task, behavior, rng));
      const InducedMdp m = induced_mdp(trajs, task.shape());
      const StationaryPolicy pi = project_onto_support(policy, m);
      const double d_mu = visitation_distribution(m.spec, behavior).min_positive_state_action();
      const double gap = std::abs(offline_policy_evaluation(m, pi) - exact_policy_value(task, pi));
      rep.empirical.push_back(gap);
      if (!(d_mu > 0.0)) {
        ++rep.skipped;
        rep.bound.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double b = consistency_bound(task.shape(), K, d_mu, confidence_delta);
      rep.bound.push_back(b);
      if (gap > b) ++rep.violations;
    }
    out.push_back(std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leaving the dataset

/// Monte Carlo fraction of episodes with a step outside the dataset support.
inline double estimate_p_out(const StationaryPolicy& policy, const TaskSpec& task, const DatasetSupport& support,
                             std::size_t n_rollouts, Rng& rng) {
  if (n_rollouts == 0) throw ConfigError("estimate_p_out: at least one rollout is required");
  std::size_t out = 0;
  for (std::size_t n = 0; n < n_rollouts; ++n)
    if (!support.contains(sample_episode(task, policy, rng))) ++out;
  return static_cast<double>(out) / static_cast<double>(n_rollouts);
}

inline double estimate_p_out(const StationaryPolicy& policy, const TaskSpec& task,
                             const std::vector<Trajectory>& dataset, std::size_t n_rollouts, Rng& rng) {
  return estimate_p_out(policy, task, DatasetSupport(dataset, task.shape()), n_rollouts, rng);
}

/// Exact p_out by propagating the probability of staying inside the support.
inline double exact_p_out(const StationaryPolicy& policy, const TaskSpec& task, const DatasetSupport& support) {
  check_dimensions(task.shape(), policy);
  const std::size_t S = task.num_states();
  std::vector<double> mass(S, 0.0), next(S, 0.0);
  if (support.contains_state(task.initial_state())) mass[task.initial_state()] = 1.0;
  for (std::size_t h = 0; h < task.horizon(); ++h) {
    next.assign(S, 0.0);
    for (StateIndex s = 0; s < S; ++s) {
      if (mass[s] == 0.0) continue;
      for (ActionIndex a = 0; a < task.num_actions(); ++a) {
        const double pa = policy.prob(s, a);
        if (pa == 0.0) continue;
        for (std::size_t r = 0; r < task.num_rewards(); ++r) {
          const double pr = task.reward_prob(s, a, r);
          if (pr == 0.0 || !support.contains_step({s, a, task.reward_support()[r], 0})) continue;
          for (StateIndex n = 0; n < S; ++n) {
            const double pn = task.transition(s, a, n);
            // Only the states of steps 0..H-1 must be in the data.
            if (pn == 0.0 || (h + 1 < task.horizon() && !support.contains_state(n))) continue;
            next[n] += mass[s] * pa * pr * pn;
          }
        }
      }
    }
    mass.swap(next);
  }
  return std::max(0.0, 1.0 - sum(mass));
}

// ---------------------------------------------------------------------------
// Distances

using StateEmbedding = std::function<std::vector<double>(StateIndex)>;

inline StateEmbedding identity_embedding() {
  return [](StateIndex s) { return std::vector<double>{static_cast<double>(s)}; };
}

/// <emb(s0), a0, r0, emb(s1), a1, r1, ...>
inline std::vector<double> flatten(const Trajectory& traj, const StateEmbedding& emb) {
  std::vector<double> v;
  for (const Step& st : traj.steps) {
    const auto e = emb(st.state);
    v.insert(v.end(), e.begin(), e.end());
    v.push_back(static_cast<double>(st.action));
    v.push_back(st.reward);
  }
  return v;
}

/// min over the dataset of |v(traj) - v(ref)|_2 / |v(ref)|_2.
inline double min_distance(const Trajectory& traj, const std::vector<Trajectory>& dataset, const StateEmbedding& emb) {
  if (dataset.empty()) throw ConfigError("min_distance: empty dataset");
  const auto v = flatten(traj, emb);
  double best = std::numeric_limits<double>::infinity();
  for (const Trajectory& ref : dataset) {
    const auto w = flatten(ref, emb);
    if (w.size() != v.size()) throw ConfigError("min_distance: trajectories differ in length");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      num += (v[i] - w[i]) * (v[i] - w[i]);
      den += w[i] * w[i];
    }
    if (den == 0.0) throw ConfigError("min_distance: reference trajectory has zero norm");
    best = std::min(best, std::sqrt(num) / std::sqrt(den));
  }
  return best;
}

/// max(|P1 - P2|_inf, |R1 - R2|_inf) over all entries.
inline double task_distance(const TaskSpec& a, const TaskSpec& b) {
  if (a.transition_table().rows() != b.transition_table().rows() ||
      a.transition_table().cols() != b.transition_table().cols() ||
      a.reward_table().cols() != b.reward_table().cols())
    throw ConfigError("task_distance: tasks have different dimensions");
  double d = 0.0;
  const auto pa = a.transition_table().data(), pb = b.transition_table().data();
  for (std::size_t i = 0; i < pa.size(); ++i) d = std::max(d, std::abs(pa[i] - pb[i]));
  const auto ra = a.reward_table().data(), rb = b.reward_table().data();
  for (std::size_t i = 0; i < ra.size(); ++i) d = std::max(d, std::abs(ra[i] - rb[i]));
  return d;
}

inline std::pair<std::size_t, double> closest_task(const TaskSpec& test, const std::vector<TaskSpec>& train) {
  if (train.empty()) throw ConfigError("closest_task: no training tasks");
  std::pair<std::size_t, double> best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double d = task_distance(test, train[i]);
    if (d < best.second) best = {i, d};
  }
  return best;
}

/// 2 (log(1/delta) / n)^(1 / (|S||A|(|S|+|R|))).
inline double task_distance_bound(const TaskShape& sh, std::size_t n_train, double delta) {
  const double dim = static_cast<double>(sh.num_states * sh.num_actions * (sh.num_states + sh.num_rewards()));
  return 2.0 * std::pow(std::log(1.0 / delta) / static_cast<double>(n_train), 1.0 / dim);
}

using TaskSampler = std::function<TaskSpec(Rng&)>;

/// Distance from a fresh test task to the closest of n i.i.d. training tasks.
inline std::vector<BoundReport> check_task_distance(const std::vector<std::size_t>& train_task_counts,
                                                    std::size_t trials, double confidence_delta,
                                                    const TaskSampler& family, std::uint64_t seed) {
  if (!(confidence_delta > 0.0 && confidence_delta < 1.0))
    throw ConfigError("check_task_distance: confidence delta must lie in (0, 1)");
  std::vector<BoundReport> out;
  for (std::size_t ci = 0; ci < train_task_counts.size(); ++ci) {
    const std::size_t n = train_task_counts[ci];
    if (n == 0) throw ConfigError("check_task_distance: need at least one training task");
    BoundReport rep;
    rep.name = "task_distance";
    rep.parameter = "K_train=" + std::to_string(n);
    rep.trials = trials;
    rep.confidence_delta = confidence_delta;
    rep.seed = derive_seed(seed, ci);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(rep.seed, t));
      std::vector<TaskSpec> train;
      for (std::size_t i = 0; i < n; ++i) train.push_back(family(rng));
      const TaskSpec test = family(rng);
      const double d = closest_task(test, train).second;
      const double b = task_distance_bound(test.shape(), n, confidence_delta);
      rep.empirical.push_back(d);
      rep.bound.push_back(b);
      if (d > b) ++rep.violations;
    }
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace idaq

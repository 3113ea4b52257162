#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "idaq/belief.hpp"
#include "idaq/core.hpp"
#include "idaq/mdp.hpp"
#include "idaq/text_format.hpp"

namespace idaq {

enum class SamplerMode { with_replacement, without_replacement };

inline const char* to_string(SamplerMode m) {
  return m == SamplerMode::with_replacement ? "with-replacement" : "without-replacement";
}

/// Thompson-sampling meta-policy: pick a hypothesis from the belief at the
/// start of every episode, then act with that hypothesis's policy.
struct MetaPolicyTS {
  std::vector<StationaryPolicy> hypothesis_policies;
  SamplerMode sampler_mode = SamplerMode::with_replacement;

  std::size_t size() const { return hypothesis_policies.size(); }
  const StationaryPolicy& policy(std::size_t z) const { return hypothesis_policies.at(z); }
};

/// Hypothesis-sampling weights. Without replacement, hypotheses already tried
/// are masked out; if nothing with belief mass is left the full belief is used.
inline std::vector<double> sampling_weights(const Belief& belief, const std::vector<bool>& tried, SamplerMode mode) {
  std::vector<double> w = belief.weights();
  if (mode == SamplerMode::without_replacement) {
    std::vector<double> masked = w;
    for (std::size_t i = 0; i < masked.size(); ++i)
      if (i < tried.size() && tried[i]) masked[i] = 0.0;
    if (sum(masked) > 0.0) w = std::move(masked);
  }
  const double total = sum(w);
  for (double& x : w) x /= total;
  return w;
}

inline std::size_t sample_hypothesis(const Belief& belief, const std::vector<bool>& tried, SamplerMode mode, Rng& rng) {
  return sample_index(sampling_weights(belief, tried, mode), rng);
}

class ExactTreeTooLarge : public std::runtime_error {
 public:
  explicit ExactTreeTooLarge(std::size_t limit)
      : std::runtime_error("exact evaluation exceeds " + std::to_string(limit) + " leaves; use Monte Carlo") {}
};

struct EvalMethod {
  enum class Kind { exact, monte_carlo };
  Kind kind = Kind::exact;
  std::size_t rollouts = 0;
  std::uint64_t seed = 0;

  static EvalMethod exact() { return {}; }
  static EvalMethod monte_carlo(std::size_t n, std::uint64_t seed) { return {Kind::monte_carlo, n, seed}; }
};

struct MetaValue {
  double mean = 0.0;
  double std_error = 0.0;  // zero for exact evaluation
  std::size_t samples = 0;
};

inline constexpr std::size_t kExactLeafLimit = 1'000'000;

namespace detail {

inline void check_meta(const MetaPolicyTS& meta, const HypothesisSet& hyp, const std::vector<TaskSpec>& envs,
                       const std::vector<double>& prior, const AdaptationBudget& budget) {
  if (meta.size() != hyp.size()) throw ConfigError("meta-policy and hypothesis set sizes differ");
  if (envs.size() != prior.size()) throw ConfigError("task prior and environment list sizes differ");
  if (prior.size() != hyp.size()) throw ConfigError("task prior and hypothesis set sizes differ");
  if (!is_distribution(prior, kConstructionTolerance)) throw ConfigError("task prior is not a distribution");
  for (const auto& p : meta.hypothesis_policies) check_dimensions(hyp.shape(), p);
  for (const auto& e : envs)
    if (e.num_states() != hyp.shape().num_states || e.num_actions() != hyp.shape().num_actions ||
        e.reward_support() != hyp.shape().reward_support || e.horizon() != hyp.shape().horizon)
      throw ConfigError("environment shape does not match the hypothesis set");
  budget.validate(hyp.shape().horizon);
}

/// Enumerates every episode outcome with its probability.
inline void for_each_episode(const TaskSpec& task, const StationaryPolicy& pi,
                             const std::function<void(const Trajectory&, double)>& visit, std::size_t& leaves,
                             std::size_t limit) {
  Trajectory traj;
  traj.steps.reserve(task.horizon());
  std::function<void(StateIndex, double)> rec = [&](StateIndex s, double p) {
    if (traj.steps.size() == task.horizon()) {
      if (++leaves > limit) throw ExactTreeTooLarge(limit);
      visit(traj, p);
      return;
    }
    for (ActionIndex a = 0; a < task.num_actions(); ++a) {
      const double pa = pi.prob(s, a);
      if (pa == 0.0) continue;
      if (!task.has_row(s, a)) throw ContractViolation("meta-policy acts where the environment has no model row");
      for (std::size_t r = 0; r < task.num_rewards(); ++r) {
        const double pr = task.reward_prob(s, a, r);
        if (pr == 0.0) continue;
        for (StateIndex n = 0; n < task.num_states(); ++n) {
          const double pn = task.transition(s, a, n);
          if (pn == 0.0) continue;
          traj.steps.push_back({s, a, task.reward_support()[r], n});
          rec(n, p * pa * pr * pn);
          traj.steps.pop_back();
        }
      }
    }
  };
  rec(task.initial_state(), 1.0);
}

}  // namespace detail

/// Belief after an episode; an infeasible observation leaves the belief unchanged.
inline Belief advance_belief(const Belief& b, const HypothesisSet& hyp, const Trajectory& traj) {
  auto next = posterior_update(b, hyp, traj);
  return next ? *next : b;
}

/// Expected total reward over `budget.episodes_total` episodes in a task drawn
/// from `task_prior` over `environments`. The belief starts at the prior and is
/// updated between episodes in the hypothesis set's mode.
inline MetaValue evaluate_meta_policy(const MetaPolicyTS& meta, const HypothesisSet& hyp,
                                      const std::vector<TaskSpec>& environments, const std::vector<double>& task_prior,
                                      const AdaptationBudget& budget, const EvalMethod& method) {
  detail::check_meta(meta, hyp, environments, task_prior, budget);
  const std::size_t N = budget.episodes_total;
  const Belief prior(task_prior);

  if (method.kind == EvalMethod::Kind::exact) {
    std::size_t leaves = 0;
    double total = 0.0;
    std::function<void(const TaskSpec&, const Belief&, std::vector<bool>&, std::size_t, double, double)> rec =
        [&](const TaskSpec& env, const Belief& b, std::vector<bool>& tried, std::size_t episode, double prob,
            double ret) {
          if (episode == N) {
            total += prob * ret;
            return;
          }
          const auto w = sampling_weights(b, tried, meta.sampler_mode);
          for (std::size_t z = 0; z < w.size(); ++z) {
            if (w[z] == 0.0) continue;
            detail::for_each_episode(
                env, meta.policy(z),
                [&](const Trajectory& traj, double p) {
                  std::vector<bool> next_tried = tried;
                  next_tried[z] = true;
                  rec(env, advance_belief(b, hyp, traj), next_tried, episode + 1, prob * w[z] * p,
                      ret + traj.total_return());
                },
                leaves, kExactLeafLimit);
          }
        };
    for (std::size_t k = 0; k < environments.size(); ++k) {
      if (task_prior[k] == 0.0) continue;
      std::vector<bool> tried(hyp.size(), false);
      rec(environments[k], prior, tried, 0, task_prior[k], 0.0);
    }
    return {total, 0.0, leaves};
  }

  if (method.rollouts == 0) throw ConfigError("Monte Carlo evaluation needs at least one rollout");
  Rng rng(method.seed);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t n = 0; n < method.rollouts; ++n) {
    const TaskSpec& env = environments[sample_index(task_prior, rng)];
    Belief b = prior;
    std::vector<bool> tried(hyp.size(), false);
    double ret = 0.0;
    for (std::size_t e = 0; e < N; ++e) {
      const std::size_t z = sample_hypothesis(b, tried, meta.sampler_mode, rng);
      tried[z] = true;
      Trajectory traj = sample_episode(env, meta.policy(z), rng);
      ret += traj.total_return();
      b = advance_belief(b, hyp, traj);
    }
    const double delta = ret - mean;
    mean += delta / static_cast<double>(n + 1);
    m2 += delta * (ret - mean);
  }
  const double n = static_cast<double>(method.rollouts);
  const double var = method.rollouts > 1 ? m2 / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), method.rollouts};
}

/// Evaluation where the hypotheses are the environments themselves.
inline MetaValue evaluate_meta_policy(const MetaPolicyTS& meta, const HypothesisSet& hyp,
                                      const std::vector<double>& task_prior, const AdaptationBudget& budget,
                                      const EvalMethod& method) {
  std::vector<TaskSpec> envs;
  for (const auto& h : hyp.entries()) envs.push_back(h.task);
  return evaluate_meta_policy(meta, hyp, envs, task_prior, budget, method);
}

inline TextDocument to_document(const MetaPolicyTS& meta) {
  TextDocument doc;
  doc.set("kind", "meta-policy");
  doc.set("sampler", to_string(meta.sampler_mode));
  doc.set_count("hypotheses", meta.size());
  for (std::size_t z = 0; z < meta.size(); ++z) doc.add_table("policy_" + std::to_string(z), meta.policy(z).table());
  return doc;
}

inline MetaPolicyTS meta_policy_from_document(const TextDocument& doc) {
  expect_kind(doc, "meta-policy");
  MetaPolicyTS meta;
  const std::string& sampler = doc.value("sampler");
  if (sampler == "with-replacement")
    meta.sampler_mode = SamplerMode::with_replacement;
  else if (sampler == "without-replacement")
    meta.sampler_mode = SamplerMode::without_replacement;
  else
    throw ParseError("unknown sampler '" + sampler + "'");
  const std::size_t n = doc.count("hypotheses");
  for (std::size_t z = 0; z < n; ++z)
    meta.hypothesis_policies.emplace_back(doc.table("policy_" + std::to_string(z)));
  return meta;
}

}  // namespace idaq

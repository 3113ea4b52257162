#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "idaq/core.hpp"
#include "idaq/mdp.hpp"

namespace idaq {

enum class BeliefMode { plain, transformed };

inline const char* to_string(BeliefMode m) { return m == BeliefMode::plain ? "plain" : "transformed"; }

/// One candidate world: a task model and the behavior policy that collected its data.
struct Hypothesis {
  TaskSpec task;
  StationaryPolicy behavior;
};

class HypothesisSet {
 public:
  HypothesisSet(std::vector<Hypothesis> entries, BeliefMode mode) : entries_(std::move(entries)), mode_(mode) {
    if (entries_.empty()) throw ConfigError("HypothesisSet: no hypotheses");
    const TaskShape& shape = entries_.front().task.shape();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const TaskShape& other = entries_[i].task.shape();
      if (other.num_states != shape.num_states || other.num_actions != shape.num_actions ||
          other.reward_support != shape.reward_support || other.horizon != shape.horizon)
        throw ConfigError("HypothesisSet: hypothesis " + std::to_string(i) + " has a different shape");
      check_dimensions(other, entries_[i].behavior);
    }
  }

  std::size_t size() const { return entries_.size(); }
  BeliefMode mode() const { return mode_; }
  const Hypothesis& operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<Hypothesis>& entries() const { return entries_; }
  const TaskShape& shape() const { return entries_.front().task.shape(); }

  HypothesisSet with_mode(BeliefMode mode) const { return HypothesisSet(entries_, mode); }

 private:
  std::vector<Hypothesis> entries_;
  BeliefMode mode_;
};

class Belief {
 public:
  explicit Belief(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw ConfigError("Belief: empty weight vector");
    if (!is_distribution(weights_, kConstructionTolerance)) throw ConfigError("Belief: weights are not a distribution");
  }

  static Belief uniform(std::size_t n) {
    if (n == 0) throw ConfigError("Belief: empty weight vector");
    return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }
  static Belief point_mass(std::size_t n, std::size_t i) {
    if (i >= n) throw ConfigError("Belief: index out of range");
    std::vector<double> w(n, 0.0);
    w[i] = 1.0;
    return Belief(std::move(w));
  }

  /// Scales nonnegative weights to sum to one; nullopt when the mass is below 1e-300.
  static std::optional<Belief> normalized(std::vector<double> weights) {
    const double total = sum(weights);
    if (!(total >= 1e-300) || !std::isfinite(total)) return std::nullopt;
    for (double& w : weights) w /= total;
    return Belief(std::move(weights));
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_.at(i); }
  const std::vector<double>& weights() const { return weights_; }

  /// Highest-weight hypothesis; ties go to the lowest index.
  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < weights_.size(); ++i)
      if (weights_[i] > weights_[best]) best = i;
    return best;
  }

  bool operator==(const Belief&) const = default;

 private:
  std::vector<double> weights_;
};

struct HyperState {
  StateIndex state = 0;
  Belief belief;
};

struct AdaptationBudget {
  std::size_t episodes_total = 0;
  std::size_t horizon_total = 0;

  static AdaptationBudget episodes(std::size_t n, std::size_t task_horizon) {
    if (n == 0) throw ConfigError("AdaptationBudget: at least one episode is required");
    return {n, n * task_horizon};
  }

  void validate(std::size_t task_horizon) const {
    if (episodes_total == 0 || horizon_total != episodes_total * task_horizon)
      throw ConfigError("AdaptationBudget: horizon_total must equal episodes_total * H");
  }
};

namespace detail {

inline void check_evidence(const TaskShape& shape, const Step& e) {
  if (e.state >= shape.num_states || e.next_state >= shape.num_states || e.action >= shape.num_actions)
    throw ConfigError("evidence index out of range");
}

inline std::size_t reward_slot(const TaskShape& shape, double reward) {
  auto r = shape.reward_index(reward);
  if (!r) throw ConfigError("reward " + format_double(reward) + " is not in the reward support");
  return *r;
}

inline void check_belief(const Belief& b, const HypothesisSet& hyp) {
  if (b.size() != hyp.size()) throw ConfigError("belief size does not match hypothesis count");
}

}  // namespace detail

/// Likelihood of one transition under hypothesis i, including mu_i(a|s) in transformed mode.
inline double step_likelihood(const HypothesisSet& hyp, std::size_t i, const Step& e) {
  const TaskShape& shape = hyp.shape();
  detail::check_evidence(shape, e);
  const std::size_t r = detail::reward_slot(shape, e.reward);
  const Hypothesis& h = hyp[i];
  double l = h.task.reward_prob(e.state, e.action, r) * h.task.transition(e.state, e.action, e.next_state);
  if (hyp.mode() == BeliefMode::transformed) l *= h.behavior.prob(e.state, e.action);
  return l;
}

/// Bayes update on one transition. nullopt marks an observation every
/// hypothesis in the support considers impossible.
inline std::optional<Belief> posterior_update(const Belief& belief, const HypothesisSet& hyp, const Step& evidence) {
  detail::check_belief(belief, hyp);
  std::vector<double> w(belief.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = belief[i] == 0.0 ? 0.0 : belief[i] * step_likelihood(hyp, i, evidence);
  return Belief::normalized(std::move(w));
}

/// Sequential update over every step of an episode.
inline std::optional<Belief> posterior_update(const Belief& belief, const HypothesisSet& hyp, const Trajectory& traj) {
  std::optional<Belief> b = belief;
  for (const Step& st : traj.steps) {
    b = posterior_update(*b, hyp, st);
    if (!b) return std::nullopt;
  }
  return b;
}

/// Update used by the unfiltered comparator. It coincides with the exact
/// posterior whenever that one exists. When every hypothesis in the support
/// rules the episode out, the hypotheses with the fewest impossible factors
/// are kept and weighted by the product of their remaining factors.
inline Belief support_extrapolating_update(const Belief& belief, const HypothesisSet& hyp, const Trajectory& traj) {
  detail::check_belief(belief, hyp);
  if (auto exact = posterior_update(belief, hyp, traj)) return *exact;

  const std::size_t n = belief.size();
  std::vector<std::size_t> zeros(n, 0);
  std::vector<double> log_w(n, -std::numeric_limits<double>::infinity());
  std::size_t fewest = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < n; ++i) {
    if (belief[i] == 0.0) continue;
    double lw = std::log(belief[i]);
    for (const Step& st : traj.steps) {
      const double l = step_likelihood(hyp, i, st);
      if (l == 0.0)
        ++zeros[i];
      else
        lw += std::log(l);
    }
    log_w[i] = lw;
    fewest = std::min(fewest, zeros[i]);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (belief[i] > 0.0 && zeros[i] == fewest) top = std::max(top, log_w[i]);
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (belief[i] > 0.0 && zeros[i] == fewest) w[i] = std::exp(log_w[i] - top);
  auto out = Belief::normalized(std::move(w));
  return out ? *out : belief;
}

namespace detail {

template <class RowFn>
std::vector<double> mixture(const HyperState& hyper, const HypothesisSet& hyp, ActionIndex action, std::size_t width,
                            RowFn row_of) {
  check_belief(hyper.belief, hyp);
  if (hyper.state >= hyp.shape().num_states || action >= hyp.shape().num_actions)
    throw ConfigError("hyper-state or action out of range");
  std::vector<double> out(width, 0.0);
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    const double b = hyper.belief[i];
    if (b == 0.0) continue;
    auto row = row_of(hyp[i].task);
    for (std::size_t k = 0; k < width; ++k) out[k] += b * row[k];
  }
  const double total = sum(out);
  if (!(total > 0.0)) throw ContractViolation("no hypothesis in the belief support models this (state, action)");
  // Dataset-induced models can lack the row; the remaining hypotheses are renormalized.
  if (std::abs(total - 1.0) > kArithmeticTolerance)
    for (double& x : out) x /= total;
  return out;
}

}  // namespace detail

/// R+(r | s+, a): belief-weighted mixture of the reward rows.
inline std::vector<double> bamdp_reward(const HyperState& hyper, const HypothesisSet& hyp, ActionIndex action) {
  return detail::mixture(hyper, hyp, action, hyp.shape().num_rewards(),
                         [&](const TaskSpec& t) { return t.reward_row(hyper.state, action); });
}

/// P+(s' | s+, a): belief-weighted mixture of the transition rows.
inline std::vector<double> bamdp_transition(const HyperState& hyper, const HypothesisSet& hyp, ActionIndex action) {
  return detail::mixture(hyper, hyp, action, hyp.shape().num_states,
                         [&](const TaskSpec& t) { return t.transition_row(hyper.state, action); });
}

/// CSV rows (episode, hypothesis, weight) for a sequence of beliefs.
inline void write_belief_trace(std::ostream& os, const std::vector<Belief>& trace) {
  os << "episode,hypothesis,weight\n";
  for (std::size_t e = 0; e < trace.size(); ++e)
    for (std::size_t i = 0; i < trace[e].size(); ++i) os << e << ',' << i << ',' << format_double(trace[e][i]) << '\n';
}

}  // namespace idaq

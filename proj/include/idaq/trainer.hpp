#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "idaq/core.hpp"
#include "idaq/dataset.hpp"
#include "idaq/mdp.hpp"
#include "idaq/meta_policy.hpp"
#include "idaq/text_format.hpp"

namespace idaq {

struct TrainConfig {
  std::size_t ensemble_size = 4;
  bool bootstrap = true;
  double vi_tolerance = 1e-10;

  void validate() const {
    if (ensemble_size < 2) throw ConfigError("TrainConfig: ensemble_size must be at least 2");
    if (!(vi_tolerance >= 0.0)) throw ConfigError("TrainConfig: vi_tolerance must be nonnegative");
  }
};

struct PlanResult {
  StationaryPolicy policy;
  std::vector<double> values;  // V at the last sweep
  std::size_t sweeps = 0;
  double last_change = 0.0;
};

/// Value iteration on an induced MDP over supported actions only.
/// At most H sweeps; stops early once the max-norm change is within tolerance.
/// The greedy policy breaks ties (within 1e-12) toward the lowest action and
/// is uniform in states the data never visits.
inline PlanResult plan_batch_constrained(const InducedMdp& induced, double vi_tolerance) {
  const TaskSpec& m = induced.spec;
  const std::size_t S = m.num_states(), A = m.num_actions();
  std::vector<double> v(S, 0.0), next(S, 0.0);
  Table q(S, A);
  PlanResult out;
  auto backup = [&](const std::vector<double>& values) {
    for (StateIndex s = 0; s < S; ++s)
      for (ActionIndex a = 0; a < A; ++a) {
        if (!induced.supported(s, a)) continue;
        double x = m.mean_reward(s, a);
        auto row = m.transition_row(s, a);
        for (StateIndex n = 0; n < S; ++n) x += row[n] * values[n];
        q(s, a) = x;
      }
  };
  for (std::size_t sweep = 0; sweep < m.horizon(); ++sweep) {
    backup(v);
    double change = 0.0;
    for (StateIndex s = 0; s < S; ++s) {
      double best = 0.0;
      bool any = false;
      for (ActionIndex a = 0; a < A; ++a)
        if (induced.supported(s, a) && (!any || q(s, a) > best)) {
          best = q(s, a);
          any = true;
        }
      next[s] = best;
      change = std::max(change, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    out.sweeps = sweep + 1;
    out.last_change = change;
    if (change <= vi_tolerance) break;
  }
  Table probs(S, A);
  for (StateIndex s = 0; s < S; ++s) {
    std::optional<ActionIndex> pick;
    for (ActionIndex a = 0; a < A; ++a) {
      if (!induced.supported(s, a)) continue;
      if (!pick || q(s, a) > q(s, *pick) + 1e-12) pick = a;
    }
    if (pick)
      probs(s, *pick) = 1.0;
    else
      for (ActionIndex a = 0; a < A; ++a) probs(s, a) = 1.0 / static_cast<double>(A);
  }
  out.policy = StationaryPolicy(std::move(probs));
  out.values = std::move(v);
  return out;
}

inline MetaPolicyTS train_meta_policy(const MultiTaskDataset& data, const TrainConfig& cfg,
                                      SamplerMode sampler = SamplerMode::with_replacement) {
  cfg.validate();
  if (data.sub_datasets.empty()) throw ConfigError("train_meta_policy: dataset has no sub-datasets");
  MetaPolicyTS meta;
  meta.sampler_mode = sampler;
  for (std::size_t i = 0; i < data.sub_datasets.size(); ++i) {
    if (data.sub_datasets[i].empty())
      throw ConfigError("train_meta_policy: sub-dataset of hypothesis " + std::to_string(i) + " is empty");
    const InducedMdp induced = induced_mdp(data.sub_datasets[i], data.shape);
    PlanResult plan = plan_batch_constrained(induced, cfg.vi_tolerance);
    if (!is_batch_constrained(plan.policy, induced))
      throw ContractViolation("trained policy of hypothesis " + std::to_string(i) + " is not batch-constrained");
    meta.hypothesis_policies.push_back(std::move(plan.policy));
  }
  return meta;
}

struct Prediction {
  double reward = 0.0;
  std::vector<double> next_state;
};

/// L tabular reward and dynamics models per hypothesis.
class EnsembleModel {
 public:
  EnsembleModel(TaskShape shape, std::size_t num_hypotheses, std::vector<Table> reward, std::vector<Table> dynamics)
      : shape_(std::move(shape)),
        num_hypotheses_(num_hypotheses),
        reward_(std::move(reward)),
        dynamics_(std::move(dynamics)) {
    if (reward_.size() != dynamics_.size() || reward_.empty()) throw ConfigError("EnsembleModel: member count mismatch");
    for (std::size_t l = 0; l < reward_.size(); ++l) {
      if (reward_[l].rows() != num_hypotheses_ || reward_[l].cols() != shape_.num_pairs())
        throw ConfigError("EnsembleModel: reward table has wrong shape");
      if (dynamics_[l].rows() != num_hypotheses_ * shape_.num_pairs() || dynamics_[l].cols() != shape_.num_states)
        throw ConfigError("EnsembleModel: dynamics table has wrong shape");
      for (std::size_t r = 0; r < dynamics_[l].rows(); ++r)
        if (!is_distribution(dynamics_[l].row(r), kArithmeticTolerance))
          throw ConfigError("EnsembleModel: dynamics output is not a distribution");
    }
  }

  std::size_t size() const { return reward_.size(); }
  std::size_t num_hypotheses() const { return num_hypotheses_; }
  const TaskShape& shape() const { return shape_; }

  double reward(std::size_t member, StateIndex s, ActionIndex a, std::size_t z) const {
    check(member, s, a, z);
    return reward_[member](z, shape_.pair(s, a));
  }
  std::span<const double> dynamics(std::size_t member, StateIndex s, ActionIndex a, std::size_t z) const {
    check(member, s, a, z);
    return dynamics_[member].row(z * shape_.num_pairs() + shape_.pair(s, a));
  }

  const std::vector<Table>& reward_tables() const { return reward_; }
  const std::vector<Table>& dynamics_tables() const { return dynamics_; }

  bool operator==(const EnsembleModel&) const = default;

 private:
  void check(std::size_t member, StateIndex s, ActionIndex a, std::size_t z) const {
    if (member >= size() || s >= shape_.num_states || a >= shape_.num_actions || z >= num_hypotheses_)
      throw ConfigError("EnsembleModel: index out of range");
  }

  TaskShape shape_;
  std::size_t num_hypotheses_;
  std::vector<Table> reward_;    // per member: hypothesis x (S*A)
  std::vector<Table> dynamics_;  // per member: (hypothesis*S*A) x S
};

inline Prediction predict(const EnsembleModel& ens, std::size_t member, StateIndex s, ActionIndex a, std::size_t z) {
  auto row = ens.dynamics(member, s, a, z);
  return {ens.reward(member, s, a, z), std::vector<double>(row.begin(), row.end())};
}

/// Each member sees a trajectory-level bootstrap resample of every
/// sub-dataset. The tabular MSE fit is the per-cell sample mean of the reward
/// and of the one-hot next state. Cells without data get the sub-dataset's
/// mean reward and a uniform next-state vector.
inline EnsembleModel fit_ensemble(const MultiTaskDataset& data, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const TaskShape& sh = data.shape;
  const std::size_t Z = data.sub_datasets.size(), P = sh.num_pairs(), S = sh.num_states;
  if (Z == 0) throw ConfigError("fit_ensemble: dataset has no sub-datasets");
  std::vector<double> global_mean(Z, 0.0);
  for (std::size_t z = 0; z < Z; ++z) {
    if (data.sub_datasets[z].empty())
      throw ConfigError("fit_ensemble: sub-dataset of hypothesis " + std::to_string(z) + " is empty");
    double n = 0.0;
    for (const auto& traj : data.sub_datasets[z])
      for (const auto& st : traj.steps) {
        n += 1.0;
        global_mean[z] += (st.reward - global_mean[z]) / n;
      }
  }

  std::vector<Table> rewards, dynamics;
  for (std::size_t l = 0; l < cfg.ensemble_size; ++l) {
    Table rew(Z, P);
    Table dyn(Z * P, S);
    for (std::size_t z = 0; z < Z; ++z) {
      const auto& sub = data.sub_datasets[z];
      std::vector<double> counts(P, 0.0);
      auto absorb = [&](const Trajectory& traj) {
        for (const Step& st : traj.steps) {
          const std::size_t p = sh.pair(st.state, st.action);
          const double n = (counts[p] += 1.0);
          rew(z, p) += (st.reward - rew(z, p)) / n;
          auto row = dyn.row(z * P + p);
          for (StateIndex k = 0; k < S; ++k) row[k] += ((k == st.next_state ? 1.0 : 0.0) - row[k]) / n;
        }
      };
      if (cfg.bootstrap) {
        for (std::size_t k = 0; k < sub.size(); ++k) {
          auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(sub.size()));
          absorb(sub[std::min(pick, sub.size() - 1)]);
        }
      } else {
        for (const auto& traj : sub) absorb(traj);
      }
      for (std::size_t p = 0; p < P; ++p) {
        if (counts[p] > 0.0) continue;
        rew(z, p) = global_mean[z];
        for (double& x : dyn.row(z * P + p)) x = 1.0 / static_cast<double>(S);
      }
    }
    rewards.push_back(std::move(rew));
    dynamics.push_back(std::move(dyn));
  }
  return EnsembleModel(sh, Z, std::move(rewards), std::move(dynamics));
}

inline TextDocument to_document(const EnsembleModel& ens) {
  TextDocument doc;
  doc.set("kind", "ensemble");
  put_shape(doc, ens.shape());
  doc.set_count("members", ens.size());
  doc.set_count("hypotheses", ens.num_hypotheses());
  for (std::size_t l = 0; l < ens.size(); ++l) {
    doc.add_table("reward_" + std::to_string(l), ens.reward_tables()[l]);
    doc.add_table("dynamics_" + std::to_string(l), ens.dynamics_tables()[l]);
  }
  return doc;
}

inline EnsembleModel ensemble_from_document(const TextDocument& doc) {
  expect_kind(doc, "ensemble");
  std::vector<Table> rewards, dynamics;
  const std::size_t L = doc.count("members");
  for (std::size_t l = 0; l < L; ++l) {
    rewards.push_back(doc.table("reward_" + std::to_string(l)));
    dynamics.push_back(doc.table("dynamics_" + std::to_string(l)));
  }
  return EnsembleModel(get_shape(doc), doc.count("hypotheses"), std::move(rewards), std::move(dynamics));
}

}  // namespace idaq

#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "idaq/belief.hpp"
#include "idaq/core.hpp"
#include "idaq/mdp.hpp"

namespace idaq {

/// One behavior policy per task index.
struct BehaviorMap {
  std::vector<StationaryPolicy> assignment;

  std::size_t size() const { return assignment.size(); }
  const StationaryPolicy& operator[](std::size_t task) const { return assignment.at(task); }
};

struct MultiTaskDataset {
  TaskShape shape;
  std::vector<std::vector<Trajectory>> sub_datasets;
  std::size_t trajectories_per_task = 0;

  std::size_t num_tasks() const { return sub_datasets.size(); }

  std::vector<Trajectory> all() const {
    std::vector<Trajectory> out;
    for (const auto& sub : sub_datasets) out.insert(out.end(), sub.begin(), sub.end());
    return out;
  }

  bool operator==(const MultiTaskDataset&) const = default;
};

/// Sub-dataset i holds k i.i.d. episodes of behavior i in task i.
/// Tasks are collected in index order from the one random source.
inline MultiTaskDataset collect_dataset(const std::vector<TaskSpec>& tasks, const BehaviorMap& behavior,
                                        std::size_t k_per_task, Rng& rng) {
  if (k_per_task == 0) throw ConfigError("collect_dataset: k_per_task must be at least 1");
  if (tasks.empty()) throw ConfigError("collect_dataset: no tasks");
  if (behavior.size() != tasks.size()) throw ConfigError("collect_dataset: every task needs one behavior policy");
  MultiTaskDataset data;
  data.shape = tasks.front().shape();
  data.trajectories_per_task = k_per_task;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].shape() != data.shape) throw ConfigError("collect_dataset: tasks have different shapes");
    std::vector<Trajectory> sub;
    sub.reserve(k_per_task);
    for (std::size_t k = 0; k < k_per_task; ++k) sub.push_back(sample_episode(tasks[i], behavior[i], rng));
    data.sub_datasets.push_back(std::move(sub));
  }
  return data;
}

/// Empirical MDP of a trajectory set. Unsupported (s, a) rows stay all zero.
struct InducedMdp {
  TaskSpec spec;
  std::vector<bool> support_mask;  // indexed by shape.pair(s, a)
  std::size_t num_trajectories = 0;

  bool supported(StateIndex s, ActionIndex a) const { return support_mask[spec.shape().pair(s, a)]; }

  bool state_seen(StateIndex s) const {
    for (ActionIndex a = 0; a < spec.num_actions(); ++a)
      if (supported(s, a)) return true;
    return false;
  }

  bool empty() const {
    for (bool b : support_mask)
      if (b) return false;
    return true;
  }
};

inline void check_trajectory(const TaskShape& shape, const Trajectory& traj) {
  if (traj.steps.size() != shape.horizon) throw ConfigError("trajectory length differs from the horizon");
  for (const Step& st : traj.steps) {
    if (st.state >= shape.num_states || st.next_state >= shape.num_states || st.action >= shape.num_actions)
      throw ConfigError("trajectory index out of range");
    if (!shape.reward_index(st.reward)) throw ConfigError("trajectory reward outside the reward support");
  }
}

inline InducedMdp induced_mdp(const std::vector<Trajectory>& trajs, const TaskShape& shape) {
  const std::size_t S = shape.num_states, R = shape.num_rewards();
  Table trans(shape.num_pairs(), S), rew(shape.num_pairs(), R);
  std::vector<double> counts(shape.num_pairs(), 0.0);
  for (const Trajectory& traj : trajs) {
    check_trajectory(shape, traj);
    for (const Step& st : traj.steps) {
      const std::size_t p = shape.pair(st.state, st.action);
      counts[p] += 1.0;
      trans(p, st.next_state) += 1.0;
      rew(p, *shape.reward_index(st.reward)) += 1.0;
    }
  }
  std::vector<bool> mask(shape.num_pairs(), false);
  for (std::size_t p = 0; p < shape.num_pairs(); ++p) {
    if (counts[p] == 0.0) continue;
    mask[p] = true;
    for (double& x : trans.row(p)) x /= counts[p];
    for (double& x : rew.row(p)) x /= counts[p];
  }
  return {TaskSpec(shape, std::move(trans), std::move(rew), TaskSpec::Rows::allow_empty), std::move(mask),
          trajs.size()};
}

inline InducedMdp induced_mdp(const std::vector<Trajectory>& trajs, const TaskSpec& template_task) {
  return induced_mdp(trajs, template_task.shape());
}

/// pi puts no mass on unsupported actions in any state the dataset visits.
inline bool is_batch_constrained(const StationaryPolicy& policy, const InducedMdp& induced) {
  check_dimensions(induced.spec.shape(), policy);
  for (StateIndex s = 0; s < induced.spec.num_states(); ++s) {
    if (!induced.state_seen(s)) continue;
    for (ActionIndex a = 0; a < induced.spec.num_actions(); ++a)
      if (policy.prob(s, a) > 0.0 && !induced.supported(s, a)) return false;
  }
  return true;
}

/// J_D(pi): exact value in the dataset-induced MDP.
inline double offline_policy_evaluation(const InducedMdp& induced, const StationaryPolicy& policy) {
  if (induced.empty()) throw ContractViolation("offline evaluation on a dataset with no support");
  if (!is_batch_constrained(policy, induced))
    throw ContractViolation("offline evaluation of a policy that leaves the dataset support");
  return exact_policy_value(induced.spec, policy);
}

/// Total-variation distance between two normalized distributions.
inline double shift_tv(const std::vector<double>& offline_dist, const std::vector<double>& online_dist) {
  if (offline_dist.size() != online_dist.size()) throw ConfigError("shift_tv: length mismatch");
  if (!is_distribution(offline_dist, kArithmeticTolerance) || !is_distribution(online_dist, kArithmeticTolerance))
    throw ConfigError("shift_tv: inputs must be normalized");
  double d = 0.0;
  for (std::size_t i = 0; i < offline_dist.size(); ++i) d += std::abs(offline_dist[i] - online_dist[i]);
  return 0.5 * d;
}

/// Action frequencies per visited state; uniform where the state never appears.
inline StationaryPolicy empirical_behavior(const std::vector<Trajectory>& trajs, const TaskShape& shape) {
  Table counts(shape.num_states, shape.num_actions);
  for (const Trajectory& traj : trajs)
    for (const Step& st : traj.steps) counts(st.state, st.action) += 1.0;
  for (StateIndex s = 0; s < shape.num_states; ++s) {
    auto row = counts.row(s);
    const double n = sum(row);
    for (double& x : row) x = n > 0.0 ? x / n : 1.0 / static_cast<double>(shape.num_actions);
  }
  return StationaryPolicy(std::move(counts));
}

/// One hypothesis per sub-dataset: its induced MDP paired with the empirical behavior.
inline HypothesisSet hypotheses_from_dataset(const MultiTaskDataset& data, BeliefMode mode) {
  std::vector<Hypothesis> entries;
  for (const auto& sub : data.sub_datasets)
    entries.push_back({induced_mdp(sub, data.shape).spec, empirical_behavior(sub, data.shape)});
  return HypothesisSet(std::move(entries), mode);
}

/// States and (s, a, r) triples that occur as steps of some trajectory.
class DatasetSupport {
 public:
  DatasetSupport(const std::vector<Trajectory>& trajs, const TaskShape& shape)
      : shape_(shape), states_(shape.num_states, false), triples_(shape.num_pairs() * shape.num_rewards(), false) {
    for (const Trajectory& traj : trajs) {
      check_trajectory(shape, traj);
      for (const Step& st : traj.steps) {
        states_[st.state] = true;
        triples_[slot(st)] = true;
      }
    }
  }

  bool contains_state(StateIndex s) const { return states_.at(s); }
  bool contains_step(const Step& st) const {
    if (!shape_.reward_index(st.reward)) return false;
    return states_.at(st.state) && triples_[slot(st)];
  }
  bool contains(const Trajectory& traj) const {
    for (const Step& st : traj.steps)
      if (!contains_step(st)) return false;
    return true;
  }

 private:
  std::size_t slot(const Step& st) const {
    return shape_.pair(st.state, st.action) * shape_.num_rewards() + *shape_.reward_index(st.reward);
  }

  TaskShape shape_;
  std::vector<bool> states_;
  std::vector<bool> triples_;
};

inline void write_dataset_csv(std::ostream& os, const MultiTaskDataset& data) {
  os << "task_id,traj_id,t,s,a,r,s_next\n";
  for (std::size_t i = 0; i < data.sub_datasets.size(); ++i)
    for (std::size_t k = 0; k < data.sub_datasets[i].size(); ++k) {
      const auto& steps = data.sub_datasets[i][k].steps;
      for (std::size_t t = 0; t < steps.size(); ++t)
        os << i << ',' << k << ',' << t << ',' << steps[t].state << ',' << steps[t].action << ','
           << format_double(steps[t].reward) << ',' << steps[t].next_state << '\n';
    }
}

/// Reads the CSV written by write_dataset_csv. Rows must be grouped by task
/// and trajectory in increasing order with consecutive step indices.
inline MultiTaskDataset read_dataset_csv(std::istream& is, const TaskShape& shape) {
  std::string line;
  if (!std::getline(is, line) || line != "task_id,traj_id,t,s,a,r,s_next")
    throw ParseError("dataset CSV: missing or wrong header");
  MultiTaskDataset data;
  data.shape = shape;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw ParseError("dataset CSV line " + std::to_string(line_no) + ": expected 7 fields");
    const std::size_t task = parse_index(f[0]), traj = parse_index(f[1]), t = parse_index(f[2]);
    if (task == data.sub_datasets.size()) data.sub_datasets.emplace_back();
    if (task + 1 != data.sub_datasets.size())
      throw ParseError("dataset CSV line " + std::to_string(line_no) + ": task ids out of order");
    auto& sub = data.sub_datasets.back();
    if (traj == sub.size() && t == 0) sub.emplace_back();
    if (traj + 1 != sub.size() || t != sub.back().steps.size())
      throw ParseError("dataset CSV line " + std::to_string(line_no) + ": trajectory ids out of order");
    sub.back().steps.push_back({parse_index(f[3]), parse_index(f[4]), parse_double(f[5]), parse_index(f[6])});
  }
  for (const auto& sub : data.sub_datasets)
    for (const auto& traj : sub) check_trajectory(shape, traj);
  data.trajectories_per_task = data.sub_datasets.empty() ? 0 : data.sub_datasets.front().size();
  return data;
}

}  // namespace idaq

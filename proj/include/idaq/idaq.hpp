#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "idaq/belief.hpp"
#include "idaq/core.hpp"
#include "idaq/mdp.hpp"
#include "idaq/meta_policy.hpp"
#include "idaq/trainer.hpp"

namespace idaq {

enum class Quantifier { PE, PV, RE };

inline const char* to_string(Quantifier q) {
  switch (q) {
    case Quantifier::PE: return "pe";
    case Quantifier::PV: return "pv";
    case Quantifier::RE: return "re";
  }
  return "?";
}

inline Quantifier parse_quantifier(const std::string& s) {
  if (s == "pe" || s == "PE") return Quantifier::PE;
  if (s == "pv" || s == "PV") return Quantifier::PV;
  if (s == "re" || s == "RE") return Quantifier::RE;
  throw ConfigError("unknown quantifier '" + s + "'");
}

struct AdaptationConfig {
  std::size_t n_r = 1;
  std::size_t n_i = 0;
  double k_percent = 20.0;
  Quantifier quantifier = Quantifier::RE;
  std::size_t n_e = 1;
  std::uint64_t seed = 0;

  /// Half of the budget (rounded up) goes to the reference stage.
  static AdaptationConfig split(std::size_t total_episodes, Quantifier q, double k_percent, std::uint64_t seed) {
    AdaptationConfig c;
    c.n_r = (total_episodes + 1) / 2;
    c.n_i = total_episodes - c.n_r;
    c.quantifier = q;
    c.k_percent = k_percent;
    c.seed = seed;
    return c;
  }

  void validate() const {
    if (n_r < 1) throw ConfigError("AdaptationConfig: n_r must be at least 1");
    if (!(k_percent > 0.0 && k_percent <= 100.0)) throw ConfigError("AdaptationConfig: k_percent must be in (0, 100]");
    if (n_e < 1) throw ConfigError("AdaptationConfig: n_e must be at least 1");
  }
};

enum class Stage { reference, iterative };

inline const char* to_string(Stage s) { return s == Stage::reference ? "reference" : "iterative"; }

struct EpisodeRecord {
  std::size_t episode = 0;
  Trajectory trajectory;
  std::size_t hypothesis = 0;
  double score = 0.0;
  bool accepted = false;
  bool demoted = false;
  Stage stage = Stage::reference;

  double episode_return() const { return trajectory.total_return(); }
};

struct AdaptationResult {
  double threshold = 0.0;
  std::vector<EpisodeRecord> context;
  Belief final_belief = Belief::uniform(1);
  std::vector<EpisodeRecord> log;
  double final_return_estimate = 0.0;
  std::size_t demotions = 0;
  std::vector<std::string> warnings;

  std::size_t greedy_hypothesis() const { return final_belief.argmax(); }
};

namespace detail {

inline double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline void check_scored(const Trajectory& traj, std::size_t z, const EnsembleModel& ens) {
  if (traj.steps.empty()) throw ConfigError("cannot score an empty trajectory");
  if (z >= ens.num_hypotheses()) throw ConfigError("hypothesis index out of range");
}

}  // namespace detail

/// Mean model error over timesteps and members.
inline double q_pe(const Trajectory& traj, std::size_t z, const EnsembleModel& ens) {
  detail::check_scored(traj, z, ens);
  const std::size_t S = ens.shape().num_states;
  std::vector<double> onehot(S, 0.0);
  double total = 0.0;
  for (const Step& st : traj.steps) {
    if (st.next_state >= S) throw ConfigError("next state out of range");
    onehot.assign(S, 0.0);
    onehot[st.next_state] = 1.0;
    for (std::size_t i = 0; i < ens.size(); ++i)
      total += std::abs(st.reward - ens.reward(i, st.state, st.action, z)) +
               detail::l2(onehot, ens.dynamics(i, st.state, st.action, z));
  }
  return total / static_cast<double>(traj.steps.size() * ens.size());
}

/// Mean over timesteps of the largest pairwise member disagreement.
inline double q_pv(const Trajectory& traj, std::size_t z, const EnsembleModel& ens) {
  if (ens.size() < 2) throw ConfigError("q_pv needs at least two ensemble members");
  detail::check_scored(traj, z, ens);
  double total = 0.0;
  for (const Step& st : traj.steps) {
    double worst = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i)
      for (std::size_t j = i + 1; j < ens.size(); ++j) {
        const double d = std::abs(ens.reward(i, st.state, st.action, z) - ens.reward(j, st.state, st.action, z)) +
                         detail::l2(ens.dynamics(i, st.state, st.action, z), ens.dynamics(j, st.state, st.action, z));
        worst = std::max(worst, d);
      }
    total += worst;
  }
  return total / static_cast<double>(traj.steps.size());
}

/// Negative mean return.
inline double q_re(const std::vector<Trajectory>& episodes) {
  if (episodes.empty()) throw ConfigError("q_re needs at least one episode");
  double total = 0.0;
  for (const auto& e : episodes) total += e.total_return();
  return -total / static_cast<double>(episodes.size());
}

/// Nearest-rank lower quantile: the ceil(n*k/100)-th smallest score.
inline double lower_quantile(std::vector<double> scores, double k_percent) {
  if (scores.empty()) throw ConfigError("lower_quantile of an empty list");
  std::sort(scores.begin(), scores.end());
  const double pos = static_cast<double>(scores.size()) * k_percent / 100.0;
  auto rank = static_cast<std::size_t>(std::ceil(pos - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, scores.size());
  return scores[rank - 1];
}

/// State carried from the reference stage into the iterative stage.
struct ReferenceState {
  double threshold = 0.0;
  std::vector<EpisodeRecord> records;
  Belief belief = Belief::uniform(1);
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_adaptation(const TaskSpec& test_task, const MetaPolicyTS& meta, const HypothesisSet& hyp,
                             const EnsembleModel& ens, const AdaptationConfig& cfg) {
  cfg.validate();
  if (meta.size() != hyp.size()) throw ConfigError("meta-policy and hypothesis set sizes differ");
  if (ens.num_hypotheses() != hyp.size()) throw ConfigError("ensemble and hypothesis set sizes differ");
  if (test_task.num_states() != hyp.shape().num_states || test_task.num_actions() != hyp.shape().num_actions ||
      test_task.horizon() != hyp.shape().horizon || test_task.reward_support() != hyp.shape().reward_support)
    throw ConfigError("test task shape does not match the hypothesis set");
}

/// Rolls `count` episodes in groups of n_e sharing one hypothesis and one
/// score. `pick` chooses the hypothesis of each group.
template <class Pick>
std::vector<EpisodeRecord> roll_groups(const TaskSpec& test_task, const MetaPolicyTS& meta, const EnsembleModel& ens,
                                       const AdaptationConfig& cfg, std::size_t count, std::size_t first_episode,
                                       Stage stage, Pick&& pick, Rng& rng) {
  std::vector<EpisodeRecord> out;
  std::size_t done = 0;
  while (done < count) {
    const std::size_t z = pick();
    const std::size_t group = cfg.quantifier == Quantifier::RE ? std::min(cfg.n_e, count - done) : 1;
    std::vector<Trajectory> episodes;
    for (std::size_t g = 0; g < group; ++g) episodes.push_back(sample_episode(test_task, meta.policy(z), rng));
    const double group_score = cfg.quantifier == Quantifier::RE ? q_re(episodes) : 0.0;
    for (auto& traj : episodes) {
      EpisodeRecord rec;
      rec.episode = first_episode + done++;
      rec.hypothesis = z;
      rec.stage = stage;
      switch (cfg.quantifier) {
        case Quantifier::PE: rec.score = q_pe(traj, z, ens); break;
        case Quantifier::PV: rec.score = q_pv(traj, z, ens); break;
        case Quantifier::RE: rec.score = group_score; break;
      }
      rec.trajectory = std::move(traj);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

/// Posterior update on an accepted record; infeasible evidence demotes it.
inline void absorb(EpisodeRecord& rec, Belief& belief, const HypothesisSet& hyp, std::vector<std::string>& warnings) {
  if (!rec.accepted) return;
  if (auto next = posterior_update(belief, hyp, rec.trajectory)) {
    belief = *next;
    return;
  }
  rec.accepted = false;
  rec.demoted = true;
  warnings.push_back("episode " + std::to_string(rec.episode) + " (hypothesis " + std::to_string(rec.hypothesis) +
                     ") was accepted but has zero likelihood under every hypothesis; demoted");
}

inline SamplerMode reference_sampler(std::size_t hypotheses, const AdaptationConfig& cfg) {
  const std::size_t groups = cfg.quantifier == Quantifier::RE ? (cfg.n_r + cfg.n_e - 1) / cfg.n_e : cfg.n_r;
  return hypotheses >= groups ? SamplerMode::without_replacement : SamplerMode::with_replacement;
}

}  // namespace detail

/// Prior-driven episodes, the threshold delta, and the posterior from the
/// episodes scoring at most delta.
inline ReferenceState reference_stage(const TaskSpec& test_task, const MetaPolicyTS& meta, const HypothesisSet& hyp,
                                      const EnsembleModel& ens, const AdaptationConfig& cfg, Rng& rng) {
  detail::check_adaptation(test_task, meta, hyp, ens, cfg);
  const Belief prior = Belief::uniform(hyp.size());
  const SamplerMode mode = detail::reference_sampler(hyp.size(), cfg);
  std::vector<bool> tried(hyp.size(), false);
  auto pick = [&] {
    const std::size_t z = sample_hypothesis(prior, tried, mode, rng);
    tried[z] = true;
    return z;
  };
  ReferenceState st;
  st.records = detail::roll_groups(test_task, meta, ens, cfg, cfg.n_r, 0, Stage::reference, pick, rng);
  std::vector<double> scores;
  for (const auto& r : st.records) scores.push_back(r.score);
  st.threshold = lower_quantile(scores, cfg.k_percent);
  st.belief = prior;
  for (auto& r : st.records) {
    r.accepted = r.score <= st.threshold;
    detail::absorb(r, st.belief, hyp, st.warnings);
  }
  return st;
}

inline AdaptationResult finish(ReferenceState st, std::vector<EpisodeRecord> iterative) {
  AdaptationResult out;
  out.threshold = st.threshold;
  out.final_belief = st.belief;
  out.warnings = std::move(st.warnings);
  out.log = std::move(st.records);
  const std::size_t n_ref = out.log.size();
  for (auto& r : iterative) out.log.push_back(std::move(r));
  for (const auto& r : out.log) {
    if (r.accepted) out.context.push_back(r);
    if (r.demoted) ++out.demotions;
  }
  const std::size_t n_it = out.log.size() - n_ref;
  const std::size_t tail = n_it > 0 ? std::min<std::size_t>(n_it, 3) : std::min<std::size_t>(n_ref, 3);
  double total = 0.0;
  for (std::size_t i = out.log.size() - tail; i < out.log.size(); ++i) total += out.log[i].episode_return();
  out.final_return_estimate = tail > 0 ? total / static_cast<double>(tail) : 0.0;
  return out;
}

/// Thompson sampling from the filtered posterior; an episode joins the
/// context iff its score is at most the reference threshold.
inline AdaptationResult iterative_stage(ReferenceState st, const TaskSpec& test_task, const MetaPolicyTS& meta,
                                        const HypothesisSet& hyp, const EnsembleModel& ens,
                                        const AdaptationConfig& cfg, Rng& rng) {
  detail::check_adaptation(test_task, meta, hyp, ens, cfg);
  std::vector<EpisodeRecord> records;
  std::size_t done = 0;
  const std::vector<bool> none(hyp.size(), false);
  while (done < cfg.n_i) {
    const std::size_t group = cfg.quantifier == Quantifier::RE ? std::min(cfg.n_e, cfg.n_i - done) : 1;
    auto pick = [&] { return sample_hypothesis(st.belief, none, SamplerMode::with_replacement, rng); };
    auto batch = detail::roll_groups(test_task, meta, ens, cfg, group, st.records.size() + done, Stage::iterative,
                                     pick, rng);
    for (auto& r : batch) {
      r.accepted = r.score <= st.threshold;
      detail::absorb(r, st.belief, hyp, st.warnings);
      records.push_back(std::move(r));
    }
    done += group;
  }
  return finish(std::move(st), std::move(records));
}

inline AdaptationResult run_idaq(const TaskSpec& test_task, const MetaPolicyTS& meta, const HypothesisSet& hyp,
                                 const EnsembleModel& ens, const AdaptationConfig& cfg, Rng& rng) {
  ReferenceState st = reference_stage(test_task, meta, hyp, ens, cfg, rng);
  return iterative_stage(std::move(st), test_task, meta, hyp, ens, cfg, rng);
}

inline AdaptationResult run_idaq(const TaskSpec& test_task, const MetaPolicyTS& meta, const HypothesisSet& hyp,
                                 const EnsembleModel& ens, const AdaptationConfig& cfg) {
  Rng rng(cfg.seed);
  return run_idaq(test_task, meta, hyp, ens, cfg, rng);
}

/// Same two-phase schedule with no filter: every episode enters the context
/// and updates the belief (falling back to the support-extrapolating rule
/// when the exact posterior does not exist). Threshold is +inf and each
/// score is the negated return.
inline AdaptationResult baseline_adapt_all(const TaskSpec& test_task, const MetaPolicyTS& meta,
                                           const HypothesisSet& hyp, const AdaptationBudget& budget, Rng& rng) {
  if (meta.size() != hyp.size()) throw ConfigError("meta-policy and hypothesis set sizes differ");
  budget.validate(test_task.horizon());
  const HypothesisSet plain = hyp.with_mode(BeliefMode::plain);
  const std::size_t n_r = (budget.episodes_total + 1) / 2;
  const SamplerMode ref_mode = hyp.size() >= n_r ? SamplerMode::without_replacement : SamplerMode::with_replacement;
  const Belief prior = Belief::uniform(hyp.size());
  ReferenceState st;
  st.threshold = std::numeric_limits<double>::infinity();
  st.belief = prior;
  std::vector<bool> tried(hyp.size(), false);
  const std::vector<bool> none(hyp.size(), false);
  std::vector<EpisodeRecord> iterative;
  for (std::size_t e = 0; e < budget.episodes_total; ++e) {
    const bool ref = e < n_r;
    const std::size_t z = ref ? sample_hypothesis(prior, tried, ref_mode, rng)
                              : sample_hypothesis(st.belief, none, SamplerMode::with_replacement, rng);
    tried[z] = true;
    EpisodeRecord rec;
    rec.episode = e;
    rec.hypothesis = z;
    rec.stage = ref ? Stage::reference : Stage::iterative;
    rec.trajectory = sample_episode(test_task, meta.policy(z), rng);
    rec.score = -rec.trajectory.total_return();
    rec.accepted = true;
    st.belief = support_extrapolating_update(st.belief, plain, rec.trajectory);
    (ref ? st.records : iterative).push_back(std::move(rec));
  }
  return finish(std::move(st), std::move(iterative));
}

inline void write_adaptation_log(std::ostream& os, const AdaptationResult& res) {
  os << "episode,stage,hypothesis,return,score,delta,accepted\n";
  for (const auto& r : res.log)
    os << r.episode << ',' << to_string(r.stage) << ',' << r.hypothesis << ',' << format_double(r.episode_return())
       << ',' << format_double(r.score) << ',' << format_double(res.threshold) << ',' << (r.accepted ? 1 : 0) << '\n';
}

}  // namespace idaq

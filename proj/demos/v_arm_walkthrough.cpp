// Walks through the v-arm world: offline vs online values, the shift, and one IDAQ run.

#include <cstdio>
#include <iostream>

#include "idaq/idaq_all.hpp"

using namespace idaq;

int main(int argc, char** argv) {
  const std::size_t v = argc > 1 ? parse_index(argv[1]) : 5;
  const EnvInstance env = build_v_arm(v);
  Rng rng(7);
  const MultiTaskDataset data = collect_dataset(env.tasks, env.behavior, 45, rng);
  const MetaPolicyTS meta{train_meta_policy(data, TrainConfig{}).hypothesis_policies, SamplerMode::without_replacement};
  const EnsembleModel ens = fit_ensemble(data, TrainConfig{}, rng);

  const double offline = static_cast<double>(env.default_budget.episodes_total) *
                         offline_policy_evaluation(induced_mdp(data.sub_datasets[0], data.shape), meta.policy(0));
  const MetaValue online = evaluate_meta_policy(meta, env.true_hypotheses(BeliefMode::plain), env.task_prior,
                                                env.default_budget, EvalMethod::exact());
  const ShiftReport shift = check_shift_exists(env.tasks, env.behavior, meta, env.task_prior, v);
  std::printf("v=%zu  offline J=%.3f  online J=%.3f  max TV=%.3f\n", v, offline, online.mean, shift.max_tv);

  const HypothesisSet hyp = hypotheses_from_dataset(data, BeliefMode::transformed);
  AdaptationConfig cfg = AdaptationConfig::split(2 * v, Quantifier::RE, 20.0, 42);
  const AdaptationResult res = run_idaq(env.tasks[v / 2], meta, hyp, ens, cfg);
  std::printf("test task %zu, threshold %.3f, identified %zu\n", v / 2, res.threshold, res.greedy_hypothesis());
  write_adaptation_log(std::cout, res);
  return 0;
}

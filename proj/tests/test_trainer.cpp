#include <gtest/gtest.h>

#include "idaq/envs.hpp"
#include "idaq/trainer.hpp"

using namespace idaq;

namespace {

MultiTaskDataset arm_data(std::size_t v, std::size_t k, std::uint64_t seed) {
  const EnvInstance env = build_v_arm(v);
  Rng rng(seed);
  return collect_dataset(env.tasks, env.behavior, k, rng);
}

MultiTaskDataset bernoulli_data(double p, std::size_t k, Rng& rng) {
  const TaskSpec task = bernoulli_task(p);
  return collect_dataset({task}, BehaviorMap{{StationaryPolicy::uniform(1, 1)}}, k, rng);
}

}  // namespace

TEST(TrainMetaPolicy, ArmPoliciesPickTheirArm) {
  const MetaPolicyTS meta = train_meta_policy(arm_data(5, 45, 1), TrainConfig{});
  ASSERT_EQ(meta.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(meta.policy(i), StationaryPolicy::constant(1, 5, i));
}

TEST(TrainMetaPolicy, CorridorPoliciesReproduceExpertPath) {
  const EnvInstance env = build_three_path(4, 0.0);
  Rng rng(2);
  const MultiTaskDataset d = collect_dataset(env.tasks, env.behavior, 10, rng);
  const MetaPolicyTS meta = train_meta_policy(d, TrainConfig{});
  for (std::size_t i = 0; i < 3; ++i) {
    Rng roll(3);
    EXPECT_EQ(sample_episode(env.tasks[i], meta.policy(i), roll), d.sub_datasets[i][0]);
    EXPECT_EQ(exact_policy_value(env.tasks[i], meta.policy(i)), 1.0);
  }
}

TEST(TrainMetaPolicy, SingleSupportedActionIsChosen) {
  // Behavior takes action 1 in state 0 only; planning must keep it even though it pays 0.
  const TaskShape sh{2, 2, {0.0, 1.0}, 2, 0};
  const std::vector<Trajectory> sub{{{{0, 1, 0.0, 1}, {1, 0, 1.0, 1}}}};
  const MetaPolicyTS meta = train_meta_policy(MultiTaskDataset{sh, {sub}, 1}, TrainConfig{});
  EXPECT_EQ(meta.policy(0).prob(0, 1), 1.0);
  EXPECT_EQ(meta.policy(0).prob(1, 0), 1.0);
}

TEST(TrainMetaPolicy, EmptySubDatasetNamesHypothesis) {
  MultiTaskDataset d = arm_data(3, 5, 1);
  d.sub_datasets[1].clear();
  try {
    train_meta_policy(d, TrainConfig{});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hypothesis 1"), std::string::npos);
  }
}

TEST(TrainMetaPolicy, EnsembleSizeBelowTwoRejected) {
  EXPECT_THROW(train_meta_policy(arm_data(3, 5, 1), TrainConfig{1, true, 1e-10}), ConfigError);
}

TEST(PlanBatchConstrained, UniformWhereDataIsSilentAndBoundedSweeps) {
  Rng rng(4);
  for (int c = 0; c < 50; ++c) {
    const TaskSpec task = random_task(rng, 4, 3, 1 + c % 5);
    const StationaryPolicy mu = random_policy(rng, 4, 3);
    std::vector<Trajectory> trajs;
    for (int k = 0; k < 3; ++k) trajs.push_back(sample_episode(task, mu, rng));
    const InducedMdp m = induced_mdp(trajs, task.shape());
    const PlanResult plan = plan_batch_constrained(m, 1e-10);
    EXPECT_LE(plan.sweeps, task.horizon());
    EXPECT_TRUE(plan.sweeps == task.horizon() || plan.last_change <= 1e-10);
    EXPECT_TRUE(is_batch_constrained(plan.policy, m));
    for (StateIndex s = 0; s < 4; ++s) {
      if (m.state_seen(s)) continue;
      for (ActionIndex a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(plan.policy.prob(s, a), 1.0 / 3.0);
    }
  }
}

TEST(PlanBatchConstrained, ValuesDominateEverySupportedPolicy) {
  // The H-step values bound every supported stationary policy; with H=1 the greedy policy attains them.
  Rng rng(11);
  for (int c = 0; c < 60; ++c) {
    const std::size_t H = 1 + c % 2;
    const TaskSpec task = random_task(rng, 2, 2, H);
    const StationaryPolicy mu = random_policy(rng, 2, 2);
    std::vector<Trajectory> trajs;
    for (int k = 0; k < 20; ++k) trajs.push_back(sample_episode(task, mu, rng));
    const InducedMdp m = induced_mdp(trajs, task.shape());
    const PlanResult plan = plan_batch_constrained(m, 0.0);
    const double bound = plan.values[task.initial_state()];
    double best = 0.0;
    for (ActionIndex a0 = 0; a0 < 2; ++a0)
      for (ActionIndex a1 = 0; a1 < 2; ++a1) {
        const StationaryPolicy pi = StationaryPolicy::deterministic(2, {a0, a1});
        if (!is_batch_constrained(pi, m)) continue;
        best = std::max(best, offline_policy_evaluation(m, pi));
      }
    EXPECT_GE(bound, best - 1e-9);
    if (H == 1) {
      EXPECT_NEAR(offline_policy_evaluation(m, plan.policy), best, 1e-12);
    }
  }
}

TEST(FitEnsemble, ArmMembersPredictPayout) {
  Rng rng(5);
  const MultiTaskDataset d = arm_data(5, 45, 1);
  const EnsembleModel ens = fit_ensemble(d, TrainConfig{}, rng);
  ASSERT_EQ(ens.size(), 4u);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t z = 0; z < 5; ++z) EXPECT_EQ(ens.reward(l, 0, z, z), 1.0);
  const Prediction p = predict(ens, 0, 0, 1, 1);
  EXPECT_EQ(p.reward, 1.0);
  EXPECT_EQ(p.next_state, std::vector<double>{1.0});
}

TEST(FitEnsemble, ZeroVarianceDataGivesIdenticalMembers) {
  Rng rng(6);
  const EnsembleModel ens = fit_ensemble(arm_data(4, 10, 2), TrainConfig{}, rng);
  for (std::size_t l = 1; l < ens.size(); ++l) {
    EXPECT_EQ(ens.reward_tables()[l], ens.reward_tables()[0]);
    EXPECT_EQ(ens.dynamics_tables()[l], ens.dynamics_tables()[0]);
  }
}

TEST(FitEnsemble, BernoulliMembersNearTruth) {
  Rng rng(7);
  const MultiTaskDataset d = bernoulli_data(0.3, 1000, rng);
  const EnsembleModel ens = fit_ensemble(d, TrainConfig{}, rng);
  for (std::size_t l = 0; l < ens.size(); ++l) EXPECT_NEAR(ens.reward(l, 0, 0, 0), 0.3, 0.08);
}

TEST(FitEnsemble, BootstrapSpreadIsPositiveAlmostAlways) {
  std::size_t spread = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const MultiTaskDataset d = bernoulli_data(0.3, 1000, rng);
    const EnsembleModel ens = fit_ensemble(d, TrainConfig{}, rng);
    double lo = 1.0, hi = 0.0;
    for (std::size_t l = 0; l < ens.size(); ++l) {
      lo = std::min(lo, ens.reward(l, 0, 0, 0));
      hi = std::max(hi, ens.reward(l, 0, 0, 0));
    }
    if (hi > lo) ++spread;
  }
  EXPECT_GE(spread, 99u);
}

TEST(FitEnsemble, NoBootstrapGivesIdenticalMembers) {
  Rng rng(8);
  const MultiTaskDataset d = bernoulli_data(0.3, 200, rng);
  const EnsembleModel ens = fit_ensemble(d, TrainConfig{3, false, 1e-10}, rng);
  EXPECT_EQ(ens.reward_tables()[0], ens.reward_tables()[2]);
}

TEST(FitEnsemble, UnsupportedCellFill) {
  // Four states; the data visits (0,0) and (1,0) with rewards 1 and 0, so the global mean is 0.5.
  const TaskShape sh{4, 2, {0.0, 1.0}, 2, 0};
  const std::vector<Trajectory> sub{{{{0, 0, 1.0, 1}, {1, 0, 0.0, 2}}}};
  Rng rng(9);
  const EnsembleModel ens = fit_ensemble(MultiTaskDataset{sh, {sub}, 1}, TrainConfig{}, rng);
  const Prediction p = predict(ens, 0, 3, 1, 0);
  EXPECT_EQ(p.reward, 0.5);
  EXPECT_EQ(p.next_state, (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(predict(ens, 0, 0, 0, 0).next_state, (std::vector<double>{0.0, 1.0, 0.0, 0.0}));
}

TEST(FitEnsemble, OutputsStayInRange) {
  Rng rng(12);
  const EnvInstance env = build_three_path(3, 0.15);
  const MultiTaskDataset d = collect_dataset(env.tasks, perturb_behavior(env.behavior, 0.5), 40, rng);
  const EnsembleModel ens = fit_ensemble(d, TrainConfig{}, rng);
  for (std::size_t l = 0; l < ens.size(); ++l)
    for (std::size_t z = 0; z < 3; ++z)
      for (StateIndex s = 0; s < env.shape().num_states; ++s)
        for (ActionIndex a = 0; a < 3; ++a) {
          const Prediction p = predict(ens, l, s, a, z);
          EXPECT_GE(p.reward, 0.0);
          EXPECT_LE(p.reward, 1.0);
          EXPECT_NEAR(sum(p.next_state), 1.0, 1e-9);
        }
  EXPECT_THROW(predict(ens, 4, 0, 0, 0), ConfigError);
  EXPECT_THROW(predict(ens, 0, 0, 0, 3), ConfigError);
}

TEST(EnsembleDocument, RoundTripIsExact) {
  Rng rng(13);
  const MultiTaskDataset d = bernoulli_data(0.4, 50, rng);
  const EnsembleModel ens = fit_ensemble(d, TrainConfig{}, rng);
  EXPECT_EQ(ensemble_from_document(TextDocument::parse(to_document(ens).to_string())), ens);
}

#include <gtest/gtest.h>

#include "property_support.hpp"

using namespace idaq;

namespace {

constexpr std::size_t kCases = 1000;

void expect_ok(const props::Outcome& o) {
  EXPECT_EQ(o.cases, kCases) << o.name;
  EXPECT_TRUE(o.ok()) << o.name << ": " << o.failures << " failures, first " << o.first_failure;
}

}  // namespace

TEST(Properties, BeliefNormalization) { expect_ok(props::belief_normalization(kCases, 1801)); }
TEST(Properties, BatchConstraint) { expect_ok(props::batch_constraint(kCases, 1802)); }
TEST(Properties, AcceptanceSemantics) { expect_ok(props::acceptance_semantics(kCases, 1803)); }
TEST(Properties, QuantileCoverage) { expect_ok(props::quantile_coverage(kCases, 1804)); }
TEST(Properties, ReturnScoreMonotonicity) { expect_ok(props::q_re_monotonicity(kCases, 1805)); }
TEST(Properties, Reproducibility) { expect_ok(props::reproducibility(kCases, 1806)); }

TEST(Properties, VarianceScoreVanishesForIdenticalMembers) {
  Rng rng(1807);
  for (std::size_t c = 0; c < kCases; ++c) {
    const TaskShape sh = props::random_shape(rng);
    const std::size_t Z = 1 + props::below(rng, 3), L = 2 + props::below(rng, 3);
    Table rew(Z, sh.num_pairs()), dyn(Z * sh.num_pairs(), sh.num_states);
    for (double& x : rew.data()) x = uniform01(rng);
    for (std::size_t r = 0; r < dyn.rows(); ++r) props::random_row(dyn.row(r), rng, 0.3);
    const EnsembleModel ens(sh, Z, std::vector<Table>(L, rew), std::vector<Table>(L, dyn));
    const TaskSpec task = props::sparse_task(rng, sh, 0.3);
    const Trajectory traj = sample_episode(task, props::sparse_policy(rng, sh.num_states, sh.num_actions, 0.3), rng);
    ASSERT_EQ(q_pv(traj, props::below(rng, Z), ens), 0.0) << "case " << c;
  }
}

TEST(Properties, SimulationLemmaOnSparseModels) {
  Rng rng(1808);
  for (std::size_t c = 0; c < kCases; ++c) {
    const TaskShape sh = props::random_shape(rng);
    const TaskSpec m1 = props::sparse_task(rng, sh, 0.4), m2 = props::sparse_task(rng, sh, 0.4);
    const SimulationReport r =
        check_simulation_lemma(m1, m2, props::sparse_policy(rng, sh.num_states, sh.num_actions, 0.4));
    ASSERT_TRUE(r.holds) << "case " << c << ": " << r.lhs << " > " << r.rhs;
  }
}

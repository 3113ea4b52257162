// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "idaq/idaq_all.hpp"
#include "property_support.hpp"

using namespace idaq;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "MISSED ") + what;
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Tolerances and sizes.
constexpr double kExactTol = 1e-9;
constexpr double kShiftTol = 1e-12;
constexpr double kC1Seconds = 1.0;
constexpr std::size_t kC3Runs = 500;
constexpr std::size_t kC3Episodes = 10;
constexpr double kC3ReIdentify = 0.99;
constexpr double kC3PvIdentify = 0.40;
constexpr double kC3PeMargin = 0.5;
constexpr double kC3Seconds = 30.0;
constexpr std::size_t kC4Seeds = 200;
constexpr double kC4IdaqSuccess = 0.90;
constexpr double kC4BaselineSuccess = 0.60;
constexpr double kC4Seconds = 300.0;
constexpr std::size_t kC5Trials = 200;
constexpr double kC5Delta = 0.05;
constexpr double kC5MaxViolation = 0.07;
constexpr std::size_t kC6Seeds = 50;
constexpr std::size_t kC6Rollouts = 4000;
constexpr std::size_t kC7Pairs = 1000;
constexpr std::size_t kC8Cases = 1000;
constexpr double kC8Seconds = 120.0;

Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const EnvInstance env = build_v_arm(5);
  Rng rng(11);
  const MultiTaskDataset data = collect_dataset(env.tasks, env.behavior, 45, rng);
  const MetaPolicyTS trained = train_meta_policy(data, TrainConfig{});
  const std::size_t N = env.default_budget.episodes_total;
  bool all_exact = true;
  for (std::size_t i = 0; i < trained.size(); ++i) {
    const double j = static_cast<double>(N) * offline_policy_evaluation(induced_mdp(data.sub_datasets[i], data.shape),
                                                                        trained.policy(i));
    all_exact = all_exact && j == 5.0;
  }
  v.require(all_exact, "offline value of every hypothesis policy over the budget == 5.0");
  const MetaPolicyTS meta{trained.hypothesis_policies, SamplerMode::without_replacement};
  const MetaValue online = evaluate_meta_policy(meta, env.true_hypotheses(BeliefMode::plain), env.task_prior,
                                                env.default_budget, EvalMethod::exact());
  v.require(std::abs(online.mean - 3.0) <= kExactTol, "online value " + fmt(online.mean) + " == 3.0");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < kC1Seconds, "runtime " + fmt(secs) + "s < 1s");
  return v;
}

Verdict criterion2() {
  Verdict v;
  for (std::size_t k : {3u, 5u, 10u}) {
    const EnvInstance env = build_v_arm(k);
    const MetaPolicyTS meta{env.behavior.assignment, SamplerMode::without_replacement};
    const ShiftReport s = check_shift_exists(env.tasks, env.behavior, meta, env.task_prior, k);
    const double want = 1.0 - 1.0 / static_cast<double>(k);
    v.require(std::abs(s.max_tv - want) <= kShiftTol, "v=" + std::to_string(k) + " max TV " + fmt(s.max_tv));
  }
  return v;
}

ExperimentConfig varm_config() {
  ExperimentConfig cfg;
  cfg.experiment = "acceptance-varm";
  cfg.env = "v_arm:v=5";
  cfg.episodes = kC3Episodes;
  cfg.seeds.clear();
  for (std::size_t s = 0; s < kC3Runs; ++s) cfg.seeds.push_back(s);
  cfg.master_seed = 3;
  cfg.comparators = {Comparator::idaq_re, Comparator::idaq_pv, Comparator::idaq_pe};
  cfg.threads = 1;
  cfg.bootstrap_resamples = 1000;
  return cfg;
}

Verdict criterion3() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = varm_config();
  const ExperimentResult res = run_experiment(cfg);
  const double re = res.summary.at(Comparator::idaq_re).identification_rate;
  const double pv = res.summary.at(Comparator::idaq_pv).identification_rate;
  v.require(re >= kC3ReIdentify, "Q_RE identification " + fmt(re) + " >= 0.99");
  v.require(pv <= kC3PvIdentify, "Q_PV identification " + fmt(pv) + " <= 0.40");

  // Rebuild each seed's data to label episodes as in or out of distribution.
  const EnvInstance env = build_env(cfg.env);
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& run : res.runs) {
    if (run.comparator != Comparator::idaq_pe) continue;
    const SeedSetup setup = prepare_seed(cfg, env, run.seed);
    double max_in = -std::numeric_limits<double>::infinity(), min_out = std::numeric_limits<double>::infinity();
    for (const auto& rec : run.result.log) {
      const DatasetSupport sup(setup.data.sub_datasets[rec.hypothesis], setup.data.shape);
      if (sup.contains(rec.trajectory))
        max_in = std::max(max_in, rec.score);
      else
        min_out = std::min(min_out, rec.score);
    }
    if (std::isfinite(max_in) && std::isfinite(min_out)) worst_margin = std::min(worst_margin, min_out - max_in);
  }
  v.require(worst_margin >= kC3PeMargin, "Q_PE worst in/out margin " + fmt(worst_margin) + " >= 0.5");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < kC3Seconds, "runtime " + fmt(secs) + "s < 30s");
  return v;
}

Verdict criterion4() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.experiment = "acceptance-three-path";
  cfg.env = "three_path:length=4,slip=0.05";
  cfg.seeds.clear();
  for (std::size_t s = 0; s < kC4Seeds; ++s) cfg.seeds.push_back(s);
  cfg.master_seed = 4;
  cfg.comparators = {Comparator::idaq_re, Comparator::baseline_all};
  cfg.threads = 1;
  const ExperimentResult res = run_experiment(cfg);
  const auto& idaq = res.summary.at(Comparator::idaq_re);
  const auto& base = res.summary.at(Comparator::baseline_all);
  v.require(idaq.success_rate >= kC4IdaqSuccess, "IDAQ success " + fmt(idaq.success_rate) + " >= 0.90");
  v.require(base.success_rate <= kC4BaselineSuccess, "baseline success " + fmt(base.success_rate) + " <= 0.60");
  v.require(idaq.success_ci.lower > base.success_ci.upper,
            "CIs [" + fmt(idaq.success_ci.lower) + "," + fmt(idaq.success_ci.upper) + "] vs [" +
                fmt(base.success_ci.lower) + "," + fmt(base.success_ci.upper) + "] disjoint");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < kC4Seconds, "runtime " + fmt(secs) + "s < 300s");
  return v;
}

Verdict criterion5() {
  Verdict v;
  Rng rng(55);
  const TaskSpec task = random_task(rng, 3, 2, 4);
  const StationaryPolicy mu = StationaryPolicy::uniform(3, 2);
  const StationaryPolicy pi = random_policy(rng, 3, 2);
  const auto reps = check_consistency(task, mu, pi, {10, 1000}, kC5Trials, kC5Delta, 56);
  const double m10 = reps[0].empirical_summary().median, m1000 = reps[1].empirical_summary().median;
  v.require(m1000 <= 0.25 * m10, "median gap " + fmt(m1000) + " at K=1000 <= 1/4 of " + fmt(m10) + " at K=10");
  for (const auto& r : reps)
    v.require(r.violation_rate() <= kC5MaxViolation,
              r.parameter + " violation rate " + fmt(r.violation_rate()) + " (skipped " + std::to_string(r.skipped) + ")");
  return v;
}

Verdict criterion6() {
  Verdict v;
  // Deterministic fixtures: the correct hypothesis never leaves its data.
  bool zero = true;
  for (int which = 0; which < 2; ++which) {
    const EnvInstance env = which == 0 ? build_v_arm(5) : build_three_path(4, 0.0);
    Rng rng(61 + which);
    const MultiTaskDataset data = collect_dataset(env.tasks, env.behavior, 45, rng);
    const MetaPolicyTS meta = train_meta_policy(data, TrainConfig{});
    for (std::size_t i = 0; i < env.tasks.size(); ++i)
      zero = zero && estimate_p_out(meta.policy(i), env.tasks[i], data.sub_datasets[i], kC6Rollouts, rng) == 0.0;
  }
  v.require(zero, "p_out == 0 on deterministic fixtures");

  const EnvInstance env = build_three_path(4, 0.1);
  std::vector<double> medians;
  for (std::size_t K : {10u, 100u, 1000u}) {
    std::vector<double> ps;
    for (std::size_t s = 0; s < kC6Seeds; ++s) {
      Rng rng(derive_seed(66, s * 7919 + K));
      const std::size_t goal = s % 3;
      MultiTaskDataset one;
      one.shape = env.shape();
      std::vector<Trajectory> sub;
      for (std::size_t k = 0; k < K; ++k) sub.push_back(sample_episode(env.tasks[goal], env.behavior[goal], rng));
      const StationaryPolicy pi = plan_batch_constrained(induced_mdp(sub, env.shape()), 1e-10).policy;
      Rng eval(derive_seed(67, s));
      ps.push_back(estimate_p_out(pi, env.tasks[goal], sub, kC6Rollouts, eval));
    }
    medians.push_back(median(ps));
  }
  v.require(medians[0] >= medians[1] && medians[1] >= medians[2],
            "slip medians " + fmt(medians[0]) + " >= " + fmt(medians[1]) + " >= " + fmt(medians[2]));
  return v;
}

Verdict criterion7() {
  Verdict v;
  Rng rng(77);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < kC7Pairs; ++t) {
    const TaskSpec m1 = random_task(rng, 2 + t % 3, 2, 1 + t % 5);
    const TaskSpec m2 = perturb_task(m1, uniform01(rng), rng);
    const StationaryPolicy pi = random_policy(rng, m1.num_states(), 2);
    if (!check_simulation_lemma(m1, m2, pi).holds) ++violations;
  }
  v.require(violations == 0, std::to_string(violations) + " violations in 1000 pairs");

  const TaskShape a{2, 2, {0.0, 0.5}, 3, 0}, b{2, 2, {0.1, 0.6}, 3, 0};
  Table trans(4, 2), rew(4, 2);
  for (std::size_t p = 0; p < 4; ++p) {
    trans(p, 0) = 0.3 + 0.1 * static_cast<double>(p);
    trans(p, 1) = 1.0 - trans(p, 0);
    rew(p, 0) = 0.25 * static_cast<double>(p);
    rew(p, 1) = 1.0 - rew(p, 0);
  }
  const TaskSpec m1(a, trans, rew), m2(b, trans, rew);
  const SimulationReport s = check_simulation_lemma(m1, m2, StationaryPolicy::uniform(2, 2));
  v.require(std::abs(s.lhs - s.rhs) <= kExactTol && std::abs(s.lhs - 0.3) <= kExactTol,
            "reward shift lhs " + fmt(s.lhs) + " rhs " + fmt(s.rhs));
  return v;
}

Verdict criterion8() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<props::Outcome> outcomes = {
      props::belief_normalization(kC8Cases, 801), props::batch_constraint(kC8Cases, 802),
      props::acceptance_semantics(kC8Cases, 803), props::quantile_coverage(kC8Cases, 804),
      props::q_re_monotonicity(kC8Cases, 805),    props::reproducibility(kC8Cases, 806)};
  for (const auto& o : outcomes)
    v.require(o.ok() && o.cases >= kC8Cases,
              o.name + " " + std::to_string(o.cases - o.failures) + "/" + std::to_string(o.cases) +
                  (o.first_failure.empty() ? "" : " [" + o.first_failure + "]"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < kC8Seconds, "runtime " + fmt(secs) + "s < 120s");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 v-arm exactness", criterion1},          {"2 shift witness", criterion2},
      {"3 quantifier separation", criterion3},    {"4 IDAQ vs unfiltered baseline", criterion4},
      {"5 offline evaluation consistency", criterion5}, {"6 Thompson in-distribution", criterion6},
      {"7 simulation lemma", criterion7},         {"8 invariant suite", criterion8}};
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "idaq/harness.hpp"

using namespace idaq;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return load_config(in);
}

std::string runs_csv(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_runs_csv(os, cfg, run_experiment(cfg));
  return os.str();
}

ExperimentConfig corridor_config(std::size_t seeds) {
  ExperimentConfig cfg;
  cfg.env = "three_path:length=4,slip=0.05";
  cfg.seeds.clear();
  for (std::size_t s = 0; s < seeds; ++s) cfg.seeds.push_back(s);
  cfg.comparators = {Comparator::idaq_re, Comparator::baseline_all, Comparator::expert_context_oracle};
  cfg.threads = 1;
  cfg.bootstrap_resamples = 500;
  return cfg;
}

}  // namespace

TEST(LoadConfig, FullFile) {
  const ExperimentConfig c = parse(
      "[experiment]\nname = demo\n"
      "[env]\nfamily = three_path:length=4,slip=0.05\n"
      "[data]\nk_per_task = 20\n"
      "[train]\nensemble_size = 3\nbootstrap = false\nvi_tolerance = 1e-8\n"
      "[adapt]\nepisodes = 8\nk_percent = 25 ; lower tail\nn_e = 2\n"
      "[run]\nseeds = 0-3,10\nmaster_seed = 7\ncomparators = idaq-re, baseline-all\nthreads = 2\n"
      "bootstrap_resamples = 300\noutput = out/demo\n");
  EXPECT_EQ(c.experiment, "demo");
  EXPECT_EQ(c.env, "three_path:length=4,slip=0.05");
  EXPECT_EQ(c.k_per_task, 20u);
  EXPECT_EQ(c.train.ensemble_size, 3u);
  EXPECT_FALSE(c.train.bootstrap);
  EXPECT_EQ(c.train.vi_tolerance, 1e-8);
  EXPECT_EQ(c.episodes, 8u);
  EXPECT_EQ(c.k_percent, 25.0);
  EXPECT_EQ(c.n_e, 2u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1, 2, 3, 10}));
  EXPECT_EQ(c.master_seed, 7u);
  EXPECT_EQ(c.comparators, (std::vector<Comparator>{Comparator::idaq_re, Comparator::baseline_all}));
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.bootstrap_resamples, 300u);
  EXPECT_EQ(c.output, "out/demo");
}

TEST(LoadConfig, DefaultsWhenEmpty) {
  const ExperimentConfig c = parse("");
  EXPECT_EQ(c.env, "v_arm:v=5");
  EXPECT_EQ(c.k_per_task, 45u);
  EXPECT_FALSE(c.k_percent.has_value());
  EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{0});
}

TEST(LoadConfig, InvalidFieldsAreConfigErrors) {
  EXPECT_THROW(parse("[run]\ncomparators = idaq-xx\n"), ConfigError);
  EXPECT_THROW(parse("[run]\nseeds =\n"), ConfigError);
  EXPECT_THROW(parse("[run]\nseeds = 5-2\n"), ConfigError);
  EXPECT_THROW(parse("[adapt]\nk_percent = 0\n"), ConfigError);
  EXPECT_THROW(parse("[adapt]\nn_e = 0\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nk_per_task = -3\n"), ConfigError);
  EXPECT_THROW(parse("[env]\nfamily = maze\n"), ConfigError);
  EXPECT_THROW(parse("[env]\nfamily = point_grid:grid=3\n"), ConfigError);
  EXPECT_THROW(parse("[train]\nensemble_size = 1\n"), ConfigError);
  EXPECT_THROW(parse("[train]\nbootstrap = maybe\n"), ConfigError);
  EXPECT_THROW(parse("not an ini line\n"), ConfigError);
  EXPECT_THROW(load_config_file("/nonexistent/config.ini"), ConfigError);
}

TEST(ParseSeedList, RangesAndLists) {
  EXPECT_EQ(parse_seed_list("0-2"), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(parse_seed_list("4, 1,9"), (std::vector<std::uint64_t>{4, 1, 9}));
  EXPECT_THROW(parse_seed_list("a-b"), ConfigError);
}

TEST(Comparators, NamesRoundTrip) {
  for (auto c : {Comparator::idaq_pe, Comparator::idaq_pv, Comparator::idaq_re, Comparator::baseline_all,
                 Comparator::expert_context_oracle})
    EXPECT_EQ(parse_comparator(to_string(c)), c);
}

TEST(Seeds, RunSeedDerivation) {
  ExperimentConfig a, b;
  b.master_seed = 1;
  EXPECT_EQ(run_seed_for(a, 3), derive_seed(0, 3));
  EXPECT_NE(run_seed_for(a, 3), run_seed_for(a, 4));
  EXPECT_NE(run_seed_for(a, 3), run_seed_for(b, 3));
}

TEST(RunExperiment, FilterBeatsBaselineOnCorridor) {
  const ExperimentResult res = run_experiment(corridor_config(60));
  const auto& filt = res.summary.at(Comparator::idaq_re);
  const auto& base = res.summary.at(Comparator::baseline_all);
  const auto& oracle = res.summary.at(Comparator::expert_context_oracle);
  EXPECT_EQ(filt.runs, 60u);
  EXPECT_GT(filt.mean_return, base.mean_return);
  EXPECT_EQ(oracle.identification_rate, 1.0);
  EXPECT_GE(oracle.mean_return, filt.mean_return - 1e-12);
  EXPECT_EQ(res.runs.size(), 180u);
  for (const auto& s : res.summary.comparators) {
    EXPECT_LE(s.return_ci.lower, s.mean_return);
    EXPECT_GE(s.return_ci.upper, s.mean_return);
  }
}

TEST(RunExperiment, SingleSeedHasZeroWidthInterval) {
  const ExperimentResult res = run_experiment(corridor_config(1));
  for (const auto& s : res.summary.comparators) {
    EXPECT_EQ(s.return_ci.lower, s.mean_return);
    EXPECT_EQ(s.return_ci.upper, s.mean_return);
  }
}

TEST(RunExperiment, RerunAndThreadCountGiveIdenticalCsv) {
  ExperimentConfig cfg = corridor_config(12);
  cfg.comparators = {Comparator::idaq_pe, Comparator::idaq_pv, Comparator::idaq_re, Comparator::baseline_all};
  const std::string one = runs_csv(cfg);
  EXPECT_EQ(one, runs_csv(cfg));
  cfg.threads = 3;
  EXPECT_EQ(one, runs_csv(cfg));
  EXPECT_EQ(one.substr(0, one.find('\n')), "experiment,comparator,seed,episode,stage,hypothesis,return,score,accepted,delta");
}

TEST(RunExperiment, PointGridSuccessIsIdentification) {
  ExperimentConfig cfg;
  cfg.env = "point_grid:grid=7,goals=3,sparse=1";
  cfg.k_per_task = 10;
  cfg.seeds = {0, 1, 2, 3};
  cfg.threads = 1;
  cfg.bootstrap_resamples = 100;
  cfg.comparators = {Comparator::idaq_re, Comparator::expert_context_oracle};
  const ExperimentResult res = run_experiment(cfg);
  for (const auto& r : res.runs) EXPECT_EQ(r.success, r.identified ? 1.0 : 0.0);
  EXPECT_EQ(res.summary.at(Comparator::expert_context_oracle).success_rate, 1.0);
}

TEST(RunExperiment, WritesOutputs) {
  const auto dir = std::filesystem::temp_directory_path() / "idaq_harness_test";
  std::filesystem::remove_all(dir);
  const ExperimentConfig cfg = corridor_config(3);
  write_outputs(cfg, run_experiment(cfg), dir.string());
  std::ifstream summary(dir / "summary.json");
  const auto j = nlohmann::json::parse(summary);
  EXPECT_EQ(j["comparators"].size(), 3u);
  EXPECT_EQ(j["comparators"][0]["comparator"], "idaq-re");
  EXPECT_TRUE(std::filesystem::exists(dir / "runs.csv"));
  std::filesystem::remove_all(dir);
}

TEST(BootstrapCi, ContainsMeanAndIsDeterministic) {
  const std::vector<double> xs{0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0};
  const auto a = bootstrap_ci(xs, 2000, 5), b = bootstrap_ci(xs, 2000, 5);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
  EXPECT_LE(a.lower, 5.0 / 7.0);
  EXPECT_GE(a.upper, 5.0 / 7.0);
  EXPECT_LT(a.lower, a.upper);
  EXPECT_THROW(bootstrap_ci({}, 10, 1), ConfigError);
}

TEST(VerifyAll, SmallScalePassesQuickly) {
  const auto start = std::chrono::steady_clock::now();
  const VerifyResult v = verify_all(Scale::small);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(v.exit_status(), 0);
  EXPECT_EQ(v.deterministic_violations, 0u);
  EXPECT_EQ(v.probabilistic_excess, 0u);
  EXPECT_LT(seconds, 60.0);
  const auto j = to_json(v);
  EXPECT_EQ(j["reports"].size(), v.reports.size());
  EXPECT_EQ(to_json(verify_all(Scale::small)).dump(), j.dump());
}

TEST(VerifyAll, DeterministicViolationFailsExitStatus) {
  VerifyResult v;
  v.deterministic_violations = 1;
  EXPECT_EQ(v.exit_status(), 1);
  EXPECT_EQ(parse_scale("full"), Scale::full);
  EXPECT_THROW(parse_scale("huge"), ConfigError);
}

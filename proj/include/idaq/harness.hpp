#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "idaq/belief.hpp"
#include "idaq/core.hpp"
#include "idaq/dataset.hpp"
#include "idaq/envs.hpp"
#include "idaq/idaq.hpp"
#include "idaq/theory.hpp"
#include "idaq/trainer.hpp"

namespace idaq {

enum class Comparator { idaq_pe, idaq_pv, idaq_re, baseline_all, expert_context_oracle };

inline const char* to_string(Comparator c) {
  switch (c) {
    case Comparator::idaq_pe: return "idaq-pe";
    case Comparator::idaq_pv: return "idaq-pv";
    case Comparator::idaq_re: return "idaq-re";
    case Comparator::baseline_all: return "baseline-all";
    case Comparator::expert_context_oracle: return "expert-context-oracle";
  }
  return "?";
}

inline Comparator parse_comparator(const std::string& s) {
  for (auto c : {Comparator::idaq_pe, Comparator::idaq_pv, Comparator::idaq_re, Comparator::baseline_all,
                 Comparator::expert_context_oracle})
    if (s == to_string(c)) return c;
  throw ConfigError("unknown comparator '" + s + "'");
}

struct ExperimentConfig {
  std::string experiment = "experiment";
  std::string env = "v_arm:v=5";
  std::size_t k_per_task = 45;
  TrainConfig train;
  std::size_t episodes = 0;                // 0: family default
  std::optional<double> k_percent;         // family default when unset
  std::size_t n_e = 1;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t master_seed = 0;
  std::vector<Comparator> comparators{Comparator::idaq_re, Comparator::baseline_all};
  std::size_t threads = 0;                 // 0: hardware concurrency
  std::size_t bootstrap_resamples = 10000;
  std::string output;

  /// Throws ConfigError on the first invalid field; builds the family once to check it.
  EnvInstance validate() const {
    if (seeds.empty()) throw ConfigError("config: at least one seed is required");
    if (comparators.empty()) throw ConfigError("config: at least one comparator is required");
    if (k_per_task == 0) throw ConfigError("config: data.k_per_task must be at least 1");
    if (n_e == 0) throw ConfigError("config: adapt.n_e must be at least 1");
    if (k_percent && !(*k_percent > 0.0 && *k_percent <= 100.0))
      throw ConfigError("config: adapt.k_percent must lie in (0, 100]");
    if (bootstrap_resamples == 0) throw ConfigError("config: run.bootstrap_resamples must be positive");
    train.validate();
    EnvInstance env_instance = build_env(env);
    const std::size_t n = episodes ? episodes : env_instance.default_budget.episodes_total;
    if (n == 0) throw ConfigError("config: adapt.episodes must be positive");
    return env_instance;
  }
};

/// "0-199", "1,2,5" or a mix such as "0-3,10".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    try {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        out.push_back(parse_index(item));
        continue;
      }
      const auto lo = parse_index(item.substr(0, dash)), hi = parse_index(item.substr(dash + 1));
      if (hi < lo) throw ConfigError("seed range '" + item + "' is empty");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } catch (const ParseError&) {
      throw ConfigError("bad seed list entry '" + item + "'");
    }
  }
  return out;
}

inline ExperimentConfig load_config(std::istream& is) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  auto text = [&](const std::string& key, const std::string& fallback) {
    std::string v = pt.get<std::string>(key, fallback);
    const auto hash = v.find_first_of(";#");
    if (hash != std::string::npos) v = v.substr(0, hash);
    v.erase(v.find_last_not_of(" \t") + 1);
    v.erase(0, v.find_first_not_of(" \t"));
    return v;
  };
  auto count = [&](const std::string& key, std::size_t fallback) -> std::size_t {
    const std::string v = text(key, std::to_string(fallback));
    try {
      return parse_index(v);
    } catch (const ParseError&) {
      throw ConfigError("config: " + key + " must be a nonnegative integer, got '" + v + "'");
    }
  };
  auto real = [&](const std::string& key, double fallback) {
    const std::string v = text(key, format_double(fallback));
    try {
      return parse_double(v);
    } catch (const ParseError&) {
      throw ConfigError("config: " + key + " must be a number, got '" + v + "'");
    }
  };
  auto flag = [&](const std::string& key, bool fallback) {
    const std::string v = text(key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: " + key + " must be a boolean, got '" + v + "'");
  };

  c.experiment = text("experiment.name", c.experiment);
  c.env = text("env.family", c.env);
  c.k_per_task = count("data.k_per_task", c.k_per_task);
  c.train.ensemble_size = count("train.ensemble_size", c.train.ensemble_size);
  c.train.bootstrap = flag("train.bootstrap", c.train.bootstrap);
  c.train.vi_tolerance = real("train.vi_tolerance", c.train.vi_tolerance);
  c.episodes = count("adapt.episodes", 0);
  if (pt.get_optional<std::string>("adapt.k_percent")) c.k_percent = real("adapt.k_percent", 20.0);
  c.n_e = count("adapt.n_e", c.n_e);
  if (auto s = pt.get_optional<std::string>("run.seeds")) c.seeds = parse_seed_list(text("run.seeds", ""));
  c.master_seed = count("run.master_seed", 0);
  if (pt.get_optional<std::string>("run.comparators")) {
    c.comparators.clear();
    std::stringstream ss(text("run.comparators", ""));
    for (std::string item; std::getline(ss, item, ',');) {
      item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
      if (!item.empty()) c.comparators.push_back(parse_comparator(item));
    }
  }
  c.threads = count("run.threads", 0);
  c.bootstrap_resamples = count("run.bootstrap_resamples", c.bootstrap_resamples);
  c.output = text("run.output", c.output);
  c.validate();
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return load_config(in);
}

/// Everything a comparator needs for one seed.
struct SeedSetup {
  EnvInstance env;
  std::size_t test_task = 0;
  MultiTaskDataset data;
  MetaPolicyTS meta;
  EnsembleModel ensemble;
  std::uint64_t run_seed = 0;
};

inline std::uint64_t run_seed_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  return derive_seed(cfg.master_seed, seed);
}

/// Draws the test task, collects the dataset, trains the meta-policy and the ensemble.
inline SeedSetup prepare_seed(const ExperimentConfig& cfg, const EnvInstance& env, std::uint64_t seed) {
  const std::uint64_t run_seed = run_seed_for(cfg, seed);
  Rng rng(run_seed);
  const std::size_t test = sample_index(env.task_prior, rng);
  MultiTaskDataset data = collect_dataset(env.tasks, env.behavior, cfg.k_per_task, rng);
  MetaPolicyTS meta = train_meta_policy(data, cfg.train);
  EnsembleModel ens = fit_ensemble(data, cfg.train, rng);
  return {env, test, std::move(data), std::move(meta), std::move(ens), run_seed};
}

struct ComparatorRun {
  Comparator comparator = Comparator::idaq_re;
  std::uint64_t seed = 0;
  std::size_t test_task = 0;
  AdaptationResult result;
  double final_return = 0.0;   // exact value of the greedy hypothesis policy in the test task
  double online_return = 0.0;  // total reward collected while adapting
  double success = 0.0;
  bool identified = false;
};

inline ComparatorRun run_comparator(const ExperimentConfig& cfg, const SeedSetup& setup, Comparator c,
                                    std::uint64_t seed) {
  const EnvInstance& env = setup.env;
  const TaskSpec& test = env.tasks[setup.test_task];
  const std::size_t N = cfg.episodes ? cfg.episodes : env.default_budget.episodes_total;
  const double k = cfg.k_percent.value_or(env.default_k_percent);
  Rng rng(derive_seed(setup.run_seed, 1000 + static_cast<std::uint64_t>(c)));

  ComparatorRun run;
  run.comparator = c;
  run.seed = seed;
  run.test_task = setup.test_task;
  switch (c) {
    case Comparator::idaq_pe:
    case Comparator::idaq_pv:
    case Comparator::idaq_re: {
      const Quantifier q = c == Comparator::idaq_pe ? Quantifier::PE
                           : c == Comparator::idaq_pv ? Quantifier::PV
                                                      : Quantifier::RE;
      AdaptationConfig ac = AdaptationConfig::split(N, q, k, 0);
      ac.n_e = cfg.n_e;
      const HypothesisSet hyp = hypotheses_from_dataset(setup.data, BeliefMode::transformed);
      run.result = run_idaq(test, setup.meta, hyp, setup.ensemble, ac, rng);
      break;
    }
    case Comparator::baseline_all: {
      const HypothesisSet hyp = hypotheses_from_dataset(setup.data, BeliefMode::plain);
      run.result = baseline_adapt_all(test, setup.meta, hyp, AdaptationBudget::episodes(N, test.horizon()), rng);
      break;
    }
    case Comparator::expert_context_oracle: {
      // Context from the true task's own data: the belief is a point mass on it.
      AdaptationResult& r = run.result;
      r.threshold = std::numeric_limits<double>::infinity();
      r.final_belief = Belief::point_mass(env.tasks.size(), setup.test_task);
      for (std::size_t e = 0; e < N; ++e) {
        EpisodeRecord rec;
        rec.episode = e;
        rec.hypothesis = setup.test_task;
        rec.stage = Stage::iterative;
        rec.trajectory = sample_episode(test, setup.meta.policy(setup.test_task), rng);
        rec.score = -rec.trajectory.total_return();
        rec.accepted = true;
        r.log.push_back(rec);
        r.context.push_back(std::move(rec));
      }
      const std::size_t tail = std::min<std::size_t>(N, 3);
      double total = 0.0;
      for (std::size_t i = N - tail; i < N; ++i) total += r.log[i].episode_return();
      r.final_return_estimate = total / static_cast<double>(tail);
      break;
    }
  }
  const std::size_t z = run.result.greedy_hypothesis();
  run.identified = z == setup.test_task && run.result.final_belief[z] >= 0.99;
  run.final_return = exact_policy_value(test, setup.meta.policy(z));
  for (const auto& rec : run.result.log) run.online_return += rec.episode_return();
  run.success = env.name == "point_grid" ? (run.identified ? 1.0 : 0.0) : run.final_return;
  return run;
}

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// 95% percentile bootstrap of the mean; widened to contain the sample mean.
inline ConfidenceInterval bootstrap_ci(const std::vector<double>& xs, std::size_t resamples, std::uint64_t seed) {
  if (xs.empty()) throw ConfigError("bootstrap_ci: no samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Rng rng(seed);
  std::vector<double> means(resamples);
  const double n = static_cast<double>(xs.size());
  for (auto& m : means) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto pick = std::min(static_cast<std::size_t>(uniform01(rng) * n), xs.size() - 1);
      total += xs[pick];
    }
    m = total / n;
  }
  std::sort(means.begin(), means.end());
  auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1) + 0.5));
    return means[std::min(idx, resamples - 1)];
  };
  return {std::min(at(0.025), mean), std::max(at(0.975), mean)};
}

struct ComparatorSummary {
  Comparator comparator = Comparator::idaq_re;
  std::size_t runs = 0;
  double mean_return = 0.0;
  ConfidenceInterval return_ci;
  double success_rate = 0.0;
  ConfidenceInterval success_ci;
  double identification_rate = 0.0;
  double mean_online_return = 0.0;
  std::size_t accepted = 0;
  std::size_t episodes = 0;
  std::size_t demotions = 0;
};

struct RunSummary {
  std::string experiment;
  std::string env;
  std::vector<ComparatorSummary> comparators;

  const ComparatorSummary& at(Comparator c) const {
    for (const auto& s : comparators)
      if (s.comparator == c) return s;
    throw ConfigError(std::string("comparator not in summary: ") + to_string(c));
  }
};

struct ExperimentResult {
  RunSummary summary;
  std::vector<ComparatorRun> runs;  // seed-major, comparator order within a seed
};

inline double mean_of(const std::vector<double>& xs) {
  double t = 0.0;
  for (double x : xs) t += x;
  return xs.empty() ? 0.0 : t / static_cast<double>(xs.size());
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const EnvInstance env = cfg.validate();
  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<std::vector<ComparatorRun>> per_seed(n_seeds);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n_seeds;) {
      try {
        const SeedSetup setup = prepare_seed(cfg, env, cfg.seeds[i]);
        for (Comparator c : cfg.comparators) per_seed[i].push_back(run_comparator(cfg, setup, c, cfg.seeds[i]));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_seeds;
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n_seeds);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  out.summary.experiment = cfg.experiment;
  out.summary.env = cfg.env;
  for (auto& runs : per_seed)
    for (auto& r : runs) out.runs.push_back(std::move(r));
  for (std::size_t ci = 0; ci < cfg.comparators.size(); ++ci) {
    const Comparator c = cfg.comparators[ci];
    ComparatorSummary s;
    s.comparator = c;
    std::vector<double> returns, successes, online;
    double identified = 0.0;
    for (const auto& r : out.runs) {
      if (r.comparator != c) continue;
      returns.push_back(r.final_return);
      successes.push_back(r.success);
      online.push_back(r.online_return);
      identified += r.identified ? 1.0 : 0.0;
      s.accepted += r.result.context.size();
      s.episodes += r.result.log.size();
      s.demotions += r.result.demotions;
    }
    s.runs = returns.size();
    s.mean_return = mean_of(returns);
    s.success_rate = mean_of(successes);
    s.mean_online_return = mean_of(online);
    s.identification_rate = identified / static_cast<double>(s.runs);
    s.return_ci = bootstrap_ci(returns, cfg.bootstrap_resamples, derive_seed(cfg.master_seed, 0xC1000 + 2 * ci));
    s.success_ci = bootstrap_ci(successes, cfg.bootstrap_resamples, derive_seed(cfg.master_seed, 0xC1001 + 2 * ci));
    out.summary.comparators.push_back(s);
  }
  return out;
}

inline void write_runs_csv(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& res) {
  os << "experiment,comparator,seed,episode,stage,hypothesis,return,score,accepted,delta\n";
  for (const auto& r : res.runs)
    for (const auto& e : r.result.log)
      os << cfg.experiment << ',' << to_string(r.comparator) << ',' << r.seed << ',' << e.episode << ','
         << to_string(e.stage) << ',' << e.hypothesis << ',' << format_double(e.episode_return()) << ','
         << format_double(e.score) << ',' << (e.accepted ? 1 : 0) << ',' << format_double(r.result.threshold) << '\n';
}

inline nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j;
  j["experiment"] = s.experiment;
  j["env"] = s.env;
  j["comparators"] = nlohmann::json::array();
  for (const auto& c : s.comparators)
    j["comparators"].push_back({{"comparator", to_string(c.comparator)},
                                {"runs", c.runs},
                                {"mean_return", c.mean_return},
                                {"return_ci", {c.return_ci.lower, c.return_ci.upper}},
                                {"success_rate", c.success_rate},
                                {"success_ci", {c.success_ci.lower, c.success_ci.upper}},
                                {"identification_rate", c.identification_rate},
                                {"mean_online_return", c.mean_online_return},
                                {"accepted", c.accepted},
                                {"episodes", c.episodes},
                                {"demotions", c.demotions}});
  return j;
}

inline void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream runs(std::filesystem::path(dir) / "runs.csv");
  write_runs_csv(runs, cfg, res);
  std::ofstream summary(std::filesystem::path(dir) / "summary.json");
  summary << to_json(res.summary).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Theory sweep

enum class Scale { small, full };

inline Scale parse_scale(const std::string& s) {
  if (s == "small") return Scale::small;
  if (s == "full") return Scale::full;
  throw ConfigError("scale must be 'small' or 'full', got '" + s + "'");
}

struct VerifyResult {
  std::vector<BoundReport> reports;
  std::size_t deterministic_violations = 0;
  std::size_t probabilistic_excess = 0;  // reports with violation rate above delta + 0.02
  double seconds = 0.0;
  int exit_status() const { return deterministic_violations == 0 ? 0 : 1; }
};

/// Single-parameter family: one state, one action, Bernoulli(theta) rewards, theta ~ U[0,1].
inline TaskSampler bernoulli_family() {
  return [](Rng& rng) { return bernoulli_task(uniform01(rng)); };
}

/// Perturbs every row of `task` by mixing with a random distribution.
inline TaskSpec perturb_task(const TaskSpec& task, double strength, Rng& rng) {
  Table trans = task.transition_table(), rew = task.reward_table();
  auto mix = [&](std::span<double> row) {
    const double lambda = strength * uniform01(rng);
    std::vector<double> noise(row.size());
    double total = 0.0;
    for (double& x : noise) total += x = uniform01(rng);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = (1.0 - lambda) * row[i] + lambda * noise[i] / total;
    const double s = sum(row);
    for (double& x : row) x /= s;
  };
  for (std::size_t p = 0; p < trans.rows(); ++p) {
    mix(trans.row(p));
    mix(rew.row(p));
  }
  return TaskSpec(task.shape(), std::move(trans), std::move(rew));
}

inline VerifyResult verify_all(Scale scale, std::uint64_t seed = 20240601) {
  const auto start = std::chrono::steady_clock::now();
  const bool full = scale == Scale::full;
  VerifyResult out;
  auto deterministic = [&](BoundReport r) {
    out.deterministic_violations += r.violations;
    out.reports.push_back(std::move(r));
  };
  auto probabilistic = [&](BoundReport r) {
    if (r.violation_rate() > r.confidence_delta + 0.02) ++out.probabilistic_excess;
    out.reports.push_back(std::move(r));
  };

  for (std::size_t v : {3u, 5u, 10u}) {
    const EnvInstance env = build_v_arm(v);
    MetaPolicyTS meta{env.behavior.assignment, SamplerMode::without_replacement};
    const ShiftReport s = check_shift_exists(env.tasks, env.behavior, meta, env.task_prior, v);
    BoundReport r;
    r.name = "shift_exists";
    r.parameter = "v=" + std::to_string(v);
    r.trials = 1;
    r.empirical = {s.max_tv};
    r.bound = {1.0 - 1.0 / static_cast<double>(v)};
    r.violations = std::abs(s.max_tv - r.bound[0]) <= 1e-12 ? 0 : 1;
    deterministic(std::move(r));
  }

  for (std::size_t v : {1u, 3u, 5u}) {
    const EnvInstance env = build_v_arm(v);
    Rng rng(derive_seed(seed, v));
    const MultiTaskDataset data = collect_dataset(env.tasks, env.behavior, 45, rng);
    const MetaPolicyTS meta = train_meta_policy(data, TrainConfig{});
    const GapReport g = check_offline_online_gap(env.tasks, env.behavior, env.task_prior, data, meta, env.default_budget);
    BoundReport r;
    r.name = "offline_online_gap";
    r.parameter = "v=" + std::to_string(v);
    r.trials = 1;
    r.empirical = {g.gap};
    r.bound = {g.lower_bound};
    r.violations = g.holds ? 0 : 1;
    deterministic(std::move(r));
  }

  {
    BoundReport r;
    r.name = "simulation_lemma";
    r.trials = full ? 1000 : 200;
    r.parameter = "pairs=" + std::to_string(r.trials);
    r.seed = derive_seed(seed, 77);
    Rng rng(r.seed);
    for (std::size_t t = 0; t < r.trials; ++t) {
      const TaskSpec m1 = random_task(rng, 3, 2, 2 + t % 4);
      const TaskSpec m2 = perturb_task(m1, uniform01(rng), rng);
      const StationaryPolicy pi = random_policy(rng, 3, 2);
      const SimulationReport s = check_simulation_lemma(m1, m2, pi);
      r.empirical.push_back(s.lhs);
      r.bound.push_back(s.rhs);
      if (!s.holds) ++r.violations;
    }
    deterministic(std::move(r));
  }

  {
    Rng rng(derive_seed(seed, 91));
    const TaskSpec task = random_task(rng, 3, 2, 4);
    const StationaryPolicy mu = StationaryPolicy::uniform(3, 2);
    const StationaryPolicy pi = random_policy(rng, 3, 2);
    for (auto& r : check_consistency(task, mu, pi, {10, 100, 1000}, full ? 200 : 50, 0.05, derive_seed(seed, 92)))
      probabilistic(std::move(r));
  }

  {
    const EnvInstance det = build_three_path(4, 0.0);
    const EnvInstance slip = build_three_path(4, 0.1);
    for (const EnvInstance* env : {&det, &slip}) {
      for (std::size_t K : {10u, 100u, 1000u}) {
        BoundReport r;
        r.name = "p_out";
        r.parameter = "slip=" + env->parameters.at("slip") + ",K=" + std::to_string(K);
        r.trials = full ? 50 : 20;
        r.seed = derive_seed(seed, 300 + K);
        for (std::size_t t = 0; t < r.trials; ++t) {
          Rng rng(derive_seed(r.seed, t));
          const std::size_t goal = t % 3;
          std::vector<Trajectory> sub;
          for (std::size_t k = 0; k < K; ++k) sub.push_back(sample_episode(env->tasks[goal], env->behavior[goal], rng));
          const InducedMdp m = induced_mdp(sub, env->shape());
          const StationaryPolicy pi = plan_batch_constrained(m, 1e-10).policy;
          r.empirical.push_back(exact_p_out(pi, env->tasks[goal], DatasetSupport(sub, env->shape())));
          r.bound.push_back(0.0);
        }
        if (env == &det)
          for (double p : r.empirical)
            if (p != 0.0) ++r.violations;
        out.reports.push_back(std::move(r));
        out.deterministic_violations += out.reports.back().violations;
      }
    }
  }

  for (auto& r : check_task_distance({10, 100, 1000}, full ? 200 : 50, 0.05, bernoulli_family(), derive_seed(seed, 500)))
    probabilistic(std::move(r));

  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline nlohmann::json to_json(const VerifyResult& v) {
  nlohmann::json j;
  j["deterministic_violations"] = v.deterministic_violations;
  j["probabilistic_excess"] = v.probabilistic_excess;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : v.reports) j["reports"].push_back(to_json(r));
  return j;
}

}  // namespace idaq

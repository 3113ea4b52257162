// Command-line driver: collect, train, adapt, verify, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "idaq/idaq_all.hpp"

namespace fs = std::filesystem;
using namespace idaq;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config_file(path);
}

std::string out_dir(const std::string& flag, const ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output.empty()) return cfg.output;
  return "idaq_out";
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular offline meta-RL laboratory"};
  app.require_subcommand(1);
  std::string config, out, scale = "small", data_path;
  std::optional<std::uint64_t> seed;

  auto* collect = app.add_subcommand("collect", "Collect the offline multi-task dataset for one seed");
  auto* train = app.add_subcommand("train", "Train the meta-policy and the ensemble for one seed");
  auto* adapt = app.add_subcommand("adapt", "Run every comparator over the configured seeds");
  auto* verify = app.add_subcommand("verify", "Run the theory checks and write bounds.json");
  auto* report = app.add_subcommand("report", "Print a summary.json as a table");
  for (auto* sub : {collect, train, adapt}) {
    sub->add_option("--config", config, "INI experiment file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Run only this seed");
    sub->add_option("--out", out, "Output directory");
  }
  train->add_option("--data", data_path, "Dataset CSV written by 'collect'")->check(CLI::ExistingFile);
  verify->add_option("--scale", scale, "small or full")->check(CLI::IsMember({"small", "full"}));
  verify->add_option("--out", out, "Output directory");
  verify->add_option("--seed", seed, "Master seed for the checks");
  report->add_option("--out", out, "Directory holding summary.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*collect || *train) {
      ExperimentConfig cfg = config_or_default(config);
      const EnvInstance env = cfg.validate();
      const std::uint64_t s = seed.value_or(cfg.seeds.front());
      const fs::path dir = out_dir(out, cfg);
      fs::create_directories(dir);
      if (*collect) {
        const SeedSetup setup = prepare_seed(cfg, env, s);
        std::ofstream csv(dir / "dataset.csv");
        write_dataset_csv(csv, setup.data);
        for (std::size_t i = 0; i < env.tasks.size(); ++i) {
          write_text(dir / ("task_" + std::to_string(i) + ".txt"), to_document(env.tasks[i]).to_string());
          write_text(dir / ("behavior_" + std::to_string(i) + ".txt"), to_document(env.behavior[i]).to_string());
        }
        std::printf("collected %zu x %zu trajectories into %s\n", setup.data.num_tasks(), cfg.k_per_task,
                    (dir / "dataset.csv").c_str());
      } else {
        MultiTaskDataset data;
        Rng rng(derive_seed(run_seed_for(cfg, s), 1));
        if (!data_path.empty()) {
          std::ifstream in(data_path);
          data = read_dataset_csv(in, env.shape());
        } else {
          data = prepare_seed(cfg, env, s).data;
        }
        const MetaPolicyTS meta = train_meta_policy(data, cfg.train);
        const EnsembleModel ens = fit_ensemble(data, cfg.train, rng);
        write_text(dir / "meta_policy.txt", to_document(meta).to_string());
        write_text(dir / "ensemble.txt", to_document(ens).to_string());
        std::printf("trained %zu hypothesis policies and %zu ensemble members into %s\n", meta.size(), ens.size(),
                    dir.c_str());
      }
      return 0;
    }
    if (*adapt) {
      ExperimentConfig cfg = config_or_default(config);
      if (seed) cfg.seeds = {*seed};
      const ExperimentResult res = run_experiment(cfg);
      const std::string dir = out_dir(out, cfg);
      write_outputs(cfg, res, dir);
      std::printf("%-22s %6s %10s %10s %10s\n", "comparator", "runs", "return", "success", "identified");
      for (const auto& c : res.summary.comparators)
        std::printf("%-22s %6zu %10.4f %10.4f %10.4f\n", to_string(c.comparator), c.runs, c.mean_return,
                    c.success_rate, c.identification_rate);
      std::printf("wrote %s/runs.csv and %s/summary.json\n", dir.c_str(), dir.c_str());
      return 0;
    }
    if (*verify) {
      const VerifyResult v = verify_all(parse_scale(scale), seed.value_or(20240601));
      const fs::path dir = out.empty() ? fs::path("idaq_out") : fs::path(out);
      fs::create_directories(dir);
      write_text(dir / "bounds.json", to_json(v).dump(2) + "\n");
      for (const auto& r : v.reports)
        std::printf("%-20s %-22s trials=%-5zu violations=%-4zu median=%.6g bound=%.6g\n", r.name.c_str(),
                    r.parameter.c_str(), r.trials, r.violations, r.empirical_summary().median,
                    r.bound_summary().median);
      std::printf("deterministic violations: %zu, probabilistic excess: %zu, %.1fs\n", v.deterministic_violations,
                  v.probabilistic_excess, v.seconds);
      return v.exit_status();
    }
    if (*report) {
      const auto j = nlohmann::json::parse(read_text(fs::path(out) / "summary.json"));
      std::printf("%s (%s)\n", j.at("experiment").get<std::string>().c_str(), j.at("env").get<std::string>().c_str());
      std::printf("%-22s %6s %10s %21s %10s %10s\n", "comparator", "runs", "return", "95% CI", "success", "accepted");
      for (const auto& c : j.at("comparators"))
        std::printf("%-22s %6zu %10.4f [%9.4f,%9.4f] %10.4f %4zu/%-5zu\n",
                    c.at("comparator").get<std::string>().c_str(), c.at("runs").get<std::size_t>(),
                    c.at("mean_return").get<double>(), c.at("return_ci")[0].get<double>(),
                    c.at("return_ci")[1].get<double>(), c.at("success_rate").get<double>(),
                    c.at("accepted").get<std::size_t>(), c.at("episodes").get<std::size_t>());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

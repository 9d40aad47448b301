// Command-line front end: train, sweep, profile-variance, verify, eval.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "advest/checkpoint.hpp"
#include "advest/config.hpp"
#include "advest/csv.hpp"
#include "advest/envs.hpp"
#include "advest/profile.hpp"
#include "advest/study.hpp"
#include "advest/sweep.hpp"
#include "advest/verify.hpp"

namespace {

using namespace advest;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct CommonArgs {
  static constexpr std::int64_t kUnset = -9223372036854775807LL;
  std::string config_path;
  std::string out_dir = "out";
  std::int64_t seed = kUnset;
  std::int64_t budget_steps = kUnset;
};

ExperimentConfig load_with_overrides(const CommonArgs& args) {
  ExperimentConfig cfg = load_experiment_config(args.config_path);
  if (args.seed != CommonArgs::kUnset) {
    if (args.seed < 0) throw ConfigError("--seed must be non-negative");
    cfg.trainer.seed = static_cast<std::uint64_t>(args.seed);
  }
  if (args.budget_steps != CommonArgs::kUnset) {
    if (args.budget_steps < 1)
      throw ConfigError("--budget-steps must be positive, got " +
                        std::to_string(args.budget_steps));
    cfg.trainer.total_env_steps = args.budget_steps;
  }
  try {
    cfg.trainer.validate();
  } catch (const std::exception& e) {
    throw ConfigError(args.config_path + ": " + e.what());
  }
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + dir + ": " +
                             ec.message());
}

int cmd_train(const CommonArgs& args, const std::string& resume_path) {
  const ExperimentConfig cfg = load_with_overrides(args);
  const std::uint64_t hash = trainer_config_hash(cfg.env_name, cfg.trainer);
  ensure_out_dir(args.out_dir);

  Trainer trainer(cfg.trainer,
                  [&]() { return make_env(cfg.env_name); });
  if (!resume_path.empty()) load_checkpoint(resume_path, trainer, hash);

  std::ofstream runlog(args.out_dir + "/runlog.csv",
                       std::ios::binary | std::ios::trunc);
  if (!runlog)
    throw std::runtime_error("cannot write " + args.out_dir + "/runlog.csv");
  csv::write_config_hash(runlog, hash);
  runlog << kRunLogHeader << '\n';

  IterationHooks hooks;
  hooks.on_record = [&runlog](const IterationRecord& rec) {
    runlog << runlog_row(rec) << '\n';
    runlog.flush();
    return true;
  };
  hooks.on_checkpoint = [&](const Trainer& t, int iteration) {
    char name[64];
    std::snprintf(name, sizeof name, "/checkpoint_iter%06d.advest",
                  iteration);
    if (cfg.trainer.checkpoint_every > 0 &&
        iteration % cfg.trainer.checkpoint_every == 0 &&
        t.env_steps() < cfg.trainer.total_env_steps)
      save_checkpoint(args.out_dir + name, t, hash);
    else
      save_checkpoint(args.out_dir + "/checkpoint_final.advest", t, hash);
  };
  trainer.run(&hooks);
  save_checkpoint(args.out_dir + "/checkpoint_final.advest", trainer, hash);
  std::cout << "train: " << trainer.env_steps() << " env steps over "
            << trainer.iteration() << " iterations; artifacts in "
            << args.out_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args) {
  const ExperimentConfig cfg = load_with_overrides(args);
  ensure_out_dir(args.out_dir);
  const std::vector<SweepCell> cells = run_sweep(cfg, std::cerr);
  std::ofstream out(args.out_dir + "/sweep.csv",
                    std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + args.out_dir + "/sweep.csv");
  write_sweep_csv(out, cells, experiment_config_hash(cfg));
  std::cout << "sweep: " << cells.size() << " grid cells; CSV in "
            << args.out_dir << "/sweep.csv\n";
  return kExitOk;
}

int cmd_profile(const CommonArgs& args) {
  ProfileConfig cfg = load_profile_config(args.config_path);
  if (args.seed != CommonArgs::kUnset) {
    if (args.seed < 0) throw ConfigError("--seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(args.seed);
  }
  ensure_out_dir(args.out_dir);
  const StudyTable table = run_profile(cfg);
  std::ofstream out(args.out_dir + "/variance_profile.csv",
                    std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + args.out_dir +
                             "/variance_profile.csv");
  write_study_csv(out, table, profile_config_hash(cfg));
  std::cout << "profile-variance: " << table.rows.size() << " rows in "
            << args.out_dir << "/variance_profile.csv\n";
  return kExitOk;
}

int cmd_verify(const std::string& filter) {
  const std::vector<CheckResult> results = run_verification(filter);
  if (results.empty()) {
    std::cerr << "verify: no checks match filter '" << filter << "'\n";
    return kExitFailure;
  }
  std::size_t width = 0;
  for (const CheckResult& r : results) width = std::max(width, r.name.size());
  for (const CheckResult& r : results)
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name
              << std::string(width - r.name.size() + 2, ' ') << r.detail
              << '\n';
  return all_passed(results) ? kExitOk : kExitFailure;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path,
             int episodes, bool greedy) {
  const ExperimentConfig cfg = load_with_overrides(args);
  if (episodes < 1) throw ConfigError("--episodes must be >= 1");
  Trainer trainer(cfg.trainer,
                  [&]() { return make_env(cfg.env_name); });
  if (!checkpoint_path.empty())
    load_checkpoint(checkpoint_path, trainer,
                    trainer_config_hash(cfg.env_name, cfg.trainer));
  std::unique_ptr<Env> env = make_env(cfg.env_name);
  const EvalResult result =
      evaluate(policy_sampler(trainer.policy()), *env, episodes,
               cfg.trainer.seed, greedy);
  std::cout << "eval: episodes=" << episodes
            << " mean_return=" << csv::fmt(result.mean_return)
            << " success_rate=" << csv::fmt(result.success_rate) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Advantage-estimation laboratory and PPO trainer"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string resume_path, filter, checkpoint_path;
  int episodes = 100;
  bool greedy = false;

  CLI::App* train = app.add_subcommand("train", "run one training job");
  train->add_option("--config", args.config_path, "JSON config")->required();
  train->add_option("--seed", args.seed, "override the config seed");
  train->add_option("--out", args.out_dir, "output directory");
  train->add_option("--budget-steps", args.budget_steps,
                    "override total_env_steps");
  train->add_option("--resume", resume_path, "checkpoint to resume from");

  CLI::App* sweep = app.add_subcommand("sweep", "run the (T, epsilon) grid");
  sweep->add_option("--config", args.config_path, "JSON config")->required();
  sweep->add_option("--seed", args.seed, "override the base seed");
  sweep->add_option("--out", args.out_dir, "output directory");
  sweep->add_option("--budget-steps", args.budget_steps,
                    "override total_env_steps");

  CLI::App* profile = app.add_subcommand(
      "profile-variance", "per-position estimator spread and bias");
  profile->add_option("--config", args.config_path, "JSON config")
      ->required();
  profile->add_option("--seed", args.seed, "override the config seed");
  profile->add_option("--out", args.out_dir, "output directory");

  CLI::App* verify =
      app.add_subcommand("verify", "identity and oracle release gate");
  verify->add_option("--filter", filter, "run only matching checks");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "roll out a policy without training");
  eval_cmd->add_option("--config", args.config_path, "JSON config")
      ->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path,
                       "trained parameters (fresh network if omitted)");
  eval_cmd->add_option("--episodes", episodes, "episode count");
  eval_cmd->add_option("--seed", args.seed, "override the config seed");
  eval_cmd->add_flag("--greedy", greedy, "mode-seeking actions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(args, resume_path);
    if (sweep->parsed()) return cmd_sweep(args);
    if (profile->parsed()) return cmd_profile(args);
    if (verify->parsed()) return cmd_verify(filter);
    if (eval_cmd->parsed())
      return cmd_eval(args, checkpoint_path, episodes, greedy);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

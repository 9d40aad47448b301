#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "advest/checkpoint.hpp"
#include "advest/config.hpp"
#include "advest/csv.hpp"
#include "advest/envs.hpp"
#include "advest/profile.hpp"
#include "advest/sweep.hpp"
#include "advest/verify.hpp"

using namespace advest;

namespace {

std::filesystem::path temp_dir() {
  const auto dir =
      std::filesystem::temp_directory_path() / "advest_harness_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("experiment config parsing") {
  SUBCASE("defaults plus overrides") {
    const ExperimentConfig cfg = parse_experiment_config(
        R"({"env": "sparse_grid", "gamma": 0.97, "sample_length": 64,
            "partial_coef": 16, "algorithm": "baseline",
            "bootstrap_mode": "zero_at_truncation",
            "hidden_sizes": [32, 16],
            "sweep": {"sample_lengths": [32, 64], "partial_coefs": [16],
                      "n_seeds": 2}})",
        "test.json");
    CHECK(cfg.env_name == "sparse_grid");
    CHECK(cfg.trainer.gamma == 0.97);
    CHECK(cfg.trainer.sample_length == 64);
    CHECK(cfg.trainer.partial_coef == 16);
    CHECK(cfg.trainer.algorithm == TrainerConfig::Algorithm::kBaseline);
    CHECK(cfg.trainer.bootstrap_mode == BootstrapMode::kZeroAtTruncation);
    CHECK(cfg.trainer.hidden_sizes == std::vector<int>{32, 16});
    CHECK(cfg.sweep_sample_lengths == std::vector<int>{32, 64});
    CHECK(cfg.sweep_n_seeds == 2);
  }

  SUBCASE("unknown keys are errors, named in the message") {
    CHECK_THROWS_WITH_AS(
        parse_experiment_config(R"({"gama": 0.9})", "test.json"),
        doctest::Contains("gama"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_experiment_config(
            R"({"sweep": {"sample_length": [1]}})", "test.json"),
        doctest::Contains("sample_length"), ConfigError);
  }

  SUBCASE("parse errors carry line anchors") {
    try {
      parse_experiment_config("{\n  \"gamma\": 0.9,\n  oops\n}", "bad.json");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("bad.json:3") != std::string::npos);
    }
  }

  SUBCASE("epsilon > T validation names both values") {
    const ExperimentConfig cfg = parse_experiment_config(
        R"({"sample_length": 64, "partial_coef": 128})", "test.json");
    try {
      cfg.trainer.validate();
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("128") != std::string::npos);
      CHECK(msg.find("64") != std::string::npos);
    }
  }

  SUBCASE("bad enum values") {
    CHECK_THROWS_AS(parse_experiment_config(
                        R"({"bootstrap_mode": "sometimes"})", "t.json"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_experiment_config(R"({"algorithm": "magic"})", "t.json"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_experiment_config(R"({"activation": "selu"})", "t.json"),
        ConfigError);
  }
}

TEST_CASE("config hashing") {
  ExperimentConfig a;
  ExperimentConfig b;
  CHECK(trainer_config_hash(a.env_name, a.trainer) ==
        trainer_config_hash(b.env_name, b.trainer));
  b.trainer.seed += 1;
  CHECK(trainer_config_hash(a.env_name, a.trainer) !=
        trainer_config_hash(b.env_name, b.trainer));
  b = a;
  b.env_name = "sparse_grid";
  CHECK(trainer_config_hash(a.env_name, a.trainer) !=
        trainer_config_hash(b.env_name, b.trainer));
  b = a;
  b.sweep_n_seeds = 7;
  CHECK(experiment_config_hash(a) != experiment_config_hash(b));
  CHECK(trainer_config_hash(a.env_name, a.trainer) ==
        trainer_config_hash(b.env_name, b.trainer));
}

TEST_CASE("csv formatting and parsing") {
  SUBCASE("fmt round-trips doubles exactly") {
    for (const double v : {0.1, -1.0 / 3.0, 1e-300, 123456789.123456789,
                           2.5e-4, 0.0}) {
      const std::string s = csv::fmt(v);
      CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(csv::fmt(std::nan("")) == "nan");
  }

  SUBCASE("read skips comments and validates shape") {
    std::istringstream in(
        "# config_hash=00ff\nh1,h2\n1,2\n3,4\n");
    const csv::Table t = csv::read(in);
    CHECK(t.comments.size() == 1);
    CHECK(t.header == std::vector<std::string>{"h1", "h2"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][1] == "4");
    std::istringstream ragged("a,b\n1\n");
    CHECK_THROWS_AS(csv::read(ragged), std::runtime_error);
  }

  SUBCASE("runlog rows parse back against the fixed header") {
    IterationRecord rec;
    rec.iteration = 3;
    rec.env_steps = 4096;
    rec.wall_clock_s = 1.25;
    rec.mean_return_100 = 17.5;
    rec.success_rate_100 = 0.25;
    rec.policy_loss = -0.001;
    rec.value_loss = 2.75;
    rec.entropy = 0.69;
    rec.adv_mean = -0.125;
    rec.adv_std = 1.5;
    rec.kept_fraction = 0.5;
    std::istringstream in(std::string("# config_hash=0\n") + kRunLogHeader +
                          "\n" + runlog_row(rec) + "\n");
    const csv::Table t = csv::read(in);
    REQUIRE(t.header.size() == 11);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0] == "3");
    CHECK(t.rows[0][3] == "17.5");
    CHECK(t.rows[0][10] == "0.5");
  }
}

TEST_CASE("checkpoint round trip resumes bit-exactly") {
  TrainerConfig cfg;
  cfg.n_actors = 3;
  cfg.sample_length = 16;
  cfg.partial_coef = 6;
  cfg.minibatch_size = 16;
  cfg.total_env_steps = 600;
  cfg.hidden_sizes = {8};
  cfg.seed = 13;
  const auto factory = []() { return make_env("cartpole"); };
  const std::uint64_t hash = trainer_config_hash("cartpole", cfg);
  const auto path = (temp_dir() / "trainer.advest").string();

  // uninterrupted reference run
  Trainer reference(cfg, factory);
  const RunLog full = reference.run(nullptr);
  REQUIRE(full.records.size() >= 4);

  // interrupted run: stop after two iterations, checkpoint, resume
  Trainer first(cfg, factory);
  IterationHooks stop_after_two;
  stop_after_two.on_record = [](const IterationRecord& r) {
    return r.iteration < 2;
  };
  first.run(&stop_after_two);
  save_checkpoint(path, first, hash);

  Trainer resumed(cfg, factory);
  load_checkpoint(path, resumed, hash);
  CHECK(resumed.iteration() == 2);
  const RunLog tail = resumed.run(nullptr);
  REQUIRE(tail.records.size() == full.records.size() - 2);
  for (std::size_t i = 0; i < tail.records.size(); ++i) {
    const IterationRecord& a = tail.records[i];
    const IterationRecord& b = full.records[i + 2];
    // bit-exact comparison through the CSV formatter, wall clock excluded
    std::string row_a = runlog_row(a), row_b = runlog_row(b);
    const auto cut = [](std::string& row) {
      // blank the third column (wall_clock_s)
      std::size_t from = row.find(',', row.find(',') + 1) + 1;
      row.erase(from, row.find(',', from) - from);
    };
    cut(row_a);
    cut(row_b);
    CHECK(row_a == row_b);
  }

  SUBCASE("mismatched config hash is refused") {
    TrainerConfig other = cfg;
    other.seed = 999;
    Trainer t(other, factory);
    CHECK_THROWS_WITH_AS(
        load_checkpoint(path, t, trainer_config_hash("cartpole", other)),
        doctest::Contains("hash"), std::runtime_error);
  }

  SUBCASE("corrupt magic is rejected") {
    const auto bad = (temp_dir() / "bad.advest").string();
    std::ofstream out(bad, std::ios::binary);
    out << "NOTAFILE" << std::string(64, '\0');
    out.close();
    Trainer t(cfg, factory);
    CHECK_THROWS_WITH_AS(load_checkpoint(bad, t, hash),
                         doctest::Contains("magic"), std::runtime_error);
  }
}

TEST_CASE("verification gate") {
  SUBCASE("fresh build passes every check") {
    const std::vector<CheckResult> results = run_verification();
    CHECK(results.size() >= 7);
    for (const CheckResult& r : results) {
      CAPTURE(r.name);
      CAPTURE(r.detail);
      CHECK(r.passed);
    }
    CHECK(all_passed(results));
  }

  SUBCASE("filter narrows the run") {
    const std::vector<CheckResult> results = run_verification("estimators");
    CHECK(results.size() == 4);
    for (const CheckResult& r : results)
      CHECK(r.name.find("estimators") == 0);
  }

  SUBCASE("a sign error in the recursion is caught (mutation fixture)") {
    EstimatorRoutes mutated;
    mutated.gae = [](const Segment& seg, const EstimatorParams& p) {
      // deliberately broken: the discount on the recursive term is negated
      const int n = seg.length();
      std::vector<double> adv(static_cast<std::size_t>(n));
      double carry = 0.0;
      for (int j = n - 1; j >= 0; --j) {
        const Transition& x = seg.transitions[static_cast<std::size_t>(j)];
        double next_v = 0.0;
        if (!x.done && j + 1 < n)
          next_v = seg.transitions[static_cast<std::size_t>(j) + 1].value_pred;
        else if (!x.done &&
                 p.bootstrap_mode == BootstrapMode::kValueAtTruncation)
          next_v = seg.bootstrap_value;
        const double d = x.reward + p.gamma * next_v - x.value_pred;
        carry = x.done ? d : d - p.gamma * p.lambda * carry;
        adv[static_cast<std::size_t>(j)] = carry;
      }
      return adv;
    };
    bool recursion_failed = false, bias_failed = false;
    for (const CheckResult& r : run_verification("estimators", &mutated)) {
      if (r.name == "estimators.recursion_vs_direct" && !r.passed)
        recursion_failed = true;
      if (r.name == "estimators.bias_identity" && !r.passed)
        bias_failed = true;
    }
    CHECK(recursion_failed);
    CHECK(bias_failed);
  }
}

TEST_CASE("sweep") {
  ExperimentConfig cfg;
  cfg.env_name = "chain:walk5";
  cfg.trainer.n_actors = 2;
  cfg.trainer.sample_length = 8;
  cfg.trainer.partial_coef = 8;
  cfg.trainer.minibatch_size = 8;
  cfg.trainer.total_env_steps = 64;
  cfg.trainer.hidden_sizes = {4};
  cfg.trainer.seed = 3;
  cfg.sweep_sample_lengths = {8, 16};
  cfg.sweep_partial_coefs = {8, 16};
  cfg.sweep_n_seeds = 2;

  SUBCASE("grid cells, skip rule, determinism") {
    std::ostringstream log_a, log_b;
    const std::vector<SweepCell> cells_a = run_sweep(cfg, log_a);
    const std::vector<SweepCell> cells_b = run_sweep(cfg, log_b);
    CHECK(cells_a.size() == 8);  // 2 x 2 x 2 grid
    // (T=8, eps=16) cells are skipped: 2 seeds worth
    CHECK(log_a.str().find("skipping") != std::string::npos);

    std::ostringstream csv_a, csv_b;
    write_sweep_csv(csv_a, cells_a, experiment_config_hash(cfg));
    write_sweep_csv(csv_b, cells_b, experiment_config_hash(cfg));
    CHECK(csv_a.str() == csv_b.str());

    std::istringstream parse_in(csv_a.str());
    const csv::Table table = csv::read(parse_in);
    CHECK(table.header ==
          std::vector<std::string>{"T", "epsilon", "seed", "final_metric"});
    CHECK(table.rows.size() == 6);  // 8 cells minus 2 skipped
  }

  SUBCASE("empty grids are configuration errors") {
    ExperimentConfig broken = cfg;
    broken.sweep_sample_lengths.clear();
    std::ostringstream log;
    CHECK_THROWS_AS(run_sweep(broken, log), ConfigError);
  }
}

TEST_CASE("profile configs") {
  SUBCASE("tabular zero-value profile zeroes the value-part spread") {
    const ProfileConfig cfg = parse_profile_config(
        R"({"mode": "tabular", "mdp": "chain5", "value": "zero",
            "gamma": 0.95, "lambda": 0.9, "sample_length": 8,
            "rollouts": 150, "seed": 4})",
        "p.json");
    const StudyTable table = run_profile(cfg);
    REQUIRE(table.rows.size() == 8);
    for (const StudyRow& row : table.rows) {
      CHECK(row.n == 150);
      CHECK(row.std_value_part == 0.0);
      CHECK(row.std_reward_part > 0.0);
    }
  }

  SUBCASE("inline mdp specs are validated") {
    CHECK_THROWS_AS(parse_profile_config(
                        R"({"mode": "tabular", "mdp": {"n_states": 1,
                            "n_actions": 1, "transition": [[[0.5]]],
                            "reward": [[0]], "gamma": 0.9,
                            "terminal_states": [],
                            "initial_distribution": [1]}})",
                        "p.json"),
                    ConfigError);
  }

  SUBCASE("env-mode profile reports spread with nan bias") {
    ProfileConfig cfg;
    cfg.mode = ProfileConfig::Mode::kEnv;
    cfg.experiment = ExperimentConfig{};
    cfg.experiment->env_name = "cartpole";
    cfg.experiment->trainer.n_actors = 1;
    cfg.experiment->trainer.hidden_sizes = {8};
    cfg.gamma = 0.99;
    cfg.lambda = 0.95;
    cfg.sample_length = 16;
    cfg.rollouts = 120;
    cfg.seed = 21;
    const StudyTable table = run_profile(cfg);
    REQUIRE(table.rows.size() == 16);
    CHECK(table.rows[0].n == 120);
    CHECK(std::isnan(table.rows[0].bias));
    CHECK(table.rows[0].std_adv >= 0.0);
  }
}

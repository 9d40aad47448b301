#include "advest/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace advest {

namespace {

using nlohmann::json;

std::string line_anchor(const std::string& text, std::size_t byte,
                        const std::string& origin) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return origin + ":" + std::to_string(line) + ":" + std::to_string(col);
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(line_anchor(text, e.byte > 0 ? e.byte - 1 : 0, origin) +
                      ": " + e.what());
  }
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& origin,
                         const std::string& scope) {
  for (const auto& item : obj.items())
    if (!known.count(item.key()))
      throw ConfigError(origin + ": unknown " + scope + " key '" +
                        item.key() + "'");
}

template <typename T>
void read_field(const json& obj, const std::string& key, T& out,
                const std::string& origin) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": bad value for '" + key + "': " + e.what());
  }
}

BootstrapMode parse_bootstrap(const std::string& s,
                              const std::string& origin) {
  if (s == "zero_at_truncation") return BootstrapMode::kZeroAtTruncation;
  if (s == "value_at_truncation") return BootstrapMode::kValueAtTruncation;
  throw ConfigError(origin +
                    ": bootstrap_mode must be 'zero_at_truncation' or "
                    "'value_at_truncation', got '" +
                    s + "'");
}

const char* bootstrap_name(BootstrapMode m) {
  return m == BootstrapMode::kZeroAtTruncation ? "zero_at_truncation"
                                               : "value_at_truncation";
}

const std::set<std::string> kTrainerKeys = {
    "gamma",         "lambda",          "sample_length",
    "partial_coef",  "clip_coef",       "value_coef",
    "entropy_coef",  "learning_rate",   "n_actors",
    "epochs",        "minibatch_size",  "total_env_steps",
    "bootstrap_mode", "normalize_advantages", "value_clip",
    "seed",          "hidden_sizes",    "activation",
    "algorithm",     "checkpoint_every"};

void read_trainer(const json& obj, TrainerConfig& t,
                  const std::string& origin) {
  read_field(obj, "gamma", t.gamma, origin);
  read_field(obj, "lambda", t.lambda, origin);
  read_field(obj, "sample_length", t.sample_length, origin);
  read_field(obj, "partial_coef", t.partial_coef, origin);
  read_field(obj, "clip_coef", t.clip_coef, origin);
  read_field(obj, "value_coef", t.value_coef, origin);
  read_field(obj, "entropy_coef", t.entropy_coef, origin);
  read_field(obj, "learning_rate", t.learning_rate, origin);
  read_field(obj, "n_actors", t.n_actors, origin);
  read_field(obj, "epochs", t.epochs, origin);
  read_field(obj, "minibatch_size", t.minibatch_size, origin);
  read_field(obj, "total_env_steps", t.total_env_steps, origin);
  read_field(obj, "normalize_advantages", t.normalize_advantages, origin);
  read_field(obj, "value_clip", t.value_clip, origin);
  read_field(obj, "seed", t.seed, origin);
  read_field(obj, "hidden_sizes", t.hidden_sizes, origin);
  read_field(obj, "checkpoint_every", t.checkpoint_every, origin);
  if (obj.contains("bootstrap_mode")) {
    std::string s;
    read_field(obj, "bootstrap_mode", s, origin);
    t.bootstrap_mode = parse_bootstrap(s, origin);
  }
  if (obj.contains("activation")) {
    std::string s;
    read_field(obj, "activation", s, origin);
    if (s == "tanh")
      t.activation = Activation::kTanh;
    else if (s == "relu")
      t.activation = Activation::kRelu;
    else
      throw ConfigError(origin + ": activation must be 'tanh' or 'relu'");
  }
  if (obj.contains("algorithm")) {
    std::string s;
    read_field(obj, "algorithm", s, origin);
    if (s == "partial")
      t.algorithm = TrainerConfig::Algorithm::kPartial;
    else if (s == "baseline")
      t.algorithm = TrainerConfig::Algorithm::kBaseline;
    else
      throw ConfigError(origin +
                        ": algorithm must be 'partial' or 'baseline'");
  }
}

json trainer_to_json(const std::string& env_name, const TrainerConfig& t) {
  json j;
  j["env"] = env_name;
  j["gamma"] = t.gamma;
  j["lambda"] = t.lambda;
  j["sample_length"] = t.sample_length;
  j["partial_coef"] = t.partial_coef;
  j["clip_coef"] = t.clip_coef;
  j["value_coef"] = t.value_coef;
  j["entropy_coef"] = t.entropy_coef;
  j["learning_rate"] = t.learning_rate;
  j["n_actors"] = t.n_actors;
  j["epochs"] = t.epochs;
  j["minibatch_size"] = t.minibatch_size;
  j["total_env_steps"] = t.total_env_steps;
  j["bootstrap_mode"] = bootstrap_name(t.bootstrap_mode);
  j["normalize_advantages"] = t.normalize_advantages;
  j["value_clip"] = t.value_clip;
  j["seed"] = t.seed;
  j["hidden_sizes"] = t.hidden_sizes;
  j["activation"] = t.activation == Activation::kTanh ? "tanh" : "relu";
  j["algorithm"] =
      t.algorithm == TrainerConfig::Algorithm::kPartial ? "partial"
                                                        : "baseline";
  j["checkpoint_every"] = t.checkpoint_every;
  return j;
}

TabularMDP parse_inline_mdp(const json& obj, const std::string& origin) {
  reject_unknown_keys(obj,
                      {"n_states", "n_actions", "transition", "reward",
                       "gamma", "terminal_states", "initial_distribution"},
                      origin, "mdp");
  TabularMDP m;
  read_field(obj, "n_states", m.n_states, origin);
  read_field(obj, "n_actions", m.n_actions, origin);
  read_field(obj, "gamma", m.gamma, origin);
  std::vector<std::vector<std::vector<double>>> trans;
  std::vector<std::vector<double>> rew;
  read_field(obj, "transition", trans, origin);
  read_field(obj, "reward", rew, origin);
  for (const auto& per_state : trans)
    for (const auto& row : per_state)
      m.transition.insert(m.transition.end(), row.begin(), row.end());
  for (const auto& row : rew)
    m.reward.insert(m.reward.end(), row.begin(), row.end());
  std::vector<int> terminals;
  read_field(obj, "terminal_states", terminals, origin);
  m.terminal.assign(static_cast<std::size_t>(std::max(0, m.n_states)), 0);
  for (int t : terminals) {
    if (t < 0 || t >= m.n_states)
      throw ConfigError(origin + ": terminal state " + std::to_string(t) +
                        " out of range");
    m.terminal[static_cast<std::size_t>(t)] = 1;
  }
  read_field(obj, "initial_distribution", m.initial_distribution, origin);
  try {
    m.validate();
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": invalid mdp: " + e.what());
  }
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& origin) {
  const json root = parse_json(json_text, origin);
  if (!root.is_object())
    throw ConfigError(origin + ": config root must be a JSON object");

  std::set<std::string> known = kTrainerKeys;
  known.insert("env");
  known.insert("sweep");
  reject_unknown_keys(root, known, origin, "config");

  ExperimentConfig cfg;
  read_field(root, "env", cfg.env_name, origin);
  read_trainer(root, cfg.trainer, origin);

  if (root.contains("sweep")) {
    const json& sweep = root.at("sweep");
    if (!sweep.is_object())
      throw ConfigError(origin + ": 'sweep' must be an object");
    reject_unknown_keys(sweep, {"sample_lengths", "partial_coefs", "n_seeds"},
                        origin, "sweep");
    read_field(sweep, "sample_lengths", cfg.sweep_sample_lengths, origin);
    read_field(sweep, "partial_coefs", cfg.sweep_partial_coefs, origin);
    read_field(sweep, "n_seeds", cfg.sweep_n_seeds, origin);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path), path);
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t trainer_config_hash(const std::string& env_name,
                                  const TrainerConfig& trainer) {
  return fnv1a64(trainer_to_json(env_name, trainer).dump());
}

std::uint64_t experiment_config_hash(const ExperimentConfig& config) {
  json j = trainer_to_json(config.env_name, config.trainer);
  j["sweep_sample_lengths"] = config.sweep_sample_lengths;
  j["sweep_partial_coefs"] = config.sweep_partial_coefs;
  j["sweep_n_seeds"] = config.sweep_n_seeds;
  return fnv1a64(j.dump());
}

ProfileConfig parse_profile_config(const std::string& json_text,
                                   const std::string& origin) {
  const json root = parse_json(json_text, origin);
  if (!root.is_object())
    throw ConfigError(origin + ": config root must be a JSON object");
  reject_unknown_keys(root,
                      {"mode", "mdp", "policy", "value", "experiment",
                       "checkpoint", "gamma", "lambda", "bootstrap_mode",
                       "sample_length", "rollouts", "seed"},
                      origin, "profile");

  ProfileConfig cfg;
  std::string mode = "tabular";
  read_field(root, "mode", mode, origin);
  if (mode == "tabular")
    cfg.mode = ProfileConfig::Mode::kTabular;
  else if (mode == "env")
    cfg.mode = ProfileConfig::Mode::kEnv;
  else
    throw ConfigError(origin + ": mode must be 'tabular' or 'env'");

  read_field(root, "gamma", cfg.gamma, origin);
  read_field(root, "lambda", cfg.lambda, origin);
  read_field(root, "sample_length", cfg.sample_length, origin);
  read_field(root, "rollouts", cfg.rollouts, origin);
  read_field(root, "seed", cfg.seed, origin);
  if (root.contains("bootstrap_mode")) {
    std::string s;
    read_field(root, "bootstrap_mode", s, origin);
    cfg.bootstrap_mode = parse_bootstrap(s, origin);
  }

  if (cfg.mode == ProfileConfig::Mode::kTabular) {
    if (!root.contains("mdp"))
      throw ConfigError(origin + ": tabular mode needs an 'mdp'");
    const json& mdp = root.at("mdp");
    if (mdp.is_string()) {
      try {
        cfg.mdp = builtin_mdp(mdp.get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(origin + ": " + e.what());
      }
    } else if (mdp.is_object()) {
      cfg.mdp = parse_inline_mdp(mdp, origin);
    } else {
      throw ConfigError(origin +
                        ": 'mdp' must be a builtin name or an object");
    }
    if (root.contains("policy")) {
      const json& pol = root.at("policy");
      if (pol.is_string()) {
        if (pol.get<std::string>() != "uniform")
          throw ConfigError(origin + ": policy string must be 'uniform'");
      } else {
        std::vector<std::vector<double>> rows;
        read_field(root, "policy", rows, origin);
        std::vector<double> flat;
        for (const auto& r : rows)
          flat.insert(flat.end(), r.begin(), r.end());
        cfg.policy_matrix = std::move(flat);
      }
    }
    if (root.contains("value")) {
      const json& val = root.at("value");
      if (val.is_string()) {
        const std::string s = val.get<std::string>();
        if (s == "exact")
          cfg.value_source = ProfileConfig::ValueSource::kExact;
        else if (s == "zero")
          cfg.value_source = ProfileConfig::ValueSource::kZero;
        else
          throw ConfigError(origin +
                            ": value must be 'exact', 'zero', or an array");
      } else {
        cfg.value_source = ProfileConfig::ValueSource::kVector;
        read_field(root, "value", cfg.value_vector, origin);
      }
    }
  } else {
    if (!root.contains("experiment"))
      throw ConfigError(origin + ": env mode needs an 'experiment' object");
    cfg.experiment =
        parse_experiment_config(root.at("experiment").dump(), origin);
    read_field(root, "checkpoint", cfg.checkpoint_path, origin);
  }
  return cfg;
}

ProfileConfig load_profile_config(const std::string& path) {
  return parse_profile_config(read_file(path), path);
}

std::uint64_t profile_config_hash(const ProfileConfig& config) {
  json j;
  j["mode"] = config.mode == ProfileConfig::Mode::kTabular ? "tabular" : "env";
  j["gamma"] = config.gamma;
  j["lambda"] = config.lambda;
  j["bootstrap_mode"] = bootstrap_name(config.bootstrap_mode);
  j["sample_length"] = config.sample_length;
  j["rollouts"] = config.rollouts;
  j["seed"] = config.seed;
  if (config.mdp) {
    j["mdp_states"] = config.mdp->n_states;
    j["mdp_reward"] = config.mdp->reward;
    j["mdp_transition"] = config.mdp->transition;
  }
  if (config.policy_matrix) j["policy"] = *config.policy_matrix;
  j["value_source"] = static_cast<int>(config.value_source);
  j["value_vector"] = config.value_vector;
  if (config.experiment)
    j["experiment_hash"] = experiment_config_hash(*config.experiment);
  j["checkpoint"] = config.checkpoint_path;
  return fnv1a64(j.dump());
}

}  // namespace advest

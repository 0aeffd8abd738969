#include "trainer/train_config.hpp"

#include <fstream>

#include "core/errors.hpp"
#include "encoders/encoders.hpp"

namespace topdown {

int64_t TrainConfig::effective_total_iterations() const {
  return total_iterations > 0 ? total_iterations : schedule.total_iterations();
}

int64_t TrainConfig::effective_checkpoint_every() const {
  return checkpoint_every > 0 ? checkpoint_every : std::max<int64_t>(1, schedule.iterations_per_scale / 2);
}

void TrainConfig::validate() const {
  encoder_kind_from_string(encoder);  // throws on bad name
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  schedule.validate();
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("adam betas must lie in [0,1)");
  if (lambda_gp < 0.0) throw ConfigError("lambda_gp must be >= 0");
  if (critic_steps < 1) throw ConfigError("critic_steps must be >= 1");
  if (total_iterations < 0) throw ConfigError("total_iterations must be >= 0");
}

TrainConfig profile_config(const std::string& name) {
  TrainConfig cfg;
  if (name == "paper") {
    cfg.schedule = ScaleSchedule{4, 64, 25000, 12500};
    cfg.checkpoint_every = 5000;
  } else if (name == "desk") {
    cfg.schedule = ScaleSchedule{4, 32, 500, 250};
    cfg.checkpoint_every = 125;
  } else {
    throw ConfigError("unknown profile: " + name + " (paper|desk)");
  }
  return cfg;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean value: " + v);
}

}  // namespace

void apply_key_value(TrainConfig* c, const std::string& key, const std::string& value) {
  try {
    if (key == "profile") {
      TrainConfig p = profile_config(value);
      c->schedule = p.schedule;
      c->checkpoint_every = p.checkpoint_every;
    } else if (key == "encoder") {
      c->encoder = value;
    } else if (key == "batch_size") {
      c->batch_size = std::stoi(value);
    } else if (key == "start_scale") {
      c->schedule.start_scale = std::stoi(value);
    } else if (key == "final_scale") {
      c->schedule.final_scale = std::stoi(value);
    } else if (key == "iterations_per_scale") {
      c->schedule.iterations_per_scale = std::stoll(value);
    } else if (key == "fade_iterations") {
      c->schedule.fade_iterations = std::stoll(value);
    } else if (key == "total_iterations") {
      c->total_iterations = std::stoll(value);
    } else if (key == "lr") {
      c->lr = std::stod(value);
    } else if (key == "beta1") {
      c->beta1 = std::stod(value);
    } else if (key == "beta2") {
      c->beta2 = std::stod(value);
    } else if (key == "adam_eps") {
      c->adam_eps = std::stod(value);
    } else if (key == "lambda_gp") {
      c->lambda_gp = std::stod(value);
    } else if (key == "drift_epsilon") {
      c->drift_epsilon = std::stod(value);
    } else if (key == "use_drift") {
      c->use_drift = parse_bool(value);
    } else if (key == "critic_steps") {
      c->critic_steps = std::stoi(value);
    } else if (key == "seed") {
      c->seed = std::stoull(value);
    } else if (key == "data") {
      c->data_root = value;
    } else if (key == "out") {
      c->out_dir = value;
    } else if (key == "checkpoint_every") {
      c->checkpoint_every = std::stoll(value);
    } else if (key == "deterministic") {
      c->deterministic = parse_bool(value);
    } else if (key == "resume") {
      c->resume = value;
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad value for " + key + ": " + value);
  } catch (const std::out_of_range&) {
    throw ConfigError("value out of range for " + key + ": " + value);
  }
}

std::map<std::string, std::string> config_as_map(const TrainConfig& c) {
  std::map<std::string, std::string> m;
  m["encoder"] = c.encoder;
  m["batch_size"] = std::to_string(c.batch_size);
  m["start_scale"] = std::to_string(c.schedule.start_scale);
  m["final_scale"] = std::to_string(c.schedule.final_scale);
  m["iterations_per_scale"] = std::to_string(c.schedule.iterations_per_scale);
  m["fade_iterations"] = std::to_string(c.schedule.fade_iterations);
  m["total_iterations"] = std::to_string(c.effective_total_iterations());
  m["lr"] = std::to_string(c.lr);
  m["beta1"] = std::to_string(c.beta1);
  m["beta2"] = std::to_string(c.beta2);
  m["adam_eps"] = std::to_string(c.adam_eps);
  m["lambda_gp"] = std::to_string(c.lambda_gp);
  m["drift_epsilon"] = std::to_string(c.drift_epsilon);
  m["use_drift"] = c.use_drift ? "true" : "false";
  m["critic_steps"] = std::to_string(c.critic_steps);
  m["seed"] = std::to_string(c.seed);
  m["data"] = c.data_root;
  m["out"] = c.out_dir;
  m["checkpoint_every"] = std::to_string(c.effective_checkpoint_every());
  m["deterministic"] = c.deterministic ? "true" : "false";
  if (!c.resume.empty()) m["resume"] = c.resume;
  return m;
}

}  // namespace topdown

#include "sortpress/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace sortpress {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& text, std::size_t n) {
  const auto items = split_list(text);
  if (items.size() != n) {
    throw ConfigError("config key '" + key + "': expected " + std::to_string(n) +
                      " comma-separated numbers, got '" + text + "'");
  }
  std::vector<double> out;
  for (const auto& item : items) out.push_back(parse_double(key, item));
  return out;
}

template <typename Range>
std::string join(const Range& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      out += shortest(v);
    } else {
      out += std::to_string(v);
    }
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

using Setter = std::function<void(Settings&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto fixed = [](int expected) {
      return [expected](Settings&, const std::string& k, const std::string& v) {
        if (parse_int(k, v) != expected) {
          throw ConfigError("config key '" + k + "' is fixed at " + std::to_string(expected));
        }
      };
    };
    t["n_materials"] = fixed(kNumMaterials);
    t["n_containers"] = fixed(kNumContainers);
    t["n_presses"] = fixed(kNumPresses);
    t["belt_delay_steps"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.belt_delay_steps = static_cast<int>(parse_int(k, v));
    };
    t["belt_capacity"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.belt_capacity = parse_double(k, v);
    };
    t["container_capacity"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.container_capacity = parse_double(k, v);
    };
    t["bale_size"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.bale_size = parse_double(k, v);
    };
    t["purity_thresholds"] = [](Settings& s, const std::string& k, const std::string& v) {
      const auto xs = parse_list(k, v, kNumContainers);
      std::copy(xs.begin(), xs.end(), s.env.purity_thresholds.begin());
    };
    t["accuracy_table"] = [](Settings& s, const std::string& k, const std::string& v) {
      const auto xs = parse_list(k, v, 2 * kNumModes);
      s.env.accuracy_table = {Accuracies{xs[0], xs[1]}, Accuracies{xs[2], xs[3]}};
    };
    t["accuracy_noise_sigma"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.accuracy_noise_sigma = parse_double(k, v);
    };
    t["input_volume_range"] = [](Settings& s, const std::string& k, const std::string& v) {
      const auto xs = parse_list(k, v, 2);
      s.env.input_volume_range = {xs[0], xs[1]};
    };
    t["press_time_base"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.press_time_base = parse_double(k, v);
    };
    t["press_time_per_bale"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.press_time_per_bale = parse_double(k, v);
    };
    t["episode_length"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.episode_length = static_cast<int>(parse_int(k, v));
    };
    t["reward_alpha"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.rewards.alpha = parse_double(k, v);
    };
    t["reward_fill_weight"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.rewards.fill_weight = parse_double(k, v);
    };
    t["reward_bale_bonus"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.env.rewards.bale_bonus = parse_double(k, v);
    };

    t["total_timesteps"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.total_timesteps = parse_int(k, v);
    };
    t["rollout_horizon"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.rollout_horizon = static_cast<int>(parse_int(k, v));
    };
    t["minibatch_size"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.minibatch_size = static_cast<int>(parse_int(k, v));
    };
    t["epochs"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.epochs = static_cast<int>(parse_int(k, v));
    };
    t["gamma"] = [](Settings& s, const std::string& k, const std::string& v) { s.train.gamma = parse_double(k, v); };
    t["gae_lambda"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.gae_lambda = parse_double(k, v);
    };
    t["clip_range"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.clip_range = parse_double(k, v);
    };
    t["learning_rate"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.learning_rate = parse_double(k, v);
    };
    t["ent_coef"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.ent_coef = parse_double(k, v);
    };
    t["vf_coef"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.vf_coef = parse_double(k, v);
    };
    t["max_grad_norm"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.train.max_grad_norm = parse_double(k, v);
    };
    t["seed"] = [](Settings& s, const std::string& k, const std::string& v) {
      const auto seed = parse_int(k, v);
      if (seed < 0) throw ConfigError("config key 'seed' must be nonnegative");
      s.train.seed = static_cast<std::uint64_t>(seed);
    };
    t["masked"] = [](Settings& s, const std::string& k, const std::string& v) { s.train.masked = parse_bool(k, v); };

    t["eval_seeds"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.bench.eval_seeds.clear();
      for (const auto& item : split_list(v)) {
        const auto seed = parse_int(k, item);
        if (seed < 0) throw ConfigError("config key 'eval_seeds' must hold nonnegative seeds");
        s.bench.eval_seeds.push_back(static_cast<std::uint64_t>(seed));
      }
    };
    t["rule_min_fill"] = [](Settings& s, const std::string& k, const std::string& v) {
      s.bench.rule_min_fill = parse_double(k, v);
    };
    return t;
  }();
  return table;
}

}  // namespace

void EnvConfig::validate() const {
  require(belt_delay_steps >= 1, "belt_delay_steps must be >= 1");
  require(belt_capacity > 0.0, "belt_capacity must be > 0");
  require(container_capacity > 0.0, "container_capacity must be > 0");
  require(bale_size > 0.0, "bale_size must be > 0");
  require(bale_size <= container_capacity, "bale_size must be <= container_capacity");
  for (double theta : purity_thresholds) {
    require(theta > 0.0 && theta < 1.0, "purity_thresholds must lie in (0, 1)");
  }
  for (const auto& row : accuracy_table) {
    require(row.group_a > 0.0 && row.group_a <= 1.0 && row.group_b > 0.0 && row.group_b <= 1.0,
            "accuracy_table entries must lie in (0, 1]");
  }
  require(accuracy_noise_sigma >= 0.0, "accuracy_noise_sigma must be >= 0");
  require(input_volume_range[0] >= 0.0, "input_volume_range lower bound must be >= 0");
  require(input_volume_range[0] <= input_volume_range[1], "input_volume_range must satisfy lo <= hi");
  require(press_time_base >= 0.0, "press_time_base must be >= 0");
  require(press_time_per_bale >= 0.0, "press_time_per_bale must be >= 0");
  require(episode_length > 0, "episode_length must be > 0");
  require(rewards.alpha > 0.0, "reward_alpha must be > 0");
  require(rewards.fill_weight >= 0.0, "reward_fill_weight must be >= 0");
  require(rewards.bale_bonus >= 0.0, "reward_bale_bonus must be >= 0");
}

void TrainConfig::validate() const {
  require(rollout_horizon > 0, "rollout_horizon must be > 0");
  require(total_timesteps >= rollout_horizon, "total_timesteps must be >= rollout_horizon");
  require(minibatch_size > 0 && minibatch_size <= rollout_horizon, "minibatch_size must lie in [1, rollout_horizon]");
  require(epochs > 0, "epochs must be > 0");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(gae_lambda > 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in (0, 1]");
  require(clip_range > 0.0, "clip_range must be > 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(ent_coef >= 0.0, "ent_coef must be >= 0");
  require(vf_coef >= 0.0, "vf_coef must be >= 0");
  require(max_grad_norm > 0.0, "max_grad_norm must be > 0");
}

void BenchConfig::validate() const {
  require(!eval_seeds.empty(), "eval_seeds must hold at least one seed");
  require(rule_min_fill >= 0.0, "rule_min_fill must be >= 0");
}

bool is_known_key(const std::string& key) { return setters().contains(key); }

void apply_setting(Settings& settings, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(settings, key, value);
}

void apply_settings_text(Settings& settings, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      apply_setting(settings, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  Settings settings;
  apply_settings_text(settings, buffer.str(), path.string());
  return settings;
}

std::vector<std::pair<std::string, std::string>> to_key_values(const EnvConfig& c) {
  const auto& acc = c.accuracy_table;
  return {
      {"n_materials", std::to_string(kNumMaterials)},
      {"n_containers", std::to_string(kNumContainers)},
      {"n_presses", std::to_string(kNumPresses)},
      {"belt_delay_steps", std::to_string(c.belt_delay_steps)},
      {"belt_capacity", shortest(c.belt_capacity)},
      {"container_capacity", shortest(c.container_capacity)},
      {"bale_size", shortest(c.bale_size)},
      {"purity_thresholds", join(c.purity_thresholds)},
      {"accuracy_table", join(std::array{acc[0].group_a, acc[0].group_b, acc[1].group_a, acc[1].group_b})},
      {"accuracy_noise_sigma", shortest(c.accuracy_noise_sigma)},
      {"input_volume_range", join(c.input_volume_range)},
      {"press_time_base", shortest(c.press_time_base)},
      {"press_time_per_bale", shortest(c.press_time_per_bale)},
      {"episode_length", std::to_string(c.episode_length)},
      {"reward_alpha", shortest(c.rewards.alpha)},
      {"reward_fill_weight", shortest(c.rewards.fill_weight)},
      {"reward_bale_bonus", shortest(c.rewards.bale_bonus)},
  };
}

std::vector<std::pair<std::string, std::string>> to_key_values(const Settings& s) {
  auto kv = to_key_values(s.env);
  const auto& t = s.train;
  kv.insert(kv.end(), {
                          {"total_timesteps", std::to_string(t.total_timesteps)},
                          {"rollout_horizon", std::to_string(t.rollout_horizon)},
                          {"minibatch_size", std::to_string(t.minibatch_size)},
                          {"epochs", std::to_string(t.epochs)},
                          {"gamma", shortest(t.gamma)},
                          {"gae_lambda", shortest(t.gae_lambda)},
                          {"clip_range", shortest(t.clip_range)},
                          {"learning_rate", shortest(t.learning_rate)},
                          {"ent_coef", shortest(t.ent_coef)},
                          {"vf_coef", shortest(t.vf_coef)},
                          {"max_grad_norm", shortest(t.max_grad_norm)},
                          {"seed", std::to_string(t.seed)},
                          {"masked", t.masked ? "true" : "false"},
                          {"eval_seeds", join(s.bench.eval_seeds)},
                          {"rule_min_fill", shortest(s.bench.rule_min_fill)},
                      });
  return kv;
}

std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace sortpress

#include "sortpress/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "sortpress/policies.hpp"

namespace sortpress {
namespace {

using nlohmann::json;

// Nine significant digits, the trace precision.
double sig9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

json rounded(const MaterialVector& m) {
  json out = json::array();
  for (int i = 0; i < kNumMaterials; ++i) out.push_back(sig9(m[i]));
  return out;
}

std::string outcome_name(const PressOutcome& o) {
  switch (o.kind) {
    case PressOutcome::Kind::NoOp:
      return "noop";
    case PressOutcome::Kind::Ignored:
      return "ignored";
    case PressOutcome::Kind::Executed:
      return "executed";
  }
  return "unknown";
}

json presses_json(const EnvState& s) {
  json out = json::array();
  for (const auto& p : s.presses) {
    out.push_back({{"status", p.idle() ? "idle" : "busy"}, {"remaining", p.remaining}});
  }
  return out;
}

json bale_json(const Bale& b) {
  return {{"press", b.press_id},
          {"material", b.material},
          {"size_bales", sig9(b.size_bales)},
          {"purity", sig9(b.purity)},
          {"created_at", b.created_at}};
}

std::vector<Bale> bale_log(const EnvState& s) {
  std::vector<Bale> bales;
  for (const auto& p : s.presses) bales.insert(bales.end(), p.history.begin(), p.history.end());
  std::stable_sort(bales.begin(), bales.end(), [](const Bale& a, const Bale& b) {
    return std::tie(a.created_at, a.press_id) < std::tie(b.created_at, b.press_id);
  });
  return bales;
}

struct Cumulative {
  double sort = 0.0;
  double press = 0.0;
  double total = 0.0;
};

json step_json(const Environment& env, const StepOutputs& out, const Cumulative& cum) {
  const EnvState& s = env.state();
  const Transition& t = out.transition;
  json containers = json::array();
  for (const auto& c : s.containers) containers.push_back({{"fill", sig9(c.fill())}, {"purity", sig9(purity(c))}});
  json observation = json::array();
  for (double v : out.observation) observation.push_back(sig9(v));
  json mask = json::array();
  for (bool b : out.pressing_mask) mask.push_back(b);
  return {
      {"step", s.step - 1},
      {"input", rounded(t.input)},
      {"belt_mass", sig9(s.belt_mass())},
      {"machine_mass", sig9(s.machine.last_batch.sum())},
      {"mode", s.machine.mode},
      {"accuracies", {sig9(s.machine.accuracies.group_a), sig9(s.machine.accuracies.group_b)}},
      {"containers", containers},
      {"presses", presses_json(s)},
      {"action",
       {{"index", encode_monolithic_action(t.action)},
        {"mode", t.action.mode},
        {"press_action", encode_pressing_action(t.action.press)}}},
      {"outcome", outcome_name(t.outcome)},
      {"bales", sig9(t.outcome.bales)},
      {"overflow", sig9(t.overflow)},
      {"rewards",
       {{"r_sort", sig9(t.reward.sort)},
        {"r_press_state", sig9(t.reward.press_state)},
        {"r_press_action", sig9(t.reward.press_action)},
        {"r_press", sig9(t.reward.press)},
        {"r_total", sig9(t.reward.total)}}},
      {"cumulative", {{"r_sort", sig9(cum.sort)}, {"r_press", sig9(cum.press)}, {"r_total", sig9(cum.total)}}},
      {"observation", observation},
      {"mask", mask},
  };
}

json summary_json(const Environment& env, const std::string& policy, Masking masking, const Cumulative& cum) {
  const EnvState& s = env.state();
  json containers = json::array();
  for (const auto& c : s.containers) {
    containers.push_back({{"contents", rounded(c.contents)}, {"fill", sig9(c.fill())}, {"purity", sig9(purity(c))}});
  }
  json bales = json::array();
  for (const auto& b : bale_log(s)) bales.push_back(bale_json(b));
  json config = json::object();
  for (const auto& [k, v] : to_key_values(env.config())) config[k] = v;
  return {
      {"summary", true},
      {"policy", policy},
      {"masking", to_string(masking)},
      {"seed", env.seed()},
      {"steps", s.step},
      {"config", config},
      {"containers", containers},
      {"presses", presses_json(s)},
      {"bales", bales},
      {"cumulative", {{"r_sort", sig9(cum.sort)}, {"r_press", sig9(cum.press)}, {"r_total", sig9(cum.total)}}},
      {"ignored_actions", s.ignored_actions},
      {"mass",
       {{"input_total", sig9(s.input_total)},
        {"belt", sig9(s.belt_mass())},
        {"containers", sig9(s.container_mass())},
        {"pressed_total", sig9(s.pressed_total)},
        {"overflow_lost", sig9(s.overflow_lost)}}},
  };
}

EpisodeController network_controller(const PolicyArtifact* sorter, const PolicyArtifact* presser,
                                     const PolicyArtifact* mono, bool masked, double rule_min_fill) {
  return [=](const Environment& env) {
    const EnvState& s = env.state();
    const EnvConfig& c = env.config();
    if (mono != nullptr) {
      const ActionMask mask = monolithic_action_mask(s);
      return decode_monolithic_action(mono->greedy_action(monolithic_observation(s, c), masked ? &mask : nullptr));
    }
    PlantAction action;
    action.mode = sorter != nullptr ? sorter->greedy_action(sorting_observation(s, c)) : rule_based_sorting(s);
    if (presser != nullptr) {
      const ActionMask mask = pressing_action_mask(s);
      action.press = decode_pressing_action(presser->greedy_action(pressing_observation(s, c), masked ? &mask : nullptr));
    } else {
      action.press = rule_based_pressing(s, rule_min_fill);
    }
    return action;
  };
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string file_safe(std::string name) {
  std::replace(name.begin(), name.end(), '+', '_');
  return name;
}

}  // namespace

std::string to_string(Masking masking) { return masking == Masking::Masked ? "masked" : "unmasked"; }

const std::vector<std::string>& benchmark_policy_names() {
  static const std::vector<std::string> names{"random", "rule", "ppo-sort+rule-press", "ppo-sort+ppo-press",
                                              "ppo-mono"};
  return names;
}

BenchPolicy make_bench_policy(const std::string& name, Masking masking, const CheckpointSet& checkpoints,
                              double rule_min_fill) {
  const bool masked = masking == Masking::Masked;
  BenchPolicy policy{name, masking, {}};
  const auto need = [&](const std::optional<PolicyArtifact>& a, AgentKind kind) {
    if (!a) {
      throw ConfigError("policy '" + name + "' needs a " + std::string(to_string(kind)) + " checkpoint (" +
                        to_string(masking) + ")");
    }
    if (a->kind != kind) throw ConfigError("policy '" + name + "': checkpoint has the wrong agent kind");
  };
  if (name == "random") {
    policy.make = [masked](std::uint64_t seed) -> EpisodeController {
      auto random = std::make_shared<RandomPolicy>(agent_spec(AgentKind::Monolithic), splitmix64(seed ^ 0x52414e44ull));
      return [random, masked](const Environment& env) {
        const ActionMask mask = env.mask(AgentKind::Monolithic);
        return decode_monolithic_action(random->act(Eigen::VectorXd(), masked ? &mask : nullptr));
      };
    };
  } else if (name == "rule") {
    policy.make = [rule_min_fill](std::uint64_t) -> EpisodeController {
      return [rule_min_fill](const Environment& env) {
        return PlantAction{rule_based_sorting(env.state()), rule_based_pressing(env.state(), rule_min_fill)};
      };
    };
  } else if (name == "ppo-sort+rule-press" || name == "ppo-sort+ppo-press" || name == "ppo-mono") {
    std::shared_ptr<const PolicyArtifact> sorter, presser, mono;
    if (name == "ppo-mono") {
      need(checkpoints.monolithic, AgentKind::Monolithic);
      mono = std::make_shared<const PolicyArtifact>(*checkpoints.monolithic);
    } else {
      need(checkpoints.sorting, AgentKind::Sorting);
      sorter = std::make_shared<const PolicyArtifact>(*checkpoints.sorting);
      if (name == "ppo-sort+ppo-press") {
        need(checkpoints.pressing, AgentKind::Pressing);
        presser = std::make_shared<const PolicyArtifact>(*checkpoints.pressing);
      }
    }
    policy.make = [=](std::uint64_t) -> EpisodeController {
      auto controller = network_controller(sorter.get(), presser.get(), mono.get(), masked, rule_min_fill);
      // keep the artifacts alive alongside the raw pointers
      return [controller, sorter, presser, mono](const Environment& env) { return controller(env); };
    };
  } else {
    throw ConfigError("unknown policy '" + name +
                      "' (expected random|rule|ppo-sort+rule-press|ppo-sort+ppo-press|ppo-mono)");
  }
  return policy;
}

EpisodeRun run_episode(const EnvConfig& config, const std::string& policy_name, Masking masking,
                       const EpisodeController& controller, std::uint64_t seed, bool keep_trace) {
  Environment env(config);
  env.reset(seed);
  EpisodeRun run;
  Cumulative cum;
  while (!env.finished()) {
    const StepOutputs out = env.step(controller(env));
    const RewardBreakdown& r = out.transition.reward;
    cum.sort += r.sort;
    cum.press += r.press;
    cum.total += r.total;
    if (keep_trace) run.trace.push_back(step_json(env, out, cum).dump());
  }
  if (keep_trace) run.trace.push_back(summary_json(env, policy_name, masking, cum).dump());
  auto& rec = run.record;
  rec.policy = policy_name;
  rec.masking = masking;
  rec.seed = seed;
  rec.episode_length = env.state().step;
  rec.r_sort = cum.sort;
  rec.r_press = cum.press;
  rec.r_total = cum.total;
  rec.bales = bale_log(env.state());
  rec.invalid_actions = env.state().ignored_actions;
  return run;
}

std::vector<SummaryRow> summarize(const std::vector<EpisodeRecord>& records) {
  std::vector<SummaryRow> rows;
  std::map<std::pair<std::string, Masking>, std::vector<const EpisodeRecord*>> groups;
  std::vector<std::pair<std::string, Masking>> order;
  for (const auto& r : records) {
    auto key = std::make_pair(r.policy, r.masking);
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  for (const auto& key : order) {
    const auto& group = groups[key];
    SummaryRow row{key.first, key.second};
    row.n = static_cast<int>(group.size());
    for (const auto* r : group) {
      row.mean += r->r_total;
      row.mean_sort += r->r_sort;
      row.mean_press += r->r_press;
    }
    row.mean /= row.n;
    row.mean_sort /= row.n;
    row.mean_press /= row.n;
    if (row.n > 1) {
      double ss = 0.0;
      for (const auto* r : group) ss += (r->r_total - row.mean) * (r->r_total - row.mean);
      row.stdev = std::sqrt(ss / (row.n - 1));
    }
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    return std::tie(a.masking, a.policy) < std::tie(b.masking, b.policy);
  });
  return rows;
}

EvaluationResult evaluate(const EnvConfig& config, const std::vector<BenchPolicy>& policies,
                          const std::vector<std::uint64_t>& seeds, int jobs,
                          const std::optional<std::filesystem::path>& trace_dir) {
  if (seeds.empty()) throw ConfigError("evaluate needs at least one seed");
  config.validate();
  const std::size_t total = policies.size() * seeds.size();
  std::vector<EpisodeRecord> records(total);
  std::vector<std::string> errors(total);
  std::atomic<std::size_t> next{0};

  const auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const BenchPolicy& policy = policies[i / seeds.size()];
      const std::uint64_t seed = seeds[i % seeds.size()];
      try {
        EpisodeRun run = run_episode(config, policy.name, policy.masking, policy.make(seed), seed, trace_dir.has_value());
        if (trace_dir) {
          write_lines(*trace_dir / to_string(policy.masking) / (file_safe(policy.name) + "_" + std::to_string(seed) + ".jsonl"),
                      run.trace);
        }
        records[i] = std::move(run.record);
      } catch (const std::exception& e) {
        errors[i] = policy.name + " seed " + std::to_string(seed) + ": " + e.what();
      }
    }
  };
  const int workers = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(total, 1)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("evaluation failed: " + e);
  }
  return {summarize(records), std::move(records)};
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, AgentKind kind, Masking masking) {
  return dir / (std::string(to_string(kind)) + "_" + to_string(masking) + ".ckpt");
}

CheckpointSet load_checkpoint_set(const std::filesystem::path& dir, Masking masking) {
  CheckpointSet set;
  const auto load = [&](AgentKind kind, std::optional<PolicyArtifact>& slot) {
    const auto path = checkpoint_path(dir, kind, masking);
    if (std::filesystem::exists(path)) slot = load_checkpoint(path);
  };
  load(AgentKind::Sorting, set.sorting);
  load(AgentKind::Pressing, set.pressing);
  load(AgentKind::Monolithic, set.monolithic);
  return set;
}

nlohmann::json BenchmarkReport::to_json(const Settings& settings) const {
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"policy", r.policy},
                    {"masking", to_string(r.masking)},
                    {"mean", r.mean},
                    {"stdev", r.stdev},
                    {"n", r.n},
                    {"mean_r_sort", r.mean_sort},
                    {"mean_r_press", r.mean_press}});
  }
  json records = json::array();
  for (const auto& r : result.records) {
    json bales = json::array();
    for (const auto& b : r.bales) bales.push_back(bale_json(b));
    records.push_back({{"policy", r.policy},
                       {"masking", to_string(r.masking)},
                       {"seed", r.seed},
                       {"episode_length", r.episode_length},
                       {"r_sort", r.r_sort},
                       {"r_press", r.r_press},
                       {"r_total", r.r_total},
                       {"invalid_actions", r.invalid_actions},
                       {"bales", bales}});
  }
  json config = json::object();
  for (const auto& [k, v] : to_key_values(settings)) config[k] = v;
  return {{"partial", partial()}, {"skipped", skipped}, {"config", config}, {"rows", rows}, {"records", records}};
}

std::string BenchmarkReport::to_csv() const {
  std::string out = "policy,masking,mean,stdev,n\n";
  char line[256];
  for (const auto& r : result.rows) {
    std::snprintf(line, sizeof(line), "%s,%s,%.17g,%.17g,%d\n", r.policy.c_str(), to_string(r.masking).c_str(),
                  r.mean, r.stdev, r.n);
    out += line;
  }
  return out;
}

BenchmarkReport run_benchmark(const Settings& settings, const std::filesystem::path& checkpoint_dir,
                              const std::filesystem::path& out_dir, const std::vector<Masking>& conditions,
                              int jobs) {
  settings.validate();
  BenchmarkReport report;
  std::vector<BenchPolicy> policies;
  for (Masking masking : conditions) {
    const CheckpointSet checkpoints = load_checkpoint_set(checkpoint_dir, masking);
    for (const auto& name : benchmark_policy_names()) {
      try {
        policies.push_back(make_bench_policy(name, masking, checkpoints, settings.bench.rule_min_fill));
      } catch (const ConfigError& e) {
        report.skipped.push_back(name + " (" + to_string(masking) + "): " + e.what());
      }
    }
  }
  report.result = evaluate(settings.env, policies, settings.bench.eval_seeds, jobs, out_dir / "traces");
  write_text(out_dir / "report.json", report.to_json(settings).dump(2) + "\n");
  write_text(out_dir / "report.csv", report.to_csv());
  return report;
}

ReplayResult replay_trace_lines(const std::vector<std::string>& lines) {
  ReplayResult result;
  if (lines.empty()) throw std::runtime_error("trace is empty");
  const json summary = json::parse(lines.back());
  if (!summary.value("summary", false)) throw std::runtime_error("trace has no summary record");

  Settings settings;
  for (const auto& [key, value] : summary.at("config").items()) apply_setting(settings, key, value.get<std::string>());
  const auto seed = summary.at("seed").get<std::uint64_t>();
  const auto masking = summary.at("masking").get<std::string>() == "masked" ? Masking::Masked : Masking::Unmasked;

  std::vector<PlantAction> actions;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    actions.push_back(decode_monolithic_action(json::parse(lines[i]).at("action").at("index").get<int>()));
  }
  if (static_cast<int>(actions.size()) != settings.env.episode_length) {
    result.lines = lines.size();
    result.first_mismatch = lines.size();
    result.detail = "trace holds " + std::to_string(actions.size()) + " steps, config says " +
                    std::to_string(settings.env.episode_length);
    return result;
  }
  std::size_t cursor = 0;
  const EpisodeController scripted = [&](const Environment&) { return actions.at(cursor++); };
  const EpisodeRun run =
      run_episode(settings.env, summary.at("policy").get<std::string>(), masking, scripted, seed, true);

  const std::vector<std::string>& regenerated = run.trace;
  result.lines = lines.size();
  if (regenerated.size() != lines.size()) {
    result.detail = "line count differs: " + std::to_string(regenerated.size()) + " vs " + std::to_string(lines.size());
    result.first_mismatch = std::min(regenerated.size(), lines.size()) + 1;
    return result;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (regenerated[i] != lines[i]) {
      result.first_mismatch = i + 1;
      result.detail = "line " + std::to_string(i + 1) + " differs";
      return result;
    }
  }
  result.identical = true;
  return result;
}

ReplayResult replay_trace(const std::filesystem::path& trace_file) {
  std::ifstream in(trace_file);
  if (!in) throw std::runtime_error("cannot open trace '" + trace_file.string() + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return replay_trace_lines(lines);
}

}  // namespace sortpress

#include "sortpress/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sortpress/bench.hpp"
#include "sortpress/train.hpp"

namespace sortpress {
namespace {

namespace fs = std::filesystem;

/// Usage-level problems (bad flags, bad combinations); exit 64.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool masked = false;
  bool unmasked = false;
  std::string agent = "sorting";
  std::vector<std::string> policies;
  std::optional<std::int64_t> steps;
  std::string checkpoints;
  std::string sorter;
  int jobs = 0;
  std::string trace_file;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return s.str();
}

Settings resolve_settings(const Options& o) {
  Settings settings = o.config_path.empty() ? Settings{} : load_settings(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    apply_setting(settings, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) settings.train.seed = *o.seed;
  if (o.masked) settings.train.masked = true;
  settings.validate();
  return settings;
}

fs::path out_dir(const Options& o) { return o.out.empty() ? fs::path("runs") / timestamp() : fs::path(o.out); }

int jobs_of(const Options& o) {
  if (o.jobs > 0) return o.jobs;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Masking masking_of(const Settings& s) { return s.train.masked ? Masking::Masked : Masking::Unmasked; }

void print_settings(std::ostream& out, const Settings& settings) {
  out << "# resolved config\n" << format_key_values(to_key_values(settings));
}

int cmd_simulate(const Options& o, Settings settings, std::ostream& out) {
  if (o.steps) settings.env.episode_length = static_cast<int>(*o.steps);
  settings.validate();
  print_settings(out, settings);
  const std::string name = o.policies.empty() ? "rule" : o.policies.front();
  const fs::path dir = out_dir(o);
  const fs::path ckpt_dir = o.checkpoints.empty() ? dir : fs::path(o.checkpoints);
  const Masking masking = masking_of(settings);
  const BenchPolicy policy = make_bench_policy(name, masking, load_checkpoint_set(ckpt_dir, masking),
                                               settings.bench.rule_min_fill);
  const std::uint64_t seed = settings.train.seed;
  const EpisodeRun run = run_episode(settings.env, policy.name, masking, policy.make(seed), seed, true);
  std::string file = name + "_" + std::to_string(seed) + ".jsonl";
  std::replace(file.begin(), file.end(), '+', '_');
  const fs::path path = dir / file;
  fs::create_directories(dir);
  std::ofstream trace(path);
  if (!trace) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& line : run.trace) trace << line << '\n';
  out << "simulate: policy=" << name << " seed=" << seed << " steps=" << run.record.episode_length
      << " r_total=" << run.record.r_total << " bales=" << run.record.bales.size()
      << " ignored=" << run.record.invalid_actions << "\ntrace: " << path.string() << "\n";
  return kExitOk;
}

void save_training(const TrainResult& result, const fs::path& dir, AgentKind kind, Masking masking,
                   std::ostream& out) {
  const fs::path ckpt = checkpoint_path(dir, kind, masking);
  fs::path curve = ckpt;
  curve.replace_filename(ckpt.stem().string() + "_curve.csv");
  save_checkpoint(result.artifact, ckpt);
  write_curve_csv(result.curve, curve);
  const auto& last = result.curve.back();
  out << "train: agent=" << to_string(kind) << " masking=" << to_string(masking)
      << " timesteps=" << result.artifact.timesteps << " updates=" << result.curve.size()
      << " last_mean_episode_reward=" << last.mean_episode_reward << " ignored=" << result.ignored_actions
      << " checksum=" << std::hex << weight_checksum(result.artifact.network) << std::dec << "\n"
      << "checkpoint: " << ckpt.string() << "\ncurve: " << curve.string() << "\n";
}

int cmd_train(const Options& o, Settings settings, std::ostream& out) {
  if (o.steps) settings.train.total_timesteps = *o.steps;
  settings.validate();
  print_settings(out, settings);
  const fs::path dir = out_dir(o);
  const Masking masking = masking_of(settings);
  const auto log = [&out](const UpdateStats& s) {
    out << "  update " << s.update << " timesteps=" << s.timesteps << " mean_episode_reward=" << s.mean_episode_reward
        << " policy_loss=" << s.policy_loss << " value_loss=" << s.value_loss << " kl=" << s.approx_kl
        << " clip=" << s.clip_fraction << "\n";
  };

  std::optional<PolicyArtifact> sorter;
  const auto want = [&](const std::string& a) { return o.agent == a || o.agent == "all"; };
  if (o.agent != "all") parse_agent_kind(o.agent);
  if (want("sorting")) {
    const TrainResult r = train_sorting(settings.env, settings.train, log);
    save_training(r, dir, AgentKind::Sorting, masking, out);
    sorter = r.artifact;
  }
  if (want("pressing")) {
    if (!sorter) {
      const fs::path path = o.sorter.empty() ? checkpoint_path(dir, AgentKind::Sorting, masking) : fs::path(o.sorter);
      if (!fs::exists(path)) {
        throw UsageError("pressing training needs a frozen sorting checkpoint: '" + path.string() +
                         "' not found (train --agent sorting first or pass --sorter)");
      }
      sorter = load_checkpoint(path);
    }
    const TrainResult r = train_pressing(settings.env, settings.train, *sorter, log);
    save_training(r, dir, AgentKind::Pressing, masking, out);
  }
  if (want("monolithic")) {
    const TrainResult r = train_monolithic(settings.env, settings.train, log);
    save_training(r, dir, AgentKind::Monolithic, masking, out);
  }
  return kExitOk;
}

void print_rows(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << std::left << std::setw(22) << "policy" << std::setw(10) << "masking" << std::right << std::setw(12) << "mean"
      << std::setw(12) << "stdev" << std::setw(5) << "n" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(22) << r.policy << std::setw(10) << to_string(r.masking) << std::right << std::fixed
        << std::setprecision(3) << std::setw(12) << r.mean << std::setw(12) << r.stdev << std::setw(5) << r.n << "\n";
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
  }
}

std::vector<Masking> conditions_of(const Options& o) {
  if (o.masked && o.unmasked) throw UsageError("--masked and --unmasked are exclusive");
  if (o.masked) return {Masking::Masked};
  if (o.unmasked) return {Masking::Unmasked};
  return {Masking::Unmasked, Masking::Masked};
}

int cmd_evaluate(const Options& o, const Settings& settings, std::ostream& out) {
  print_settings(out, settings);
  const fs::path dir = out_dir(o);
  const fs::path ckpt_dir = o.checkpoints.empty() ? dir : fs::path(o.checkpoints);
  const Masking masking = masking_of(settings);
  const CheckpointSet checkpoints = load_checkpoint_set(ckpt_dir, masking);
  const auto& names = o.policies.empty() ? benchmark_policy_names() : o.policies;
  std::vector<BenchPolicy> policies;
  for (const auto& name : names) {
    policies.push_back(make_bench_policy(name, masking, checkpoints, settings.bench.rule_min_fill));
  }
  const EvaluationResult result = evaluate(settings.env, policies, settings.bench.eval_seeds, jobs_of(o));
  print_rows(out, result.rows);
  BenchmarkReport report{result, {}};
  fs::create_directories(dir);
  const fs::path csv = dir / "evaluation.csv";
  std::ofstream(csv) << report.to_csv();
  out << "evaluate: " << result.rows.size() << " policies x " << settings.bench.eval_seeds.size()
      << " seeds\nreport: " << csv.string() << "\n";
  return kExitOk;
}

int cmd_benchmark(const Options& o, const Settings& settings, std::ostream& out) {
  print_settings(out, settings);
  const fs::path dir = out_dir(o);
  const fs::path ckpt_dir = o.checkpoints.empty() ? dir : fs::path(o.checkpoints);
  const BenchmarkReport report = run_benchmark(settings, ckpt_dir, dir, conditions_of(o), jobs_of(o));
  print_rows(out, report.result.rows);
  for (const auto& s : report.skipped) out << "skipped: " << s << "\n";
  out << "benchmark: " << report.result.rows.size() << " rows" << (report.partial() ? " (partial)" : "")
      << "\nreport: " << (dir / "report.json").string() << "\ncsv: " << (dir / "report.csv").string()
      << "\ntraces: " << (dir / "traces").string() << "\n";
  return report.partial() ? kExitPartial : kExitOk;
}

int cmd_trace_replay(const Options& o, std::ostream& out) {
  const ReplayResult r = replay_trace(o.trace_file);
  if (r.identical) {
    out << "trace-replay: identical (" << r.lines << " lines) " << o.trace_file << "\n";
    return kExitOk;
  }
  out << "trace-replay: MISMATCH at line " << r.first_mismatch << ": " << r.detail << "\n";
  return kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"sortpress: sorting + pressing recycling plant benchmark"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.overrides, "config override key=value (repeatable)");
    sub->add_option("-o,--out", o.out, "output directory (default ./runs/<timestamp>)");
    sub->add_option("--seed", o.seed, "seed (environment seed for simulate, training seed for train)");
  };

  auto* simulate = app.add_subcommand("simulate", "run one episode and write its trace");
  common(simulate);
  simulate->add_option("--policy", o.policies, "policy name")->expected(1);
  simulate->add_option("--steps", o.steps, "episode length");
  simulate->add_flag("--masked", o.masked, "masked condition (random samples valid actions only)");
  simulate->add_option("--checkpoints", o.checkpoints, "checkpoint directory for ppo-* policies");

  auto* train = app.add_subcommand("train", "train a PPO agent");
  common(train);
  train->add_option("--agent", o.agent, "sorting|pressing|monolithic|all")
      ->check(CLI::IsMember({"sorting", "pressing", "monolithic", "all"}));
  train->add_flag("--masked", o.masked, "train with action masking");
  train->add_option("--steps", o.steps, "total timesteps");
  train->add_option("--sorter", o.sorter, "frozen sorting checkpoint for --agent pressing");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate policies over the evaluation seeds");
  common(evaluate_cmd);
  evaluate_cmd->add_option("--policy", o.policies, "policy names (default: all five)");
  evaluate_cmd->add_flag("--masked", o.masked, "masked condition");
  evaluate_cmd->add_option("--checkpoints", o.checkpoints, "checkpoint directory (default: --out)");
  evaluate_cmd->add_option("--jobs", o.jobs, "worker threads (default: all cores)");

  auto* benchmark = app.add_subcommand("benchmark", "five-policy benchmark under both masking conditions");
  common(benchmark);
  benchmark->add_flag("--masked", o.masked, "masked condition only");
  benchmark->add_flag("--unmasked", o.unmasked, "unmasked condition only");
  benchmark->add_option("--checkpoints", o.checkpoints, "checkpoint directory (default: --out)");
  benchmark->add_option("--jobs", o.jobs, "worker threads (default: all cores)");

  auto* replay = app.add_subcommand("trace-replay", "re-simulate a trace and compare it bit for bit");
  replay->add_option("trace", o.trace_file, "trace .jsonl file")->required()->check(CLI::ExistingFile);

  auto* obs_spec = app.add_subcommand("observation-spec", "print the observation layout table");
  obs_spec->add_option("-o,--out", o.out, "write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*replay) return cmd_trace_replay(o, out);
    if (*obs_spec) {
      if (o.out.empty()) {
        out << observation_spec_markdown();
      } else {
        std::ofstream(o.out) << observation_spec_markdown();
      }
      return kExitOk;
    }
    const Settings settings = resolve_settings(o);
    if (*simulate) return cmd_simulate(o, settings, out);
    if (*train) return cmd_train(o, settings, out);
    if (*evaluate_cmd) return cmd_evaluate(o, settings, out);
    if (*benchmark) return cmd_benchmark(o, settings, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace sortpress

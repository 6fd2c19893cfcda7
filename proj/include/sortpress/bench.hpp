#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sortpress/checkpoint.hpp"
#include "sortpress/config.hpp"
#include "sortpress/environment.hpp"

namespace sortpress {

/// Chooses the plant action for the current state of one episode.
using EpisodeController = std::function<PlantAction(const Environment&)>;
/// Builds a fresh controller for the episode run with the given environment seed.
using ControllerFactory = std::function<EpisodeController(std::uint64_t seed)>;

enum class Masking { Unmasked, Masked };
std::string to_string(Masking masking);

struct BenchPolicy {
  std::string name;
  Masking masking = Masking::Unmasked;
  ControllerFactory make;
};

/// Trained networks for one masking condition; missing entries are skipped.
struct CheckpointSet {
  std::optional<PolicyArtifact> sorting;
  std::optional<PolicyArtifact> pressing;
  std::optional<PolicyArtifact> monolithic;
};

/// `random`, `rule`, `ppo-sort+rule-press`, `ppo-sort+ppo-press`, `ppo-mono`.
const std::vector<std::string>& benchmark_policy_names();

/// Resolves a policy name. Throws ConfigError for an unknown name or when a
/// needed checkpoint is missing from `checkpoints`.
BenchPolicy make_bench_policy(const std::string& name, Masking masking, const CheckpointSet& checkpoints,
                              double rule_min_fill = 0.0);

struct EpisodeRecord {
  std::string policy;
  Masking masking = Masking::Unmasked;
  std::uint64_t seed = 0;
  int episode_length = 0;
  double r_sort = 0.0;
  double r_press = 0.0;
  double r_total = 0.0;
  std::vector<Bale> bales;
  int invalid_actions = 0;
};

struct EpisodeRun {
  EpisodeRecord record;
  std::vector<std::string> trace;  // JSON Lines; empty unless requested
};

/// One full episode. The trace, when requested, has one record per step and a summary record.
EpisodeRun run_episode(const EnvConfig& config, const std::string& policy_name, Masking masking,
                       const EpisodeController& controller, std::uint64_t seed, bool keep_trace);

struct SummaryRow {
  std::string policy;
  Masking masking = Masking::Unmasked;
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation, 0 for a single seed
  int n = 0;
  double mean_sort = 0.0;
  double mean_press = 0.0;
};

/// Per (policy, masking) mean and sample stdev of r_total, sorted by mean descending.
std::vector<SummaryRow> summarize(const std::vector<EpisodeRecord>& records);

struct EvaluationResult {
  std::vector<SummaryRow> rows;
  std::vector<EpisodeRecord> records;  // policy order, then seed order
};

/// One episode per (policy, seed). `jobs` > 1 runs episodes on worker threads;
/// results do not depend on it. Traces go to trace_dir/<masking>/<policy>_<seed>.jsonl when set.
EvaluationResult evaluate(const EnvConfig& config, const std::vector<BenchPolicy>& policies,
                          const std::vector<std::uint64_t>& seeds, int jobs = 1,
                          const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

/// Checkpoint file of an agent for a masking condition inside a checkpoint directory.
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, AgentKind kind, Masking masking);

/// Loads whatever checkpoints for `masking` exist in `dir`.
CheckpointSet load_checkpoint_set(const std::filesystem::path& dir, Masking masking);

struct BenchmarkReport {
  EvaluationResult result;
  std::vector<std::string> skipped;  // "<policy> (<masking>): reason"
  bool partial() const { return !skipped.empty(); }
  nlohmann::json to_json(const Settings& settings) const;
  std::string to_csv() const;
};

/// Five-policy benchmark for each masking condition, written to out_dir as
/// report.json, report.csv and traces/. Policies whose checkpoints are missing are skipped.
BenchmarkReport run_benchmark(const Settings& settings, const std::filesystem::path& checkpoint_dir,
                              const std::filesystem::path& out_dir, const std::vector<Masking>& conditions,
                              int jobs = 1);

struct ReplayResult {
  bool identical = false;
  std::size_t lines = 0;
  std::size_t first_mismatch = 0;  // 1-based line number, 0 when identical
  std::string detail;
};

/// Re-simulates a trace from its summary record (seed, config) and the recorded
/// actions, and compares the regenerated trace line by line.
ReplayResult replay_trace(const std::filesystem::path& trace_file);
ReplayResult replay_trace_lines(const std::vector<std::string>& lines);

}  // namespace sortpress

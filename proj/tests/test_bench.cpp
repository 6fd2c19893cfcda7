#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "sortpress/bench.hpp"
#include "sortpress/train.hpp"

using namespace sortpress;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

const CheckpointSet kNone{};

}  // namespace

TEST_CASE("summarize: mean and sample stdev") {
  std::vector<EpisodeRecord> records(3);
  const double totals[] = {1.0, 2.0, 6.0};
  for (int i = 0; i < 3; ++i) {
    records[static_cast<std::size_t>(i)].policy = "rule";
    records[static_cast<std::size_t>(i)].r_total = totals[i];
  }
  EpisodeRecord lone;
  lone.policy = "random";
  lone.r_total = 5.0;
  records.push_back(lone);
  const auto rows = summarize(records);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].policy == "random");  // mean 5 > 3
  CHECK(rows[0].stdev == 0.0);
  CHECK(rows[1].mean == doctest::Approx(3.0));
  CHECK(rows[1].stdev == doctest::Approx(std::sqrt(7.0)));
  CHECK(rows[1].n == 3);
}

TEST_CASE("rule beats random on the default seeds") {
  const Settings s;
  const auto result = evaluate(s.env,
                               {make_bench_policy("rule", Masking::Unmasked, kNone),
                                make_bench_policy("random", Masking::Unmasked, kNone)},
                               s.bench.eval_seeds);
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].policy == "rule");
  CHECK(result.rows[0].mean > result.rows[1].mean);
  for (const auto& r : result.records) CHECK(r.r_total == doctest::Approx(r.r_sort + r.r_press));
}

TEST_CASE("evaluation is deterministic and independent of thread count") {
  const Settings s;
  const std::vector<BenchPolicy> policies{make_bench_policy("random", Masking::Masked, kNone),
                                          make_bench_policy("rule", Masking::Masked, kNone)};
  const auto a = evaluate(s.env, policies, s.bench.eval_seeds, 1);
  const auto b = evaluate(s.env, policies, s.bench.eval_seeds, 3);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].policy == b.records[i].policy);
    CHECK(a.records[i].seed == b.records[i].seed);
    CHECK(a.records[i].r_total == b.records[i].r_total);
  }
}

TEST_CASE("unknown policy and missing checkpoints") {
  CHECK_THROWS_AS(make_bench_policy("greedy", Masking::Unmasked, kNone), ConfigError);
  CHECK_THROWS_AS(make_bench_policy("ppo-mono", Masking::Unmasked, kNone), ConfigError);
  CHECK(benchmark_policy_names().size() == 5);
}

TEST_CASE("episode trace: counts, accounting and replay") {
  const EnvConfig config;
  const BenchPolicy rule = make_bench_policy("rule", Masking::Unmasked, kNone);
  const EpisodeRun run = run_episode(config, "rule", Masking::Unmasked, rule.make(1003), 1003, true);
  REQUIRE(run.trace.size() == 201);
  const auto summary = nlohmann::json::parse(run.trace.back());
  CHECK(summary["summary"] == true);
  CHECK(summary["seed"] == 1003);
  int executed = 0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < run.trace.size(); ++i) {
    const auto line = nlohmann::json::parse(run.trace[i]);
    CHECK(line["step"] == i);
    CHECK(line["observation"].size() == 29);
    CHECK(line["mask"].size() == 11);
    if (line["outcome"] == "executed") ++executed;
    total += static_cast<double>(line["rewards"]["r_total"]);
  }
  CHECK(executed > 0);
  CHECK(summary["bales"].size() == static_cast<std::size_t>(executed));
  CHECK(run.record.bales.size() == static_cast<std::size_t>(executed));
  CHECK(total == doctest::Approx(run.record.r_total).epsilon(1e-6));

  const ReplayResult replay = replay_trace_lines(run.trace);
  CHECK(replay.identical);
  CHECK(replay.lines == 201);

  std::vector<std::string> tampered = run.trace;
  auto line = nlohmann::json::parse(tampered[50]);
  line["action"]["mode"] = 1 - static_cast<int>(line["action"]["mode"]);
  line["action"]["index"] = static_cast<int>(line["action"]["mode"]) * 11 +
                            static_cast<int>(line["action"]["index"]) % 11;
  tampered[50] = line.dump();
  const ReplayResult bad = replay_trace_lines(tampered);
  CHECK_FALSE(bad.identical);
  CHECK(bad.first_mismatch == 51);
}

TEST_CASE("benchmark without checkpoints is partial with four rows") {
  const fs::path out = fresh_dir("sortpress_bench_partial");
  Settings s;
  s.bench.eval_seeds = {1000, 1001};
  const BenchmarkReport report =
      run_benchmark(s, out / "no_checkpoints", out, {Masking::Unmasked, Masking::Masked});
  CHECK(report.partial());
  CHECK(report.result.rows.size() == 4);
  CHECK(report.skipped.size() == 6);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "report.csv"));
  const auto traces = out / "traces" / "masked" / "random_1001.jsonl";
  REQUIRE(fs::exists(traces));
  CHECK(read_lines(traces).size() == 201);
  CHECK(replay_trace(traces).identical);

  // aggregates recompute from the persisted records
  const auto json = nlohmann::json::parse(std::ifstream(out / "report.json"));
  CHECK(json["partial"] == true);
  for (const auto& row : json["rows"]) {
    double sum = 0.0;
    int n = 0;
    for (const auto& rec : json["records"]) {
      if (rec["policy"] == row["policy"] && rec["masking"] == row["masking"]) {
        sum += static_cast<double>(rec["r_total"]);
        ++n;
      }
    }
    CHECK(n == row["n"]);
    CHECK(sum / n == doctest::Approx(static_cast<double>(row["mean"])));
  }
  const auto csv = read_lines(out / "report.csv");
  CHECK(csv.size() == 5);
  CHECK(csv[0] == "policy,masking,mean,stdev,n");
}

TEST_CASE("full benchmark with trained checkpoints has ten rows") {
  const fs::path out = fresh_dir("sortpress_bench_full");
  TrainConfig tc;
  tc.total_timesteps = 512;
  tc.rollout_horizon = 256;
  tc.epochs = 1;
  for (const bool masked : {false, true}) {
    tc.masked = masked;
    const Masking m = masked ? Masking::Masked : Masking::Unmasked;
    const TrainResult sorter = train_sorting(EnvConfig{}, tc);
    save_checkpoint(sorter.artifact, checkpoint_path(out / "ckpt", AgentKind::Sorting, m));
    save_checkpoint(train_pressing(EnvConfig{}, tc, sorter.artifact).artifact,
                    checkpoint_path(out / "ckpt", AgentKind::Pressing, m));
    save_checkpoint(train_monolithic(EnvConfig{}, tc).artifact,
                    checkpoint_path(out / "ckpt", AgentKind::Monolithic, m));
  }
  Settings s;
  s.bench.eval_seeds = {1000};
  const BenchmarkReport report = run_benchmark(s, out / "ckpt", out / "run", {Masking::Unmasked, Masking::Masked});
  CHECK_FALSE(report.partial());
  CHECK(report.result.rows.size() == 10);
  for (const auto& row : report.result.rows) CHECK(row.stdev == 0.0);
  for (const auto& rec : report.result.records) CHECK(rec.r_total == doctest::Approx(rec.r_sort + rec.r_press));
  // masked trained policies never waste a step on an invalid press
  for (const auto& rec : report.result.records) {
    if (rec.masking == Masking::Masked) CHECK(rec.invalid_actions == 0);
  }
  for (const auto& entry : fs::recursive_directory_iterator(out / "run" / "traces")) {
    if (entry.is_regular_file()) CHECK(replay_trace(entry.path()).identical);
  }
}

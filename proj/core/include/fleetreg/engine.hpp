#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fleetreg/fleet.hpp"
#include "fleetreg/scheduler.hpp"
#include "fleetreg/triggers.hpp"

namespace fleetreg {

enum class TraceEventKind {
  program_start,
  program_done,
  shard_start,
  shard_done,
  shard_failed,
  shard_skipped,
};

struct TraceEvent {
  Deciseconds timestamp;
  DeviceId device;
  TraceEventKind kind = TraceEventKind::shard_start;
  std::string suite;
  int lo = 0;
  int hi = 0;
  int passed = 0;
  int failed = 0;
  std::string detail;  // bitstream id, crash reason, ...

  bool operator==(const TraceEvent&) const = default;
};

struct ExecutionTrace {
  std::vector<TraceEvent> events;
  Deciseconds campaign_wall_time;
};

struct ShardOutcome {
  int passed = 0;
  int failed = 0;
  Deciseconds measured_duration;
  bool crashed = false;
  std::string crash_reason;
};

class Runner {
 public:
  virtual ~Runner() = default;
  virtual ShardOutcome run_shard(const Shard& shard, DeviceId device) = 0;
};

// Deterministic per-test Bernoulli failure injection; the effective seed
// mixes (seed, suite, lo, device) so outcomes are independent of execution
// order.
class SimulatedRunner : public Runner {
 public:
  SimulatedRunner(std::uint64_t seed, double fail_rate)
      : seed_(seed), fail_rate_(fail_rate) {}

  ShardOutcome run_shard(const Shard& shard, DeviceId device) override;

 private:
  std::uint64_t seed_;
  double fail_rate_;
};

// Shells out once per shard. The template may use {suite} {lo} {hi} {device}
// and {results}; {results} names a scratch file the command may fill with a
// per-test result document (`failed_tests: [i, ...]`, optional `wall_time`).
// Exit 0 with no results file means all tests passed.
class CommandRunner : public Runner {
 public:
  explicit CommandRunner(std::string command_template,
                         double timeout_factor = 5.0)
      : template_(std::move(command_template)), timeout_factor_(timeout_factor) {}

  ShardOutcome run_shard(const Shard& shard, DeviceId device) override;

 private:
  std::string template_;
  double timeout_factor_;
};

enum class ClockMode { simulated, wall };

struct ExecuteOptions {
  ClockMode clock = ClockMode::simulated;
  std::string bitstream_id = "bzl";
};

// Runs the plan over the fleet. Simulated mode is single threaded and
// advances a virtual clock; wall mode runs one worker per device with a
// barrier between waves. Traces are identical given the same (plan, runner).
ExecutionTrace execute(const SchedulePlan& plan, Fleet& fleet, Runner& runner,
                       const ExecuteOptions& options = {});

enum class StageStatus { passed, failed, skipped };

struct StageResult {
  std::string job;  // canonical job name
  StageKind kind = StageKind::lint;
  StageStatus status = StageStatus::passed;
  Deciseconds duration;
};

struct PipelineResult {
  std::vector<StageResult> stages;
  bool passed = true;
  Deciseconds total_duration;
};

struct PipelineOptions {
  // Runs the fpga_test stages; returns pass/fail and the campaign wall time.
  std::function<std::pair<bool, Deciseconds>(const JobId&)> fpga_stage;
  // Test hook: stage kinds forced to fail.
  std::set<StageKind> forced_failures;
};

// Executes the selected jobs in stage-DAG topological order; a job is skipped
// when any dependency stage (among the selected ones) did not pass.
PipelineResult run_pipeline(const JobSet& jobs,
                            const std::vector<StageSpec>& stages,
                            const PipelineOptions& options = {});

std::string emit_trace(const ExecutionTrace& t);
ExecutionTrace parse_trace(const std::string& text);

std::string to_string(TraceEventKind k);

}  // namespace fleetreg

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fleetreg/engine.hpp"
#include "fleetreg/manifest.hpp"
#include "fleetreg/scheduler.hpp"

namespace fleetreg {

enum class Verdict { pass, fail };

struct SuiteResult {
  std::string suite;
  int total = 0;
  int passed = 0;
  int failed = 0;
  int skipped = 0;
  Deciseconds wall_time;
  double threshold = 0.0;
  Verdict verdict = Verdict::pass;

  bool operator==(const SuiteResult&) const = default;
};

struct RunReport {
  std::string run_id;
  std::string trigger;  // trigger kind name or "manual"
  Verdict verdict = Verdict::pass;
  Deciseconds campaign_wall_time;
  Deciseconds sequential_baseline;
  double speedup_ratio = 1.0;
  std::vector<SuiteResult> suites;
  std::optional<CoverageRecord> coverage;
  std::string fleet_snapshot;          // device id -> state, one entry per device
  std::vector<std::string> notes;      // e.g. sequential-total discrepancy

  bool operator==(const RunReport&) const = default;
};

// Folds a trace into per-suite results in manifest order. Skipped tests count
// as failed for the verdict; a suite passes iff
// (failed + skipped) / total <= threshold. Throws on suites present in the
// trace but absent from the plan.
RunReport aggregate(const ExecutionTrace& trace, const Manifest& manifest,
                    const SchedulePlan& plan, const std::string& run_id = "run",
                    const std::string& trigger = "manual",
                    const std::string& fleet_snapshot = "");

std::string emit_report(const RunReport& r);
RunReport parse_report(const std::string& text);

// suites table for dashboards: header + one row per suite.
std::string report_to_csv(const RunReport& r);

std::string to_string(Verdict v);

// ---- Run history -----------------------------------------------------------

struct HistoryRecord {
  std::int64_t timestamp = 0;  // seconds since epoch
  std::string run_id;
  Deciseconds duration;
  Verdict verdict = Verdict::pass;
};

struct HistoryStats {
  int pipeline_count = 0;
  Deciseconds mean_duration_longest;  // mean of the top-decile longest runs
  Deciseconds mean_duration_fastest;  // mean of the bottom-decile fastest runs
  int window_days = 0;
};

// Single append-only file, one record per line; appends are write-then-rename
// so readers never observe a torn record.
class HistoryStore {
 public:
  explicit HistoryStore(std::string path) : path_(std::move(path)) {}

  void append(const HistoryRecord& record) const;
  void append(const RunReport& report, std::int64_t timestamp) const;

  // Corrupt lines are skipped and counted, never fatal.
  std::vector<HistoryRecord> read_all(int* corrupt_count = nullptr) const;

  // Window is anchored at `now` (or the newest record when now < 0).
  HistoryStats stats(int window_days, std::int64_t now = -1) const;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace fleetreg

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fleetreg/manifest.hpp"

namespace fleetreg {

enum class EventKind { merge_request, commit, schedule, manual_run };

struct PipelineEvent {
  EventKind kind = EventKind::commit;
  std::string target_branch;
  std::set<std::string> labels;
  std::map<std::string, std::string> variables;
  std::set<std::string> commit_message_tags;
  std::string pinned_sha;  // empty = absent
};

enum class TriggerKind { Torture, Daily, Weekly, Stability, None };

struct JobId {
  StageKind stage_kind = StageKind::lint;
  std::string variant;

  auto operator<=>(const JobId&) const = default;
  // Canonical display name, e.g. (bitstream, "gen") -> "bitstream-gen".
  std::string name() const;
};

struct JobSet {
  std::set<JobId> jobs;

  bool contains(StageKind kind) const;
  bool operator==(const JobSet&) const = default;
};

struct TriggerConfig {
  std::map<TriggerKind, std::vector<JobId>> jobs_by_kind;
};

TriggerConfig builtin_trigger_config();
TriggerConfig parse_trigger_config(const std::string& text);
std::string emit_trigger_config(const TriggerConfig& c);

// Total and deterministic. Precedence when signals conflict:
// Stability > Weekly > Daily > Torture > None.
TriggerKind classify_event(const PipelineEvent& e);

// Throws Error(config) for TriggerKind::None.
JobSet select_jobs(TriggerKind kind, const TriggerConfig& config);

// Honors the disable labels: "disable-uvm" drops uvm jobs, "no-bitstream-gen"
// drops bitstream jobs plus everything downstream of a bitstream stage in the
// DAG, "ci-test" restricts to lint only. Unrecognized labels land in
// `warnings` and are otherwise ignored.
JobSet apply_disable_controls(const JobSet& jobs,
                              const std::set<std::string>& labels,
                              const std::vector<StageSpec>& stages,
                              std::vector<std::string>* warnings = nullptr);

PipelineEvent parse_event(const std::string& text);

std::string to_string(TriggerKind k);
std::string to_string(EventKind k);

}  // namespace fleetreg

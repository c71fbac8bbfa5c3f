#include "fleetreg/triggers.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>

#include "fleetreg/error.hpp"
#include "fleetreg/yaml_writer.hpp"

namespace fleetreg {

std::string to_string(TriggerKind k) {
  switch (k) {
    case TriggerKind::Torture: return "torture";
    case TriggerKind::Daily: return "daily";
    case TriggerKind::Weekly: return "weekly";
    case TriggerKind::Stability: return "stability";
    case TriggerKind::None: return "none";
  }
  return "?";
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::merge_request: return "merge_request";
    case EventKind::commit: return "commit";
    case EventKind::schedule: return "schedule";
    case EventKind::manual_run: return "manual";
  }
  return "?";
}

std::string JobId::name() const {
  switch (stage_kind) {
    case StageKind::lint: return "lint-" + variant;
    case StageKind::simulation: return variant + "-sim";
    case StageKind::uvm: return variant + "-uvm";
    case StageKind::bitstream: return "bitstream-" + variant;
    case StageKind::fpga_test: return "fpga-" + variant;
    case StageKind::drops: return "drops-" + variant;
  }
  return variant;
}

bool JobSet::contains(StageKind kind) const {
  return std::any_of(jobs.begin(), jobs.end(),
                     [&](const JobId& j) { return j.stage_kind == kind; });
}

namespace {

JobId job_from_name(const std::string& name) {
  // Canonical job names as they appear in trigger config files.
  static const std::map<std::string, JobId> table = {
      {"lint-standard", {StageKind::lint, "standard"}},
      {"smoke-sim", {StageKind::simulation, "smoke"}},
      {"full-sim", {StageKind::simulation, "full"}},
      {"selective-uvm", {StageKind::uvm, "selective"}},
      {"bitstream-gen", {StageKind::bitstream, "gen"}},
      {"fpga-daily", {StageKind::fpga_test, "daily"}},
      {"performance-suite", {StageKind::fpga_test, "performance-suite"}},
      {"performance-validation", {StageKind::fpga_test, "performance-validation"}},
      {"fpga-8-cluster", {StageKind::fpga_test, "8-cluster"}},
      {"fpga-stability-extended", {StageKind::fpga_test, "stability-extended"}},
      {"drops-package", {StageKind::drops, "package"}},
  };
  auto it = table.find(name);
  if (it == table.end()) throw config_error("unknown job name '" + name + "'");
  return it->second;
}

std::string canonical_job_name(const JobId& j) {
  if (j.stage_kind == StageKind::fpga_test &&
      (j.variant == "performance-suite" || j.variant == "performance-validation")) {
    return j.variant;
  }
  return j.name();
}

const std::map<TriggerKind, std::vector<std::string>>& builtin_job_names() {
  static const std::map<TriggerKind, std::vector<std::string>> names = {
      {TriggerKind::Torture, {"lint-standard", "smoke-sim", "selective-uvm"}},
      {TriggerKind::Daily,
       {"lint-standard", "full-sim", "bitstream-gen", "fpga-daily"}},
      {TriggerKind::Weekly,
       {"performance-suite", "performance-validation", "fpga-8-cluster"}},
      {TriggerKind::Stability, {"fpga-stability-extended"}},
  };
  return names;
}

TriggerKind trigger_kind_from_name(const std::string& s) {
  if (s == "torture") return TriggerKind::Torture;
  if (s == "daily") return TriggerKind::Daily;
  if (s == "weekly") return TriggerKind::Weekly;
  if (s == "stability") return TriggerKind::Stability;
  throw config_error("unknown trigger kind '" + s + "'");
}

}  // namespace

TriggerConfig builtin_trigger_config() {
  TriggerConfig c;
  for (const auto& [kind, names] : builtin_job_names()) {
    for (const auto& n : names) c.jobs_by_kind[kind].push_back(job_from_name(n));
  }
  return c;
}

TriggerConfig parse_trigger_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw config_error(std::string("trigger config syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw config_error("trigger config: expected a YAML map");
  TriggerConfig c;
  for (const auto& kv : root) {
    TriggerKind kind = trigger_kind_from_name(kv.first.as<std::string>());
    if (!kv.second.IsSequence()) {
      throw config_error("trigger config: job list expected for '" +
                         kv.first.as<std::string>() + "'");
    }
    for (const auto& j : kv.second) {
      c.jobs_by_kind[kind].push_back(job_from_name(j.as<std::string>()));
    }
  }
  return c;
}

std::string emit_trigger_config(const TriggerConfig& c) {
  YamlWriter w;
  const TriggerKind order[] = {TriggerKind::Torture, TriggerKind::Daily,
                               TriggerKind::Weekly, TriggerKind::Stability};
  for (TriggerKind k : order) {
    auto it = c.jobs_by_kind.find(k);
    if (it == c.jobs_by_kind.end()) continue;
    std::string jobs;
    for (const auto& j : it->second) {
      if (!jobs.empty()) jobs += ", ";
      jobs += canonical_job_name(j);
    }
    w.line(0, to_string(k) + ": [" + jobs + "]");
  }
  return w.str();
}

TriggerKind classify_event(const PipelineEvent& e) {
  auto variable_set = [&](const std::string& name) {
    auto it = e.variables.find(name);
    return it != e.variables.end() && !it->second.empty() && it->second != "0";
  };

  if (variable_set("stability_test")) return TriggerKind::Stability;
  if (e.labels.count("weekly")) return TriggerKind::Weekly;
  if (e.kind == EventKind::schedule && variable_set("daily")) return TriggerKind::Daily;
  if ((e.kind == EventKind::merge_request && e.target_branch == "main") ||
      e.commit_message_tags.count("verification")) {
    return TriggerKind::Torture;
  }
  return TriggerKind::None;
}

JobSet select_jobs(TriggerKind kind, const TriggerConfig& config) {
  if (kind == TriggerKind::None) {
    throw config_error("select_jobs: no jobs for TriggerKind::None");
  }
  JobSet out;
  auto it = config.jobs_by_kind.find(kind);
  if (it != config.jobs_by_kind.end()) {
    out.jobs.insert(it->second.begin(), it->second.end());
  }
  return out;
}

JobSet apply_disable_controls(const JobSet& jobs,
                              const std::set<std::string>& labels,
                              const std::vector<StageSpec>& stages,
                              std::vector<std::string>* warnings) {
  static const std::set<std::string> known = {"ci-test", "disable-uvm",
                                              "no-bitstream-gen", "weekly"};
  for (const auto& l : labels) {
    if (!known.count(l) && warnings) {
      warnings->push_back("ignoring unrecognized label '" + l + "'");
    }
  }

  if (labels.count("ci-test")) {
    JobSet out;
    for (const auto& j : jobs.jobs) {
      if (j.stage_kind == StageKind::lint) out.jobs.insert(j);
    }
    return out;
  }

  std::set<StageKind> disabled;
  if (labels.count("disable-uvm")) disabled.insert(StageKind::uvm);
  if (labels.count("no-bitstream-gen")) disabled.insert(StageKind::bitstream);
  if (disabled.empty()) return jobs;

  // Transitive closure over the stage DAG: a stage whose dependency (of any
  // depth) has a disabled kind is disabled too.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& st : stages) {
      if (disabled.count(st.kind)) continue;
      for (const auto& dep : st.depends_on) {
        auto dep_it = std::find_if(stages.begin(), stages.end(),
                                   [&](const StageSpec& s) { return s.name == dep; });
        if (dep_it != stages.end() && disabled.count(dep_it->kind)) {
          disabled.insert(st.kind);
          changed = true;
          break;
        }
      }
    }
  }

  JobSet out;
  for (const auto& j : jobs.jobs) {
    if (!disabled.count(j.stage_kind)) out.jobs.insert(j);
  }
  return out;
}

PipelineEvent parse_event(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw config_error(std::string("event syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw config_error("event: expected a YAML map");

  PipelineEvent e;
  std::string kind = root["kind"] ? root["kind"].as<std::string>() : "";
  if (kind == "merge_request") e.kind = EventKind::merge_request;
  else if (kind == "commit") e.kind = EventKind::commit;
  else if (kind == "schedule") e.kind = EventKind::schedule;
  else if (kind == "manual") e.kind = EventKind::manual_run;
  else throw config_error("event.kind: expected merge_request|commit|schedule|manual");

  if (root["target_branch"]) e.target_branch = root["target_branch"].as<std::string>();
  for (const auto& l : root["labels"]) e.labels.insert(l.as<std::string>());
  if (root["variables"]) {
    for (const auto& kv : root["variables"]) {
      e.variables[kv.first.as<std::string>()] = kv.second.as<std::string>();
    }
  }
  for (const auto& t : root["commit_message_tags"]) {
    e.commit_message_tags.insert(t.as<std::string>());
  }
  if (root["pinned_sha"]) e.pinned_sha = root["pinned_sha"].as<std::string>();

  if (e.kind == EventKind::schedule && !e.variables.count("schedule_name")) {
    throw config_error("event: schedule events require a schedule_name variable");
  }
  return e;
}

}  // namespace fleetreg

// fleetreg: plan, execute, and report regression campaigns over a device
// fleet, with CI-style trigger classification and a run history.

#include <CLI11.hpp>

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fleetreg/engine.hpp"
#include "fleetreg/error.hpp"
#include "fleetreg/fleet.hpp"
#include "fleetreg/manifest.hpp"
#include "fleetreg/reporting.hpp"
#include "fleetreg/scheduler.hpp"
#include "fleetreg/triggers.hpp"

namespace {

using namespace fleetreg;

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream os;
    os << std::cin.rdbuf();
    return os.str();
  }
  std::ifstream in(path);
  if (!in) throw config_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-" || path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw runtime_error_of("cannot write " + path);
  out << text;
}

Manifest load_manifest(const std::string& path) {
  if (path.empty() || path == "builtin") return builtin_bzl_manifest();
  return parse_manifest(read_input(path));
}

TriggerConfig load_trigger_config(const std::string& path) {
  if (path.empty() || path == "builtin") return builtin_trigger_config();
  return parse_trigger_config(read_input(path));
}

PlanMode plan_mode_from(const std::string& s) {
  if (s == "model") return PlanMode::model;
  if (s == "replay") return PlanMode::replay;
  throw config_error("--mode must be model or replay");
}

std::string default_history_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FLEETREG_HISTORY")) return env;
  return "";
}

int parse_window_days(const std::string& s) {
  std::string digits = s;
  if (!digits.empty() && digits.back() == 'd') digits.pop_back();
  try {
    int v = std::stoi(digits);
    if (v < 0) throw std::out_of_range("");
    return v;
  } catch (const std::exception&) {
    throw config_error("--window expects e.g. 21d");
  }
}

struct CampaignResult {
  SchedulePlan plan;
  ExecutionTrace trace;
  RunReport report;
};

CampaignResult run_campaign(const Manifest& manifest, const SchedulePlan& p,
                            std::uint64_t seed, double fail_rate,
                            bool real_mode, const std::string& runner_cmd,
                            const std::string& run_id,
                            const std::string& trigger) {
  Fleet fleet(p.fleet);
  std::unique_ptr<Runner> runner;
  ExecuteOptions opts;
  if (real_mode) {
    if (runner_cmd.empty()) {
      throw config_error("--mode real requires --runner-cmd");
    }
    runner = std::make_unique<CommandRunner>(runner_cmd);
    opts.clock = ClockMode::wall;
  } else {
    runner = std::make_unique<SimulatedRunner>(seed, fail_rate);
    opts.clock = ClockMode::simulated;
  }
  ExecutionTrace trace = execute(p, fleet, *runner, opts);
  RunReport report =
      aggregate(trace, manifest, p, run_id, trigger, fleet.snapshot_yaml());
  return {p, std::move(trace), std::move(report)};
}

int run_main(int argc, char** argv) {
  CLI::App app{"fleet-scale regression campaign orchestrator"};
  app.require_subcommand(1);

  std::string manifest_path, fleet_path, trigger_config_path, event_path;
  std::string plan_path, trace_path, out_path, csv_path, trace_out_path;
  std::string history_path, runner_cmd, window = "21d";
  std::string plan_mode = "model", run_mode = "sim", run_id = "run";
  int devices = 8;
  bool stability = false;
  std::uint64_t seed = 0;
  double fail_rate = 0.0;

  auto* validate_cmd = app.add_subcommand("validate", "check a manifest");
  validate_cmd->add_option("--manifest", manifest_path, "manifest file, - or 'builtin'");

  auto* plan_cmd = app.add_subcommand("plan", "compute a schedule plan");
  plan_cmd->add_option("--manifest", manifest_path);
  plan_cmd->add_option("--devices", devices);
  plan_cmd->add_option("--mode", plan_mode, "model|replay");
  plan_cmd->add_flag("--stability", stability, "stability campaign");
  plan_cmd->add_option("--out", out_path);

  auto* trigger_cmd = app.add_subcommand("trigger", "classify a CI event");
  trigger_cmd->add_option("--event", event_path)->required();
  trigger_cmd->add_option("--trigger-config", trigger_config_path);
  trigger_cmd->add_option("--manifest", manifest_path);
  trigger_cmd->add_option("--out", out_path);

  auto* run_cmd = app.add_subcommand("run", "execute a plan or an event end to end");
  run_cmd->add_option("--plan", plan_path);
  run_cmd->add_option("--event", event_path);
  run_cmd->add_option("--manifest", manifest_path);
  run_cmd->add_option("--trigger-config", trigger_config_path);
  run_cmd->add_option("--devices", devices);
  run_cmd->add_option("--mode", run_mode, "sim|real");
  run_cmd->add_option("--seed", seed);
  run_cmd->add_option("--fail-rate", fail_rate);
  run_cmd->add_option("--runner-cmd", runner_cmd);
  run_cmd->add_option("--run-id", run_id);
  run_cmd->add_option("--out", out_path, "report file");
  run_cmd->add_option("--trace-out", trace_out_path);
  run_cmd->add_option("--history", history_path);
  run_cmd->add_flag("--stability", stability);

  auto* report_cmd = app.add_subcommand("report", "aggregate a trace into a report");
  report_cmd->add_option("--trace", trace_path)->required();
  report_cmd->add_option("--plan", plan_path)->required();
  report_cmd->add_option("--manifest", manifest_path);
  report_cmd->add_option("--csv", csv_path);
  report_cmd->add_option("--out", out_path);

  auto* history_cmd = app.add_subcommand("history", "stats over the run history");
  history_cmd->add_option("--history", history_path);
  history_cmd->add_option("--window", window, "e.g. 21d");

  auto* replay_cmd = app.add_subcommand(
      "replay-table1", "reproduce the reference campaign timings");
  replay_cmd->add_option("--devices", devices);
  std::string replay_mode = "replay";
  replay_cmd->add_option("--mode", replay_mode, "model|replay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (validate_cmd->parsed()) {
    Manifest m = load_manifest(manifest_path);
    auto violations = validate_manifest(m);
    for (const auto& v : violations) {
      std::cout << v.code << " at " << v.path << ": " << v.message << "\n";
    }
    if (!violations.empty()) {
      throw config_error("manifest has " + std::to_string(violations.size()) +
                         " violation(s)");
    }
    std::cout << "ok: " << m.suites.size() << " suites, " << m.stages.size()
              << " stages\n";
    return 0;
  }

  if (plan_cmd->parsed()) {
    Manifest m = load_manifest(manifest_path);
    SchedulePlan p =
        plan(m, m.fleet_default,
             stability ? CampaignMode::stability : CampaignMode::normal, devices,
             plan_mode_from(plan_mode));
    write_output(out_path, emit_plan(p));
    return 0;
  }

  if (trigger_cmd->parsed()) {
    Manifest m = load_manifest(manifest_path);
    TriggerConfig cfg = load_trigger_config(trigger_config_path);
    PipelineEvent e = parse_event(read_input(event_path));
    TriggerKind kind = classify_event(e);
    std::ostringstream os;
    os << "kind: " << to_string(kind) << "\n";
    if (kind != TriggerKind::None) {
      std::vector<std::string> warnings;
      JobSet jobs = apply_disable_controls(select_jobs(kind, cfg), e.labels,
                                           m.stages, &warnings);
      os << "jobs:\n";
      for (const auto& j : jobs.jobs) os << "  - " << j.name() << "\n";
      if (!warnings.empty()) {
        os << "warnings:\n";
        for (const auto& w : warnings) os << "  - \"" << w << "\"\n";
      }
    }
    write_output(out_path, os.str());
    return 0;
  }

  if (run_cmd->parsed()) {
    Manifest m = load_manifest(manifest_path);
    bool real_mode = run_mode == "real";
    if (!real_mode && run_mode != "sim") {
      throw config_error("--mode must be sim or real");
    }

    if (!event_path.empty()) {
      // End to end: classify, select jobs, run the stage pipeline; fpga_test
      // stages execute a full campaign.
      TriggerConfig cfg = load_trigger_config(trigger_config_path);
      PipelineEvent e = parse_event(read_input(event_path));
      TriggerKind kind = classify_event(e);
      if (kind == TriggerKind::None) {
        std::cout << "kind: none\njobs: []\n";
        return 0;
      }
      std::vector<std::string> warnings;
      JobSet jobs =
          apply_disable_controls(select_jobs(kind, cfg), e.labels, m.stages, &warnings);

      RunReport campaign_report;
      bool have_campaign = false;
      PipelineOptions popts;
      popts.fpga_stage = [&](const JobId& j) -> std::pair<bool, Deciseconds> {
        CampaignMode cm = j.variant == "stability-extended"
                              ? CampaignMode::stability
                              : CampaignMode::normal;
        SchedulePlan p = plan(m, m.fleet_default, cm, devices, PlanMode::replay);
        CampaignResult cr = run_campaign(m, p, seed, fail_rate, real_mode,
                                         runner_cmd, run_id, to_string(kind));
        campaign_report = cr.report;
        have_campaign = true;
        if (!trace_out_path.empty()) write_output(trace_out_path, emit_trace(cr.trace));
        return {cr.report.verdict == Verdict::pass, cr.report.campaign_wall_time};
      };
      PipelineResult pr = run_pipeline(jobs, m.stages, popts);

      std::ostringstream os;
      os << "trigger: " << to_string(kind) << "\n";
      os << "pipeline: " << (pr.passed ? "pass" : "fail") << "\n";
      os << "stages:\n";
      for (const auto& st : pr.stages) {
        os << "  - {job: " << st.job << ", status: "
           << (st.status == StageStatus::passed
                   ? "passed"
                   : st.status == StageStatus::failed ? "failed" : "skipped")
           << ", duration: " << st.duration.to_string_fixed() << "}\n";
      }
      if (have_campaign) {
        os << "campaign:\n";
        std::istringstream lines(emit_report(campaign_report));
        std::string line;
        while (std::getline(lines, line)) os << "  " << line << "\n";
      }
      write_output(out_path, os.str());

      std::string hist = default_history_path(history_path);
      if (!hist.empty() && have_campaign) {
        HistoryStore(hist).append(campaign_report, std::time(nullptr));
      }
      return pr.passed ? 0 : 1;
    }

    SchedulePlan p =
        plan_path.empty()
            ? plan(m, m.fleet_default,
                   stability ? CampaignMode::stability : CampaignMode::normal,
                   devices, PlanMode::model)
            : parse_plan(read_input(plan_path));
    CampaignResult cr =
        run_campaign(m, p, seed, fail_rate, real_mode, runner_cmd, run_id, "manual");
    if (!trace_out_path.empty()) write_output(trace_out_path, emit_trace(cr.trace));
    write_output(out_path, emit_report(cr.report));
    std::string hist = default_history_path(history_path);
    if (!hist.empty()) HistoryStore(hist).append(cr.report, std::time(nullptr));
    return cr.report.verdict == Verdict::pass ? 0 : 1;
  }

  if (report_cmd->parsed()) {
    Manifest m = load_manifest(manifest_path);
    SchedulePlan p = parse_plan(read_input(plan_path));
    ExecutionTrace t = parse_trace(read_input(trace_path));
    RunReport r = aggregate(t, m, p);
    if (!csv_path.empty()) write_output(csv_path, report_to_csv(r));
    write_output(out_path, emit_report(r));
    return r.verdict == Verdict::pass ? 0 : 1;
  }

  if (history_cmd->parsed()) {
    std::string hist = default_history_path(history_path);
    if (hist.empty()) {
      throw config_error("no history file: pass --history or set FLEETREG_HISTORY");
    }
    HistoryStats s = HistoryStore(hist).stats(parse_window_days(window));
    std::cout << "pipeline_count: " << s.pipeline_count << "\n"
              << "window_days: " << s.window_days << "\n"
              << "mean_duration_longest: " << s.mean_duration_longest.to_string_fixed()
              << "\n"
              << "mean_duration_fastest: " << s.mean_duration_fastest.to_string_fixed()
              << "\n";
    return 0;
  }

  if (replay_cmd->parsed()) {
    Manifest m = builtin_bzl_manifest();
    SchedulePlan p = plan(m, m.fleet_default, CampaignMode::normal, devices,
                          plan_mode_from(replay_mode));
    CampaignResult cr =
        run_campaign(m, p, 0, 0.0, false, "", "replay-table1", "manual");
    std::cout << emit_report(cr.report);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const fleetreg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == fleetreg::ErrorKind::config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

#include "fleetreg/reporting.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "fleetreg/error.hpp"
#include "fleetreg/yaml_writer.hpp"

namespace fleetreg {

std::string to_string(Verdict v) { return v == Verdict::pass ? "pass" : "fail"; }

namespace {

std::string ratio1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string pct(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Verdict suite_verdict(int failed, int skipped, int total, double threshold) {
  // Skipped tests count against the suite.
  double fraction = total == 0 ? 0.0 : static_cast<double>(failed + skipped) / total;
  return fraction <= threshold ? Verdict::pass : Verdict::fail;
}

}  // namespace

RunReport aggregate(const ExecutionTrace& trace, const Manifest& manifest,
                    const SchedulePlan& plan, const std::string& run_id,
                    const std::string& trigger,
                    const std::string& fleet_snapshot) {
  struct Acc {
    int scheduled = 0;
    int passed = 0;
    int failed = 0;
    int skipped = 0;
    Deciseconds first_start;
    Deciseconds last_end;
    bool any = false;
  };
  std::map<std::string, Acc> acc;

  for (const auto& wave : plan.assignment.waves) {
    for (const auto& [device, shards] : wave.per_device) {
      for (const auto& s : shards) acc[wave.suite].scheduled += s.test_count();
    }
  }

  for (const auto& e : trace.events) {
    if (e.suite.empty()) continue;
    auto it = acc.find(e.suite);
    if (it == acc.end()) {
      throw runtime_error_of("trace/plan mismatch: unknown suite '" + e.suite + "'");
    }
    Acc& a = it->second;
    switch (e.kind) {
      case TraceEventKind::shard_start:
        if (!a.any || e.timestamp < a.first_start) a.first_start = e.timestamp;
        a.any = true;
        break;
      case TraceEventKind::shard_done:
      case TraceEventKind::shard_failed:
        a.passed += e.passed;
        a.failed += e.failed;
        a.last_end = std::max(a.last_end, e.timestamp);
        break;
      case TraceEventKind::shard_skipped:
        a.skipped += e.hi - e.lo;
        break;
      default:
        break;
    }
  }

  RunReport r;
  r.run_id = run_id;
  r.trigger = trigger;
  r.campaign_wall_time = trace.campaign_wall_time;
  r.sequential_baseline = manifest.recorded_sequential_total
                              ? *manifest.recorded_sequential_total
                              : plan.est_sequential;
  r.speedup_ratio =
      speedup(r.sequential_baseline, std::max(Deciseconds(1), r.campaign_wall_time));
  r.coverage = manifest.coverage;
  r.fleet_snapshot = fleet_snapshot;

  if (manifest.recorded_sequential_total &&
      *manifest.recorded_sequential_total != plan.est_sequential) {
    r.notes.push_back("recorded sequential total " +
                      manifest.recorded_sequential_total->to_string() +
                      "s differs from per-suite sum " +
                      plan.est_sequential.to_string() + "s");
  }

  // Manifest order; only suites that the plan scheduled.
  for (const auto& suite : manifest.suites) {
    auto it = acc.find(suite.name);
    if (it == acc.end()) continue;
    const Acc& a = it->second;
    SuiteResult sr;
    sr.suite = suite.name;
    sr.total = a.scheduled;
    sr.passed = a.passed;
    sr.failed = a.failed;
    sr.skipped = a.scheduled - a.passed - a.failed;
    sr.wall_time = a.any ? a.last_end - a.first_start : Deciseconds(0);
    sr.threshold = suite.failure_threshold;
    sr.verdict = suite_verdict(sr.failed, sr.skipped, sr.total, sr.threshold);
    if (sr.verdict == Verdict::fail) r.verdict = Verdict::fail;
    r.suites.push_back(std::move(sr));
  }
  return r;
}

std::string emit_report(const RunReport& r) {
  YamlWriter w;
  w.line(0, "run_id: " + YamlWriter::quote(r.run_id));
  w.line(0, "trigger: " + r.trigger);
  w.line(0, "verdict: " + to_string(r.verdict));
  w.line(0, "campaign_wall_time: " + r.campaign_wall_time.to_string_fixed());
  w.line(0, "sequential_baseline: " + r.sequential_baseline.to_string_fixed());
  w.line(0, "speedup: " + ratio1(r.speedup_ratio));
  w.line(0, "suites:");
  for (const auto& s : r.suites) {
    w.line(1, "- {name: " + s.suite + ", total: " + std::to_string(s.total) +
                  ", passed: " + std::to_string(s.passed) +
                  ", failed: " + std::to_string(s.failed) +
                  ", skipped: " + std::to_string(s.skipped) +
                  ", wall_time: " + s.wall_time.to_string_fixed() +
                  ", threshold: " + pct(s.threshold) +
                  ", verdict: " + to_string(s.verdict) + "}");
  }
  if (r.coverage) {
    w.line(0, "coverage: {statements: " + pct(r.coverage->statements) +
                  ", branches: " + pct(r.coverage->branches) +
                  ", toggle: " + pct(r.coverage->toggle) +
                  ", total: " + pct(r.coverage->total) + "}");
  }
  if (!r.fleet_snapshot.empty()) {
    w.line(0, "fleet:");
    std::istringstream lines(r.fleet_snapshot);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty()) w.line(1, line);
    }
  }
  if (!r.notes.empty()) {
    w.line(0, "notes:");
    for (const auto& n : r.notes) w.line(1, "- " + YamlWriter::quote(n));
  }
  return w.str();
}

RunReport parse_report(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw config_error(std::string("report syntax error: ") + e.what());
  }
  RunReport r;
  r.run_id = root["run_id"].as<std::string>();
  r.trigger = root["trigger"].as<std::string>();
  r.verdict = root["verdict"].as<std::string>() == "pass" ? Verdict::pass : Verdict::fail;
  r.campaign_wall_time = parse_duration(root["campaign_wall_time"].as<std::string>());
  r.sequential_baseline = parse_duration(root["sequential_baseline"].as<std::string>());
  r.speedup_ratio = root["speedup"].as<double>();
  for (const auto& sn : root["suites"]) {
    SuiteResult s;
    s.suite = sn["name"].as<std::string>();
    s.total = sn["total"].as<int>();
    s.passed = sn["passed"].as<int>();
    s.failed = sn["failed"].as<int>();
    s.skipped = sn["skipped"].as<int>();
    s.wall_time = parse_duration(sn["wall_time"].as<std::string>());
    s.threshold = sn["threshold"].as<double>();
    s.verdict = sn["verdict"].as<std::string>() == "pass" ? Verdict::pass : Verdict::fail;
    r.suites.push_back(std::move(s));
  }
  if (root["coverage"]) {
    CoverageRecord c;
    c.statements = root["coverage"]["statements"].as<double>();
    c.branches = root["coverage"]["branches"].as<double>();
    c.toggle = root["coverage"]["toggle"].as<double>();
    c.total = root["coverage"]["total"].as<double>();
    r.coverage = c;
  }
  if (root["fleet"]) {
    YamlWriter w;
    for (const auto& kv : root["fleet"]) {
      w.line(0, kv.first.as<std::string>() + ": " +
                    YamlWriter::quote(kv.second.as<std::string>()));
    }
    r.fleet_snapshot = w.str();
  }
  for (const auto& n : root["notes"]) r.notes.push_back(n.as<std::string>());
  return r;
}

std::string report_to_csv(const RunReport& r) {
  std::ostringstream os;
  os << "name,total,passed,failed,skipped,wall_time,threshold,verdict\n";
  for (const auto& s : r.suites) {
    os << s.suite << ',' << s.total << ',' << s.passed << ',' << s.failed << ','
       << s.skipped << ',' << s.wall_time.to_string_fixed() << ',' << s.threshold
       << ',' << to_string(s.verdict) << '\n';
  }
  return os.str();
}

}  // namespace fleetreg

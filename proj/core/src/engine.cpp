#include "fleetreg/engine.hpp"

#include <yaml-cpp/yaml.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <thread>

#include "fleetreg/error.hpp"
#include "fleetreg/yaml_writer.hpp"

namespace fleetreg {

std::string to_string(TraceEventKind k) {
  switch (k) {
    case TraceEventKind::program_start: return "program_start";
    case TraceEventKind::program_done: return "program_done";
    case TraceEventKind::shard_start: return "shard_start";
    case TraceEventKind::shard_done: return "shard_done";
    case TraceEventKind::shard_failed: return "shard_failed";
    case TraceEventKind::shard_skipped: return "shard_skipped";
  }
  return "?";
}

namespace {

TraceEventKind trace_kind_from_name(const std::string& s) {
  if (s == "program_start") return TraceEventKind::program_start;
  if (s == "program_done") return TraceEventKind::program_done;
  if (s == "shard_start") return TraceEventKind::shard_start;
  if (s == "shard_done") return TraceEventKind::shard_done;
  if (s == "shard_failed") return TraceEventKind::shard_failed;
  if (s == "shard_skipped") return TraceEventKind::shard_skipped;
  throw config_error("unknown trace event kind '" + s + "'");
}

std::uint64_t mix_hash(std::uint64_t h, std::uint64_t v) {
  // splitmix64 step
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

ShardOutcome SimulatedRunner::run_shard(const Shard& shard, DeviceId device) {
  std::uint64_t h = seed_;
  h = mix_hash(h, std::hash<std::string>{}(shard.suite));
  h = mix_hash(h, static_cast<std::uint64_t>(shard.lo));
  h = mix_hash(h, static_cast<std::uint64_t>(device.node_index) * 1024 +
                      static_cast<std::uint64_t>(device.slot_index));
  std::mt19937_64 rng(h);
  std::bernoulli_distribution fail(fail_rate_);

  ShardOutcome out;
  out.measured_duration = shard.est_duration;
  for (int i = shard.lo; i < shard.hi; ++i) {
    if (fail_rate_ > 0.0 && fail(rng)) {
      ++out.failed;
    } else {
      ++out.passed;
    }
  }
  return out;
}

ShardOutcome CommandRunner::run_shard(const Shard& shard, DeviceId device) {
  namespace fs = std::filesystem;
  std::string results_path =
      (fs::temp_directory_path() /
       ("fleetreg-" + std::to_string(::getpid()) + "-" + shard.suite + "-" +
        std::to_string(shard.lo) + "-" + device.to_string() + ".yaml"))
          .string();

  std::string cmd = template_;
  auto subst = [&cmd](const std::string& key, const std::string& value) {
    std::string::size_type pos = 0;
    while ((pos = cmd.find(key, pos)) != std::string::npos) {
      cmd.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  subst("{suite}", shard.suite);
  subst("{lo}", std::to_string(shard.lo));
  subst("{hi}", std::to_string(shard.hi));
  subst("{device}", device.to_string());
  subst("{results}", results_path);

  auto t0 = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw runtime_error_of("runner: fork failed");
  if (pid == 0) {
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }

  double timeout_s =
      std::max(0.1, timeout_factor_ * shard.est_duration.seconds());
  int status = 0;
  bool timed_out = false;
  for (;;) {
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw runtime_error_of("runner: waitpid failed");
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (elapsed > timeout_s) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ShardOutcome out;
  out.measured_duration = Deciseconds::from_seconds(elapsed);
  int total = shard.test_count();

  if (timed_out) {
    out.failed = total;
    return out;
  }
  if (!WIFEXITED(status)) {
    out.crashed = true;
    out.crash_reason = "runner command terminated by signal";
    return out;
  }
  if (WEXITSTATUS(status) == 0 && !fs::exists(results_path)) {
    out.passed = total;
    return out;
  }
  if (!fs::exists(results_path)) {
    if (WEXITSTATUS(status) == 127) {
      out.crashed = true;
      out.crash_reason = "runner command not found";
      return out;
    }
    out.failed = total;
    return out;
  }

  std::ifstream in(results_path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  fs::remove(results_path);
  try {
    YAML::Node root = YAML::Load(text);
    std::set<int> failed;
    for (const auto& i : root["failed_tests"]) failed.insert(i.as<int>());
    out.failed = static_cast<int>(failed.size());
    out.passed = total - out.failed;
    if (root["wall_time"]) {
      out.measured_duration = parse_duration(root["wall_time"].as<std::string>());
    }
  } catch (const std::exception& e) {
    out.crashed = true;
    out.crash_reason = std::string("bad results file: ") + e.what();
  }
  return out;
}

ExecutionTrace execute(const SchedulePlan& plan, Fleet& fleet, Runner& runner,
                       const ExecuteOptions& options) {
  ExecutionTrace trace;
  Deciseconds latency = plan.fleet.programming_latency;

  // Devices touched by the plan, in fleet order.
  std::set<DeviceId> used;
  for (const auto& wave : plan.assignment.waves) {
    for (const auto& [device, shards] : wave.per_device) {
      if (!shards.empty()) used.insert(device);
    }
  }

  for (DeviceId id : used) {
    const DeviceState& s = fleet.state(id);
    if (!std::holds_alternative<Free>(s) && !std::holds_alternative<Ready>(s)) {
      throw runtime_error_of("device-unavailable: " + id.to_string() + " is " +
                             fleetreg::to_string(s));
    }
  }

  for (DeviceId id : used) {
    if (std::holds_alternative<Free>(fleet.state(id))) {
      fleet.transition(id, StartProgram{options.bitstream_id, latency});
      trace.events.push_back({Deciseconds(0), id, TraceEventKind::program_start,
                              "", 0, 0, 0, 0, options.bitstream_id});
    }
  }
  fleet.advance_clock(latency);
  for (DeviceId id : used) {
    if (std::holds_alternative<Programming>(fleet.state(id))) {
      fleet.transition(id, ProgramDone{});
      trace.events.push_back({latency, id, TraceEventKind::program_done,
                              "", 0, 0, 0, 0, options.bitstream_id});
    }
  }

  std::set<DeviceId> dead;
  Deciseconds wave_start = latency;
  Deciseconds campaign_end = latency;

  for (const auto& wave : plan.assignment.waves) {
    struct DeviceRun {
      DeviceId device;
      const std::vector<Shard>* shards;
      std::vector<ShardOutcome> outcomes;  // parallel to executed prefix
    };
    std::vector<DeviceRun> runs;
    for (const auto& [device, shards] : wave.per_device) {
      if (shards.empty()) continue;
      runs.push_back({device, &shards, {}});
    }

    auto run_device = [&](DeviceRun& r) {
      for (const auto& shard : *r.shards) {
        ShardOutcome out = runner.run_shard(shard, r.device);
        r.outcomes.push_back(out);
        if (out.crashed) break;
      }
    };

    if (options.clock == ClockMode::wall) {
      std::vector<std::thread> workers;
      for (auto& r : runs) {
        if (dead.count(r.device)) continue;
        workers.emplace_back([&run_device, &r] { run_device(r); });
      }
      for (auto& t : workers) t.join();
    } else {
      for (auto& r : runs) {
        if (dead.count(r.device)) continue;
        run_device(r);
      }
    }

    // Merge in device order so the trace is independent of completion order.
    Deciseconds wave_end = wave_start;
    for (auto& r : runs) {
      Deciseconds cursor = wave_start;
      for (std::size_t i = 0; i < r.shards->size(); ++i) {
        const Shard& shard = (*r.shards)[i];
        if (dead.count(r.device) || i >= r.outcomes.size()) {
          trace.events.push_back({cursor, r.device, TraceEventKind::shard_skipped,
                                  shard.suite, shard.lo, shard.hi, 0, 0,
                                  "device failed"});
          continue;
        }
        const ShardOutcome& out = r.outcomes[i];
        fleet.transition(r.device, StartJob{shard.suite + "[" +
                                            std::to_string(shard.lo) + "," +
                                            std::to_string(shard.hi) + ")"});
        trace.events.push_back({cursor, r.device, TraceEventKind::shard_start,
                                shard.suite, shard.lo, shard.hi, 0, 0, ""});
        cursor += out.measured_duration;
        if (out.crashed) {
          fleet.transition(r.device, MarkFailed{out.crash_reason});
          dead.insert(r.device);
          trace.events.push_back({cursor, r.device, TraceEventKind::shard_failed,
                                  shard.suite, shard.lo, shard.hi, 0,
                                  shard.test_count(), out.crash_reason});
        } else {
          fleet.transition(r.device, JobDone{});
          trace.events.push_back({cursor, r.device,
                                  out.failed == 0 ? TraceEventKind::shard_done
                                                  : TraceEventKind::shard_failed,
                                  shard.suite, shard.lo, shard.hi, out.passed,
                                  out.failed, ""});
        }
      }
      wave_end = std::max(wave_end, cursor);
    }
    wave_start = wave_end;
    campaign_end = std::max(campaign_end, wave_end);
  }

  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  fleet.advance_clock(campaign_end);
  trace.campaign_wall_time = campaign_end;
  return trace;
}

PipelineResult run_pipeline(const JobSet& jobs,
                            const std::vector<StageSpec>& stages,
                            const PipelineOptions& options) {
  PipelineResult result;

  // Topological order over stage names (the manifest validator guarantees a
  // DAG; broken input degrades to declaration order).
  std::vector<const StageSpec*> order;
  std::set<std::string> placed;
  while (order.size() < stages.size()) {
    bool progress = false;
    for (const auto& st : stages) {
      if (placed.count(st.name)) continue;
      bool ready = std::all_of(st.depends_on.begin(), st.depends_on.end(),
                               [&](const std::string& d) { return placed.count(d); });
      if (ready) {
        order.push_back(&st);
        placed.insert(st.name);
        progress = true;
      }
    }
    if (!progress) throw runtime_error_of("run_pipeline: stage graph has a cycle");
  }

  std::map<StageKind, StageStatus> kind_status;

  for (const StageSpec* st : order) {
    std::vector<JobId> stage_jobs;
    for (const auto& j : jobs.jobs) {
      if (j.stage_kind == st->kind) stage_jobs.push_back(j);
    }
    if (stage_jobs.empty()) continue;

    bool deps_ok = true;
    for (const auto& dep : st->depends_on) {
      auto dep_it = std::find_if(stages.begin(), stages.end(),
                                 [&](const StageSpec& s) { return s.name == dep; });
      if (dep_it == stages.end()) continue;
      auto ks = kind_status.find(dep_it->kind);
      if (ks != kind_status.end() && ks->second != StageStatus::passed) {
        deps_ok = false;
      }
    }

    for (const auto& j : stage_jobs) {
      StageResult r;
      r.job = j.name();
      r.kind = st->kind;
      r.duration = st->nominal_duration;
      if (!deps_ok) {
        r.status = StageStatus::skipped;
      } else if (options.forced_failures.count(st->kind)) {
        r.status = StageStatus::failed;
      } else if (st->kind == StageKind::fpga_test && options.fpga_stage) {
        auto [ok, wall] = options.fpga_stage(j);
        r.status = ok ? StageStatus::passed : StageStatus::failed;
        r.duration = wall;
      } else {
        r.status = StageStatus::passed;
      }
      if (r.status != StageStatus::passed) result.passed = false;
      if (r.status != StageStatus::skipped) result.total_duration += r.duration;
      auto [it, fresh] = kind_status.emplace(st->kind, r.status);
      if (!fresh && r.status != StageStatus::passed) it->second = r.status;
      result.stages.push_back(std::move(r));
    }
  }
  return result;
}

std::string emit_trace(const ExecutionTrace& t) {
  YamlWriter w;
  w.line(0, "campaign_wall_time: " + t.campaign_wall_time.to_string_fixed());
  if (t.events.empty()) {
    w.line(0, "events: []");
    return w.str();
  }
  w.line(0, "events:");
  for (const auto& e : t.events) {
    std::string entry = "- {t: " + e.timestamp.to_string_fixed() +
                        ", device: " + e.device.to_string() +
                        ", kind: " + to_string(e.kind);
    if (!e.suite.empty()) {
      entry += ", suite: " + e.suite + ", lo: " + std::to_string(e.lo) +
               ", hi: " + std::to_string(e.hi);
    }
    if (e.kind == TraceEventKind::shard_done ||
        e.kind == TraceEventKind::shard_failed ||
        e.kind == TraceEventKind::shard_skipped) {
      entry += ", passed: " + std::to_string(e.passed) +
               ", failed: " + std::to_string(e.failed);
    }
    if (!e.detail.empty()) entry += ", detail: " + YamlWriter::quote(e.detail);
    entry += "}";
    w.line(1, entry);
  }
  return w.str();
}

ExecutionTrace parse_trace(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw config_error(std::string("trace syntax error: ") + e.what());
  }
  ExecutionTrace t;
  t.campaign_wall_time =
      parse_duration(root["campaign_wall_time"].as<std::string>());
  for (const auto& en : root["events"]) {
    TraceEvent e;
    e.timestamp = parse_duration(en["t"].as<std::string>());
    std::string dev = en["device"].as<std::string>();
    auto d = dev.find('d');
    e.device = {std::stoi(dev.substr(1, d - 1)), std::stoi(dev.substr(d + 1))};
    e.kind = trace_kind_from_name(en["kind"].as<std::string>());
    if (en["suite"]) {
      e.suite = en["suite"].as<std::string>();
      e.lo = en["lo"].as<int>();
      e.hi = en["hi"].as<int>();
    }
    if (en["passed"]) e.passed = en["passed"].as<int>();
    if (en["failed"]) e.failed = en["failed"].as<int>();
    if (en["detail"]) e.detail = en["detail"].as<std::string>();
    t.events.push_back(std::move(e));
  }
  return t;
}

}  // namespace fleetreg

#include "fleetreg/scheduler.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fleetreg/error.hpp"
#include "fleetreg/yaml_writer.hpp"

namespace fleetreg {

std::string to_string(PlanMode m) {
  return m == PlanMode::model ? "model" : "replay";
}

std::string to_string(CampaignMode m) {
  return m == CampaignMode::normal ? "normal" : "stability";
}

namespace {

// Uniform model: test i of a suite without per-test durations takes
// seq_duration / total_tests. Range durations are rounded once, at shard
// granularity, to stay in deciseconds.
Deciseconds range_duration(const TestSuite& suite, int lo, int hi) {
  if (!suite.per_test_durations.empty()) {
    Deciseconds sum(0);
    for (int i = lo; i < hi; ++i) sum += suite.per_test_durations[i];
    return sum;
  }
  long double per = static_cast<long double>(suite.seq_duration.ticks()) /
                    suite.total_tests;
  return Deciseconds(static_cast<std::int64_t>(llroundl(per * (hi - lo))));
}

PlanMode parse_plan_mode(const std::string& s) {
  if (s == "model") return PlanMode::model;
  if (s == "replay") return PlanMode::replay;
  throw config_error("unknown plan mode '" + s + "'");
}

CampaignMode parse_campaign_mode(const std::string& s) {
  if (s == "normal") return CampaignMode::normal;
  if (s == "stability") return CampaignMode::stability;
  throw config_error("unknown campaign mode '" + s + "'");
}

DeviceId parse_device_id(const std::string& s) {
  // "n{node}d{slot}"
  auto d = s.find('d');
  if (s.size() < 4 || s[0] != 'n' || d == std::string::npos) {
    throw config_error("bad device id '" + s + "'");
  }
  try {
    return {std::stoi(s.substr(1, d - 1)), std::stoi(s.substr(d + 1))};
  } catch (const std::exception&) {
    throw config_error("bad device id '" + s + "'");
  }
}

}  // namespace

std::vector<Shard> shard_suite(const TestSuite& suite, int n_devices) {
  if (!suite.divisibility.shardable()) {
    throw runtime_error_of("shard_suite: suite '" + suite.name +
                           "' is " + to_string(suite.divisibility) +
                           " and cannot be sharded");
  }
  if (n_devices < 1) throw runtime_error_of("shard_suite: n_devices must be >= 1");

  int n_shards = std::min(n_devices, suite.total_tests);
  int base = suite.total_tests / n_shards;
  int extra = suite.total_tests % n_shards;

  std::vector<Shard> shards;
  int lo = 0;
  for (int i = 0; i < n_shards; ++i) {
    int count = base + (i < extra ? 1 : 0);
    Shard s;
    s.suite = suite.name;
    s.lo = lo;
    s.hi = lo + count;
    s.est_duration = range_duration(suite, s.lo, s.hi);
    shards.push_back(s);
    lo += count;
  }
  return shards;
}

std::vector<std::vector<std::size_t>> lpt_partition(
    const std::vector<Deciseconds>& durations, int machines) {
  if (machines < 1) throw runtime_error_of("lpt_partition: machines must be >= 1");
  if (durations.empty()) throw runtime_error_of("lpt_partition: no items");

  std::vector<std::size_t> order(durations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return durations[a] > durations[b];
  });

  std::vector<std::vector<std::size_t>> result(machines);
  std::vector<Deciseconds> load(machines, Deciseconds(0));
  for (std::size_t item : order) {
    int best = 0;
    for (int m = 1; m < machines; ++m) {
      if (load[m] < load[best]) best = m;
    }
    result[best].push_back(item);
    load[best] += durations[item];
  }
  return result;
}

Deciseconds estimate_makespan(const Assignment& assignment,
                              Deciseconds programming_latency) {
  Deciseconds t = programming_latency;
  for (const auto& wave : assignment.waves) {
    Deciseconds wave_span(0);
    for (const auto& [device, shards] : wave.per_device) {
      Deciseconds device_span(0);
      for (const auto& s : shards) device_span += s.est_duration;
      wave_span = std::max(wave_span, device_span);
    }
    t += wave_span;
  }
  return t;
}

SchedulePlan plan(const Manifest& manifest, const FleetSpec& fleet,
                  CampaignMode campaign_mode, int n_devices,
                  PlanMode plan_mode) {
  if (manifest.suites.empty()) throw runtime_error_of("plan: empty manifest");
  if (n_devices < 1) throw runtime_error_of("plan: n_devices must be >= 1");
  if (n_devices > fleet.total_devices()) {
    throw runtime_error_of("insufficient-capacity: requested " +
                           std::to_string(n_devices) + " devices, fleet has " +
                           std::to_string(fleet.total_devices()));
  }

  // Devices in fleet order; device list index = LPT machine index.
  std::vector<DeviceId> devices;
  for (int n = 0; n < fleet.nodes && static_cast<int>(devices.size()) < n_devices; ++n) {
    for (int d = 0; d < fleet.devices_per_node &&
                    static_cast<int>(devices.size()) < n_devices; ++d) {
      devices.push_back({n, d});
    }
  }

  SchedulePlan p;
  p.fleet = fleet;
  p.n_devices = n_devices;
  p.campaign_mode = campaign_mode;
  p.assignment.mode = plan_mode;

  Deciseconds cursor = fleet.programming_latency;
  Deciseconds sequential(0);

  for (const auto& suite : manifest.suites) {
    Wave wave;
    wave.suite = suite.name;
    Deciseconds wave_span(0);

    bool replicate = campaign_mode == CampaignMode::stability &&
                     suite.divisibility.kind == Divisibility::Kind::replicated;

    if (replicate) {
      int copies = suite.divisibility.copies;
      if (copies > n_devices) {
        throw runtime_error_of("insufficient-capacity: suite '" + suite.name +
                               "' needs " + std::to_string(copies) +
                               " devices for replication, plan has " +
                               std::to_string(n_devices));
      }
      for (int c = 0; c < copies; ++c) {
        Shard s;
        s.suite = suite.name;
        s.lo = 0;
        s.hi = suite.total_tests;
        s.est_duration = suite.seq_duration;
        s.start = cursor;
        s.end = cursor + s.est_duration;
        wave.per_device[devices[c]].push_back(s);
      }
      wave_span = suite.seq_duration;
      sequential += suite.seq_duration * copies;
    } else if (!suite.divisibility.shardable() || n_devices == 1) {
      // Unified (and replicated-in-normal-mode) suites run whole on the
      // lowest-ordered device while the rest of the wave is empty.
      Shard s;
      s.suite = suite.name;
      s.lo = 0;
      s.hi = suite.total_tests;
      s.est_duration = suite.seq_duration;
      s.start = cursor;
      s.end = cursor + s.est_duration;
      wave.per_device[devices[0]].push_back(s);
      wave_span = s.est_duration;
      sequential += suite.seq_duration;
    } else {
      std::vector<Shard> shards = shard_suite(suite, n_devices);
      bool replay = plan_mode == PlanMode::replay &&
                    suite.recorded_parallel_duration.has_value();
      if (replay) {
        // Recorded wall time stands in for the (unknown, non-uniform) shard
        // timings: every shard of the wave occupies its device for exactly
        // the recorded parallel duration.
        for (auto& s : shards) s.est_duration = *suite.recorded_parallel_duration;
      }
      std::vector<Deciseconds> durations;
      durations.reserve(shards.size());
      for (const auto& s : shards) durations.push_back(s.est_duration);
      auto machines = lpt_partition(durations, n_devices);
      for (int m = 0; m < n_devices; ++m) {
        Deciseconds at = cursor;
        for (std::size_t item : machines[m]) {
          Shard s = shards[item];
          s.start = at;
          at += s.est_duration;
          s.end = at;
          wave.per_device[devices[m]].push_back(s);
        }
        wave_span = std::max(wave_span, at - cursor);
      }
      sequential += suite.seq_duration;
    }

    cursor += wave_span;
    p.assignment.waves.push_back(std::move(wave));
  }

  p.est_makespan = cursor;
  p.est_sequential = sequential;
  p.est_speedup = speedup(p.est_sequential, p.est_makespan);
  return p;
}

double speedup(Deciseconds sequential, Deciseconds parallel) {
  if (sequential <= Deciseconds(0) || parallel <= Deciseconds(0)) {
    throw runtime_error_of("speedup: durations must be positive");
  }
  return sequential.seconds() / parallel.seconds();
}

std::string emit_plan(const SchedulePlan& p) {
  YamlWriter w;
  char speedup_buf[32];
  std::snprintf(speedup_buf, sizeof speedup_buf, "%.2f", p.est_speedup);
  w.line(0, "mode: " + to_string(p.assignment.mode));
  w.line(0, "campaign_mode: " + to_string(p.campaign_mode));
  w.line(0, "devices: " + std::to_string(p.n_devices));
  w.line(0, "fleet: {nodes: " + std::to_string(p.fleet.nodes) +
                ", devices_per_node: " + std::to_string(p.fleet.devices_per_node) +
                ", programming_latency: " +
                p.fleet.programming_latency.to_string() + "}");
  w.line(0, "est_makespan: " + p.est_makespan.to_string_fixed());
  w.line(0, "est_sequential: " + p.est_sequential.to_string_fixed());
  w.line(0, std::string("est_speedup: ") + speedup_buf);
  w.line(0, std::string("multi_fpga_partitioned: ") +
                (p.multi_fpga_partitioned ? "true" : "false"));
  w.line(0, "waves:");
  for (const auto& wave : p.assignment.waves) {
    w.line(1, "- suite: " + wave.suite);
    w.line(2, "shards:");
    for (const auto& [device, shards] : wave.per_device) {
      for (const auto& s : shards) {
        w.line(3, "- {device: " + device.to_string() + ", lo: " +
                      std::to_string(s.lo) + ", hi: " + std::to_string(s.hi) +
                      ", est_duration: " + s.est_duration.to_string_fixed() +
                      ", start: " + s.start.to_string_fixed() +
                      ", end: " + s.end.to_string_fixed() + "}");
      }
    }
  }
  return w.str();
}

SchedulePlan parse_plan(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw config_error(std::string("plan syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw config_error("plan: expected a YAML map");

  SchedulePlan p;
  p.assignment.mode = parse_plan_mode(root["mode"].as<std::string>());
  p.campaign_mode = parse_campaign_mode(root["campaign_mode"].as<std::string>());
  p.n_devices = root["devices"].as<int>();
  YAML::Node f = root["fleet"];
  p.fleet.nodes = f["nodes"].as<int>();
  p.fleet.devices_per_node = f["devices_per_node"].as<int>();
  p.fleet.programming_latency =
      parse_duration(f["programming_latency"].as<std::string>());
  p.est_makespan = parse_duration(root["est_makespan"].as<std::string>());
  p.est_sequential = parse_duration(root["est_sequential"].as<std::string>());
  p.est_speedup = root["est_speedup"].as<double>();
  p.multi_fpga_partitioned = root["multi_fpga_partitioned"].as<bool>();

  for (const auto& wn : root["waves"]) {
    Wave wave;
    wave.suite = wn["suite"].as<std::string>();
    for (const auto& sn : wn["shards"]) {
      Shard s;
      s.suite = wave.suite;
      DeviceId device = parse_device_id(sn["device"].as<std::string>());
      s.lo = sn["lo"].as<int>();
      s.hi = sn["hi"].as<int>();
      s.est_duration = parse_duration(sn["est_duration"].as<std::string>());
      s.start = parse_duration(sn["start"].as<std::string>());
      s.end = parse_duration(sn["end"].as<std::string>());
      wave.per_device[device].push_back(s);
    }
    p.assignment.waves.push_back(std::move(wave));
  }
  return p;
}

}  // namespace fleetreg

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fleetreg/fleet.hpp"
#include "fleetreg/manifest.hpp"

namespace fleetreg {

enum class PlanMode { model, replay };
enum class CampaignMode { normal, stability };

struct Shard {
  std::string suite;
  int lo = 0;  // half-open test index range [lo, hi)
  int hi = 0;
  Deciseconds est_duration;
  // Offsets from campaign start, filled in by plan(); the engine reproduces
  // them exactly when no failures occur.
  Deciseconds start;
  Deciseconds end;

  int test_count() const { return hi - lo; }
  bool operator==(const Shard&) const = default;
};

// Suites execute as ordered waves with a barrier between them: wave k+1
// starts when the slowest device of wave k finishes. Within a wave each
// device runs its shards back to back.
struct Wave {
  std::string suite;
  std::map<DeviceId, std::vector<Shard>> per_device;
};

struct Assignment {
  std::vector<Wave> waves;
  PlanMode mode = PlanMode::model;
};

struct SchedulePlan {
  Assignment assignment;
  FleetSpec fleet;
  int n_devices = 0;
  CampaignMode campaign_mode = CampaignMode::normal;
  Deciseconds est_makespan;
  Deciseconds est_sequential;
  double est_speedup = 1.0;
  bool multi_fpga_partitioned = false;
};

// Splits a divisible suite into min(n_devices, total_tests) contiguous
// shards whose test counts differ by at most one. Throws on unified or
// replicated suites.
std::vector<Shard> shard_suite(const TestSuite& suite, int n_devices);

// Longest-processing-time greedy: items sorted by duration descending (ties
// by lower index), each placed on the least-loaded machine (ties by lower
// machine index).
std::vector<std::vector<std::size_t>> lpt_partition(
    const std::vector<Deciseconds>& durations, int machines);

Deciseconds estimate_makespan(const Assignment& assignment,
                              Deciseconds programming_latency);

SchedulePlan plan(const Manifest& manifest, const FleetSpec& fleet,
                  CampaignMode campaign_mode, int n_devices,
                  PlanMode plan_mode);

double speedup(Deciseconds sequential, Deciseconds parallel);

std::string emit_plan(const SchedulePlan& p);
SchedulePlan parse_plan(const std::string& text);

std::string to_string(PlanMode m);
std::string to_string(CampaignMode m);

}  // namespace fleetreg

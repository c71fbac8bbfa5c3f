#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fleetreg/duration.hpp"

namespace fleetreg {

enum class SuiteCategory { integration, baremetal, os };

// How a suite may be distributed across devices. Replicated suites behave
// like unified ones in normal runs; in stability runs they are executed as
// `copies` simultaneous whole copies on distinct devices.
struct Divisibility {
  enum class Kind { divisible, unified, replicated };
  Kind kind = Kind::divisible;
  int copies = 0;  // meaningful only for replicated

  static Divisibility divisible() { return {Kind::divisible, 0}; }
  static Divisibility unified() { return {Kind::unified, 0}; }
  static Divisibility replicated(int n) { return {Kind::replicated, n}; }

  bool shardable() const { return kind == Kind::divisible; }
  bool operator==(const Divisibility&) const = default;
};

struct TestSuite {
  std::string name;
  SuiteCategory category = SuiteCategory::baremetal;
  int total_tests = 0;
  Deciseconds seq_duration;
  Divisibility divisibility;
  double failure_threshold = 0.0;
  std::vector<Deciseconds> per_test_durations;  // empty = uniform model
  // Measured wall time of this suite when spread over the reference parallel
  // fleet; drives replay-mode scheduling when present.
  std::optional<Deciseconds> recorded_parallel_duration;

  bool operator==(const TestSuite&) const = default;
};

enum class StageKind { lint, simulation, uvm, bitstream, fpga_test, drops };

struct StageSpec {
  std::string name;
  StageKind kind = StageKind::lint;
  std::vector<std::string> depends_on;
  Deciseconds nominal_duration;

  bool operator==(const StageSpec&) const = default;
};

struct FleetSpec {
  int nodes = 0;
  int devices_per_node = 0;
  Deciseconds programming_latency;

  int total_devices() const { return nodes * devices_per_node; }
  bool operator==(const FleetSpec&) const = default;
};

struct CoverageRecord {
  double statements = 0.0;
  double branches = 0.0;
  double toggle = 0.0;
  double total = 0.0;

  bool operator==(const CoverageRecord&) const = default;
};

struct Manifest {
  int schema_version = 1;
  FleetSpec fleet_default;
  std::vector<StageSpec> stages;
  std::vector<TestSuite> suites;
  // Externally stated sequential total, kept alongside the column sum when
  // the two disagree; reports carry the discrepancy as a note.
  std::optional<Deciseconds> recorded_sequential_total;
  std::optional<CoverageRecord> coverage;

  bool operator==(const Manifest&) const = default;

  const TestSuite* find_suite(const std::string& name) const;
  const StageSpec* find_stage(const std::string& name) const;
};

struct Violation {
  std::string code;  // stable machine-readable code, e.g. "threshold-out-of-range"
  std::string path;  // field path, e.g. "suites[3].failure_threshold"
  std::string message;
};

// Throws Error(config) on syntax errors (with line/column), unknown keys,
// type errors, or schema_version mismatch. Invariant violations beyond basic
// typing are reported by validate_manifest instead.
Manifest parse_manifest(const std::string& text);

std::string emit_manifest(const Manifest& m);

std::vector<Violation> validate_manifest(const Manifest& m);

// The built-in campaign: 14 suites with the measured single-device and
// eight-device wall times of the BZL regression run.
Manifest builtin_bzl_manifest();

std::string to_string(SuiteCategory c);
std::string to_string(StageKind k);
std::string to_string(const Divisibility& d);

}  // namespace fleetreg

#include "fleetreg/manifest.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fleetreg/error.hpp"
#include "fleetreg/yaml_writer.hpp"

namespace fleetreg {

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& path,
                          const std::string& reason) {
  std::ostringstream os;
  os << path << ": " << reason;
  if (node.Mark().line >= 0) {
    os << " (line " << node.Mark().line + 1 << ", column "
       << node.Mark().column + 1 << ")";
  }
  throw config_error(os.str());
}

void check_keys(const YAML::Node& map, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!map.IsMap()) fail_at(map, path, "expected a map");
  for (const auto& kv : map) {
    std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail_at(kv.first, path + "." + key, "unknown key");
  }
}

YAML::Node require(const YAML::Node& map, const std::string& path,
                   const std::string& key) {
  YAML::Node v = map[key];
  if (!v) fail_at(map, path + "." + key, "missing required key");
  return v;
}

std::string get_string(const YAML::Node& map, const std::string& path,
                       const std::string& key) {
  YAML::Node v = require(map, path, key);
  if (!v.IsScalar()) fail_at(v, path + "." + key, "expected a string");
  return v.as<std::string>();
}

long get_int(const YAML::Node& map, const std::string& path,
             const std::string& key) {
  YAML::Node v = require(map, path, key);
  try {
    return v.as<long>();
  } catch (const YAML::Exception&) {
    fail_at(v, path + "." + key, "expected an integer");
  }
}

double get_double(const YAML::Node& map, const std::string& path,
                  const std::string& key) {
  YAML::Node v = require(map, path, key);
  try {
    return v.as<double>();
  } catch (const YAML::Exception&) {
    fail_at(v, path + "." + key, "expected a number");
  }
}

Deciseconds get_duration(const YAML::Node& map, const std::string& path,
                         const std::string& key) {
  YAML::Node v = require(map, path, key);
  if (!v.IsScalar()) fail_at(v, path + "." + key, "expected a duration");
  try {
    return parse_duration(v.as<std::string>());
  } catch (const Error&) {
    fail_at(v, path + "." + key, "expected decimal seconds");
  }
}

SuiteCategory parse_category(const YAML::Node& node, const std::string& path,
                             const std::string& text) {
  if (text == "integration") return SuiteCategory::integration;
  if (text == "baremetal") return SuiteCategory::baremetal;
  if (text == "os") return SuiteCategory::os;
  fail_at(node, path, "unknown category '" + text + "'");
}

StageKind parse_stage_kind(const YAML::Node& node, const std::string& path,
                           const std::string& text) {
  if (text == "lint") return StageKind::lint;
  if (text == "simulation") return StageKind::simulation;
  if (text == "uvm") return StageKind::uvm;
  if (text == "bitstream") return StageKind::bitstream;
  if (text == "fpga_test") return StageKind::fpga_test;
  if (text == "drops") return StageKind::drops;
  fail_at(node, path, "unknown stage kind '" + text + "'");
}

Divisibility parse_divisibility(const YAML::Node& node, const std::string& path,
                                const std::string& text) {
  if (text == "divisible") return Divisibility::divisible();
  if (text == "unified") return Divisibility::unified();
  if (text.rfind("replicated(", 0) == 0 && text.back() == ')') {
    int n = 0;
    try {
      n = std::stoi(text.substr(11, text.size() - 12));
    } catch (const std::exception&) {
      fail_at(node, path, "bad replication count in '" + text + "'");
    }
    return Divisibility::replicated(n);
  }
  fail_at(node, path, "unknown divisibility '" + text + "'");
}

FleetSpec parse_fleet_spec(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"nodes", "devices_per_node", "programming_latency"});
  FleetSpec f;
  f.nodes = static_cast<int>(get_int(node, path, "nodes"));
  f.devices_per_node = static_cast<int>(get_int(node, path, "devices_per_node"));
  f.programming_latency = node["programming_latency"]
                              ? get_duration(node, path, "programming_latency")
                              : Deciseconds(0);
  return f;
}

}  // namespace

const TestSuite* Manifest::find_suite(const std::string& name) const {
  for (const auto& s : suites)
    if (s.name == name) return &s;
  return nullptr;
}

const StageSpec* Manifest::find_stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

std::string to_string(SuiteCategory c) {
  switch (c) {
    case SuiteCategory::integration: return "integration";
    case SuiteCategory::baremetal: return "baremetal";
    case SuiteCategory::os: return "os";
  }
  return "?";
}

std::string to_string(StageKind k) {
  switch (k) {
    case StageKind::lint: return "lint";
    case StageKind::simulation: return "simulation";
    case StageKind::uvm: return "uvm";
    case StageKind::bitstream: return "bitstream";
    case StageKind::fpga_test: return "fpga_test";
    case StageKind::drops: return "drops";
  }
  return "?";
}

std::string to_string(const Divisibility& d) {
  switch (d.kind) {
    case Divisibility::Kind::divisible: return "divisible";
    case Divisibility::Kind::unified: return "unified";
    case Divisibility::Kind::replicated:
      return "replicated(" + std::to_string(d.copies) + ")";
  }
  return "?";
}

Manifest parse_manifest(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw config_error(std::string("manifest syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw config_error("manifest: expected a YAML map");
  check_keys(root, "manifest",
             {"schema_version", "fleet", "stages", "suites",
              "recorded_sequential_total", "coverage"});

  Manifest m;
  m.schema_version = static_cast<int>(get_int(root, "manifest", "schema_version"));
  if (m.schema_version != kSchemaVersion) {
    throw config_error("manifest.schema_version: expected " +
                       std::to_string(kSchemaVersion) + ", got " +
                       std::to_string(m.schema_version));
  }
  m.fleet_default = parse_fleet_spec(require(root, "manifest", "fleet"), "fleet");

  YAML::Node stages = root["stages"];
  if (stages) {
    if (!stages.IsSequence()) fail_at(stages, "stages", "expected a sequence");
    int i = 0;
    for (const auto& sn : stages) {
      std::string path = "stages[" + std::to_string(i++) + "]";
      check_keys(sn, path, {"name", "kind", "depends_on", "nominal_duration"});
      StageSpec st;
      st.name = get_string(sn, path, "name");
      st.kind = parse_stage_kind(sn["kind"], path + ".kind",
                                 get_string(sn, path, "kind"));
      if (sn["depends_on"]) {
        if (!sn["depends_on"].IsSequence())
          fail_at(sn["depends_on"], path + ".depends_on", "expected a sequence");
        for (const auto& d : sn["depends_on"])
          st.depends_on.push_back(d.as<std::string>());
      }
      st.nominal_duration = get_duration(sn, path, "nominal_duration");
      m.stages.push_back(std::move(st));
    }
  }

  YAML::Node suites = require(root, "manifest", "suites");
  if (!suites.IsSequence()) fail_at(suites, "suites", "expected a sequence");
  int i = 0;
  for (const auto& sn : suites) {
    std::string path = "suites[" + std::to_string(i++) + "]";
    check_keys(sn, path,
               {"name", "category", "total_tests", "seq_duration", "divisibility",
                "failure_threshold", "per_test_durations",
                "recorded_parallel_duration"});
    TestSuite s;
    s.name = get_string(sn, path, "name");
    s.category = parse_category(sn["category"], path + ".category",
                                get_string(sn, path, "category"));
    s.total_tests = static_cast<int>(get_int(sn, path, "total_tests"));
    s.seq_duration = get_duration(sn, path, "seq_duration");
    s.divisibility = parse_divisibility(sn["divisibility"], path + ".divisibility",
                                        get_string(sn, path, "divisibility"));
    s.failure_threshold =
        sn["failure_threshold"] ? get_double(sn, path, "failure_threshold") : 0.0;
    if (sn["per_test_durations"]) {
      if (!sn["per_test_durations"].IsSequence())
        fail_at(sn["per_test_durations"], path + ".per_test_durations",
                "expected a sequence");
      for (const auto& d : sn["per_test_durations"])
        s.per_test_durations.push_back(parse_duration(d.as<std::string>()));
    }
    if (sn["recorded_parallel_duration"]) {
      s.recorded_parallel_duration =
          get_duration(sn, path, "recorded_parallel_duration");
    }
    m.suites.push_back(std::move(s));
  }

  if (root["recorded_sequential_total"]) {
    m.recorded_sequential_total =
        get_duration(root, "manifest", "recorded_sequential_total");
  }
  if (root["coverage"]) {
    YAML::Node cov = root["coverage"];
    check_keys(cov, "coverage", {"statements", "branches", "toggle", "total"});
    CoverageRecord c;
    c.statements = get_double(cov, "coverage", "statements");
    c.branches = get_double(cov, "coverage", "branches");
    c.toggle = get_double(cov, "coverage", "toggle");
    c.total = get_double(cov, "coverage", "total");
    m.coverage = c;
  }
  return m;
}

namespace {

std::string num(double v) {
  // thresholds and coverage: shortest plain decimal
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string emit_manifest(const Manifest& m) {
  YamlWriter w;
  w.line(0, "schema_version: " + std::to_string(m.schema_version));
  w.line(0, "fleet: {nodes: " + std::to_string(m.fleet_default.nodes) +
                ", devices_per_node: " +
                std::to_string(m.fleet_default.devices_per_node) +
                ", programming_latency: " +
                m.fleet_default.programming_latency.to_string() + "}");
  if (m.stages.empty()) {
    w.line(0, "stages: []");
  } else {
    w.line(0, "stages:");
    for (const auto& st : m.stages) {
      std::string deps;
      for (const auto& d : st.depends_on) {
        if (!deps.empty()) deps += ", ";
        deps += d;
      }
      w.line(1, "- {name: " + st.name + ", kind: " + to_string(st.kind) +
                    ", depends_on: [" + deps + "], nominal_duration: " +
                    st.nominal_duration.to_string() + "}");
    }
  }
  w.line(0, "suites:");
  for (const auto& s : m.suites) {
    std::string entry = "- {name: " + s.name + ", category: " +
                        to_string(s.category) + ", total_tests: " +
                        std::to_string(s.total_tests) + ", seq_duration: " +
                        s.seq_duration.to_string() + ", divisibility: " +
                        to_string(s.divisibility) + ", failure_threshold: " +
                        num(s.failure_threshold);
    if (s.recorded_parallel_duration) {
      entry += ", recorded_parallel_duration: " +
               s.recorded_parallel_duration->to_string();
    }
    if (!s.per_test_durations.empty()) {
      entry += ", per_test_durations: [";
      for (std::size_t i = 0; i < s.per_test_durations.size(); ++i) {
        if (i) entry += ", ";
        entry += s.per_test_durations[i].to_string();
      }
      entry += "]";
    }
    entry += "}";
    w.line(1, entry);
  }
  if (m.recorded_sequential_total) {
    w.line(0, "recorded_sequential_total: " +
                  m.recorded_sequential_total->to_string());
  }
  if (m.coverage) {
    w.line(0, "coverage: {statements: " + num(m.coverage->statements) +
                  ", branches: " + num(m.coverage->branches) +
                  ", toggle: " + num(m.coverage->toggle) +
                  ", total: " + num(m.coverage->total) + "}");
  }
  return w.str();
}

std::vector<Violation> validate_manifest(const Manifest& m) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string path, std::string msg) {
    out.push_back({std::move(code), std::move(path), std::move(msg)});
  };

  if (m.suites.empty()) add("empty-suites", "suites", "at least one suite required");

  std::map<std::string, int> suite_seen;
  for (std::size_t i = 0; i < m.suites.size(); ++i) {
    const TestSuite& s = m.suites[i];
    std::string path = "suites[" + std::to_string(i) + "]";
    auto [it, fresh] = suite_seen.emplace(s.name, static_cast<int>(i));
    if (!fresh) {
      add("duplicate-suite-name", path + ".name",
          "suite '" + s.name + "' already defined at suites[" +
              std::to_string(it->second) + "]");
    }
    if (s.total_tests < 1)
      add("test-count-out-of-range", path + ".total_tests", "must be >= 1");
    if (s.seq_duration <= Deciseconds(0))
      add("nonpositive-duration", path + ".seq_duration", "must be > 0");
    if (s.failure_threshold < 0.0 || s.failure_threshold > 1.0)
      add("threshold-out-of-range", path + ".failure_threshold",
          "must be within [0, 1]");
    if (s.divisibility.kind == Divisibility::Kind::replicated &&
        s.divisibility.copies < 1)
      add("replication-count-out-of-range", path + ".divisibility",
          "replication count must be >= 1");
    if (!s.per_test_durations.empty()) {
      if (static_cast<int>(s.per_test_durations.size()) != s.total_tests) {
        add("per-test-durations-length", path + ".per_test_durations",
            "length must equal total_tests");
      }
      Deciseconds sum(0);
      for (auto d : s.per_test_durations) sum += d;
      double rel = std::abs(sum.seconds() - s.seq_duration.seconds()) /
                   std::max(1e-9, s.seq_duration.seconds());
      if (rel > 0.005) {
        add("per-test-durations-sum", path + ".per_test_durations",
            "sum " + sum.to_string() + " differs from seq_duration " +
                s.seq_duration.to_string() + " by more than 0.5%");
      }
    }
  }

  std::map<std::string, int> stage_index;
  for (std::size_t i = 0; i < m.stages.size(); ++i) {
    const StageSpec& st = m.stages[i];
    std::string path = "stages[" + std::to_string(i) + "]";
    auto [it, fresh] = stage_index.emplace(st.name, static_cast<int>(i));
    if (!fresh) {
      add("duplicate-stage-name", path + ".name",
          "stage '" + st.name + "' already defined");
    }
    for (const auto& dep : st.depends_on) {
      if (!m.find_stage(dep))
        add("unknown-stage-dependency", path + ".depends_on",
            "stage '" + dep + "' is not defined");
    }
  }

  // DAG check over stage names: colors 0 unvisited, 1 in progress, 2 done.
  std::map<std::string, int> color;
  bool cycle = false;
  std::string cycle_at;
  auto dfs = [&](auto&& self, const StageSpec& st) -> void {
    int& c = color[st.name];
    if (c == 1) {
      cycle = true;
      cycle_at = st.name;
      return;
    }
    if (c == 2) return;
    c = 1;
    for (const auto& dep : st.depends_on) {
      if (const StageSpec* d = m.find_stage(dep)) self(self, *d);
      if (cycle) break;
    }
    c = 2;
  };
  for (const auto& st : m.stages) {
    if (!cycle) dfs(dfs, st);
  }
  if (cycle)
    add("stage-dag-cycle", "stages",
        "dependency cycle through stage '" + cycle_at + "'");

  if (m.fleet_default.nodes < 1 || m.fleet_default.devices_per_node < 1)
    add("fleet-empty", "fleet", "nodes and devices_per_node must be >= 1");
  if (m.fleet_default.programming_latency < Deciseconds(0))
    add("negative-programming-latency", "fleet.programming_latency",
        "must be >= 0");

  if (m.coverage) {
    const std::pair<double, const char*> fields[] = {
        {m.coverage->statements, "statements"},
        {m.coverage->branches, "branches"},
        {m.coverage->toggle, "toggle"},
        {m.coverage->total, "total"}};
    for (auto [v, name] : fields) {
      if (v < 0.0 || v > 100.0)
        add("coverage-out-of-range", std::string("coverage.") + name,
            "must be within [0, 100]");
    }
  }
  return out;
}

Manifest builtin_bzl_manifest() {
  Manifest m;
  m.schema_version = kSchemaVersion;
  m.fleet_default = {12, 8, Deciseconds(0)};

  m.stages = {
      {"lint", StageKind::lint, {}, Deciseconds(3000)},
      {"simulation", StageKind::simulation, {"lint"}, Deciseconds(18000)},
      {"uvm", StageKind::uvm, {"lint"}, Deciseconds(36000)},
      {"bitstream", StageKind::bitstream, {"lint"}, Deciseconds(72000)},
      {"fpga_test", StageKind::fpga_test, {"bitstream"}, Deciseconds(31696)},
      {"drops", StageKind::drops, {"uvm", "fpga_test"}, Deciseconds(6000)},
  };

  auto suite = [](std::string name, SuiteCategory cat, int tests, std::int64_t seq_ds,
                  Divisibility div,
                  std::optional<std::int64_t> rec_ds = std::nullopt) {
    TestSuite s;
    s.name = std::move(name);
    s.category = cat;
    s.total_tests = tests;
    s.seq_duration = Deciseconds(seq_ds);
    s.divisibility = div;
    s.failure_threshold = 0.0;
    if (rec_ds) s.recorded_parallel_duration = Deciseconds(*rec_ds);
    return s;
  };

  const auto I = SuiteCategory::integration;
  const auto B = SuiteCategory::baremetal;
  const auto O = SuiteCategory::os;
  const auto div = Divisibility::divisible();
  const auto uni = Divisibility::unified();
  const auto rep8 = Divisibility::replicated(8);

  m.suites = {
      suite("spi", I, 1, 590, uni),
      suite("jtag-debug", I, 109, 11020, div, 1380),
      suite("vec-axpy", B, 50, 5240, div, 655),
      suite("vec-gemm", B, 70, 7280, div, 910),
      suite("vec-stream", B, 50, 5360, div, 670),
      suite("vec-somier", B, 20, 2080, div, 260),
      suite("spmv", B, 40, 4150, div, 535),
      suite("litmus", B, 1370, 138920, div, 17365),
      suite("rv-tests", B, 18, 1320, div, 165),
      suite("ethernet-driver", O, 6, 5410, div, 916),
      suite("linux-boot", O, 1, 1150, rep8),
      suite("stress-ng", O, 1, 6700, rep8),
      suite("test_dd", O, 1, 220, rep8),
      suite("test_plic", O, 1, 180, rep8),
  };

  m.recorded_sequential_total = Deciseconds(187540);
  m.coverage = CoverageRecord{91.0, 82.0, 65.0, 80.0};
  return m;
}

}  // namespace fleetreg

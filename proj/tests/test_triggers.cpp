#include <doctest.h>

#include "fleetreg/error.hpp"
#include "fleetreg/triggers.hpp"

using namespace fleetreg;

namespace {

PipelineEvent mr_to_main() {
  PipelineEvent e;
  e.kind = EventKind::merge_request;
  e.target_branch = "main";
  return e;
}

PipelineEvent daily_schedule() {
  PipelineEvent e;
  e.kind = EventKind::schedule;
  e.variables = {{"schedule_name", "nightly"}, {"daily", "1"}};
  return e;
}

}  // namespace

TEST_CASE("classification covers every configuration") {
  struct Case {
    const char* what;
    PipelineEvent event;
    TriggerKind expected;
  };
  std::vector<Case> table;

  table.push_back({"MR to main, no labels", mr_to_main(), TriggerKind::Torture});

  PipelineEvent tagged;
  tagged.kind = EventKind::commit;
  tagged.commit_message_tags = {"verification"};
  table.push_back({"commit tagged verification", tagged, TriggerKind::Torture});

  table.push_back({"schedule with daily variable", daily_schedule(), TriggerKind::Daily});

  PipelineEvent weekly = mr_to_main();
  weekly.labels = {"weekly"};
  table.push_back({"weekly label", weekly, TriggerKind::Weekly});

  PipelineEvent stab;
  stab.kind = EventKind::manual_run;
  stab.variables = {{"stability_test", "1"}};
  stab.pinned_sha = "deadbeef";
  table.push_back({"stability variable with pinned sha", stab, TriggerKind::Stability});

  PipelineEvent plain;
  plain.kind = EventKind::commit;
  plain.target_branch = "feature/x";
  table.push_back({"plain branch commit", plain, TriggerKind::None});

  PipelineEvent mr_other = mr_to_main();
  mr_other.target_branch = "develop";
  table.push_back({"MR to a side branch", mr_other, TriggerKind::None});

  for (const auto& c : table) {
    CAPTURE(c.what);
    CHECK(classify_event(c.event) == c.expected);
    CHECK(classify_event(c.event) == classify_event(c.event));  // deterministic
  }
}

TEST_CASE("precedence: stability > weekly > daily > torture") {
  PipelineEvent e = daily_schedule();
  e.target_branch = "main";
  e.labels = {"weekly"};
  CHECK(classify_event(e) == TriggerKind::Weekly);
  e.variables["stability_test"] = "1";
  CHECK(classify_event(e) == TriggerKind::Stability);
  e.variables.erase("stability_test");
  e.labels.clear();
  CHECK(classify_event(e) == TriggerKind::Daily);
  e.variables.erase("daily");
  e.commit_message_tags = {"verification"};
  CHECK(classify_event(e) == TriggerKind::Torture);
}

TEST_CASE("job selection per configuration") {
  TriggerConfig cfg = builtin_trigger_config();

  JobSet daily = select_jobs(TriggerKind::Daily, cfg);
  CHECK(daily.jobs.count({StageKind::bitstream, "gen"}));
  CHECK(daily.jobs.count({StageKind::fpga_test, "daily"}));
  CHECK(daily.jobs.count({StageKind::lint, "standard"}));
  CHECK(daily.jobs.count({StageKind::simulation, "full"}));
  CHECK(daily.jobs.size() == 4);

  JobSet weekly = select_jobs(TriggerKind::Weekly, cfg);
  CHECK(weekly.jobs.count({StageKind::fpga_test, "performance-suite"}));
  CHECK(weekly.jobs.count({StageKind::fpga_test, "performance-validation"}));
  CHECK(weekly.jobs.count({StageKind::fpga_test, "8-cluster"}));

  JobSet torture = select_jobs(TriggerKind::Torture, cfg);
  CHECK(!torture.contains(StageKind::fpga_test));
  CHECK(!torture.contains(StageKind::bitstream));
  CHECK(torture.jobs.count({StageKind::simulation, "smoke"}));
  CHECK(torture.jobs.count({StageKind::uvm, "selective"}));

  JobSet stability = select_jobs(TriggerKind::Stability, cfg);
  CHECK(stability.jobs ==
        std::set<JobId>{{StageKind::fpga_test, "stability-extended"}});

  CHECK_THROWS_AS(select_jobs(TriggerKind::None, cfg), Error);
}

TEST_CASE("canonical job names") {
  CHECK(JobId{StageKind::bitstream, "gen"}.name() == "bitstream-gen");
  CHECK(JobId{StageKind::fpga_test, "daily"}.name() == "fpga-daily");
  CHECK(JobId{StageKind::simulation, "smoke"}.name() == "smoke-sim");
  CHECK(JobId{StageKind::uvm, "selective"}.name() == "selective-uvm");
}

TEST_CASE("disable controls") {
  Manifest m = builtin_bzl_manifest();
  TriggerConfig cfg = builtin_trigger_config();
  JobSet daily = select_jobs(TriggerKind::Daily, cfg);

  SUBCASE("no labels is the identity") {
    CHECK(apply_disable_controls(daily, {}, m.stages) == daily);
  }

  SUBCASE("no-bitstream-gen also removes dependent fpga jobs") {
    JobSet out = apply_disable_controls(daily, {"no-bitstream-gen"}, m.stages);
    CHECK(!out.contains(StageKind::bitstream));
    CHECK(!out.contains(StageKind::fpga_test));  // depends on bitstream
    CHECK(out.contains(StageKind::lint));
    CHECK(out.contains(StageKind::simulation));
  }

  SUBCASE("disable-uvm strips uvm jobs everywhere") {
    JobSet torture = select_jobs(TriggerKind::Torture, cfg);
    JobSet out = apply_disable_controls(torture, {"disable-uvm"}, m.stages);
    CHECK(!out.contains(StageKind::uvm));
    CHECK(out.contains(StageKind::lint));
  }

  SUBCASE("ci-test restricts to lint") {
    JobSet out = apply_disable_controls(daily, {"ci-test"}, m.stages);
    for (const auto& j : out.jobs) CHECK(j.stage_kind == StageKind::lint);
    CHECK(!out.jobs.empty());
  }

  SUBCASE("unrecognized labels warn and do nothing") {
    std::vector<std::string> warnings;
    JobSet out = apply_disable_controls(daily, {"wip"}, m.stages, &warnings);
    CHECK(out == daily);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("wip") != std::string::npos);
  }

  SUBCASE("idempotent and shrinking") {
    std::set<std::string> labels = {"no-bitstream-gen", "disable-uvm"};
    JobSet once = apply_disable_controls(daily, labels, m.stages);
    JobSet twice = apply_disable_controls(once, labels, m.stages);
    CHECK(once == twice);
    for (const auto& j : once.jobs) CHECK(daily.jobs.count(j));
  }
}

TEST_CASE("no output set contains an orphaned dependent") {
  // Removing a stage kind must remove everything downstream of it.
  Manifest m = builtin_bzl_manifest();
  TriggerConfig cfg = builtin_trigger_config();
  const std::set<std::string> label_sets[] = {
      {}, {"disable-uvm"}, {"no-bitstream-gen"}, {"disable-uvm", "no-bitstream-gen"}};
  for (TriggerKind k : {TriggerKind::Torture, TriggerKind::Daily,
                        TriggerKind::Weekly, TriggerKind::Stability}) {
    for (const auto& labels : label_sets) {
      JobSet out = apply_disable_controls(select_jobs(k, cfg), labels, m.stages);
      for (const auto& j : out.jobs) {
        for (const auto& st : m.stages) {
          if (st.kind != j.stage_kind) continue;
          for (const auto& dep : st.depends_on) {
            const StageSpec* d = m.find_stage(dep);
            REQUIRE(d);
            bool dep_disabled =
                (labels.count("disable-uvm") && d->kind == StageKind::uvm) ||
                (labels.count("no-bitstream-gen") && d->kind == StageKind::bitstream);
            CHECK(!dep_disabled);
          }
        }
      }
    }
  }
}

TEST_CASE("event parsing") {
  PipelineEvent e = parse_event(R"(
kind: manual
variables: {stability_test: "1"}
pinned_sha: abc123
)");
  CHECK(e.kind == EventKind::manual_run);
  CHECK(e.pinned_sha == "abc123");
  CHECK(classify_event(e) == TriggerKind::Stability);

  // schedule events must carry a schedule_name
  CHECK_THROWS_AS(parse_event("kind: schedule\n"), Error);
  CHECK_THROWS_AS(parse_event("kind: cron\n"), Error);
}

TEST_CASE("trigger config round-trips") {
  TriggerConfig cfg = builtin_trigger_config();
  std::string text = emit_trigger_config(cfg);
  TriggerConfig back = parse_trigger_config(text);
  CHECK(emit_trigger_config(back) == text);
  CHECK(back.jobs_by_kind.at(TriggerKind::Daily).size() == 4);
}

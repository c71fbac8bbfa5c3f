#include <doctest.h>

#include <random>

#include "fleetreg/error.hpp"
#include "fleetreg/fleet.hpp"

using namespace fleetreg;

TEST_CASE("init_fleet sizes") {
  Fleet big({12, 8, Deciseconds(0)});
  CHECK(big.device_order().size() == 96);
  for (DeviceId id : big.device_order()) {
    CHECK(std::holds_alternative<Free>(big.state(id)));
  }

  Fleet node({1, 8, Deciseconds(0)});
  CHECK(node.device_order().size() == 8);

  Fleet one({1, 1, Deciseconds(0)});
  CHECK(one.device_order().size() == 1);

  CHECK_THROWS_AS(Fleet({0, 8, Deciseconds(0)}), Error);
}

TEST_CASE("device ordering is by (node, slot)") {
  Fleet f({2, 2, Deciseconds(0)});
  auto order = f.device_order();
  REQUIRE(order.size() == 4);
  CHECK(order[0] == DeviceId{0, 0});
  CHECK(order[1] == DeviceId{0, 1});
  CHECK(order[2] == DeviceId{1, 0});
  CHECK(order[3] == DeviceId{1, 1});
  CHECK(order[3].to_string() == "n1d1");
}

TEST_CASE("legal transition chain") {
  Fleet f({1, 1, Deciseconds(0)});
  DeviceId d{0, 0};
  f.advance_clock(Deciseconds(100));

  auto s = f.transition(d, StartProgram{"b", Deciseconds(300)});
  REQUIRE(std::holds_alternative<Programming>(s));
  CHECK(std::get<Programming>(s).until == Deciseconds(400));  // now + latency

  s = f.transition(d, ProgramDone{});
  CHECK(std::get<Ready>(s).bitstream_id == "b");

  s = f.transition(d, StartJob{"j1"});
  CHECK(std::get<Running>(s).job_id == "j1");

  s = f.transition(d, JobDone{});
  CHECK(std::get<Ready>(s).bitstream_id == "b");

  s = f.transition(d, MarkFailed{"wedged"});
  CHECK(std::holds_alternative<Failed>(s));

  s = f.transition(d, Reset{});
  CHECK(std::holds_alternative<Free>(s));
}

TEST_CASE("illegal transitions error and leave state unchanged") {
  Fleet f({1, 1, Deciseconds(0)});
  DeviceId d{0, 0};
  f.transition(d, StartProgram{"b", Deciseconds(0)});
  f.transition(d, ProgramDone{});
  f.transition(d, StartJob{"j"});

  // Running + StartProgram is not an edge
  CHECK_THROWS_WITH_AS(f.transition(d, StartProgram{"b2", Deciseconds(0)}),
                       doctest::Contains("illegal-transition"), Error);
  CHECK(std::holds_alternative<Running>(f.state(d)));

  CHECK_THROWS_AS(f.transition(DeviceId{5, 5}, Reset{}), Error);
}

TEST_CASE("random event sequences never corrupt the state machine") {
  std::mt19937 rng(42);
  Fleet f({2, 4, Deciseconds(0)});
  auto devices = f.device_order();
  std::uniform_int_distribution<int> pick_device(0, 7);
  std::uniform_int_distribution<int> pick_event(0, 5);

  auto legal = [](const DeviceState& s, int ev) {
    switch (ev) {
      case 0: return std::holds_alternative<Free>(s);         // StartProgram
      case 1: return std::holds_alternative<Programming>(s);  // ProgramDone
      case 2: return std::holds_alternative<Ready>(s);        // StartJob
      case 3: return std::holds_alternative<Running>(s);      // JobDone
      case 4: return true;                                    // MarkFailed
      case 5: return std::holds_alternative<Failed>(s);       // Reset
    }
    return false;
  };

  for (int step = 0; step < 5000; ++step) {
    DeviceId d = devices[pick_device(rng)];
    int ev = pick_event(rng);
    DeviceState before = f.state(d);
    DeviceEvent event;
    switch (ev) {
      case 0: event = StartProgram{"b", Deciseconds(1)}; break;
      case 1: event = ProgramDone{}; break;
      case 2: event = StartJob{"j"}; break;
      case 3: event = JobDone{}; break;
      case 4: event = MarkFailed{"x"}; break;
      case 5: event = Reset{}; break;
    }
    if (legal(before, ev)) {
      CHECK_NOTHROW(f.transition(d, event));
    } else {
      CHECK_THROWS_AS(f.transition(d, event), Error);
      CHECK(f.state(d) == before);
    }
    CHECK(f.device_order().size() == 8);
  }
}

TEST_CASE("acquire prefers the lowest-ordered candidates") {
  Fleet fresh({1, 8, Deciseconds(0)});
  auto got = fresh.acquire(8, "b");
  CHECK(got == fresh.device_order());

  // node 0 slots 0-3 busy: expect node 0 slots 4-7 then node 1 slots 0-3
  Fleet f({12, 8, Deciseconds(0)});
  for (int s = 0; s < 4; ++s) {
    DeviceId d{0, s};
    f.transition(d, StartProgram{"b", Deciseconds(0)});
    f.transition(d, ProgramDone{});
    f.transition(d, StartJob{"j"});
  }
  auto eight = f.acquire(8, "b");
  std::vector<DeviceId> expected = {{0, 4}, {0, 5}, {0, 6}, {0, 7},
                                    {1, 0}, {1, 1}, {1, 2}, {1, 3}};
  CHECK(eight == expected);

  // deterministic
  CHECK(f.acquire(8, "b") == eight);
}

TEST_CASE("acquire reports the available count on insufficient capacity") {
  Fleet f({1, 8, Deciseconds(0)});
  CHECK_THROWS_WITH_AS(f.acquire(9, "b"),
                       doctest::Contains("insufficient-capacity"), Error);
  CHECK_THROWS_WITH_AS(f.acquire(9, "b"), doctest::Contains("available 8"), Error);
}

TEST_CASE("failed devices are excluded until reset") {
  Fleet f({1, 2, Deciseconds(0)});
  f.transition({0, 0}, MarkFailed{"wedged"});
  auto got = f.acquire(1, "b");
  CHECK(got == std::vector<DeviceId>{{0, 1}});
  CHECK_THROWS_AS(f.acquire(2, "b"), Error);
  f.transition({0, 0}, Reset{});
  CHECK(f.acquire(2, "b").size() == 2);
}

TEST_CASE("ready devices with a different bitstream are not candidates") {
  Fleet f({1, 2, Deciseconds(0)});
  f.transition({0, 0}, StartProgram{"other", Deciseconds(0)});
  f.transition({0, 0}, ProgramDone{});
  auto got = f.acquire(1, "b");
  CHECK(got == std::vector<DeviceId>{{0, 1}});
  CHECK(f.acquire(1, "other") == std::vector<DeviceId>{{0, 0}});
}

TEST_CASE("fleet owner serializes mutation") {
  FleetOwner owner({1, 2, Deciseconds(0)});
  owner.apply({0, 0}, StartProgram{"b", Deciseconds(5)});
  Fleet snap = owner.snapshot();
  CHECK(std::holds_alternative<Programming>(snap.state({0, 0})));
  CHECK(std::holds_alternative<Free>(snap.state({0, 1})));
}

TEST_CASE("snapshot export uses n{node}d{slot} keys") {
  Fleet f({1, 2, Deciseconds(0)});
  f.transition({0, 1}, MarkFailed{"x"});
  std::string snap = f.snapshot_yaml();
  CHECK(snap.find("n0d0: Free") != std::string::npos);
  CHECK(snap.find("n0d1: \"Failed(x)\"") != std::string::npos);
}

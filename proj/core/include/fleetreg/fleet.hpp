#pragma once

#include <map>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "fleetreg/duration.hpp"
#include "fleetreg/manifest.hpp"

namespace fleetreg {

struct DeviceId {
  int node_index = 0;
  int slot_index = 0;

  auto operator<=>(const DeviceId&) const = default;
  std::string to_string() const;  // "n{node}d{slot}"
};

// Lifecycle states. Legal edges: Free->Programming, Programming->Ready,
// Ready->Running, Running->Ready, any->Failed, Failed->Free (reset).
struct Free {
  bool operator==(const Free&) const = default;
};
struct Programming {
  std::string bitstream_id;
  Deciseconds until;
  bool operator==(const Programming&) const = default;
};
struct Ready {
  std::string bitstream_id;
  bool operator==(const Ready&) const = default;
};
struct Running {
  std::string job_id;
  bool operator==(const Running&) const = default;
};
struct Failed {
  std::string reason;
  bool operator==(const Failed&) const = default;
};

using DeviceState = std::variant<Free, Programming, Ready, Running, Failed>;

std::string to_string(const DeviceState& s);

struct StartProgram {
  std::string bitstream_id;
  Deciseconds latency;
};
struct ProgramDone {};
struct StartJob {
  std::string job_id;
};
struct JobDone {};
struct MarkFailed {
  std::string reason;
};
struct Reset {};

using DeviceEvent =
    std::variant<StartProgram, ProgramDone, StartJob, JobDone, MarkFailed, Reset>;

class Fleet {
 public:
  explicit Fleet(FleetSpec spec);

  const FleetSpec& spec() const { return spec_; }
  Deciseconds clock() const { return clock_; }
  void advance_clock(Deciseconds to);

  // Devices in (node_index, slot_index) order.
  std::vector<DeviceId> device_order() const;
  const DeviceState& state(DeviceId id) const;

  // Applies one event; throws Error(runtime) on an unknown device or an
  // illegal edge (state is left untouched). Returns the new state.
  const DeviceState& transition(DeviceId id, const DeviceEvent& event);

  // The n lowest-ordered devices that are Free or Ready(bitstream_id).
  // Throws Error(runtime) "insufficient-capacity" naming the available count.
  std::vector<DeviceId> acquire(int n, const std::string& bitstream_id) const;

  // "n0d0: Ready(bzl)" style map, keys in device order.
  std::string snapshot_yaml() const;

 private:
  FleetSpec spec_;
  std::map<DeviceId, DeviceState> states_;
  // bitstream a Running device returns to Ready with
  std::map<DeviceId, std::string> pending_bitstream_;
  Deciseconds clock_;
};

// Serialized owner: all mutation funnels through one mutex; readers get
// value snapshots.
class FleetOwner {
 public:
  explicit FleetOwner(FleetSpec spec) : fleet_(spec) {}

  DeviceState apply(DeviceId id, const DeviceEvent& event) {
    std::lock_guard lock(mu_);
    return fleet_.transition(id, event);
  }

  Fleet snapshot() const {
    std::lock_guard lock(mu_);
    return fleet_;
  }

  template <typename F>
  auto with(F&& f) {
    std::lock_guard lock(mu_);
    return f(fleet_);
  }

 private:
  mutable std::mutex mu_;
  Fleet fleet_;
};

}  // namespace fleetreg

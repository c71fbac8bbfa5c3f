#include "fleetreg/fleet.hpp"

#include <sstream>

#include "fleetreg/error.hpp"
#include "fleetreg/yaml_writer.hpp"

namespace fleetreg {

std::string DeviceId::to_string() const {
  return "n" + std::to_string(node_index) + "d" + std::to_string(slot_index);
}

std::string to_string(const DeviceState& s) {
  struct Visitor {
    std::string operator()(const Free&) const { return "Free"; }
    std::string operator()(const Programming& p) const {
      return "Programming(" + p.bitstream_id + ", until=" + p.until.to_string() + ")";
    }
    std::string operator()(const Ready& r) const {
      return "Ready(" + r.bitstream_id + ")";
    }
    std::string operator()(const Running& r) const {
      return "Running(" + r.job_id + ")";
    }
    std::string operator()(const Failed& f) const {
      return "Failed(" + f.reason + ")";
    }
  };
  return std::visit(Visitor{}, s);
}

namespace {

std::string event_name(const DeviceEvent& e) {
  struct Visitor {
    std::string operator()(const StartProgram&) const { return "StartProgram"; }
    std::string operator()(const ProgramDone&) const { return "ProgramDone"; }
    std::string operator()(const StartJob&) const { return "StartJob"; }
    std::string operator()(const JobDone&) const { return "JobDone"; }
    std::string operator()(const MarkFailed&) const { return "MarkFailed"; }
    std::string operator()(const Reset&) const { return "Reset"; }
  };
  return std::visit(Visitor{}, e);
}

}  // namespace

Fleet::Fleet(FleetSpec spec) : spec_(spec) {
  if (spec_.nodes < 1 || spec_.devices_per_node < 1) {
    throw config_error("fleet: nodes and devices_per_node must be >= 1");
  }
  for (int n = 0; n < spec_.nodes; ++n) {
    for (int d = 0; d < spec_.devices_per_node; ++d) {
      states_.emplace(DeviceId{n, d}, Free{});
    }
  }
}

void Fleet::advance_clock(Deciseconds to) {
  if (to > clock_) clock_ = to;
}

std::vector<DeviceId> Fleet::device_order() const {
  std::vector<DeviceId> out;
  out.reserve(states_.size());
  for (const auto& [id, _] : states_) out.push_back(id);
  return out;
}

const DeviceState& Fleet::state(DeviceId id) const {
  auto it = states_.find(id);
  if (it == states_.end()) {
    throw runtime_error_of("unknown device " + id.to_string());
  }
  return it->second;
}

const DeviceState& Fleet::transition(DeviceId id, const DeviceEvent& event) {
  auto it = states_.find(id);
  if (it == states_.end()) {
    throw runtime_error_of("unknown device " + id.to_string());
  }
  DeviceState& s = it->second;

  auto illegal = [&]() -> Error {
    return runtime_error_of("illegal-transition: device " + id.to_string() +
                            " in state " + fleetreg::to_string(s) +
                            " cannot take " + event_name(event));
  };

  // any -> Failed
  if (const auto* mf = std::get_if<MarkFailed>(&event)) {
    s = Failed{mf->reason};
    return s;
  }

  if (const auto* sp = std::get_if<StartProgram>(&event)) {
    if (!std::holds_alternative<Free>(s)) throw illegal();
    s = Programming{sp->bitstream_id, clock_ + sp->latency};
    return s;
  }
  if (std::holds_alternative<ProgramDone>(event)) {
    const auto* p = std::get_if<Programming>(&s);
    if (!p) throw illegal();
    s = Ready{p->bitstream_id};
    return s;
  }
  if (const auto* sj = std::get_if<StartJob>(&event)) {
    if (!std::holds_alternative<Ready>(s)) throw illegal();
    std::string bitstream = std::get<Ready>(s).bitstream_id;
    s = Running{sj->job_id};
    // keep the bitstream for the return to Ready
    pending_bitstream_[id] = std::move(bitstream);
    return s;
  }
  if (std::holds_alternative<JobDone>(event)) {
    if (!std::holds_alternative<Running>(s)) throw illegal();
    s = Ready{pending_bitstream_[id]};
    return s;
  }
  if (std::holds_alternative<Reset>(event)) {
    if (!std::holds_alternative<Failed>(s)) throw illegal();
    s = Free{};
    return s;
  }
  throw illegal();
}

std::vector<DeviceId> Fleet::acquire(int n, const std::string& bitstream_id) const {
  if (n < 1) throw runtime_error_of("acquire: n must be >= 1");
  std::vector<DeviceId> out;
  for (const auto& [id, s] : states_) {
    bool candidate = std::holds_alternative<Free>(s) ||
                     (std::holds_alternative<Ready>(s) &&
                      std::get<Ready>(s).bitstream_id == bitstream_id);
    if (candidate) {
      out.push_back(id);
      if (static_cast<int>(out.size()) == n) return out;
    }
  }
  throw runtime_error_of("insufficient-capacity: requested " + std::to_string(n) +
                         ", available " + std::to_string(out.size()));
}

std::string Fleet::snapshot_yaml() const {
  YamlWriter w;
  for (const auto& [id, s] : states_) {
    w.line(0, id.to_string() + ": " + YamlWriter::quote(fleetreg::to_string(s)));
  }
  return w.str();
}

}  // namespace fleetreg

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fleetreg/error.hpp"
#include "fleetreg/reporting.hpp"

namespace fleetreg {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::string format_record(const HistoryRecord& r) {
  std::ostringstream os;
  os << r.timestamp << ' ' << r.run_id << ' ' << r.duration.ticks() << ' '
     << to_string(r.verdict);
  return os.str();
}

bool parse_record(const std::string& line, HistoryRecord* out) {
  std::istringstream is(line);
  std::string verdict;
  std::int64_t ticks = 0;
  if (!(is >> out->timestamp >> out->run_id >> ticks >> verdict)) return false;
  std::string rest;
  if (is >> rest) return false;
  if (verdict != "pass" && verdict != "fail") return false;
  out->duration = Deciseconds(ticks);
  out->verdict = verdict == "pass" ? Verdict::pass : Verdict::fail;
  return true;
}

}  // namespace

void HistoryStore::append(const HistoryRecord& record) const {
  namespace fs = std::filesystem;
  std::string tmp = path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw runtime_error_of("history: cannot write " + tmp);
    if (fs::exists(path_)) {
      std::ifstream in(path_);
      out << in.rdbuf();
    }
    out << format_record(record) << '\n';
    out.flush();
    if (!out) throw runtime_error_of("history: write failed for " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path_, ec);
  if (ec) throw runtime_error_of("history: rename failed: " + ec.message());
}

void HistoryStore::append(const RunReport& report, std::int64_t timestamp) const {
  append(HistoryRecord{timestamp, report.run_id, report.campaign_wall_time,
                       report.verdict});
}

std::vector<HistoryRecord> HistoryStore::read_all(int* corrupt_count) const {
  std::vector<HistoryRecord> out;
  if (corrupt_count) *corrupt_count = 0;
  std::ifstream in(path_);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    HistoryRecord r;
    if (parse_record(line, &r)) {
      out.push_back(std::move(r));
    } else if (corrupt_count) {
      ++*corrupt_count;
    }
  }
  return out;
}

HistoryStats HistoryStore::stats(int window_days, std::int64_t now) const {
  std::vector<HistoryRecord> all = read_all();
  if (now < 0) {
    now = 0;
    for (const auto& r : all) now = std::max(now, r.timestamp);
  }
  std::int64_t cutoff = now - static_cast<std::int64_t>(window_days) * kSecondsPerDay;

  std::vector<Deciseconds> durations;
  for (const auto& r : all) {
    if (r.timestamp >= cutoff && r.timestamp <= now) durations.push_back(r.duration);
  }

  HistoryStats s;
  s.window_days = window_days;
  s.pipeline_count = static_cast<int>(durations.size());
  if (durations.empty()) return s;

  std::sort(durations.begin(), durations.end());
  std::size_t decile = (durations.size() + 9) / 10;  // ceil(n/10), >= 1

  auto mean = [](auto first, auto last) {
    std::int64_t sum = 0;
    std::int64_t n = 0;
    for (auto it = first; it != last; ++it, ++n) sum += it->ticks();
    return Deciseconds(n == 0 ? 0 : (sum + n / 2) / n);
  };
  s.mean_duration_fastest = mean(durations.begin(), durations.begin() + decile);
  s.mean_duration_longest = mean(durations.end() - decile, durations.end());
  return s;
}

}  // namespace fleetreg

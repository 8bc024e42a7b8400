#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slothbench/metrics.hpp"

namespace sloth {

// One line-delimited JSON object per (seed, test case).
struct ReportRecord {
  std::string seed_text;
  std::string perturbed_text;
  std::string kind;
  int epsilon_used = 0;
  bool exhausted_early = false;
  int input_length = 0;
  int seed_loops = 0;
  int adv_loops = 0;
  std::string seed_terminated_by;
  std::string adv_terminated_by;
  double i_loops_pct = 0.0;
  std::int64_t seed_latency_ns = 0;
  std::int64_t adv_latency_ns = 0;
  double i_latency_pct = 0.0;
  double seed_energy = 0.0;
  double adv_energy = 0.0;
  double i_energy_pct = 0.0;
  long candidates_evaluated = 0;
  double generation_wall_ms = 0.0;

  std::string to_json_line() const;
  static ReportRecord from_json_line(const std::string& line);

  EfficiencyRecord efficiency() const;

  // Serialization with latency and wall-time fields zeroed, for determinism
  // comparisons.
  std::string to_json_line_stable() const;
};

struct ReportFile {
  std::vector<ReportRecord> records;
  bool truncated_tail = false;
};

ReportFile read_report(const std::string& path);
void write_report(const std::string& path, const std::vector<ReportRecord>& records);

}  // namespace sloth

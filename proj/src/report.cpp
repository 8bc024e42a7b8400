#include "slothbench/report.hpp"

#include <fstream>

#include "json.hpp"

namespace sloth {

namespace {

using nlohmann::json;

json to_json(const ReportRecord& r) {
  return json{{"seed_text", r.seed_text},
              {"perturbed_text", r.perturbed_text},
              {"kind", r.kind},
              {"epsilon_used", r.epsilon_used},
              {"exhausted_early", r.exhausted_early},
              {"input_length", r.input_length},
              {"seed_loops", r.seed_loops},
              {"adv_loops", r.adv_loops},
              {"seed_terminated_by", r.seed_terminated_by},
              {"adv_terminated_by", r.adv_terminated_by},
              {"i_loops_pct", r.i_loops_pct},
              {"seed_latency_ns", r.seed_latency_ns},
              {"adv_latency_ns", r.adv_latency_ns},
              {"i_latency_pct", r.i_latency_pct},
              {"seed_energy", r.seed_energy},
              {"adv_energy", r.adv_energy},
              {"i_energy_pct", r.i_energy_pct},
              {"candidates_evaluated", r.candidates_evaluated},
              {"generation_wall_ms", r.generation_wall_ms}};
}

}  // namespace

std::string ReportRecord::to_json_line() const { return to_json(*this).dump(); }

std::string ReportRecord::to_json_line_stable() const {
  ReportRecord copy = *this;
  copy.seed_latency_ns = 0;
  copy.adv_latency_ns = 0;
  copy.i_latency_pct = 0.0;
  copy.generation_wall_ms = 0.0;
  return to_json(copy).dump();
}

ReportRecord ReportRecord::from_json_line(const std::string& line) {
  json j = json::parse(line);
  ReportRecord r;
  r.seed_text = j.at("seed_text").get<std::string>();
  r.perturbed_text = j.at("perturbed_text").get<std::string>();
  r.kind = j.at("kind").get<std::string>();
  r.epsilon_used = j.at("epsilon_used").get<int>();
  r.exhausted_early = j.value("exhausted_early", false);
  r.input_length = j.at("input_length").get<int>();
  r.seed_loops = j.at("seed_loops").get<int>();
  r.adv_loops = j.at("adv_loops").get<int>();
  r.seed_terminated_by = j.at("seed_terminated_by").get<std::string>();
  r.adv_terminated_by = j.at("adv_terminated_by").get<std::string>();
  r.i_loops_pct = j.at("i_loops_pct").get<double>();
  r.seed_latency_ns = j.at("seed_latency_ns").get<std::int64_t>();
  r.adv_latency_ns = j.at("adv_latency_ns").get<std::int64_t>();
  r.i_latency_pct = j.at("i_latency_pct").get<double>();
  r.seed_energy = j.at("seed_energy").get<double>();
  r.adv_energy = j.at("adv_energy").get<double>();
  r.i_energy_pct = j.at("i_energy_pct").get<double>();
  r.candidates_evaluated = j.at("candidates_evaluated").get<long>();
  r.generation_wall_ms = j.at("generation_wall_ms").get<double>();
  return r;
}

EfficiencyRecord ReportRecord::efficiency() const {
  EfficiencyRecord e;
  e.seed_loops = seed_loops;
  e.adv_loops = adv_loops;
  e.seed_latency_ns = seed_latency_ns;
  e.adv_latency_ns = adv_latency_ns;
  e.seed_energy = seed_energy;
  e.adv_energy = adv_energy;
  e.input_length = input_length;
  return e;
}

ReportFile read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open report file " + path);
  ReportFile file;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      file.records.push_back(ReportRecord::from_json_line(line));
    } catch (const nlohmann::json::exception&) {
      // A malformed line is only tolerated as a truncated final line.
      if (in.peek() == std::char_traits<char>::eof()) {
        file.truncated_tail = true;
        break;
      }
      throw Error(ErrorKind::IoError, "malformed report line in " + path);
    }
  }
  return file;
}

void write_report(const std::string& path, const std::vector<ReportRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write report file " + path);
  for (const auto& r : records) out << r.to_json_line() << "\n";
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

}  // namespace sloth

#include "slothbench/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace sloth {

namespace {

double percent_increase(double before, double after, const char* name) {
  if (before <= 0.0)
    throw Error(ErrorKind::UndefinedMetric,
                std::string(name) + ": zero or negative denominator");
  return (after - before) / before * 100.0;
}

}  // namespace

double i_loops(const EfficiencyRecord& r) {
  return percent_increase(r.seed_loops, r.adv_loops, "i_loops");
}

double i_latency(const EfficiencyRecord& r) {
  return percent_increase(static_cast<double>(r.seed_latency_ns),
                          static_cast<double>(r.adv_latency_ns), "i_latency");
}

double i_energy(const EfficiencyRecord& r) {
  return percent_increase(r.seed_energy, r.adv_energy, "i_energy");
}

double LengthBucketStats::deviation_for(int input_length) const {
  auto it = buckets.find(input_length);
  if (it == buckets.end() || it->second.sparse) return pooled_rms;
  return it->second.rms_deviation;
}

LengthBucketStats build_length_stats(const std::vector<SeedObservation>& seeds) {
  if (seeds.empty())
    throw Error(ErrorKind::InsufficientData, "build_length_stats: no seed observations");

  LengthBucketStats stats;
  double pooled_sum = 0.0;
  for (const auto& s : seeds) {
    auto& b = stats.buckets[s.input_length];
    b.count += 1;
    b.mean_loops += s.loops;
    pooled_sum += s.loops;
  }
  stats.pooled_mean = pooled_sum / seeds.size();

  for (auto& [len, b] : stats.buckets) b.mean_loops /= b.count;

  std::map<int, double> sq_sum;
  double pooled_sq = 0.0;
  for (const auto& s : seeds) {
    const double d = s.loops - stats.buckets[s.input_length].mean_loops;
    sq_sum[s.input_length] += d * d;
    const double dp = s.loops - stats.pooled_mean;
    pooled_sq += dp * dp;
  }
  stats.pooled_rms = std::sqrt(pooled_sq / seeds.size());
  for (auto& [len, b] : stats.buckets) {
    b.rms_deviation = std::sqrt(sq_sum[len] / b.count);
    b.sparse = b.count < 5;
  }
  return stats;
}

double success_ratio(const std::vector<EfficiencyRecord>& records, double lambda,
                     const LengthBucketStats& stats) {
  if (lambda < 0.0)
    throw Error(ErrorKind::ContractViolation, "success_ratio: lambda must be >= 0");
  if (records.empty())
    throw Error(ErrorKind::InsufficientData, "success_ratio: no records");

  int successes = 0;
  for (const auto& r : records) {
    const double increase = r.adv_loops - r.seed_loops;
    if (increase >= lambda * stats.deviation_for(r.input_length)) ++successes;
  }
  return 100.0 * successes / records.size();
}

std::int64_t measure_latency(const ModelWeights& weights, const ModelConfig& config,
                             const TokenSequence& input, int repeats) {
  if (repeats < 1)
    throw Error(ErrorKind::ContractViolation, "measure_latency: repeats must be >= 1");
  using clock = std::chrono::steady_clock;

  translate(input, weights, config);  // warmup
  std::vector<std::int64_t> samples;
  samples.reserve(repeats);
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = clock::now();
    translate(input, weights, config);
    const auto t1 = clock::now();
    samples.push_back(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  std::int64_t median = samples[samples.size() / 2];
  if (samples.size() % 2 == 0)
    median = (median + samples[samples.size() / 2 - 1]) / 2;
  return std::max<std::int64_t>(median, 1);
}

std::vector<BeamSweepCell> beam_sensitivity_sweep(const std::vector<TokenSequence>& seeds,
                                                  const AttackContext& base_ctx,
                                                  int epsilon, PerturbationKind kind) {
  if (seeds.empty())
    throw Error(ErrorKind::InsufficientData, "beam_sensitivity_sweep: no seeds");

  std::vector<BeamSweepCell> rows;
  for (int nb = 1; nb <= 5; ++nb) {
    BeamSweepCell cell;
    cell.num_beams = nb;
    AttackContext ctx = base_ctx;
    ctx.config.num_beams = nb;
    double total = 0.0;
    try {
      for (const auto& seed : seeds) {
        TestCase tc = generate_test(seed, epsilon, kind, ctx);
        EfficiencyRecord r;
        r.seed_loops = tc.seed_trace.loops;
        r.adv_loops = tc.adv_trace.loops;
        r.input_length = static_cast<int>(seed.tokens.size());
        total += i_loops(r);
        ++cell.seeds_evaluated;
      }
      cell.mean_i_loops = total / seeds.size();
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    rows.push_back(std::move(cell));
  }
  return rows;
}

}  // namespace sloth

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "slothbench/model.hpp"
#include "slothbench/sloth.hpp"

namespace sloth {

struct EfficiencyRecord {
  int seed_loops = 0;
  int adv_loops = 0;
  std::int64_t seed_latency_ns = 0;
  std::int64_t adv_latency_ns = 0;
  double seed_energy = 0.0;
  double adv_energy = 0.0;
  int input_length = 0;  // seed token count
};

// Eq-4 style percentage increases: (after - before) / before * 100.
double i_loops(const EfficiencyRecord& r);
double i_latency(const EfficiencyRecord& r);
double i_energy(const EfficiencyRecord& r);

struct LengthBucket {
  int count = 0;
  double mean_loops = 0.0;
  double rms_deviation = 0.0;
  bool sparse = false;  // count < 5; statistics fall back to the pooled values
};

struct LengthBucketStats {
  std::map<int, LengthBucket> buckets;  // by input length
  double pooled_mean = 0.0;
  double pooled_rms = 0.0;

  // Bucket rms, or the pooled rms for sparse/missing lengths.
  double deviation_for(int input_length) const;
};

struct SeedObservation {
  int input_length = 0;
  int loops = 0;
};

LengthBucketStats build_length_stats(const std::vector<SeedObservation>& seeds);

// Degradation success ratio: percentage of records whose loop increase is
// >= lambda * per-length rms deviation.
double success_ratio(const std::vector<EfficiencyRecord>& records, double lambda,
                     const LengthBucketStats& stats);

// Deterministic energy proxy: loops * cost constant.
class EnergyMeter {
 public:
  virtual ~EnergyMeter() = default;
  virtual double measure(const DecodeTrace& trace) const = 0;
};

class LoopProxyMeter : public EnergyMeter {
 public:
  explicit LoopProxyMeter(double cost_per_loop = 1.0) : cost_(cost_per_loop) {}
  double measure(const DecodeTrace& trace) const override {
    return cost_ * trace.loops;
  }

 private:
  double cost_;
};

// One untimed warmup, then the median of `repeats` timed runs.
std::int64_t measure_latency(const ModelWeights& weights, const ModelConfig& config,
                             const TokenSequence& input, int repeats);

struct BeamSweepCell {
  int num_beams = 0;
  double mean_i_loops = 0.0;
  int seeds_evaluated = 0;
  bool failed = false;
  std::string error;
};

// Runs generate_test per beam size 1..5 on shared seeds; one row per size.
std::vector<BeamSweepCell> beam_sensitivity_sweep(const std::vector<TokenSequence>& seeds,
                                                  const AttackContext& base_ctx,
                                                  int epsilon, PerturbationKind kind);

}  // namespace sloth

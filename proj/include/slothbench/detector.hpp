#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slothbench/model.hpp"

namespace sloth {

struct FeatureVector {
  std::vector<float> values;  // hidden_dim, mean over encoder positions
};

struct DetectorModel {
  std::vector<float> weight;
  float bias = 0.f;
  float threshold = 0.f;
  std::string train_report_tag;  // identifies the report used for training
};

struct DetectorMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
  int held_out_normal = 0;
  int held_out_abnormal = 0;
};

// Column-wise mean of the encoder hidden rows.
FeatureVector featurize(const EncoderState& enc);

// 80/20 stratified split from split_seed, then a linear hinge-loss model
// trained by stochastic subgradient descent (200 epochs, lr 0.1/sqrt(epoch),
// L2 penalty 1e-3). Abnormal inputs are the positive class.
DetectorModel train_detector(const std::vector<FeatureVector>& normal,
                             const std::vector<FeatureVector>& abnormal,
                             std::uint64_t split_seed, DetectorMetrics* metrics = nullptr);

// Probability that a random positive outranks a random negative, exact
// pairwise computation with ties counted 0.5.
double auc(const std::vector<double>& scores_positive,
           const std::vector<double>& scores_negative);

float detector_score(const DetectorModel& model, const FeatureVector& feature);

enum class FilterDecision { ACCEPT, REJECT };

struct FilterResult {
  FilterDecision decision = FilterDecision::ACCEPT;
  std::int64_t overhead_ns = 0;  // featurize + dot product only
};

// Scores the encoder state the translator already produced; no second
// encoder pass.
FilterResult runtime_filter(const EncoderState& enc, const DetectorModel& model);

void save_detector(const DetectorModel& model, const std::string& path);
DetectorModel load_detector(const std::string& path);

}  // namespace sloth

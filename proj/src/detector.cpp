#include "slothbench/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "slothbench/rng.hpp"

namespace sloth {

FeatureVector featurize(const EncoderState& enc) {
  const int m = enc.hidden.shape[0];
  const int hd = enc.hidden.shape[1];
  if (m < 1) throw Error(ErrorKind::EmptyInput, "featurize: empty encoder state");

  FeatureVector f;
  f.values.assign(hd, 0.f);
  for (int t = 0; t < m; ++t)
    for (int j = 0; j < hd; ++j) f.values[j] += enc.hidden.at(t, j);
  for (float& v : f.values) v /= static_cast<float>(m);
  return f;
}

float detector_score(const DetectorModel& model, const FeatureVector& feature) {
  if (feature.values.size() != model.weight.size())
    throw Error(ErrorKind::DimensionMismatch,
                "detector expects " + std::to_string(model.weight.size()) +
                    " features, got " + std::to_string(feature.values.size()));
  float s = model.bias;
  for (std::size_t j = 0; j < feature.values.size(); ++j)
    s += model.weight[j] * feature.values[j];
  return s;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.next_below(i + 1)]);
  return idx;
}

}  // namespace

DetectorModel train_detector(const std::vector<FeatureVector>& normal,
                             const std::vector<FeatureVector>& abnormal,
                             std::uint64_t split_seed, DetectorMetrics* metrics) {
  if (normal.size() < 5 || abnormal.size() < 5)
    throw Error(ErrorKind::InsufficientData,
                "train_detector: each class needs at least 5 members");
  const std::size_t dim = normal.front().values.size();

  Rng rng(split_seed);
  const auto norm_idx = shuffled_indices(normal.size(), rng);
  const auto abn_idx = shuffled_indices(abnormal.size(), rng);
  const std::size_t norm_train = (normal.size() * 8) / 10;
  const std::size_t abn_train = (abnormal.size() * 8) / 10;

  // label +1 = abnormal, -1 = normal
  std::vector<const FeatureVector*> train_x, test_x;
  std::vector<int> train_y, test_y;
  for (std::size_t i = 0; i < normal.size(); ++i) {
    const bool is_train = i < norm_train;
    (is_train ? train_x : test_x).push_back(&normal[norm_idx[i]]);
    (is_train ? train_y : test_y).push_back(-1);
  }
  for (std::size_t i = 0; i < abnormal.size(); ++i) {
    const bool is_train = i < abn_train;
    (is_train ? train_x : test_x).push_back(&abnormal[abn_idx[i]]);
    (is_train ? train_y : test_y).push_back(+1);
  }

  DetectorModel model;
  model.weight.assign(dim, 0.f);
  model.bias = 0.f;
  model.threshold = 0.f;

  constexpr int kEpochs = 200;
  constexpr float kPenalty = 1e-3f;
  for (int epoch = 1; epoch <= kEpochs; ++epoch) {
    const float lr = 0.1f / std::sqrt(static_cast<float>(epoch));
    const auto order = shuffled_indices(train_x.size(), rng);
    for (std::size_t i : order) {
      const FeatureVector& x = *train_x[i];
      const float y = static_cast<float>(train_y[i]);
      float margin = model.bias;
      for (std::size_t j = 0; j < dim; ++j) margin += model.weight[j] * x.values[j];
      // subgradient of hinge + L2
      for (std::size_t j = 0; j < dim; ++j) {
        float g = kPenalty * model.weight[j];
        if (y * margin < 1.f) g -= y * x.values[j];
        model.weight[j] -= lr * g;
      }
      if (y * margin < 1.f) model.bias += lr * y;
    }
  }

  if (metrics) {
    std::vector<double> pos, neg;
    int correct = 0;
    for (std::size_t i = 0; i < test_x.size(); ++i) {
      const float s = detector_score(model, *test_x[i]);
      const int pred = s > model.threshold ? +1 : -1;
      if (pred == test_y[i]) ++correct;
      (test_y[i] > 0 ? pos : neg).push_back(s);
    }
    metrics->accuracy = test_x.empty() ? 0.0 : static_cast<double>(correct) / test_x.size();
    metrics->auc = (pos.empty() || neg.empty()) ? 0.0 : auc(pos, neg);
    metrics->held_out_normal = static_cast<int>(neg.size());
    metrics->held_out_abnormal = static_cast<int>(pos.size());
  }
  return model;
}

double auc(const std::vector<double>& scores_positive,
           const std::vector<double>& scores_negative) {
  if (scores_positive.empty() || scores_negative.empty())
    throw Error(ErrorKind::InsufficientData, "auc: both score lists must be nonempty");
  double wins = 0.0;
  for (double p : scores_positive)
    for (double n : scores_negative) {
      if (p > n) wins += 1.0;
      else if (p == n) wins += 0.5;
    }
  return wins / (static_cast<double>(scores_positive.size()) * scores_negative.size());
}

FilterResult runtime_filter(const EncoderState& enc, const DetectorModel& model) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const FeatureVector f = featurize(enc);
  const float s = detector_score(model, f);
  const auto t1 = clock::now();

  FilterResult r;
  r.decision = s > model.threshold ? FilterDecision::REJECT : FilterDecision::ACCEPT;
  r.overhead_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
  return r;
}

namespace {
constexpr char kMagic[4] = {'N', 'M', 'T', 'D'};
constexpr unsigned char kVersion = 0x01;
}  // namespace

void save_detector(const DetectorModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write detector file " + path);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), 1);
  std::string header = "dim=" + std::to_string(model.weight.size()) +
                       " threshold=" + std::to_string(model.threshold) +
                       " trained_on=" + model.train_report_tag;
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.put('\n');
  out.write(reinterpret_cast<const char*>(model.weight.data()),
            static_cast<std::streamsize>(model.weight.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(&model.bias), sizeof(float));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

DetectorModel load_detector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open detector file " + path);
  char magic[4];
  unsigned char version;
  if (!in.read(magic, 4))
    throw Error(ErrorKind::TruncatedFile, "detector file truncated: " + path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorKind::MagicMismatch, "bad magic bytes in " + path);
  if (!in.read(reinterpret_cast<char*>(&version), 1))
    throw Error(ErrorKind::TruncatedFile, "detector file truncated: " + path);
  if (version != kVersion)
    throw Error(ErrorKind::MagicMismatch, "unsupported detector file version in " + path);
  std::string header;
  if (!std::getline(in, header))
    throw Error(ErrorKind::TruncatedFile, "detector header truncated: " + path);

  DetectorModel model;
  std::size_t dim = 0;
  {
    std::size_t pos = header.find("dim=");
    if (pos == std::string::npos)
      throw Error(ErrorKind::TruncatedFile, "detector header lacks dim: " + path);
    dim = std::stoul(header.substr(pos + 4));
    pos = header.find("threshold=");
    if (pos != std::string::npos)
      model.threshold = std::stof(header.substr(pos + 10));
    pos = header.find("trained_on=");
    if (pos != std::string::npos)
      model.train_report_tag = header.substr(pos + 11);
  }
  model.weight.resize(dim);
  if (!in.read(reinterpret_cast<char*>(model.weight.data()),
               static_cast<std::streamsize>(dim * sizeof(float))) ||
      !in.read(reinterpret_cast<char*>(&model.bias), sizeof(float)))
    throw Error(ErrorKind::TruncatedFile, "detector file truncated: " + path);
  return model;
}

}  // namespace sloth

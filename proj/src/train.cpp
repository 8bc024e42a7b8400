#include <algorithm>
#include <cmath>
#include <numeric>

#include "slothbench/model.hpp"
#include "slothbench/rng.hpp"

namespace sloth {

namespace {

// Per-example loss graph: summed negative log-likelihood of the teacher-forced
// target. Summing (rather than averaging) over positions keeps per-position
// gradients independent of sequence length. Returns the scalar node id.
Tape::NodeId loss_graph(const TeacherForcedGraph& graph, const std::vector<int>& y,
                        Tape& tape) {
  Tape::NodeId sum = -1;
  for (std::size_t t = 0; t < y.size(); ++t) {
    Tape::NodeId term = tape.log(tape.select(graph.step_probs[t], 0, y[t]));
    sum = (sum < 0) ? term : tape.add(sum, term);
  }
  return tape.scale(sum, -1.f);
}

}  // namespace

TrainResult train(const std::vector<CorpusPair>& corpus, ModelWeights& weights,
                  const ModelConfig& config, const TrainHyper& hyper) {
  if (corpus.empty())
    throw Error(ErrorKind::ContractViolation, "train: empty corpus");

  TrainResult result;
  Rng rng(hyper.rng_seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  auto names = weights.named_tensors();

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    float lr = hyper.learning_rate;
    if (hyper.lr_step > 0)
      for (int s = hyper.lr_step; s <= epoch; s += hyper.lr_step) lr *= hyper.lr_decay;
    // Deterministic Fisher-Yates shuffle.
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.next_below(i + 1)]);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));

      std::vector<Tensor> grad_acc;
      for (auto& [name, t] : names) grad_acc.push_back(Tensor::zeros(t->shape));

      for (std::size_t i = start; i < end; ++i) {
        const auto& [src, tgt] = corpus[order[i]];
        Tape tape;
        TeacherForcedGraph graph =
            teacher_forced_probs(src.tokens, tgt.tokens, weights, config, tape);
        Tape::NodeId loss = loss_graph(graph, tgt.tokens, tape);
        const float loss_value = tape.value(loss).data[0];
        if (!std::isfinite(loss_value))
          throw Error(ErrorKind::TrainingDiverged,
                      "training diverged at epoch " + std::to_string(epoch));
        // History records the per-token mean so epochs are comparable across
        // sequence-length mixes.
        epoch_loss += loss_value / static_cast<double>(tgt.tokens.size());
        ++seen;

        tape.backward(loss);
        for (std::size_t wi = 0; wi < names.size(); ++wi) {
          const Tensor& g = tape.grad(graph.weights[wi].second);
          for (std::size_t j = 0; j < g.data.size(); ++j)
            grad_acc[wi].data[j] += g.data[j];
        }
      }

      const float inv_batch = 1.f / static_cast<float>(end - start);
      double sq_norm = 0.0;
      for (auto& g : grad_acc)
        for (float& v : g.data) {
          v *= inv_batch;
          sq_norm += static_cast<double>(v) * v;
        }
      float scale = 1.f;
      const float norm = static_cast<float>(std::sqrt(sq_norm));
      if (hyper.clip_norm > 0.f && norm > hyper.clip_norm)
        scale = hyper.clip_norm / norm;

      for (std::size_t wi = 0; wi < names.size(); ++wi) {
        Tensor* t = names[wi].second;
        for (std::size_t j = 0; j < t->data.size(); ++j)
          t->data[j] -= lr * scale * grad_acc[wi].data[j];
      }
    }
    result.loss_history.push_back(static_cast<float>(epoch_loss / seen));
  }
  return result;
}

float next_token_accuracy(const std::vector<CorpusPair>& corpus,
                          const ModelWeights& weights, const ModelConfig& config) {
  if (corpus.empty())
    throw Error(ErrorKind::ContractViolation, "next_token_accuracy: empty corpus");
  long correct = 0, total = 0;
  for (const auto& [src, tgt] : corpus) {
    Tape tape;
    TeacherForcedGraph graph =
        teacher_forced_probs(src.tokens, tgt.tokens, weights, config, tape);
    for (std::size_t t = 0; t < tgt.tokens.size(); ++t) {
      const Tensor& p = tape.value(graph.step_probs[t]);
      int best = 0;
      for (int i = 1; i < static_cast<int>(p.data.size()); ++i)
        if (p.data[i] > p.data[best]) best = i;
      if (best == tgt.tokens[t]) ++correct;
      ++total;
    }
  }
  return static_cast<float>(correct) / static_cast<float>(total);
}

}  // namespace sloth

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slothbench/tape.hpp"
#include "slothbench/tensor.hpp"
#include "slothbench/tokenizer.hpp"

namespace sloth {

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 32;
  int hidden_dim = 64;
  int max_length = 64;
  int num_beams = 1;
  int eos_id = 2;
  int sos_id = 1;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Single-layer gated recurrent encoder and decoder with dot-product attention
// over the encoder states.
struct ModelWeights {
  Tensor src_embed, tgt_embed;                                      // [V, E]
  Tensor enc_wz, enc_uz, enc_bz;                                    // [E,H] [H,H] [1,H]
  Tensor enc_wr, enc_ur, enc_br;
  Tensor enc_wh, enc_uh, enc_bh;
  Tensor dec_wz, dec_uz, dec_bz;                                    // [E+H,H] [H,H] [1,H]
  Tensor dec_wr, dec_ur, dec_br;
  Tensor dec_wh, dec_uh, dec_bh;
  Tensor attn_proj;                                                 // [H, H]
  Tensor out_w, out_b;                                              // [2H, V] [1, V]

  static ModelWeights init(const ModelConfig& config);

  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
};

struct EncoderState {
  Tensor hidden;  // [m, hidden_dim], one row per source position
};

enum class Termination { EOS, MAX_LENGTH };

struct DecodeTrace {
  std::vector<int> output_ids;                 // EOS included when emitted
  std::vector<std::vector<float>> step_probs;  // full-vocabulary p_i per step
  int loops = 0;                               // decoder forward steps executed
  Termination terminated_by = Termination::MAX_LENGTH;
};

EncoderState encode(const TokenSequence& x, const ModelWeights& weights,
                    const ModelConfig& config);
EncoderState encode_ids(const std::vector<int>& ids, const ModelWeights& weights,
                        const ModelConfig& config);

DecodeTrace decode_greedy(const EncoderState& enc, const ModelWeights& weights,
                          const ModelConfig& config);
DecodeTrace decode_beam(const EncoderState& enc, const ModelWeights& weights,
                        const ModelConfig& config);

// Greedy when num_beams == 1, beam search otherwise.
DecodeTrace decode(const EncoderState& enc, const ModelWeights& weights,
                   const ModelConfig& config);

// encode + decode; bumps the encode call counter exactly once.
DecodeTrace translate(const TokenSequence& x, const ModelWeights& weights,
                      const ModelConfig& config);

// Process-wide count of encoder invocations, for instrumented tests.
long encode_call_count();

// Teacher-forced decoder run on a fixed output sequence y, recorded on `tape`
// so gradients with respect to source embeddings and weights are available.
struct TeacherForcedGraph {
  std::vector<Tape::NodeId> src_embed_positions;  // [1, E] gather per source token
  std::vector<Tape::NodeId> step_probs;           // [1, V] distribution per target step
  std::vector<std::pair<std::string, Tape::NodeId>> weights;
};

TeacherForcedGraph teacher_forced_probs(const std::vector<int>& x,
                                        const std::vector<int>& y,
                                        const ModelWeights& weights,
                                        const ModelConfig& config, Tape& tape);

using CorpusPair = std::pair<TokenSequence, TokenSequence>;

struct TrainHyper {
  int epochs = 26;
  float learning_rate = 0.05f;
  int batch_size = 16;
  std::uint64_t rng_seed = 7;
  // Loose safety net against exploding updates; tight clipping stalls the
  // attention alignment phase of training.
  float clip_norm = 25.f;
  // Step learning-rate schedule: multiply by lr_decay every lr_step epochs.
  // lr_step <= 0 disables the schedule.
  int lr_step = 0;
  float lr_decay = 0.5f;
};

struct TrainResult {
  std::vector<float> loss_history;  // mean per epoch
};

TrainResult train(const std::vector<CorpusPair>& corpus, ModelWeights& weights,
                  const ModelConfig& config, const TrainHyper& hyper);

// Fraction of teacher-forced positions whose argmax matches the target.
float next_token_accuracy(const std::vector<CorpusPair>& corpus,
                          const ModelWeights& weights, const ModelConfig& config);

// Synthetic task: source is 3..9 words from the synthetic lexicon; target is
// the word-wise bijection image, reversed, with EOS appended.
std::vector<CorpusPair> gen_synthetic_corpus(std::uint64_t seed, int n_pairs,
                                             const Vocabulary& vocab);

void save_weights(const ModelWeights& weights, const ModelConfig& config,
                  const std::string& path);
ModelWeights load_weights(const std::string& path, const ModelConfig& config);

// Reads the config echo stored in a weight file header.
ModelConfig peek_weight_config(const std::string& path);

// Reference training recipe shared by the CLI and the acceptance suite.
TrainHyper reference_recipe();

}  // namespace sloth

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "slothbench/model.hpp"
#include "slothbench/tokenizer.hpp"

namespace sloth {

// Objective value f(x) and per-source-token gradient information:
//   f(x) = (1/n) sum_i (p_i^eos + p_i^{o_i}),  o_i = argmax(p_i)
//   g_i  = signed sum over embedding dimensions of df/d(embedding of token i)
struct ImportanceProfile {
  float objective = 0.f;
  std::vector<float> scores;                     // g_i per source token
  std::vector<std::vector<float>> grad_vectors;  // df/dtk_i, embed_dim each
};

enum class PerturbationKind { CHAR_INSERT, TOKEN_REPLACE, STRUCT_REPLACE, RANDOM };

const char* to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& s);

struct PerturbationCandidate {
  int position = -1;  // token index (TOKEN_REPLACE) or word index (others)
  PerturbationKind kind = PerturbationKind::CHAR_INSERT;
  std::string text;  // full perturbed sentence
  char inserted_char = 0;
  int insert_offset = -1;
  int replacement_id = -1;
  std::string replacement_word;
  float predicted_delta_f = 0.f;
  bool has_prediction = false;
};

struct TestCase {
  TokenSequence seed;
  TokenSequence perturbed;
  int epsilon_used = 0;
  PerturbationKind kind = PerturbationKind::CHAR_INSERT;
  DecodeTrace seed_trace;
  DecodeTrace adv_trace;
  long candidates_evaluated = 0;
  std::vector<int> per_iteration_best_loops;
  bool exhausted_early = false;
};

// Greedy-decodes x, then re-runs the decoder teacher-forced on that output to
// obtain f(x) and source-embedding gradients.
ImportanceProfile objective_and_importance(const TokenSequence& x,
                                           const ModelWeights& weights,
                                           const ModelConfig& config);

// Token positions sorted by |g_i| descending, ties by lower index.
std::vector<int> rank_critical_tokens(const ImportanceProfile& profile,
                                      const std::set<int>& exclude);

// All (offset, character) insertions into the word at word_position:
// exactly (l+1) * 62 candidates, offsets outer, characters inner.
std::vector<PerturbationCandidate> char_insert_candidates(const TokenSequence& x,
                                                          int word_position);

// Eq-3 style first-order scan over the vocabulary: the replacement whose
// predicted change in f is most negative, ties by lower id.
PerturbationCandidate token_replace_candidate(const TokenSequence& x, int token_position,
                                              const ImportanceProfile& profile,
                                              const Vocabulary& vocab,
                                              const ModelWeights& weights);

// Same-POS-bucket substitutions for the word at word_position; empty when the
// word tags OTHER or its bucket holds no alternative.
std::vector<PerturbationCandidate> struct_replace_candidates(const TokenSequence& x,
                                                             int word_position,
                                                             const PosLexicon& lexicon);

// Uniform random position and payload of the given base kind.
PerturbationCandidate random_mutation(const TokenSequence& x, PerturbationKind base_kind,
                                      std::uint64_t rng_seed, const Vocabulary& vocab,
                                      const PosLexicon& lexicon);

struct AttackContext {
  const ModelWeights* weights = nullptr;
  ModelConfig config;
  const Vocabulary* vocab = nullptr;
  const PosLexicon* lexicon = nullptr;
  std::uint64_t rng_seed = 0;  // drives the random baseline only
};

// The iterative driver: at most `epsilon` single-word edits, each chosen by
// decoding every candidate and keeping the one with the strictly largest loop
// count. PerturbationKind::RANDOM runs the random token-replace baseline.
TestCase generate_test(const TokenSequence& seed, int epsilon, PerturbationKind kind,
                       const AttackContext& ctx);

}  // namespace sloth

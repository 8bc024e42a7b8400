#include "slothbench/sloth.hpp"

#include <algorithm>
#include <cmath>

#include "slothbench/rng.hpp"
#include "slothbench/tape.hpp"

namespace sloth {

namespace {

// Word index containing a token's span, or -1 for whitespace tokens.
int word_of_token(const std::vector<WordSpan>& words, const std::pair<int, int>& span) {
  for (std::size_t w = 0; w < words.size(); ++w)
    if (span.first >= words[w].start && span.second <= words[w].end)
      return static_cast<int>(w);
  return -1;
}

std::string splice(const std::string& text, int start, int end,
                   const std::string& replacement) {
  return text.substr(0, start) + replacement + text.substr(end);
}

}  // namespace

const char* to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::CHAR_INSERT: return "char";
    case PerturbationKind::TOKEN_REPLACE: return "token";
    case PerturbationKind::STRUCT_REPLACE: return "struct";
    case PerturbationKind::RANDOM: return "random";
  }
  return "char";
}

PerturbationKind perturbation_kind_from_string(const std::string& s) {
  if (s == "char") return PerturbationKind::CHAR_INSERT;
  if (s == "token") return PerturbationKind::TOKEN_REPLACE;
  if (s == "struct") return PerturbationKind::STRUCT_REPLACE;
  if (s == "random") return PerturbationKind::RANDOM;
  throw Error(ErrorKind::ContractViolation, "unknown perturbation kind '" + s + "'");
}

ImportanceProfile objective_and_importance(const TokenSequence& x,
                                           const ModelWeights& weights,
                                           const ModelConfig& config) {
  EncoderState enc = encode(x, weights, config);
  DecodeTrace trace = decode_greedy(enc, weights, config);
  if (trace.output_ids.empty())
    throw Error(ErrorKind::DegenerateOutput, "greedy decode produced no output");

  Tape tape;
  TeacherForcedGraph graph =
      teacher_forced_probs(x.tokens, trace.output_ids, weights, config, tape);

  // f = (1/n) sum_i (p_i^eos + p_i^{o_i}); o_i is the greedy output itself.
  Tape::NodeId sum = -1;
  for (std::size_t i = 0; i < trace.output_ids.size(); ++i) {
    Tape::NodeId term = tape.add(tape.select(graph.step_probs[i], 0, config.eos_id),
                                 tape.select(graph.step_probs[i], 0, trace.output_ids[i]));
    sum = (sum < 0) ? term : tape.add(sum, term);
  }
  Tape::NodeId f = tape.scale(sum, 1.f / static_cast<float>(trace.output_ids.size()));
  tape.backward(f);

  ImportanceProfile profile;
  profile.objective = tape.value(f).data[0];
  for (Tape::NodeId pos : graph.src_embed_positions) {
    const Tensor& g = tape.grad(pos);
    float total = 0.f;
    for (float v : g.data) total += v;
    profile.scores.push_back(total);
    profile.grad_vectors.push_back(g.data);
  }
  return profile;
}

std::vector<int> rank_critical_tokens(const ImportanceProfile& profile,
                                      const std::set<int>& exclude) {
  std::vector<int> positions;
  for (int i = 0; i < static_cast<int>(profile.scores.size()); ++i)
    if (!exclude.count(i)) positions.push_back(i);
  if (positions.empty())
    throw Error(ErrorKind::ExhaustedPositions, "all token positions excluded");
  std::stable_sort(positions.begin(), positions.end(), [&](int a, int b) {
    const float ga = std::fabs(profile.scores[a]);
    const float gb = std::fabs(profile.scores[b]);
    if (ga != gb) return ga > gb;
    return a < b;
  });
  return positions;
}

std::vector<PerturbationCandidate> char_insert_candidates(const TokenSequence& x,
                                                          int word_position) {
  const auto words = split_words(x.surface);
  if (word_position < 0 || word_position >= static_cast<int>(words.size()))
    throw Error(ErrorKind::ContractViolation, "char_insert_candidates: bad word position");
  const WordSpan& w = words[word_position];
  const int l = static_cast<int>(w.word.size());

  std::vector<PerturbationCandidate> out;
  out.reserve(static_cast<std::size_t>(l + 1) * CharSet::kSize);
  for (int offset = 0; offset <= l; ++offset) {
    for (char c : CharSet::characters()) {
      PerturbationCandidate cand;
      cand.kind = PerturbationKind::CHAR_INSERT;
      cand.position = word_position;
      cand.inserted_char = c;
      cand.insert_offset = offset;
      std::string word = w.word;
      word.insert(word.begin() + offset, c);
      cand.text = splice(x.surface, w.start, w.end, word);
      out.push_back(std::move(cand));
    }
  }
  return out;
}

PerturbationCandidate token_replace_candidate(const TokenSequence& x, int token_position,
                                              const ImportanceProfile& profile,
                                              const Vocabulary& vocab,
                                              const ModelWeights& weights) {
  if (token_position < 0 || token_position >= static_cast<int>(x.tokens.size()))
    throw Error(ErrorKind::ContractViolation, "token_replace_candidate: bad position");
  if (token_position >= static_cast<int>(profile.grad_vectors.size()))
    throw Error(ErrorKind::ContractViolation,
                "token_replace_candidate: no gradient at position");

  const std::vector<float>& grad = profile.grad_vectors[token_position];
  const int src = x.tokens[token_position];
  const int embed_dim = static_cast<int>(grad.size());
  const int space_id = vocab.id_of.at(" ");

  const float* src_row =
      weights.src_embed.data.data() + static_cast<std::size_t>(src) * embed_dim;

  int best_id = -1;
  float best_delta = 0.f;
  for (int tgt = 0; tgt < vocab.size(); ++tgt) {
    if (vocab.is_special(tgt) || tgt == src || tgt == space_id) continue;
    const float* tgt_row =
        weights.src_embed.data.data() + static_cast<std::size_t>(tgt) * embed_dim;
    float delta = 0.f;
    for (int j = 0; j < embed_dim; ++j) delta += (tgt_row[j] - src_row[j]) * grad[j];
    if (best_id < 0 || delta < best_delta) {
      best_id = tgt;
      best_delta = delta;
    }
  }

  PerturbationCandidate cand;
  cand.kind = PerturbationKind::TOKEN_REPLACE;
  cand.position = token_position;
  cand.replacement_id = best_id;
  cand.replacement_word = vocab.entry(best_id);
  cand.predicted_delta_f = best_delta;
  cand.has_prediction = true;
  const auto& span = x.spans[token_position];
  cand.text = splice(x.surface, span.first, span.second, vocab.entry(best_id));
  return cand;
}

std::vector<PerturbationCandidate> struct_replace_candidates(const TokenSequence& x,
                                                             int word_position,
                                                             const PosLexicon& lexicon) {
  const auto words = split_words(x.surface);
  if (word_position < 0 || word_position >= static_cast<int>(words.size()))
    throw Error(ErrorKind::ContractViolation, "struct_replace_candidates: bad word position");
  const WordSpan& w = words[word_position];
  const PosTag tag = w.word.size() <= 1 ? PosTag::OTHER : lexicon.tag(w.word);

  std::vector<PerturbationCandidate> out;
  if (tag == PosTag::OTHER) return out;
  for (const std::string& alt : lexicon.bucket(tag)) {
    if (alt == w.word) continue;
    PerturbationCandidate cand;
    cand.kind = PerturbationKind::STRUCT_REPLACE;
    cand.position = word_position;
    cand.replacement_word = alt;
    cand.text = splice(x.surface, w.start, w.end, alt);
    out.push_back(std::move(cand));
  }
  return out;
}

namespace {

// Replacements at a position ranked by first-order increment, most negative
// first, ties by lower id. Space is never a replacement: splicing one into a
// word splits it, and splitting (like merging) changes the word count and so
// busts the word-level perturbation budget.
std::vector<PerturbationCandidate> token_replace_ranked(const TokenSequence& x,
                                                        int token_position,
                                                        const ImportanceProfile& profile,
                                                        const Vocabulary& vocab,
                                                        const ModelWeights& weights,
                                                        int limit) {
  const std::vector<float>& grad = profile.grad_vectors[token_position];
  const int src = x.tokens[token_position];
  const int space_id = vocab.id_of.at(" ");
  const int embed_dim = static_cast<int>(grad.size());
  const float* src_row =
      weights.src_embed.data.data() + static_cast<std::size_t>(src) * embed_dim;

  std::vector<std::pair<float, int>> scored;
  for (int tgt = 0; tgt < vocab.size(); ++tgt) {
    if (vocab.is_special(tgt) || tgt == src || tgt == space_id) continue;
    const float* tgt_row =
        weights.src_embed.data.data() + static_cast<std::size_t>(tgt) * embed_dim;
    float delta = 0.f;
    for (int j = 0; j < embed_dim; ++j) delta += (tgt_row[j] - src_row[j]) * grad[j];
    scored.emplace_back(delta, tgt);
  }
  std::sort(scored.begin(), scored.end());
  if (static_cast<int>(scored.size()) > limit) scored.resize(limit);

  std::vector<PerturbationCandidate> out;
  const auto& span = x.spans[token_position];
  for (const auto& [delta, id] : scored) {
    PerturbationCandidate cand;
    cand.kind = PerturbationKind::TOKEN_REPLACE;
    cand.position = token_position;
    cand.replacement_id = id;
    cand.replacement_word = vocab.entry(id);
    cand.predicted_delta_f = delta;
    cand.has_prediction = true;
    cand.text = splice(x.surface, span.first, span.second, vocab.entry(id));
    out.push_back(std::move(cand));
  }
  return out;
}

// Token positions usable for token-level replacement: inside a word, and not
// in an excluded word.
std::vector<int> eligible_token_positions(const TokenSequence& x,
                                          const std::vector<WordSpan>& words,
                                          const std::set<int>& excluded_words) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(x.tokens.size()); ++i) {
    const int w = word_of_token(words, x.spans[i]);
    if (w < 0 || excluded_words.count(w)) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace

PerturbationCandidate random_mutation(const TokenSequence& x, PerturbationKind base_kind,
                                      std::uint64_t rng_seed, const Vocabulary& vocab,
                                      const PosLexicon& lexicon) {
  Rng rng(rng_seed);
  const auto words = split_words(x.surface);
  if (words.empty())
    throw Error(ErrorKind::EmptyInput, "random_mutation: empty sentence");

  PerturbationCandidate cand;
  switch (base_kind) {
    case PerturbationKind::CHAR_INSERT: {
      const int wp = static_cast<int>(rng.next_below(words.size()));
      const WordSpan& w = words[wp];
      const int offset = static_cast<int>(rng.next_below(w.word.size() + 1));
      const char c = CharSet::characters()[rng.next_below(CharSet::kSize)];
      std::string word = w.word;
      word.insert(word.begin() + offset, c);
      cand.position = wp;
      cand.inserted_char = c;
      cand.insert_offset = offset;
      cand.text = splice(x.surface, w.start, w.end, word);
      break;
    }
    case PerturbationKind::STRUCT_REPLACE: {
      // Uniform over tagged words with at least one alternative.
      std::vector<int> eligible;
      for (int wp = 0; wp < static_cast<int>(words.size()); ++wp) {
        auto cands = struct_replace_candidates(x, wp, lexicon);
        if (!cands.empty()) eligible.push_back(wp);
      }
      if (eligible.empty())
        throw Error(ErrorKind::ExhaustedPositions,
                    "random_mutation: no structure-substitutable word");
      const int wp = eligible[rng.next_below(eligible.size())];
      auto cands = struct_replace_candidates(x, wp, lexicon);
      cand = cands[rng.next_below(cands.size())];
      break;
    }
    case PerturbationKind::TOKEN_REPLACE:
    case PerturbationKind::RANDOM:
    default: {
      const auto eligible = eligible_token_positions(x, words, {});
      if (eligible.empty())
        throw Error(ErrorKind::ExhaustedPositions, "random_mutation: no eligible token");
      const int pos = eligible[rng.next_below(eligible.size())];
      const int src = x.tokens[pos];
      const int space_id = vocab.id_of.at(" ");
      std::vector<int> ids;
      for (int id = 0; id < vocab.size(); ++id)
        if (!vocab.is_special(id) && id != src && id != space_id) ids.push_back(id);
      const int repl = ids[rng.next_below(ids.size())];
      cand.position = pos;
      cand.replacement_id = repl;
      cand.replacement_word = vocab.entry(repl);
      const auto& span = x.spans[pos];
      cand.text = splice(x.surface, span.first, span.second, vocab.entry(repl));
      break;
    }
  }
  cand.kind = PerturbationKind::RANDOM;
  return cand;
}

namespace {

// Word-level importance: max |g_i| over the word's tokens, ranked descending.
std::vector<int> rank_critical_words(const ImportanceProfile& profile,
                                     const TokenSequence& x,
                                     const std::vector<WordSpan>& words,
                                     const std::set<int>& excluded_words) {
  std::vector<float> word_score(words.size(), -1.f);
  for (std::size_t i = 0; i < x.tokens.size(); ++i) {
    const int w = word_of_token(words, x.spans[i]);
    if (w < 0) continue;
    word_score[w] = std::max(word_score[w], std::fabs(profile.scores[i]));
  }
  std::vector<int> positions;
  for (int w = 0; w < static_cast<int>(words.size()); ++w)
    if (!excluded_words.count(w) && word_score[w] >= 0.f) positions.push_back(w);
  std::stable_sort(positions.begin(), positions.end(), [&](int a, int b) {
    if (word_score[a] != word_score[b]) return word_score[a] > word_score[b];
    return a < b;
  });
  return positions;
}

}  // namespace

TestCase generate_test(const TokenSequence& seed, int epsilon, PerturbationKind kind,
                       const AttackContext& ctx) {
  if (epsilon < 0)
    throw Error(ErrorKind::ContractViolation, "generate_test: epsilon must be >= 0");
  const ModelWeights& weights = *ctx.weights;
  const ModelConfig& config = ctx.config;

  TestCase result;
  result.seed = seed;
  result.kind = kind;
  result.seed_trace = decode(encode(seed, weights, config), weights, config);
  result.perturbed = seed;
  result.adv_trace = result.seed_trace;

  std::set<int> excluded_words;
  Rng baseline_rng(ctx.rng_seed);

  for (int iter = 0; iter < epsilon; ++iter) {
    const TokenSequence& current = result.perturbed;
    const auto words = split_words(current.surface);

    std::vector<PerturbationCandidate> candidates;
    int position_used = -1;

    if (kind == PerturbationKind::RANDOM) {
      if (excluded_words.size() >= words.size()) {
        result.exhausted_early = true;
        break;
      }
      // Redraw until the mutation lands on a not-yet-perturbed word.
      PerturbationCandidate cand;
      bool found = false;
      for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
        cand = random_mutation(current, PerturbationKind::TOKEN_REPLACE,
                               baseline_rng.next_u64(), *ctx.vocab, *ctx.lexicon);
        const int w = word_of_token(words, current.spans[cand.position]);
        if (w >= 0 && !excluded_words.count(w)) {
          position_used = w;
          found = true;
        }
      }
      if (!found) {
        result.exhausted_early = true;
        break;
      }
      candidates.push_back(std::move(cand));
    } else {
      ImportanceProfile profile = objective_and_importance(current, weights, config);
      if (kind == PerturbationKind::TOKEN_REPLACE) {
        // Perturb the word carrying the most gradient mass (sum of |g_i| over
        // its tokens), then decode every single-token replacement inside it.
        // For two-token words the candidate set also pairs the top first-order
        // replacements of both slots: the budget counts words changed, and
        // joint edits reach sequences no single-token edit can.
        std::vector<std::vector<int>> word_tokens(words.size());
        for (std::size_t i = 0; i < current.tokens.size(); ++i) {
          const int w = word_of_token(words, current.spans[i]);
          if (w >= 0) word_tokens[w].push_back(static_cast<int>(i));
        }
        int best_w = -1;
        double best_mass = 0.0;
        for (std::size_t w = 0; w < words.size(); ++w) {
          if (excluded_words.count(static_cast<int>(w)) || word_tokens[w].empty()) continue;
          double mass = 0.0;
          for (int p : word_tokens[w]) mass += std::fabs(profile.scores[p]);
          if (best_w < 0 || mass > best_mass) {
            best_w = static_cast<int>(w);
            best_mass = mass;
          }
        }
        if (best_w < 0) {
          result.exhausted_early = true;
          break;
        }
        position_used = best_w;
        for (int p : word_tokens[best_w])
          for (auto& cand : token_replace_ranked(current, p, profile, *ctx.vocab,
                                                 weights, ctx.vocab->size()))
            candidates.push_back(std::move(cand));
        if (word_tokens[best_w].size() == 2) {
          constexpr int kPairBeam = 32;
          const int p0 = word_tokens[best_w][0], p1 = word_tokens[best_w][1];
          const auto top0 =
              token_replace_ranked(current, p0, profile, *ctx.vocab, weights, kPairBeam);
          const auto top1 =
              token_replace_ranked(current, p1, profile, *ctx.vocab, weights, kPairBeam);
          const WordSpan& ws = words[best_w];
          for (const auto& a : top0)
            for (const auto& b : top1) {
              PerturbationCandidate cand;
              cand.kind = PerturbationKind::TOKEN_REPLACE;
              cand.position = p0;
              cand.replacement_id = a.replacement_id;
              cand.replacement_word = a.replacement_word + b.replacement_word;
              cand.predicted_delta_f = a.predicted_delta_f + b.predicted_delta_f;
              cand.has_prediction = true;
              cand.text = splice(current.surface, ws.start, ws.end, cand.replacement_word);
              candidates.push_back(std::move(cand));
            }
        }
      } else {
        const auto ranked = rank_critical_words(profile, current, words, excluded_words);
        for (int wp : ranked) {
          candidates = (kind == PerturbationKind::CHAR_INSERT)
                           ? char_insert_candidates(current, wp)
                           : struct_replace_candidates(current, wp, *ctx.lexicon);
          if (!candidates.empty()) {
            position_used = wp;
            break;
          }
        }
        if (candidates.empty()) {
          result.exhausted_early = true;
          break;
        }
      }
    }

    // Decode every candidate; keep the strictly best loop count.
    int best_idx = -1;
    int best_loops = result.adv_trace.loops;
    std::vector<DecodeTrace> traces(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      TokenSequence cand_seq = tokenize(candidates[c].text, *ctx.vocab);
      traces[c] = decode(encode(cand_seq, weights, config), weights, config);
      ++result.candidates_evaluated;
      if (traces[c].loops > best_loops) {
        best_loops = traces[c].loops;
        best_idx = static_cast<int>(c);
      }
    }

    if (best_idx >= 0) {
      result.perturbed = tokenize(candidates[best_idx].text, *ctx.vocab);
      result.adv_trace = std::move(traces[best_idx]);
    }
    excluded_words.insert(position_used);
    ++result.epsilon_used;
    result.per_iteration_best_loops.push_back(result.adv_trace.loops);
  }
  return result;
}

}  // namespace sloth

#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slothbench/error.hpp"

namespace sloth {

// Insertable characters for character-level mutations: 26 lowercase + 26
// uppercase letters + 10 digits, in that order. |C| = 62.
class CharSet {
 public:
  static const std::string& characters();
  static bool contains(char c);
  static constexpr int kSize = 62;
};

// Punctuation accepted by the tokenizer in addition to CharSet and space.
const std::string& basic_punctuation();

struct Vocabulary {
  std::vector<std::string> entries;  // index == token id, specials included
  int pad_id = 0;
  int sos_id = 1;
  int eos_id = 2;
  std::unordered_map<std::string, int> id_of;

  int size() const { return static_cast<int>(entries.size()); }
  bool is_special(int id) const { return id == pad_id || id == sos_id || id == eos_id; }
  const std::string& entry(int id) const;

  // The vocabulary shipped with the toolkit: 3 specials, 62 characters,
  // space, basic punctuation, and the 64 synthetic-lexicon words.
  static Vocabulary standard();
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;
};

struct TokenSequence {
  std::string surface;
  std::vector<int> tokens;
  std::vector<std::pair<int, int>> spans;  // [start, end) offsets into surface

  bool operator==(const TokenSequence& other) const {
    return surface == other.surface && tokens == other.tokens;
  }
};

enum class PosTag { NOUN, VERB, ADJ, ADV, PRON, DET, ADP, CONJ, NUM, OTHER };

const char* to_string(PosTag tag);
PosTag pos_tag_from_string(const std::string& s);

struct PosLexicon {
  std::unordered_map<std::string, PosTag> tag_of;
  std::unordered_map<int, std::vector<std::string>> buckets;  // by PosTag

  PosTag tag(const std::string& word) const;
  const std::vector<std::string>& bucket(PosTag tag) const;

  static PosLexicon standard();
  static PosLexicon load(const std::string& path);
  void save(const std::string& path) const;
};

// Greedy longest-prefix match against the vocabulary.
TokenSequence tokenize(const std::string& text, const Vocabulary& vocab);

// Concatenation of subword strings; strips a trailing EOS, rejects other
// special ids and out-of-range ids.
std::string detokenize(const std::vector<int>& tokens, const Vocabulary& vocab);

// One tag per whitespace-delimited word; unknown words tag OTHER.
std::vector<PosTag> pos_tags(const TokenSequence& seq, const PosLexicon& lexicon);

// Whitespace-delimited words of a sentence, with [start, end) offsets.
struct WordSpan {
  std::string word;
  int start = 0;
  int end = 0;
};
std::vector<WordSpan> split_words(const std::string& text);

// Number of word positions at which two sentences differ (word counts may
// differ; extra words count one each).
int word_edit_distance(const std::string& a, const std::string& b);

}  // namespace sloth

#pragma once

#include <string>
#include <vector>

#include "slothbench/tokenizer.hpp"

namespace sloth {

struct LexiconEntry {
  std::string word;
  PosTag tag;
};

// The 64 root words. These are the only multi-character subwords in the
// standard vocabulary; every other lexicon word segments into them (or into
// characters).
const std::vector<LexiconEntry>& lexicon_roots();

// The full word list of the synthetic translation task: the 64 roots plus 128
// two-root compounds that tokenize into exactly two subwords.
const std::vector<LexiconEntry>& synthetic_lexicon();

// Superset used for the POS lexicon (~200 tagged words). Words outside the
// synthetic lexicon fragment into characters when tokenized.
const std::vector<LexiconEntry>& extended_lexicon();

// Fixed invertible word mapping defining the synthetic translation task.
const std::string& bijection_forward(const std::string& word);
const std::string& bijection_inverse(const std::string& word);

}  // namespace sloth

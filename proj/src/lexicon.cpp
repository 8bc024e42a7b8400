#include "slothbench/lexicon.hpp"

#include <unordered_map>
#include <set>

namespace sloth {

namespace {

std::vector<LexiconEntry> make_roots() {
  using T = PosTag;
  return {
      {"moon", T::NOUN},    {"river", T::NOUN},   {"stone", T::NOUN},
      {"garden", T::NOUN},  {"window", T::NOUN},  {"music", T::NOUN},
      {"horse", T::NOUN},   {"paper", T::NOUN},   {"winter", T::NOUN},
      {"doctor", T::NOUN},  {"market", T::NOUN},  {"island", T::NOUN},
      {"butter", T::NOUN},  {"candle", T::NOUN},  {"forest", T::NOUN},
      {"dinner", T::NOUN},  {"run", T::VERB},     {"sing", T::VERB},
      {"carry", T::VERB},   {"build", T::VERB},   {"open", T::VERB},
      {"close", T::VERB},   {"watch", T::VERB},   {"bring", T::VERB},
      {"speak", T::VERB},   {"learn", T::VERB},   {"drive", T::VERB},
      {"paint", T::VERB},   {"visit", T::VERB},   {"follow", T::VERB},
      {"answer", T::VERB},  {"travel", T::VERB},  {"red", T::ADJ},
      {"blue", T::ADJ},     {"small", T::ADJ},    {"large", T::ADJ},
      {"quiet", T::ADJ},    {"bright", T::ADJ},   {"heavy", T::ADJ},
      {"gentle", T::ADJ},   {"narrow", T::ADJ},   {"simple", T::ADJ},
      {"slowly", T::ADV},   {"often", T::ADV},    {"never", T::ADV},
      {"always", T::ADV},   {"maybe", T::ADV},    {"today", T::ADV},
      {"she", T::PRON},     {"they", T::PRON},    {"him", T::PRON},
      {"everyone", T::PRON}, {"the", T::DET},     {"this", T::DET},
      {"every", T::DET},    {"some", T::DET},     {"under", T::ADP},
      {"over", T::ADP},     {"near", T::ADP},     {"between", T::ADP},
      {"and", T::CONJ},     {"but", T::CONJ},     {"seven", T::NUM},
      {"forty", T::NUM},
  };
}

// Greedy longest-prefix match over the root list, mirroring the tokenizer's
// segmentation of multi-character subwords. Returns root indices, or an empty
// list if some position matches no root.
std::vector<int> greedy_root_split(const std::string& word,
                                   const std::vector<LexiconEntry>& roots) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < word.size()) {
    int best = -1;
    std::size_t best_len = 0;
    for (int r = 0; r < static_cast<int>(roots.size()); ++r) {
      const std::string& w = roots[r].word;
      if (w.size() > best_len && word.compare(pos, w.size(), w) == 0) {
        best = r;
        best_len = w.size();
      }
    }
    if (best < 0) return {};
    out.push_back(best);
    pos += best_len;
  }
  return out;
}

// The full synthetic lexicon: the 64 roots plus 128 two-root compounds whose
// greedy segmentation is exactly the intended root pair. Compounds take the
// head (second) root's tag. Deterministic: candidate pairs are enumerated from
// a fixed linear-congruential walk over the index grid.
std::vector<LexiconEntry> make_synthetic() {
  const std::vector<LexiconEntry> roots = make_roots();
  std::vector<LexiconEntry> all = roots;
  std::set<std::string> seen;
  for (const auto& e : roots) seen.insert(e.word);

  const int n = static_cast<int>(roots.size());
  // Fixed full-period linear-congruential walk over the 64x64 pair grid
  // (multiplier 5 ≡ 1 mod 4, odd increment), so compound selection is
  // reproducible and spread across the grid.
  int cell = 1;
  int added = 0;
  while (added < 128) {
    cell = (cell * 5 + 17) % (n * n);
    const int a = cell / n, b = cell % n;
    if (a == b) continue;
    const std::string word = roots[a].word + roots[b].word;
    if (seen.count(word)) continue;
    const std::vector<int> split = greedy_root_split(word, roots);
    if (split.size() != 2 || split[0] != a || split[1] != b) continue;
    seen.insert(word);
    all.push_back({word, roots[b].tag});
    ++added;
  }
  return all;
}

std::vector<LexiconEntry> make_extended() {
  using T = PosTag;
  std::vector<LexiconEntry> all = make_synthetic();
  std::vector<LexiconEntry> extra = {
      {"table", T::NOUN},   {"chair", T::NOUN},   {"bridge", T::NOUN},
      {"valley", T::NOUN},  {"silver", T::NOUN},  {"ladder", T::NOUN},
      {"pocket", T::NOUN},  {"bottle", T::NOUN},  {"street", T::NOUN},
      {"teacher", T::NOUN}, {"farmer", T::NOUN},  {"singer", T::NOUN},
      {"letter", T::NOUN},  {"basket", T::NOUN},  {"shadow", T::NOUN},
      {"summer", T::NOUN},  {"autumn", T::NOUN},  {"spring", T::NOUN},
      {"corner", T::NOUN},  {"cellar", T::NOUN},  {"meadow", T::NOUN},
      {"puzzle", T::NOUN},  {"ticket", T::NOUN},  {"jacket", T::NOUN},
      {"helmet", T::NOUN},  {"planet", T::NOUN},  {"rocket", T::NOUN},
      {"magnet", T::NOUN},  {"tunnel", T::NOUN},  {"barrel", T::NOUN},
      {"carpet", T::NOUN},  {"velvet", T::NOUN},  {"harbor", T::NOUN},
      {"anchor", T::NOUN},  {"lantern", T::NOUN}, {"pepper", T::NOUN},
      {"copper", T::NOUN},  {"hammer", T::NOUN},  {"mirror", T::NOUN},
      {"saddle", T::NOUN},  {"walk", T::VERB},    {"jump", T::VERB},
      {"climb", T::VERB},   {"throw", T::VERB},   {"catch", T::VERB},
      {"push", T::VERB},    {"pull", T::VERB},    {"lift", T::VERB},
      {"drop", T::VERB},    {"hold", T::VERB},    {"send", T::VERB},
      {"read", T::VERB},    {"write", T::VERB},   {"count", T::VERB},
      {"teach", T::VERB},   {"study", T::VERB},   {"listen", T::VERB},
      {"wander", T::VERB},  {"gather", T::VERB},  {"borrow", T::VERB},
      {"repair", T::VERB},  {"polish", T::VERB},  {"whisper", T::VERB},
      {"deliver", T::VERB}, {"imagine", T::VERB}, {"remember", T::VERB},
      {"forget", T::VERB},  {"notice", T::VERB},  {"wonder", T::VERB},
      {"explain", T::VERB}, {"green", T::ADJ},    {"yellow", T::ADJ},
      {"purple", T::ADJ},   {"golden", T::ADJ},   {"silent", T::ADJ},
      {"gloomy", T::ADJ},   {"cheerful", T::ADJ}, {"clever", T::ADJ},
      {"hollow", T::ADJ},   {"smooth", T::ADJ},   {"rough", T::ADJ},
      {"sturdy", T::ADJ},   {"fragile", T::ADJ},  {"ancient", T::ADJ},
      {"modern", T::ADJ},   {"distant", T::ADJ},  {"hidden", T::ADJ},
      {"frozen", T::ADJ},   {"wooden", T::ADJ},   {"woolen", T::ADJ},
      {"gently", T::ADV},   {"quickly", T::ADV},  {"quietly", T::ADV},
      {"rarely", T::ADV},   {"usually", T::ADV},  {"almost", T::ADV},
      {"nearly", T::ADV},   {"perhaps", T::ADV},  {"tomorrow", T::ADV},
      {"yesterday", T::ADV}, {"everywhere", T::ADV}, {"somewhere", T::ADV},
      {"herself", T::PRON}, {"himself", T::PRON}, {"nobody", T::PRON},
      {"someone", T::PRON}, {"anybody", T::PRON}, {"themselves", T::PRON},
      {"these", T::DET},    {"those", T::DET},    {"each", T::DET},
      {"another", T::DET},  {"either", T::DET},   {"neither", T::DET},
      {"above", T::ADP},    {"below", T::ADP},    {"behind", T::ADP},
      {"beside", T::ADP},   {"within", T::ADP},   {"without", T::ADP},
      {"through", T::ADP},  {"against", T::ADP},  {"toward", T::ADP},
      {"because", T::CONJ}, {"although", T::CONJ}, {"unless", T::CONJ},
      {"while", T::CONJ},   {"since", T::CONJ},   {"three", T::NUM},
      {"eight", T::NUM},    {"eleven", T::NUM},   {"twelve", T::NUM},
      {"twenty", T::NUM},   {"hundred", T::NUM},  {"thousand", T::NUM},
      {"dozen", T::NUM},    {"ninety", T::NUM},   {"sixty", T::NUM},
  };
  all.insert(all.end(), extra.begin(), extra.end());
  return all;
}

// Rotation over the full lexicon; any fixed permutation works. Because the
// list interleaves one-token roots and two-token compounds, the rotation maps
// some words to translations with a different token count, giving natural
// output-length variation among inputs of equal token length.
constexpr int kBijectionShift = 17;

const std::unordered_map<std::string, std::string>& forward_map() {
  static const std::unordered_map<std::string, std::string> map = [] {
    const auto& lex = synthetic_lexicon();
    std::unordered_map<std::string, std::string> m;
    const int n = static_cast<int>(lex.size());
    for (int i = 0; i < n; ++i)
      m[lex[i].word] = lex[(i + kBijectionShift) % n].word;
    return m;
  }();
  return map;
}

const std::unordered_map<std::string, std::string>& inverse_map() {
  static const std::unordered_map<std::string, std::string> map = [] {
    std::unordered_map<std::string, std::string> m;
    for (const auto& [src, dst] : forward_map()) m[dst] = src;
    return m;
  }();
  return map;
}

}  // namespace

const std::vector<LexiconEntry>& lexicon_roots() {
  static const std::vector<LexiconEntry> lex = make_roots();
  return lex;
}

const std::vector<LexiconEntry>& synthetic_lexicon() {
  static const std::vector<LexiconEntry> lex = make_synthetic();
  return lex;
}

const std::vector<LexiconEntry>& extended_lexicon() {
  static const std::vector<LexiconEntry> lex = make_extended();
  return lex;
}

const std::string& bijection_forward(const std::string& word) {
  auto it = forward_map().find(word);
  if (it == forward_map().end())
    throw Error(ErrorKind::ContractViolation, "bijection: unknown word '" + word + "'");
  return it->second;
}

const std::string& bijection_inverse(const std::string& word) {
  auto it = inverse_map().find(word);
  if (it == inverse_map().end())
    throw Error(ErrorKind::ContractViolation, "bijection: unknown word '" + word + "'");
  return it->second;
}

}  // namespace sloth

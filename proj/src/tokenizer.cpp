#include "slothbench/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "slothbench/lexicon.hpp"

namespace sloth {

namespace {

constexpr const char* kPad = "<pad>";
constexpr const char* kSos = "<sos>";
constexpr const char* kEos = "<eos>";
constexpr const char* kFileVersion = "#v1";

bool supported_char(char c) {
  return CharSet::contains(c) || c == ' ' ||
         basic_punctuation().find(c) != std::string::npos;
}

}  // namespace

const std::string& CharSet::characters() {
  static const std::string chars =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  return chars;
}

bool CharSet::contains(char c) {
  return characters().find(c) != std::string::npos;
}

const std::string& basic_punctuation() {
  static const std::string punct = ".,?!'-";
  return punct;
}

const std::string& Vocabulary::entry(int id) const {
  if (id < 0 || id >= size())
    throw Error(ErrorKind::InvalidTokenId, "token id " + std::to_string(id) + " out of range");
  return entries[id];
}

Vocabulary Vocabulary::standard() {
  Vocabulary v;
  v.entries = {kPad, kSos, kEos};
  for (char c : CharSet::characters()) v.entries.emplace_back(1, c);
  v.entries.emplace_back(" ");
  for (char c : basic_punctuation()) v.entries.emplace_back(1, c);
  for (const auto& e : lexicon_roots()) v.entries.push_back(e.word);
  for (int i = 0; i < v.size(); ++i) v.id_of[v.entries[i]] = i;
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open vocabulary file " + path);
  std::string line;
  if (!std::getline(in, line) || line != kFileVersion)
    throw Error(ErrorKind::MagicMismatch, "vocabulary file missing " + std::string(kFileVersion) +
                                              " header: " + path);
  Vocabulary v;
  while (std::getline(in, line)) {
    if (line == "\\s") line = " ";  // space entry is escaped on disk
    v.entries.push_back(line);
  }
  if (v.size() < 3 || v.entries[0] != kPad || v.entries[1] != kSos || v.entries[2] != kEos)
    throw Error(ErrorKind::MagicMismatch, "vocabulary file lacks special tokens: " + path);
  for (int i = 0; i < v.size(); ++i) v.id_of[v.entries[i]] = i;
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write vocabulary file " + path);
  out << kFileVersion << "\n";
  for (const auto& e : entries) out << (e == " " ? "\\s" : e) << "\n";
}

const char* to_string(PosTag tag) {
  switch (tag) {
    case PosTag::NOUN: return "NOUN";
    case PosTag::VERB: return "VERB";
    case PosTag::ADJ: return "ADJ";
    case PosTag::ADV: return "ADV";
    case PosTag::PRON: return "PRON";
    case PosTag::DET: return "DET";
    case PosTag::ADP: return "ADP";
    case PosTag::CONJ: return "CONJ";
    case PosTag::NUM: return "NUM";
    case PosTag::OTHER: return "OTHER";
  }
  return "OTHER";
}

PosTag pos_tag_from_string(const std::string& s) {
  static const std::unordered_map<std::string, PosTag> map = {
      {"NOUN", PosTag::NOUN}, {"VERB", PosTag::VERB}, {"ADJ", PosTag::ADJ},
      {"ADV", PosTag::ADV},   {"PRON", PosTag::PRON}, {"DET", PosTag::DET},
      {"ADP", PosTag::ADP},   {"CONJ", PosTag::CONJ}, {"NUM", PosTag::NUM},
      {"OTHER", PosTag::OTHER}};
  auto it = map.find(s);
  if (it == map.end())
    throw Error(ErrorKind::IoError, "unknown POS tag '" + s + "'");
  return it->second;
}

PosTag PosLexicon::tag(const std::string& word) const {
  auto it = tag_of.find(word);
  return it == tag_of.end() ? PosTag::OTHER : it->second;
}

const std::vector<std::string>& PosLexicon::bucket(PosTag tag) const {
  static const std::vector<std::string> empty;
  auto it = buckets.find(static_cast<int>(tag));
  return it == buckets.end() ? empty : it->second;
}

PosLexicon PosLexicon::standard() {
  PosLexicon lex;
  for (const auto& e : extended_lexicon()) {
    lex.tag_of[e.word] = e.tag;
    lex.buckets[static_cast<int>(e.tag)].push_back(e.word);
  }
  return lex;
}

PosLexicon PosLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open lexicon file " + path);
  std::string line;
  if (!std::getline(in, line) || line != kFileVersion)
    throw Error(ErrorKind::MagicMismatch,
                "lexicon file missing " + std::string(kFileVersion) + " header: " + path);
  PosLexicon lex;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::IoError,
                  "lexicon line " + std::to_string(lineno) + " lacks a tab separator");
    std::string word = line.substr(0, tab);
    PosTag tag = pos_tag_from_string(line.substr(tab + 1));
    lex.tag_of[word] = tag;
    lex.buckets[static_cast<int>(tag)].push_back(word);
  }
  return lex;
}

void PosLexicon::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write lexicon file " + path);
  out << kFileVersion << "\n";
  // Stable order: bucket-major in tag order, insertion order within bucket.
  for (int t = 0; t <= static_cast<int>(PosTag::OTHER); ++t) {
    auto it = buckets.find(t);
    if (it == buckets.end()) continue;
    for (const auto& w : it->second)
      out << w << "\t" << to_string(static_cast<PosTag>(t)) << "\n";
  }
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab) {
  TokenSequence seq;
  seq.surface = text;
  std::size_t max_len = 1;
  for (const auto& e : vocab.entries) max_len = std::max(max_len, e.size());

  std::size_t pos = 0;
  while (pos < text.size()) {
    if (!supported_char(text[pos]))
      throw Error(ErrorKind::UnsupportedCharacter,
                  "unsupported character at offset " + std::to_string(pos));
    std::size_t best = 0;
    int best_id = -1;
    const std::size_t limit = std::min(max_len, text.size() - pos);
    for (std::size_t len = limit; len >= 1; --len) {
      auto it = vocab.id_of.find(text.substr(pos, len));
      if (it != vocab.id_of.end() && !vocab.is_special(it->second)) {
        best = len;
        best_id = it->second;
        break;
      }
    }
    if (best_id < 0)
      throw Error(ErrorKind::UnsupportedCharacter,
                  "no vocabulary entry at offset " + std::to_string(pos));
    seq.tokens.push_back(best_id);
    seq.spans.emplace_back(static_cast<int>(pos), static_cast<int>(pos + best));
    pos += best;
  }
  return seq;
}

std::string detokenize(const std::vector<int>& tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens[i];
    if (id < 0 || id >= vocab.size())
      throw Error(ErrorKind::InvalidTokenId,
                  "token id " + std::to_string(id) + " out of range");
    if (vocab.is_special(id)) {
      if (id == vocab.eos_id && i + 1 == tokens.size()) break;  // strip trailing EOS
      throw Error(ErrorKind::InvalidTokenId,
                  "special token id " + std::to_string(id) + " inside sequence");
    }
    out += vocab.entries[id];
  }
  return out;
}

std::vector<WordSpan> split_words(const std::string& text) {
  std::vector<WordSpan> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    words.push_back({text.substr(i, j - i), static_cast<int>(i), static_cast<int>(j)});
    i = j;
  }
  return words;
}

std::vector<PosTag> pos_tags(const TokenSequence& seq, const PosLexicon& lexicon) {
  std::vector<PosTag> tags;
  for (const auto& w : split_words(seq.surface))
    tags.push_back(w.word.size() <= 1 ? PosTag::OTHER : lexicon.tag(w.word));
  return tags;
}

int word_edit_distance(const std::string& a, const std::string& b) {
  const auto wa = split_words(a);
  const auto wb = split_words(b);
  const std::size_t common = std::min(wa.size(), wb.size());
  int diff = static_cast<int>(std::max(wa.size(), wb.size()) - common);
  for (std::size_t i = 0; i < common; ++i)
    if (wa[i].word != wb[i].word) ++diff;
  return diff;
}

}  // namespace sloth

#include <cstdio>
#include <string>

#include "doctest.h"
#include "slothbench/lexicon.hpp"
#include "slothbench/rng.hpp"
#include "slothbench/tokenizer.hpp"

using namespace sloth;

namespace {

Vocabulary tiny_vocab() {
  Vocabulary v;
  v.entries = {"<pad>", "<sos>", "<eos>", "a", "b", "ab"};
  for (int i = 0; i < v.size(); ++i) v.id_of[v.entries[i]] = i;
  return v;
}

std::string random_sentence(Rng& rng) {
  std::string s;
  const int words = 1 + static_cast<int>(rng.next_below(6));
  for (int w = 0; w < words; ++w) {
    if (w) s += ' ';
    const int len = 1 + static_cast<int>(rng.next_below(8));
    for (int i = 0; i < len; ++i)
      s += CharSet::characters()[rng.next_below(CharSet::kSize)];
  }
  return s;
}

}  // namespace

TEST_CASE("greedy longest match prefers the longer entry") {
  Vocabulary v = tiny_vocab();
  CHECK(tokenize("ab", v).tokens == std::vector<int>{5});
  CHECK(tokenize("ba", v).tokens == std::vector<int>{4, 3});
}

TEST_CASE("character insertion changes segmentation") {
  Vocabulary v = Vocabulary::standard();
  CHECK(tokenize("who", v).tokens != tokenize("whoo", v).tokens);
}

TEST_CASE("unsupported character reports its offset") {
  Vocabulary v = Vocabulary::standard();
  try {
    tokenize("ab~cd", v);
    FAIL("expected unsupported-character error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedCharacter);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("detokenize basics") {
  Vocabulary v = Vocabulary::standard();
  CHECK(detokenize({}, v) == "");
  CHECK(detokenize({v.eos_id}, v) == "");
  CHECK_THROWS_AS(detokenize({v.size()}, v), Error);
  CHECK_THROWS_AS(detokenize({v.sos_id, 5}, v), Error);
}

TEST_CASE("round trip over 1000 random sentences") {
  Vocabulary v = Vocabulary::standard();
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const std::string s = random_sentence(rng);
    TokenSequence seq = tokenize(s, v);
    CHECK(detokenize(seq.tokens, v) == s);
    // spans are ordered and non-overlapping
    for (std::size_t t = 1; t < seq.spans.size(); ++t)
      CHECK(seq.spans[t].first == seq.spans[t - 1].second);
  }
}

TEST_CASE("standard vocabulary covers the character set") {
  Vocabulary v = Vocabulary::standard();
  for (char c : CharSet::characters()) CHECK(v.id_of.count(std::string(1, c)) == 1);
  CHECK(v.id_of.count(" ") == 1);
  // 3 specials + 62 chars + space + punctuation + 64 lexicon words
  CHECK(v.size() == 3 + 62 + 1 + static_cast<int>(basic_punctuation().size()) + 64);
}

TEST_CASE("vocabulary file round trip") {
  Vocabulary v = Vocabulary::standard();
  const std::string path = "/tmp/slothbench_vocab_test.txt";
  v.save(path);
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.entries == v.entries);
  std::remove(path.c_str());
}

TEST_CASE("pos tags per word with OTHER fallback") {
  Vocabulary v = Vocabulary::standard();
  PosLexicon lex = PosLexicon::standard();
  CHECK(pos_tags(tokenize("", v), lex).empty());

  auto tags = pos_tags(tokenize("moon xyzzy a run", v), lex);
  REQUIRE(tags.size() == 4);
  CHECK(tags[0] == PosTag::NOUN);
  CHECK(tags[1] == PosTag::OTHER);  // unknown word
  CHECK(tags[2] == PosTag::OTHER);  // single character
  CHECK(tags[3] == PosTag::VERB);

  // same-bucket replacement leaves the tag list unchanged
  auto tags2 = pos_tags(tokenize("river xyzzy a run", v), lex);
  CHECK(tags == tags2);
}

TEST_CASE("pos lexicon file round trip") {
  PosLexicon lex = PosLexicon::standard();
  const std::string path = "/tmp/slothbench_lexicon_test.txt";
  lex.save(path);
  PosLexicon loaded = PosLexicon::load(path);
  CHECK(loaded.tag_of.size() == lex.tag_of.size());
  for (const auto& [word, tag] : lex.tag_of) CHECK(loaded.tag(word) == tag);
  std::remove(path.c_str());
}

TEST_CASE("char set has 62 unique characters in fixed order") {
  const std::string& chars = CharSet::characters();
  CHECK(chars.size() == 62);
  for (std::size_t i = 0; i < chars.size(); ++i)
    CHECK(chars.find(chars[i]) == i);  // no duplicates
}

TEST_CASE("insertion candidate space is (l+1) * 62") {
  // counted directly over distinct (position, character) pairs
  const std::string word = "who";
  int count = 0;
  for (std::size_t off = 0; off <= word.size(); ++off)
    count += CharSet::kSize;
  CHECK(count == static_cast<int>(word.size() + 1) * 62);
}

TEST_CASE("word edit distance counts differing positions") {
  CHECK(word_edit_distance("a b c", "a b c") == 0);
  CHECK(word_edit_distance("a b c", "a x c") == 1);
  CHECK(word_edit_distance("a b c", "a x") == 2);
}

TEST_CASE("synthetic bijection is invertible") {
  for (const auto& e : synthetic_lexicon()) {
    CHECK(bijection_inverse(bijection_forward(e.word)) == e.word);
    CHECK(bijection_forward(e.word) != e.word);
  }
}

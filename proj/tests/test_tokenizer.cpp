#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "sgt/rng.hpp"
#include "sgt/tokenizer.hpp"

using sgt::Tokenizer;
using sgt::TokenizerMode;

TEST_CASE("byte-level round-trips arbitrary UTF-8 exactly") {
  auto tok = Tokenizer::byte_level();
  CHECK(tok.vocab_size() == 256);
  for (const std::string s :
       {std::string("hello world"), std::string("caf\xc3\xa9 \xe2\x82\xac"),
        std::string("line\nbreak\ttab"), std::string(1, '\x7f')}) {
    CHECK(tok.decode(tok.encode(s)) == s);
  }
  // Random byte strings round-trip too.
  sgt::RngStream rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::string s;
    const int len = 1 + static_cast<int>(rng.uniform_index(64));
    for (int i = 0; i < len; ++i)
      s.push_back(static_cast<char>(rng.uniform_index(256)));
    CHECK(tok.decode(tok.encode(s)) == s);
  }
}

TEST_CASE("empty input is an error") {
  auto tok = Tokenizer::byte_level();
  CHECK_THROWS_AS(tok.encode(""), std::invalid_argument);
}

TEST_CASE("word-level vocabulary covers exactly the corpus tokens") {
  const std::string corpus = "the cat sat on the mat the end";
  auto tok = Tokenizer::word_level_from_corpus(corpus);
  // specials + {cat, end, mat, on, sat, the}
  CHECK(tok.vocab_size() == 3 + 6);
  // Every non-special vocab entry occurs in the corpus at least once.
  for (int id = 3; id < tok.vocab_size(); ++id) {
    const std::string& w = tok.vocab()[id];
    CHECK(corpus.find(w) != std::string::npos);
  }
  auto ids = tok.encode("the cat sat");
  CHECK(tok.decode(ids) == "the cat sat");
}

TEST_CASE("word-level raises on out-of-vocabulary input") {
  auto tok = Tokenizer::word_level_from_corpus("alpha beta gamma");
  CHECK_THROWS_AS(tok.encode("alpha delta"), std::invalid_argument);
}

TEST_CASE("vocabulary file round-trip") {
  auto tok = Tokenizer::word_level_from_corpus("one two three two one");
  const auto path =
      std::filesystem::temp_directory_path() / "sgt_vocab_test.txt";
  tok.save_vocab(path.string());
  auto loaded = Tokenizer::load_vocab(path.string());
  CHECK(loaded.vocab() == tok.vocab());
  CHECK(loaded.mode() == TokenizerMode::kWord);
  std::filesystem::remove(path);
}

TEST_CASE("vocabulary file with a bad header is rejected") {
  const auto path =
      std::filesystem::temp_directory_path() / "sgt_vocab_bad.txt";
  {
    std::ofstream out(path);
    out << "not-a-vocab 9\nfoo\n";
  }
  CHECK_THROWS_AS(Tokenizer::load_vocab(path.string()), std::runtime_error);
  std::filesystem::remove(path);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "sgt/dataset.hpp"

using sgt::BatchSampler;
using sgt::Dataset;
using sgt::RngStream;
using sgt::Tokenizer;

namespace {

Dataset tiny_dataset() {
  auto tok = Tokenizer::byte_level();
  return Dataset::from_text(tok, "abcdefghijabcdefghij", 5);
}

}  // namespace

TEST_CASE("chunking prepends bos and pads only the final chunk") {
  auto tok = Tokenizer::byte_level();
  auto d = Dataset::from_text(tok, "abcdefgh", 4);  // 3 content per chunk
  REQUIRE(d.chunks.size() == 3);
  CHECK(d.chunks[0] == std::vector<int>{1, 'a', 'b', 'c'});
  CHECK(d.chunks[1] == std::vector<int>{1, 'd', 'e', 'f'});
  CHECK(d.chunks[2] == std::vector<int>{1, 'g', 'h', 0});
  for (size_t i = 0; i + 1 < d.chunks.size(); ++i)
    for (int id : d.chunks[i]) CHECK(id != d.pad_id);
}

TEST_CASE("equal seeds replay identical batch streams") {
  auto d = tiny_dataset();
  BatchSampler a(d, d.all_chunk_ids(), 3, RngStream(7, 0));
  BatchSampler b(d, d.all_chunk_ids(), 3, RngStream(7, 0));
  for (int i = 0; i < 20; ++i) CHECK(a.next_batch() == b.next_batch());
}

TEST_CASE("distinct stream ids give independent batch streams") {
  auto d = tiny_dataset();
  BatchSampler a(d, d.all_chunk_ids(), 2, RngStream(7, 0));
  BatchSampler b(d, d.all_chunk_ids(), 2, RngStream(7, 1));
  CHECK(a.stream_id() != b.stream_id());
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) any_diff |= (a.next_batch() != b.next_batch());
  CHECK(any_diff);
}

TEST_CASE("epoch order without replacement is a pure function of seed") {
  auto d = tiny_dataset();
  BatchSampler a(d, d.all_chunk_ids(), 1, RngStream(3, 0), false);
  BatchSampler b(d, d.all_chunk_ids(), 1, RngStream(3, 0), false);
  const size_t n = d.chunks.size();
  std::set<std::vector<int>> seen;
  for (size_t i = 0; i < n; ++i) {
    auto batch = a.next_batch();
    CHECK(batch == b.next_batch());
    seen.insert(batch[0]);
  }
  CHECK(seen.size() == n);  // one epoch covers every chunk exactly once
}

TEST_CASE("batch size beyond pool without replacement is an error") {
  auto d = tiny_dataset();
  CHECK_THROWS_AS(
      BatchSampler(d, d.all_chunk_ids(), 1000, RngStream(0, 0), false),
      std::invalid_argument);
}

TEST_CASE("degenerate one-token corpus repeats that token") {
  auto tok = Tokenizer::byte_level();
  auto d = Dataset::from_text(tok, "z", 2);
  REQUIRE(d.chunks.size() == 1);
  CHECK(d.chunks[0] == std::vector<int>{1, 'z'});
  BatchSampler s(d, d.all_chunk_ids(), 4, RngStream(1, 0));
  for (auto& seq : s.next_batch()) CHECK(seq == d.chunks[0]);
}

TEST_CASE("train and eval splits are disjoint and cover all chunks") {
  auto tok = Tokenizer::byte_level();
  std::string text;
  for (int i = 0; i < 500; ++i) text += "abcdefghij";
  auto d = Dataset::from_text(tok, text, 8);
  auto train = d.train_chunk_ids();
  auto eval = d.eval_chunk_ids();
  std::set<int> t(train.begin(), train.end());
  for (int e : eval) CHECK(t.count(e) == 0);
  CHECK(train.size() + eval.size() == d.chunks.size());
  CHECK(!eval.empty());
}

TEST_CASE("with-replacement sampling matches corpus token frequency") {
  auto tok = Tokenizer::byte_level();
  std::string text;
  // 'a' twice as frequent as 'b'.
  for (int i = 0; i < 300; ++i) text += "aab";
  auto d = Dataset::from_text(tok, text, 4);
  auto freq = d.token_frequencies(256);
  BatchSampler s(d, d.all_chunk_ids(), 10, RngStream(21, 0));
  std::vector<double> counts(256, 0.0);
  double total = 0.0;
  const int kDraws = 4000;  // ~1.2e5 tokens
  for (int i = 0; i < kDraws; ++i) {
    for (auto& seq : s.next_batch()) {
      for (int id : seq) {
        if (id == d.pad_id) continue;
        counts[id] += 1.0;
        total += 1.0;
      }
    }
  }
  for (int id : {static_cast<int>('a'), static_cast<int>('b'), 1}) {
    const double p = freq[id];
    const double se = std::sqrt(p * (1 - p) / total);
    CHECK(std::abs(counts[id] / total - p) < 3 * se + 1e-9);
  }
}

TEST_CASE("dataset hash changes with content and chunk length") {
  auto tok = Tokenizer::byte_level();
  auto a = Dataset::from_text(tok, "abcabc", 3);
  auto b = Dataset::from_text(tok, "abcabd", 3);
  auto c = Dataset::from_text(tok, "abcabc", 4);
  CHECK(a.sha256 != b.sha256);
  CHECK(a.sha256 != c.sha256);
}

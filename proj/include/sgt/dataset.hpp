#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgt/rng.hpp"
#include "sgt/tokenizer.hpp"

namespace sgt {

// Token stream chunked into fixed-length sequences: bos + (chunk_len - 1)
// content tokens, with pad only in the final partial chunk. Chunks are
// assigned to the train or eval split by index so the two never overlap.
struct Dataset {
  int chunk_len = 0;
  int pad_id = 0;
  int bos_id = 1;
  std::vector<std::vector<int>> chunks;
  std::string sha256;   // of the raw corpus text plus chunk length
  uint64_t hash64 = 0;  // first 8 digest bytes, folded into sampler streams

  static Dataset from_text(const Tokenizer& tok, const std::string& text,
                           int chunk_len);

  std::vector<int> train_chunk_ids() const;
  std::vector<int> eval_chunk_ids() const;
  std::vector<int> all_chunk_ids() const;

  // Empirical frequency of each token id over all chunks (pads excluded).
  std::vector<double> token_frequencies(int vocab_size) const;
};

// Draws batches of B chunks. With replacement (the default) every draw is
// uniform over the pool, matching the empirical distribution of the corpus.
// Without replacement the sampler walks a deterministic shuffled epoch order
// and reshuffles at each epoch boundary; the full order is a pure function
// of (stream seed, dataset hash).
class BatchSampler {
 public:
  BatchSampler(const Dataset& dataset, std::vector<int> pool, int batch_size,
               RngStream stream, bool with_replacement = true);

  std::vector<std::vector<int>> next_batch();
  uint64_t stream_id() const { return stream_.stream_id(); }
  int batch_size() const { return batch_size_; }

 private:
  void reshuffle();

  const Dataset* dataset_;
  std::vector<int> pool_;
  int batch_size_;
  RngStream stream_;
  bool with_replacement_;
  std::vector<int> order_;
  size_t cursor_ = 0;
};

}  // namespace sgt

#include "sgt/dataset.hpp"

#include <stdexcept>

#include "sgt/hash.hpp"

namespace sgt {

Dataset Dataset::from_text(const Tokenizer& tok, const std::string& text,
                           int chunk_len) {
  if (chunk_len < 2)
    throw std::invalid_argument("Dataset: chunk_len must be at least 2");
  Dataset d;
  d.chunk_len = chunk_len;
  d.pad_id = tok.pad_id();
  d.bos_id = tok.bos_id();
  const std::vector<int> tokens = tok.encode(text);
  const int content = chunk_len - 1;
  for (size_t at = 0; at < tokens.size(); at += content) {
    std::vector<int> chunk;
    chunk.reserve(chunk_len);
    chunk.push_back(d.bos_id);
    for (size_t i = at; i < std::min(at + content, tokens.size()); ++i)
      chunk.push_back(tokens[i]);
    while (static_cast<int>(chunk.size()) < chunk_len)
      chunk.push_back(d.pad_id);
    d.chunks.push_back(std::move(chunk));
  }
  d.sha256 = sha256_hex(text + "\nchunk_len=" + std::to_string(chunk_len));
  d.hash64 = sgt::hash64(text + "\nchunk_len=" + std::to_string(chunk_len));
  return d;
}

std::vector<int> Dataset::train_chunk_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < static_cast<int>(chunks.size()); ++i)
    if (i % 10 != 9) ids.push_back(i);
  return ids;
}

std::vector<int> Dataset::eval_chunk_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < static_cast<int>(chunks.size()); ++i)
    if (i % 10 == 9) ids.push_back(i);
  return ids;
}

std::vector<int> Dataset::all_chunk_ids() const {
  std::vector<int> ids(chunks.size());
  for (size_t i = 0; i < chunks.size(); ++i) ids[i] = static_cast<int>(i);
  return ids;
}

std::vector<double> Dataset::token_frequencies(int vocab_size) const {
  std::vector<double> freq(vocab_size, 0.0);
  double total = 0.0;
  for (const auto& chunk : chunks) {
    for (int id : chunk) {
      if (id == pad_id) continue;
      if (id < 0 || id >= vocab_size)
        throw std::out_of_range("token_frequencies: id out of range");
      freq[id] += 1.0;
      total += 1.0;
    }
  }
  if (total > 0)
    for (auto& f : freq) f /= total;
  return freq;
}

BatchSampler::BatchSampler(const Dataset& dataset, std::vector<int> pool,
                           int batch_size, RngStream stream,
                           bool with_replacement)
    : dataset_(&dataset),
      pool_(std::move(pool)),
      batch_size_(batch_size),
      // Folding the dataset hash in makes the epoch order a pure function of
      // (seed, dataset hash).
      stream_(stream.child(dataset.hash64)),
      with_replacement_(with_replacement) {
  if (pool_.empty()) throw std::invalid_argument("BatchSampler: empty pool");
  if (batch_size_ <= 0)
    throw std::invalid_argument("BatchSampler: batch size must be positive");
  if (!with_replacement_ &&
      batch_size_ > static_cast<int>(pool_.size()))
    throw std::invalid_argument(
        "BatchSampler: batch size exceeds pool without replacement");
}

void BatchSampler::reshuffle() {
  order_ = pool_;
  // Fisher-Yates driven by the stream.
  for (size_t i = order_.size(); i > 1; --i) {
    const size_t j = stream_.uniform_index(i);
    std::swap(order_[i - 1], order_[j]);
  }
  cursor_ = 0;
}

std::vector<std::vector<int>> BatchSampler::next_batch() {
  std::vector<std::vector<int>> batch;
  batch.reserve(batch_size_);
  for (int b = 0; b < batch_size_; ++b) {
    int chunk_id;
    if (with_replacement_) {
      chunk_id = pool_[stream_.uniform_index(pool_.size())];
    } else {
      if (cursor_ >= order_.size()) reshuffle();
      chunk_id = order_[cursor_++];
    }
    batch.push_back(dataset_->chunks[chunk_id]);
  }
  return batch;
}

}  // namespace sgt

#pragma once

#include <string>
#include <vector>

namespace sgt {

enum class TokenizerMode { kByte, kWord };

// Text <-> token ids. Byte-level mode maps bytes to ids one-to-one (so
// decode(encode(s)) == s for any input); the control bytes 0x00/0x01/0x02
// double as pad/bos/eos and are never produced by encode on ordinary text.
// Word-level mode splits on whitespace over a fixed vocabulary and raises on
// out-of-vocabulary tokens.
class Tokenizer {
 public:
  static Tokenizer byte_level();
  static Tokenizer word_level_from_corpus(const std::string& text);

  // Word-level vocabulary file: versioned header line, then one token per
  // line in id order.
  static Tokenizer load_vocab(const std::string& path);
  void save_vocab(const std::string& path) const;

  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;

  TokenizerMode mode() const { return mode_; }
  int vocab_size() const;
  int pad_id() const { return 0; }
  int bos_id() const { return 1; }
  int eos_id() const { return 2; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  static const char* mode_name(TokenizerMode m);
  static TokenizerMode mode_from_name(const std::string& name);

 private:
  TokenizerMode mode_ = TokenizerMode::kByte;
  std::vector<std::string> vocab_;  // word-level only
};

}  // namespace sgt

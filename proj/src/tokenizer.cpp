#include "sgt/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sgt {

namespace {
constexpr const char* kVocabHeader = "sgt-vocab 1 word";
const char* kSpecials[] = {"<pad>", "<bos>", "<eos>"};
}  // namespace

Tokenizer Tokenizer::byte_level() {
  Tokenizer t;
  t.mode_ = TokenizerMode::kByte;
  return t;
}

Tokenizer Tokenizer::word_level_from_corpus(const std::string& text) {
  if (text.empty())
    throw std::invalid_argument("word_level_from_corpus: empty corpus");
  std::map<std::string, int> counts;
  std::istringstream in(text);
  std::string word;
  while (in >> word) ++counts[word];
  Tokenizer t;
  t.mode_ = TokenizerMode::kWord;
  for (const char* s : kSpecials) t.vocab_.push_back(s);
  for (const auto& [w, c] : counts) t.vocab_.push_back(w);  // every entry occurs
  return t;
}

Tokenizer Tokenizer::load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_vocab: cannot open " + path);
  std::string header;
  std::getline(in, header);
  if (header != kVocabHeader)
    throw std::runtime_error("load_vocab: unsupported header '" + header + "'");
  Tokenizer t;
  t.mode_ = TokenizerMode::kWord;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) t.vocab_.push_back(line);
  for (int i = 0; i < 3; ++i)
    if (static_cast<int>(t.vocab_.size()) <= i || t.vocab_[i] != kSpecials[i])
      throw std::runtime_error("load_vocab: missing special tokens");
  return t;
}

void Tokenizer::save_vocab(const std::string& path) const {
  if (mode_ != TokenizerMode::kWord)
    throw std::logic_error("save_vocab: only word-level vocabularies go to file");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_vocab: cannot write " + path);
  out << kVocabHeader << "\n";
  for (const auto& w : vocab_) out << w << "\n";
}

int Tokenizer::vocab_size() const {
  return mode_ == TokenizerMode::kByte ? 256
                                       : static_cast<int>(vocab_.size());
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
  if (text.empty()) throw std::invalid_argument("encode: empty input");
  std::vector<int> ids;
  if (mode_ == TokenizerMode::kByte) {
    ids.reserve(text.size());
    for (unsigned char c : text) ids.push_back(static_cast<int>(c));
    return ids;
  }
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    const auto it = std::find(vocab_.begin() + 3, vocab_.end(), word);
    if (it == vocab_.end())
      throw std::invalid_argument("encode: out-of-vocabulary token '" + word +
                                  "'");
    ids.push_back(static_cast<int>(it - vocab_.begin()));
  }
  if (ids.empty()) throw std::invalid_argument("encode: no tokens in input");
  return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= vocab_size())
      throw std::out_of_range("decode: id out of range");
    if (mode_ == TokenizerMode::kByte) {
      out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
    } else {
      if (i) out.push_back(' ');
      out += vocab_[id];
    }
  }
  return out;
}

const char* Tokenizer::mode_name(TokenizerMode m) {
  return m == TokenizerMode::kByte ? "byte" : "word";
}

TokenizerMode Tokenizer::mode_from_name(const std::string& name) {
  if (name == "byte") return TokenizerMode::kByte;
  if (name == "word") return TokenizerMode::kWord;
  throw std::invalid_argument("unknown tokenizer mode '" + name + "'");
}

}  // namespace sgt

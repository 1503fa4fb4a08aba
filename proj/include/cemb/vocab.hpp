#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace cemb {

// Token table with fixed reserved ids. Stands in for a subword vocabulary:
// lowercased words and punctuation marks map to dense ids.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;  // sequence-start marker, pooled out
  static constexpr int kUnk = 2;
  static constexpr int kReservedCount = 3;

  Vocab() = default;

  // Tokenizes every sentence and retains the sorted set of distinct tokens.
  static Vocab build(const std::vector<std::string>& sentences);
  static Vocab from_tokens(std::vector<std::string> tokens);

  int size() const { return kReservedCount + static_cast<int>(tokens_.size()); }
  int id_of(const std::string& token) const;  // kUnk when missing
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line, line number = id - 3, preceded by a three-line
  // reserved header (PAD/START/UNK).
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;                   // index = id - kReservedCount
  std::unordered_map<std::string, int> index_;        // token -> id
};

// Lowercases, splits punctuation into separate tokens, then splits on
// whitespace. Bytes >= 0x80 are kept inside tokens unchanged.
std::vector<std::string> split_tokens(const std::string& text);

// START-prefixed id sequence, truncated to max_seq_len. Unknown tokens map
// to UNK; PAD is never emitted.
std::vector<int> tokenize(const std::string& text, const Vocab& vocab, int max_seq_len);

}  // namespace cemb

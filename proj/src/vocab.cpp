#include "cemb/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "cemb/errors.hpp"

namespace cemb {

namespace {

const char* kHeader[3] = {"<pad>", "<start>", "<unk>"};

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

}  // namespace

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (is_word_byte(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

Vocab Vocab::build(const std::vector<std::string>& sentences) {
  std::set<std::string> distinct;
  for (const std::string& s : sentences)
    for (std::string& t : split_tokens(s)) distinct.insert(std::move(t));
  return from_tokens(std::vector<std::string>(distinct.begin(), distinct.end()));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    auto [it, inserted] = v.index_.emplace(v.tokens_[i], kReservedCount + static_cast<int>(i));
    if (!inserted) throw DataError("Vocab: duplicate token '" + v.tokens_[i] + "'");
  }
  return v;
}

int Vocab::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("Vocab: cannot write " + path);
  for (const char* h : kHeader) out << h << "\n";
  for (const std::string& t : tokens_) out << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("Vocab: cannot read " + path);
  std::string line;
  for (const char* h : kHeader) {
    if (!std::getline(in, line) || line != h)
      throw DataError("Vocab: " + path + " missing reserved header line '" + h + "'");
  }
  std::vector<std::string> tokens;
  while (std::getline(in, line)) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

std::vector<int> tokenize(const std::string& text, const Vocab& vocab, int max_seq_len) {
  if (max_seq_len < 1) throw UsageError("tokenize: max_seq_len must be >= 1");
  std::vector<int> ids;
  ids.push_back(Vocab::kStart);
  for (const std::string& t : split_tokens(text)) {
    if (static_cast<int>(ids.size()) >= max_seq_len) break;
    ids.push_back(vocab.id_of(t));
  }
  return ids;
}

}  // namespace cemb

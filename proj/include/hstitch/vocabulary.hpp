#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hstitch/error.hpp"

namespace hstitch {

// Reserved symbols occupy ids [0, kNumReserved). Word ids follow.
enum class Special : std::int32_t {
  Null = 0,  // "no prediction" side of an aligned pair
  Bos = 1,
  Wc = 2,
  Wco = 3,
  Wce = 4,
  Eos = 5,
};

inline constexpr std::int32_t kNumReserved = 6;

inline constexpr std::array<std::string_view, kNumReserved> kReservedNames = {
    "<null>", "<s>", "<WC>", "<WCO>", "<WCE>", "</s>"};

struct Token {
  std::int32_t id = 0;

  constexpr Token() = default;
  constexpr explicit Token(std::int32_t i) : id(i) {}
  constexpr Token(Special s) : id(static_cast<std::int32_t>(s)) {}

  constexpr bool is_word() const { return id >= kNumReserved; }
  constexpr bool is(Special s) const {
    return id == static_cast<std::int32_t>(s);
  }
  constexpr bool is_separator() const {
    return is(Special::Wc) || is(Special::Wco) || is(Special::Wce);
  }

  friend constexpr bool operator==(Token a, Token b) { return a.id == b.id; }
  friend constexpr auto operator<=>(Token a, Token b) { return a.id <=> b.id; }
};

using TokenSeq = std::vector<Token>;

class Vocabulary {
 public:
  Vocabulary() {
    for (std::int32_t i = 0; i < kNumReserved; ++i) {
      strings_.emplace_back(kReservedNames[static_cast<std::size_t>(i)]);
      index_.emplace(strings_.back(), i);
    }
  }

  std::int32_t size() const { return static_cast<std::int32_t>(strings_.size()); }
  std::int32_t num_words() const { return size() - kNumReserved; }

  // Appends a word if it is new; returns its token either way.
  Token add(const std::string& word) {
    require(!word.empty(), "empty word");
    if (auto it = index_.find(word); it != index_.end()) {
      require(it->second >= kNumReserved,
              "word collides with reserved symbol: " + word);
      return Token(it->second);
    }
    const auto id = size();
    strings_.push_back(word);
    index_.emplace(word, id);
    return Token(id);
  }

  std::optional<Token> find(std::string_view s) const {
    auto it = index_.find(std::string(s));
    if (it == index_.end()) return std::nullopt;
    return Token(it->second);
  }

  Token lookup(std::string_view s) const {
    auto t = find(s);
    if (!t) throw Error(ErrorKind::Format, "unknown word: " + std::string(s));
    return *t;
  }

  const std::string& render(Token t) const {
    require(t.id >= 0 && t.id < size(), "token id out of range");
    return strings_[static_cast<std::size_t>(t.id)];
  }

  Token word(std::int32_t word_index) const {
    return Token(kNumReserved + word_index);
  }

  // Only the word block; reserved symbols are implicit.
  std::vector<std::string> words() const {
    return {strings_.begin() + kNumReserved, strings_.end()};
  }

  bool contains(Token t) const { return t.id >= 0 && t.id < size(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.strings_ == b.strings_;
  }

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Deduplicates case-sensitively, keeping first-seen order.
inline Vocabulary build_vocabulary(const std::vector<std::string>& word_strings) {
  if (word_strings.empty()) throw Error(ErrorKind::InvalidArgument, "empty vocabulary");
  Vocabulary v;
  for (const auto& w : word_strings) v.add(w);
  return v;
}

inline TokenSeq tokenize(const Vocabulary& vocab, std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) out.push_back(vocab.lookup(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

inline std::string render(const Vocabulary& vocab, const TokenSeq& seq) {
  std::string out;
  for (auto t : seq) {
    if (!out.empty()) out += ' ';
    out += vocab.render(t);
  }
  return out;
}

}  // namespace hstitch

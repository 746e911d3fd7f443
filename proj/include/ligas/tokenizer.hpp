#pragma once

// WordPiece-style tokenizer with a word→token alignment, so attribution
// scores of a word split into several pieces can be summed back per word.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ligas::tok {

using TokenId = std::size_t;

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr std::string_view kContinuation = "##";
// Longer words become a single [UNK].
inline constexpr std::size_t kMaxCharsPerWord = 100;

class Vocabulary {
 public:
  // Specials, then every character seen (plain and "##"-prefixed), then whole
  // words by descending frequency and "##suffix" pieces by frequency until
  // max_size is reached. Ties keep first-occurrence order.
  static Vocabulary build(std::span<const std::string> corpus, std::size_t max_size);
  // Tokens in id order; the four specials must come first.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  // One token per line, line index = id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Token positions [begin, end) of one word inside TokenizedSentence::ids.
struct WordSpan {
  std::size_t word_index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const WordSpan&) const = default;
};

struct TokenizedSentence {
  std::vector<std::string> words;  // lower-cased pre-tokenized words
  std::vector<TokenId> ids;        // [CLS] pieces... [SEP]
  std::vector<WordSpan> alignment;
};

// Lower-case (ASCII) and split on whitespace; every ASCII punctuation mark
// becomes its own word.
std::vector<std::string> split_words(std::string_view sentence);

// Splits a UTF-8 string into code points (malformed bytes stand alone).
std::vector<std::string_view> code_points(std::string_view text);

TokenizedSentence tokenize(std::string_view sentence, const Vocabulary& vocab);

// Greedy longest-match pieces for one already-lower-cased word; {"[UNK]"} if
// some position cannot be matched.
std::vector<TokenId> word_pieces(std::string_view word, const Vocabulary& vocab);

}  // namespace ligas::tok

#include "ligas/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ligas/errors.hpp"

namespace ligas::tok {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) ||
         (u >= 123 && u <= 126);
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

// Frequency counter that remembers first-occurrence order for tie-breaks.
struct Counter {
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> counts;  // freq, first
  void add(const std::string& key, std::size_t n = 1) {
    auto [it, inserted] = counts.try_emplace(key, 0, counts.size());
    it->second.first += n;
  }
  std::vector<std::string> ranked() const {
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> v(counts.begin(),
                                                                                counts.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      if (a.second.first != b.second.first) return a.second.first > b.second.first;
      return a.second.second < b.second.second;
    });
    std::vector<std::string> out;
    out.reserve(v.size());
    for (auto& e : v) out.push_back(std::move(e.first));
    return out;
  }
};

}  // namespace

std::vector<std::string_view> code_points(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t n = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + n > text.size()) n = 1;
    for (std::size_t k = 1; k < n; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xc0) != 0x80) {
        n = 1;
        break;
      }
    }
    out.push_back(text.substr(i, n));
    i += n;
  }
  return out;
}

std::vector<std::string> split_words(std::string_view sentence) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char c : sentence) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      words.emplace_back(1, c);
    } else {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  flush();
  return words;
}

// ---- Vocabulary -------------------------------------------------------------

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const std::string_view specials[] = {kPad, kUnk, kCls, kSep};
  if (tokens.size() < 4) throw FormatError("vocabulary must start with the four special tokens");
  for (std::size_t i = 0; i < 4; ++i) {
    if (tokens[i] != specials[i]) {
      throw FormatError("vocabulary id " + std::to_string(i) + " must be " +
                        std::string(specials[i]) + ", found '" + tokens[i] + "'");
    }
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (v.tokens_[i].empty() || v.tokens_[i].find('\n') != std::string::npos) {
      throw FormatError("vocabulary token at id " + std::to_string(i) + " is empty or multi-line");
    }
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw FormatError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t max_size) {
  if (corpus.empty()) throw UsageError("cannot build a vocabulary from an empty corpus");
  Counter words;
  std::set<std::string> chars;
  for (const auto& sentence : corpus) {
    for (const auto& w : split_words(sentence)) {
      words.add(w);
      for (auto cp : code_points(w)) chars.emplace(cp);
    }
  }
  std::vector<std::string> tokens{std::string(kPad), std::string(kUnk), std::string(kCls),
                                  std::string(kSep)};
  for (const auto& c : chars) {
    tokens.push_back(c);
    tokens.push_back(std::string(kContinuation) + c);
  }
  if (max_size < tokens.size()) {
    throw UsageError("vocabulary budget " + std::to_string(max_size) + " cannot hold " +
                     std::to_string(tokens.size()) + " special and character tokens");
  }

  std::vector<std::string> word_candidates;
  Counter suffixes;
  for (const auto& w : words.ranked()) {
    auto cps = code_points(w);
    if (cps.size() < 2) continue;
    word_candidates.push_back(w);
  }
  // Suffix pieces (at least two code points) weighted by the frequency of
  // the words they end.
  for (const auto& w : words.ranked()) {
    auto cps = code_points(w);
    const std::size_t freq = words.counts.at(w).first;
    std::size_t offset = cps.empty() ? 0 : cps[0].size();
    for (std::size_t start = 1; start + 2 <= cps.size(); ++start) {
      suffixes.add(std::string(kContinuation) + w.substr(offset), freq);
      offset += cps[start].size();
    }
  }
  const std::vector<std::string> suffix_candidates = suffixes.ranked();

  const std::size_t remaining = max_size - tokens.size();
  const std::size_t word_budget = remaining - remaining / 4;
  std::size_t wi = 0, si = 0;
  while (wi < word_candidates.size() && wi < word_budget) tokens.push_back(word_candidates[wi++]);
  while (si < suffix_candidates.size() && tokens.size() < max_size) {
    tokens.push_back(suffix_candidates[si++]);
  }
  while (wi < word_candidates.size() && tokens.size() < max_size) {
    tokens.push_back(word_candidates[wi++]);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return from_tokens(std::move(tokens));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) f << t << '\n';
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---- tokenize -----------------------------------------------------------------

std::vector<TokenId> word_pieces(std::string_view word, const Vocabulary& vocab) {
  const auto cps = code_points(word);
  if (cps.empty() || cps.size() > kMaxCharsPerWord) return {kUnkId};
  // Byte offset of each code point boundary.
  std::vector<std::size_t> offsets{0};
  for (auto cp : cps) offsets.push_back(offsets.back() + cp.size());

  std::vector<TokenId> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < cps.size()) {
    std::optional<TokenId> match;
    std::size_t end = cps.size();
    for (; end > start; --end) {
      candidate.clear();
      if (start > 0) candidate = kContinuation;
      candidate.append(word.substr(offsets[start], offsets[end] - offsets[start]));
      if ((match = vocab.find(candidate))) break;
    }
    if (!match) return {kUnkId};
    pieces.push_back(*match);
    start = end;
  }
  return pieces;
}

TokenizedSentence tokenize(std::string_view sentence, const Vocabulary& vocab) {
  TokenizedSentence out;
  out.words = split_words(sentence);
  out.ids.push_back(kClsId);
  for (std::size_t w = 0; w < out.words.size(); ++w) {
    const auto pieces = word_pieces(out.words[w], vocab);
    const std::size_t begin = out.ids.size();
    out.ids.insert(out.ids.end(), pieces.begin(), pieces.end());
    out.alignment.push_back({w, begin, out.ids.size()});
  }
  out.ids.push_back(kSepId);
  return out;
}

}  // namespace ligas::tok

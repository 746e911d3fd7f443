#include "ligas/tree.hpp"

#include <algorithm>
#include <unordered_map>

#include "ligas/errors.hpp"

namespace ligas::cpt {

namespace {

constexpr std::size_t kMaxDepth = 512;

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ParseTree parse() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty input", pos_);
    ParseTree root = node(0);
    skip_ws();
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
      throw ParseError("trailing garbage after tree", pos_);
    }
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && is_ws(text_[pos_])) ++pos_;
  }

  std::string atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_ws(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect_close() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("unbalanced parentheses: missing ')'", pos_);
    if (text_[pos_] != ')') throw ParseError("expected ')'", pos_);
    ++pos_;
  }

  ParseTree node(std::size_t depth) {
    if (depth > kMaxDepth) throw ParseError("tree nesting too deep", pos_);
    if (text_[pos_] != '(') throw ParseError("expected '('", pos_);
    ++pos_;
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("unbalanced parentheses: missing ')'", pos_);
    ParseTree t;
    t.label = atom();
    if (t.label.empty()) throw ParseError("missing node label", pos_);
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("unbalanced parentheses: missing ')'", pos_);
    if (text_[pos_] == '(') {
      while (true) {
        skip_ws();
        if (pos_ == text_.size() || text_[pos_] != '(') break;
        t.children.push_back(node(depth + 1));
      }
    } else if (text_[pos_] != ')') {
      t.word = atom();
    }
    expect_close();
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void render(const ParseTree& t, bool leafed, std::string& out) {
  out.push_back('(');
  out += t.label;
  if (leafed && t.word) {
    out.push_back(' ');
    out += *t.word;
  }
  for (const auto& c : t.children) {
    if (leafed) out.push_back(' ');
    render(c, leafed, out);
  }
  out.push_back(')');
}

void collect_words(const ParseTree& t, std::vector<std::string>& out) {
  if (t.is_terminal()) {
    if (t.word) out.push_back(*t.word);
    return;
  }
  for (const auto& c : t.children) collect_words(c, out);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Returns the node's score; appends pre-order entries.
double score_node(const ParseTree& t, std::span<const double> word_ligas, std::size_t& next_slot,
                  std::vector<std::size_t>& path, std::vector<SubtreeScore>& out) {
  const std::size_t index = out.size();
  out.push_back({path, to_pattern(t).text, 0.0});
  double score;
  if (t.is_terminal()) {
    score = word_ligas[next_slot++];
  } else {
    score = 0.0;
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      path.push_back(i);
      const double child = score_node(t.children[i], word_ligas, next_slot, path, out);
      path.pop_back();
      score = i == 0 ? child : score + child;
    }
  }
  out[index].ligas = score;
  return score;
}

void render_marked(const ParseTree& t, std::span<const std::size_t> path, bool on_path,
                   std::size_t depth, std::string& out) {
  const bool marked = on_path && depth == path.size();
  if (marked) out.push_back('*');
  out.push_back('(');
  out += t.label;
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    const bool child_on_path = on_path && depth < path.size() && path[depth] == i;
    render_marked(t.children[i], path, child_on_path, depth + 1, out);
  }
  out.push_back(')');
  if (marked) out.push_back('*');
}

}  // namespace

ParseTree parse_bracketed(std::string_view text) { return Parser(text).parse(); }

std::string render_leafed(const ParseTree& tree) {
  std::string out;
  render(tree, true, out);
  return out;
}

PatternKey to_pattern(const ParseTree& tree) {
  PatternKey key;
  render(tree, false, key.text);
  return key;
}

std::vector<std::string> leaf_words(const ParseTree& tree) {
  std::vector<std::string> out;
  collect_words(tree, out);
  return out;
}

std::size_t terminal_count(const ParseTree& tree) {
  if (tree.is_terminal()) return 1;
  std::size_t n = 0;
  for (const auto& c : tree.children) n += terminal_count(c);
  return n;
}

std::vector<std::size_t> align(const ParseTree& tree, std::span<const std::string> words) {
  const auto leaves = leaf_words(tree);
  if (leaves.size() != terminal_count(tree)) {
    throw DataError("tree has terminals without leaf words; cannot align a pattern tree");
  }
  if (leaves.size() != words.size()) {
    throw DataError("leaf-count mismatch: tree has " + std::to_string(leaves.size()) +
                    " leaves, sentence has " + std::to_string(words.size()) + " words");
  }
  std::vector<std::size_t> mapping(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (lower(leaves[i]) != lower(words[i])) {
      throw DataError("leaf " + std::to_string(i) + " '" + leaves[i] + "' does not match word '" +
                      words[i] + "'");
    }
    mapping[i] = i;
  }
  return mapping;
}

std::vector<SubtreeScore> subtree_scores(const ParseTree& tree, std::span<const double> word_ligas) {
  const std::size_t slots = terminal_count(tree);
  if (word_ligas.size() != slots) {
    throw DataError("subtree_scores: " + std::to_string(word_ligas.size()) +
                    " word scores for a tree with " + std::to_string(slots) + " terminals");
  }
  std::vector<SubtreeScore> out;
  std::vector<std::size_t> path;
  std::size_t next = 0;
  score_node(tree, word_ligas, next, path, out);
  return out;
}

PatternReport mine_patterns(std::span<const MiningRecord> records, Aggregate mode) {
  std::map<std::pair<Category, Label>, std::map<PatternKey, PatternStat>> groups;
  for (const auto& r : records) {
    auto& stat = groups[{r.category, r.gold}][r.pattern];
    stat.pattern = r.pattern;
    stat.count += 1;
    stat.ligas += r.sentence_ligas;
  }
  PatternReport report;
  for (auto& [cell, patterns] : groups) {
    auto& list = report[cell];
    for (auto& [key, stat] : patterns) {
      if (mode == Aggregate::Mean) stat.ligas /= static_cast<double>(stat.count);
      list.push_back(std::move(stat));
    }
    std::stable_sort(list.begin(), list.end(), [](const PatternStat& a, const PatternStat& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.pattern < b.pattern;
    });
  }
  return report;
}

SubtreeRank rank_subtrees(std::span<const std::vector<SubtreeScore>> group) {
  if (group.empty()) throw DataError("rank_subtrees: empty pattern group");
  SubtreeRank rank;
  rank.totals = group[0];
  for (std::size_t s = 1; s < group.size(); ++s) {
    if (group[s].size() != rank.totals.size()) {
      throw DataError("rank_subtrees: sentences in a group do not share one tree shape");
    }
    for (std::size_t i = 0; i < group[s].size(); ++i) {
      if (group[s][i].path != rank.totals[i].path) {
        throw DataError("rank_subtrees: sentences in a group do not share one tree shape");
      }
      rank.totals[i].ligas += group[s][i].ligas;
    }
  }
  const std::size_t first = rank.totals.size() > 1 ? 1 : 0;
  std::size_t best = first;
  for (std::size_t i = first + 1; i < rank.totals.size(); ++i) {
    const auto& cand = rank.totals[i];
    const auto& cur = rank.totals[best];
    if (cand.ligas > cur.ligas) {
      best = i;
    } else if (cand.ligas == cur.ligas) {
      // Pre-order already visits left before right; only depth can win a tie.
      if (cand.path.size() < cur.path.size()) best = i;
    }
  }
  rank.path = rank.totals[best].path;
  rank.fragment = rank.totals[best].fragment;
  rank.ligas = rank.totals[best].ligas;
  return rank;
}

std::string mark_subtree(const ParseTree& tree, std::span<const std::size_t> path) {
  std::string out;
  render_marked(tree, path, true, 0, out);
  return out;
}

}  // namespace ligas::cpt

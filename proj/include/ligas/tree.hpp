#pragma once

// Penn-bracketed constituency trees: parsing, canonical rendering, leaf
// alignment, subtree scores and pattern mining.
//
// Two serializations exist:
//   leafed   "(ROOT (S (NP (NN dog)) (VP (VBD barked)) (. .)))"  single spaces
//   pattern  "(ROOT(S(NP(NN))(VP(VBD))(.)))"                     no whitespace
// A node without children is a terminal slot; it carries the sentence word in
// leafed trees and nothing in pattern trees.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ligas/types.hpp"

namespace ligas::cpt {

struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;
  std::optional<std::string> word;

  bool is_terminal() const { return children.empty(); }
  bool operator==(const ParseTree&) const = default;
};

// Canonical leafless bracketed form of a tree.
struct PatternKey {
  std::string text;

  auto operator<=>(const PatternKey&) const = default;
};

// Accepts leafed and leafless trees, whitespace-insensitive. Throws ParseError
// with the byte offset on unbalanced parentheses, empty input, a missing label
// or trailing garbage.
ParseTree parse_bracketed(std::string_view text);

std::string render_leafed(const ParseTree& tree);
PatternKey to_pattern(const ParseTree& tree);

// Words of the terminal slots in left-to-right order (slots without a word
// are skipped).
std::vector<std::string> leaf_words(const ParseTree& tree);
std::size_t terminal_count(const ParseTree& tree);

// Leaf index → word index. Leaves must equal the words case-insensitively,
// one to one; otherwise DataError names the first mismatch.
std::vector<std::size_t> align(const ParseTree& tree, std::span<const std::string> words);

struct SubtreeScore {
  std::vector<std::size_t> path;  // child indices from the root
  std::string fragment;           // pattern form of the subtree
  double ligas = 0.0;
};

// One entry per node in depth-first pre-order. A terminal takes the score of
// its word; every other node is the left-to-right sum of its children.
// word_ligas holds one score per terminal slot.
std::vector<SubtreeScore> subtree_scores(const ParseTree& tree, std::span<const double> word_ligas);

enum class Aggregate { Sum, Mean };

struct MiningRecord {
  PatternKey pattern;
  Category category = Category::CIA;
  Label gold = Label::LA;
  double sentence_ligas = 0.0;
};

struct PatternStat {
  PatternKey pattern;
  std::size_t count = 0;
  double ligas = 0.0;  // sum (or mean) of sentence LIGAS over the pattern's sentences
};

using PatternReport = std::map<std::pair<Category, Label>, std::vector<PatternStat>>;

// Groups by (category, gold label), counts each pattern and aggregates its
// sentence LIGAS. Lists are sorted by count descending, then pattern text.
PatternReport mine_patterns(std::span<const MiningRecord> records, Aggregate mode = Aggregate::Sum);

struct SubtreeRank {
  std::vector<std::size_t> path;
  std::string fragment;
  double ligas = 0.0;
  // Per-position totals over the group, pre-order.
  std::vector<SubtreeScore> totals;
};

// Sums each subtree position's score across a group of sentences sharing one
// pattern and returns the position with the largest total. The root wrapper
// is not a candidate unless it is the only node. Ties go to the shallowest,
// then leftmost, position.
SubtreeRank rank_subtrees(std::span<const std::vector<SubtreeScore>> group);

// Pattern string with the subtree at `path` wrapped in '*' markers, e.g.
// "(ROOT*(S(NP(NN))(VP(VBD))(.))*)".
std::string mark_subtree(const ParseTree& tree, std::span<const std::size_t> path);

}  // namespace ligas::cpt

#pragma once

// Labeled-sentence corpora: TSV and tree-file I/O, the synthetic five-category
// generator and stratified splitting.
//
// Corpus TSV:  header "id<TAB>category<TAB>label<TAB>sentence"; label is
//              LA/LUA or 1/0.
// Trees file:  "id<TAB>bracketed-tree" per line.
// Both readers skip lines starting with '#'.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ligas/tree.hpp"
#include "ligas/types.hpp"

namespace ligas::corpus {

struct LabeledSentence {
  std::string id;
  Category category = Category::CIA;
  Label gold = Label::LA;
  std::string text;
  std::optional<cpt::ParseTree> tree;
};

std::vector<LabeledSentence> read_corpus_tsv(const std::filesystem::path& path);
std::vector<LabeledSentence> parse_corpus_tsv(std::istream& in, const std::string& source);
void write_corpus_tsv(std::ostream& out, std::span<const LabeledSentence> corpus,
                      std::span<const std::string> comments = {});

struct TreeEntry {
  std::string id;
  cpt::ParseTree tree;
};

std::vector<TreeEntry> read_trees(const std::filesystem::path& path);
std::vector<TreeEntry> parse_trees(std::istream& in, const std::string& source);
// Writes every sentence that carries a tree, leafed form.
void write_trees(std::ostream& out, std::span<const LabeledSentence> corpus,
                 std::span<const std::string> comments = {});

struct AttachReport {
  std::vector<LabeledSentence> corpus;
  std::size_t orphan_trees = 0;      // tree ids with no sentence
  std::size_t sentences_without_tree = 0;
  std::vector<std::string> warnings;
};

// Aligns each tree against the tokenizer's word split of its sentence; a
// mismatch is a DataError naming the sentence id.
AttachReport attach_trees(std::vector<LabeledSentence> sentences, std::span<const TreeEntry> trees);

// n_pairs minimal LA/LUA pairs with gold trees, deterministic in seed.
std::vector<LabeledSentence> generate_synthetic(Category category, std::size_t n_pairs,
                                                std::uint64_t seed);
std::vector<LabeledSentence> generate_all(std::size_t n_pairs, std::uint64_t seed);

struct Split {
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> test;
};

// Seeded split stratified by (category, gold); each stratum needs at least two
// sentences. Sentences keep their corpus order inside each side.
Split split(std::span<const LabeledSentence> corpus, double train_fraction, std::uint64_t seed);

}  // namespace ligas::corpus

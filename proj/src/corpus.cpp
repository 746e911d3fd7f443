#include "ligas/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ligas/errors.hpp"
#include "ligas/rng.hpp"
#include "ligas/tokenizer.hpp"

namespace ligas::corpus {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  return f;
}

}  // namespace

// ---- TSV ----------------------------------------------------------------------

std::vector<LabeledSentence> parse_corpus_tsv(std::istream& in, const std::string& source) {
  std::vector<LabeledSentence> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (next_line(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = source + ":" + std::to_string(row) + ": ";
    const auto cols = split_tabs(line);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() != 4 || cols[0] != "id" || cols[1] != "category" || cols[2] != "label" ||
          cols[3] != "sentence") {
        throw DataError(where + "expected header id<TAB>category<TAB>label<TAB>sentence");
      }
      continue;
    }
    if (cols.size() < 4) {
      throw DataError(where + "missing column (expected 4, found " + std::to_string(cols.size()) + ")");
    }
    if (cols.size() > 4) throw DataError(where + "too many columns");
    LabeledSentence s;
    s.id = cols[0];
    if (s.id.empty()) throw DataError(where + "column id: empty");
    auto cat = parse_category(cols[1]);
    if (!cat) throw DataError(where + "column category: unknown category '" + cols[1] + "'");
    auto label = parse_label(cols[2]);
    if (!label) throw DataError(where + "column label: unknown label '" + cols[2] + "'");
    if (!ids.insert(s.id).second) throw DataError(where + "duplicate id '" + s.id + "'");
    s.category = *cat;
    s.gold = *label;
    s.text = cols[3];
    out.push_back(std::move(s));
  }
  if (!header_seen) throw DataError(source + ": missing header");
  return out;
}

std::vector<LabeledSentence> read_corpus_tsv(const std::filesystem::path& path) {
  auto f = open(path);
  return parse_corpus_tsv(f, path.string());
}

void write_corpus_tsv(std::ostream& out, std::span<const LabeledSentence> corpus,
                      std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "id\tcategory\tlabel\tsentence\n";
  for (const auto& s : corpus) {
    out << s.id << '\t' << to_string(s.category) << '\t' << to_string(s.gold) << '\t' << s.text
        << '\n';
  }
}

// ---- trees ----------------------------------------------------------------------

std::vector<TreeEntry> parse_trees(std::istream& in, const std::string& source) {
  std::vector<TreeEntry> out;
  std::string line;
  std::size_t row = 0;
  while (next_line(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = source + ":" + std::to_string(row) + ": ";
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(where + "expected id<TAB>tree");
    TreeEntry e;
    e.id = line.substr(0, tab);
    try {
      e.tree = cpt::parse_bracketed(std::string_view(line).substr(tab + 1));
    } catch (const ParseError& err) {
      throw DataError(where + err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<TreeEntry> read_trees(const std::filesystem::path& path) {
  auto f = open(path);
  return parse_trees(f, path.string());
}

void write_trees(std::ostream& out, std::span<const LabeledSentence> corpus,
                 std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& s : corpus) {
    if (s.tree) out << s.id << '\t' << cpt::render_leafed(*s.tree) << '\n';
  }
}

AttachReport attach_trees(std::vector<LabeledSentence> sentences, std::span<const TreeEntry> trees) {
  AttachReport report;
  std::unordered_map<std::string, const cpt::ParseTree*> by_id;
  for (const auto& t : trees) by_id[t.id] = &t.tree;
  std::unordered_set<std::string> used;
  for (auto& s : sentences) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      ++report.sentences_without_tree;
      continue;
    }
    const auto words = tok::split_words(s.text);
    try {
      cpt::align(*it->second, words);
    } catch (const DataError& e) {
      throw DataError("sentence " + s.id + ": " + e.what());
    }
    s.tree = *it->second;
    used.insert(s.id);
  }
  for (const auto& t : trees) {
    if (!used.count(t.id)) {
      ++report.orphan_trees;
      report.warnings.push_back("tree id '" + t.id + "' has no matching sentence");
    }
  }
  if (report.sentences_without_tree) {
    report.warnings.push_back(std::to_string(report.sentences_without_tree) +
                              " sentence(s) have no tree");
  }
  report.corpus = std::move(sentences);
  return report;
}

// ---- synthetic generator -----------------------------------------------------------

namespace {

using cpt::ParseTree;

ParseTree leaf(std::string label, std::string word) {
  ParseTree t;
  t.label = std::move(label);
  t.word = std::move(word);
  return t;
}

ParseTree node(std::string label, std::vector<ParseTree> children) {
  ParseTree t;
  t.label = std::move(label);
  t.children = std::move(children);
  return t;
}

ParseTree root(ParseTree clause) { return node("ROOT", {std::move(clause)}); }

const std::vector<std::string> kDeterminers = {"the", "a", "this", "that"};
const std::vector<std::string> kNames = {"mary", "john", "sarah", "david", "emma",
                                         "peter", "anna", "tom", "lucy", "mark"};
const std::vector<std::string> kNouns = {"dog",     "cat",    "girl",  "boy",    "teacher",
                                         "child",   "bird",   "farmer", "doctor", "student"};
const std::vector<std::string> kObjects = {"vase", "window", "cake",  "letter", "house",
                                           "car",  "chair",  "book",  "ball",   "door"};
// Transitive-only verbs: dropping the object is unacceptable.
const std::vector<std::string> kCausativeVerbs = {"destroyed", "built",  "wrote",   "carried",
                                                  "painted",   "devoured", "repaired", "designed"};
const std::vector<std::string> kReflexiveVerbs = {"hurt",    "saw",     "blamed",  "praised", "washed",
                                                  "defended", "trusted", "fooled", "helped", "admired"};
const std::vector<std::pair<std::string, std::string>> kPronouns = {
    {"he", "himself"}, {"she", "herself"}, {"i", "myself"},
    {"we", "ourselves"}, {"they", "themselves"}, {"you", "yourself"}};
// (3rd-person singular, plural) verb forms.
const std::vector<std::pair<std::string, std::string>> kIntransitive = {
    {"barks", "bark"}, {"runs", "run"},   {"sleeps", "sleep"}, {"eats", "eat"},
    {"sings", "sing"}, {"works", "work"}, {"walks", "walk"},   {"laughs", "laugh"}};
const std::vector<std::pair<std::string, std::string>> kLinking = {
    {"looks", "look"}, {"seems", "seem"}, {"feels", "feel"}, {"becomes", "become"}, {"is", "are"}};
const std::vector<std::string> kAdverbs = {"loudly", "quickly", "quietly", "slowly", "often", "rarely"};
const std::vector<std::string> kAdjectives = {"happy", "tired", "hungry", "calm", "angry", "sad"};
const std::vector<std::string> kTransitiveVerbs = {"kicked", "found", "opened", "cleaned",
                                                   "sold",   "bought", "moved", "watched"};
const std::vector<std::string> kWhWords = {"what", "who"};
const std::vector<std::string> kBareVerbs = {"eat", "see", "buy", "find", "read", "like", "visit", "cook"};

const std::string& pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.below(v.size())]; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

std::string sentence_text(const ParseTree& tree) {
  const auto words = cpt::leaf_words(tree);
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text.push_back(' ');
    text += words[i];
  }
  if (!text.empty() && text[0] >= 'a' && text[0] <= 'z') text[0] = static_cast<char>(text[0] - 'a' + 'A');
  return text;
}

ParseTree np_det_noun(const std::string& det, const std::string& noun) {
  return node("NP", {leaf("DT", det), leaf("NN", noun)});
}

std::pair<ParseTree, ParseTree> make_pair_trees(Category category, Rng& rng) {
  switch (category) {
    case Category::CIA: {
      const auto& subj = pick(rng, kNames);
      const auto& verb = pick(rng, kCausativeVerbs);
      const auto& det = pick(rng, kDeterminers);
      const auto& obj = pick(rng, kObjects);
      // (ROOT(S(NP(NN))(VP(VBD)(NP(DT)(NN)))(.))) / (ROOT(S(NP(DT)(NN))(VP(VBD))(.)))
      ParseTree la = root(node("S", {node("NP", {leaf("NN", subj)}),
                                     node("VP", {leaf("VBD", verb), np_det_noun(det, obj)}),
                                     leaf(".", ".")}));
      ParseTree lua = root(node(
          "S", {np_det_noun(det, obj), node("VP", {leaf("VBD", verb)}), leaf(".", ".")}));
      return {la, lua};
    }
    case Category::RAA: {
      const std::size_t p = rng.below(kPronouns.size());
      std::size_t q = rng.below(kPronouns.size() - 1);
      if (q >= p) ++q;
      const auto& verb = pick(rng, kReflexiveVerbs);
      auto make = [&](const std::string& reflexive) {
        return root(node("S", {node("NP", {leaf("PRP", kPronouns[p].first)}),
                               node("VP", {leaf("VBD", verb), node("NP", {leaf("PRP", reflexive)})}),
                               leaf(".", ".")}));
      };
      return {make(kPronouns[p].second), make(kPronouns[q].second)};
    }
    case Category::SVA: {
      const auto& det = pick(rng, kDeterminers);
      const auto& noun = pick(rng, kNouns);
      const bool adverb_frame = rng.below(2) == 0;
      auto make = [&](bool agree, const std::pair<std::string, std::string>& verb,
                      ParseTree complement) {
        return root(node(
            "S", {np_det_noun(det, noun),
                  node("VP", {agree ? leaf("VBZ", verb.first) : leaf("VBP", verb.second),
                              std::move(complement)}),
                  leaf(".", ".")}));
      };
      if (adverb_frame) {
        const auto& verb = pick(rng, kIntransitive);
        const auto& adv = pick(rng, kAdverbs);
        return {make(true, verb, node("ADVP", {leaf("RB", adv)})),
                make(false, verb, node("ADVP", {leaf("RB", adv)}))};
      }
      const auto& verb = pick(rng, kLinking);
      const auto& adj = pick(rng, kAdjectives);
      return {make(true, verb, node("ADJP", {leaf("JJ", adj)})),
              make(false, verb, node("ADJP", {leaf("JJ", adj)}))};
    }
    case Category::SVO: {
      const auto& subj = pick(rng, kNames);
      const auto& verb = pick(rng, kTransitiveVerbs);
      const auto& det = pick(rng, kDeterminers);
      const auto& obj = pick(rng, kObjects);
      ParseTree la = root(node("S", {node("NP", {leaf("NN", subj)}),
                                     node("VP", {leaf("VBD", verb), np_det_noun(det, obj)}),
                                     leaf(".", ".")}));
      // Object scrambled in front of the verb.
      ParseTree lua = root(node(
          "S", {node("NP", {node("NP", {leaf("NN", subj)}), np_det_noun(det, obj)}),
                node("VP", {leaf("VBD", verb)}), leaf(".", ".")}));
      return {la, lua};
    }
    case Category::WHE: {
      const auto& wh = pick(rng, kWhWords);
      const auto& subj = pick(rng, kNames);
      const auto& verb = pick(rng, kBareVerbs);
      const auto& det = pick(rng, kDeterminers);
      const auto& obj = pick(rng, kObjects);
      auto make = [&](bool retain_object) {
        ParseTree vp = node("VP", {leaf("VB", verb)});
        if (retain_object) vp.children.push_back(np_det_noun(det, obj));
        return root(node("SBARQ", {node("WHNP", {leaf("WP", wh)}),
                                   node("SQ", {leaf("VBD", "did"), node("NP", {leaf("NN", subj)}),
                                               std::move(vp)}),
                                   leaf(".", "?")}));
      };
      return {make(false), make(true)};
    }
  }
  throw UsageError("unknown category");
}

}  // namespace

std::vector<LabeledSentence> generate_synthetic(Category category, std::size_t n_pairs,
                                                std::uint64_t seed) {
  if (n_pairs == 0) throw UsageError("n_pairs must be at least 1");
  Rng rng = Rng::substream(seed, "gen/" + std::string(to_string(category)));
  std::vector<LabeledSentence> out;
  out.reserve(2 * n_pairs);
  char buf[32];
  for (std::size_t i = 0; i < n_pairs; ++i) {
    auto [la, lua] = make_pair_trees(category, rng);
    std::snprintf(buf, sizeof buf, "%04zu", i + 1);
    const std::string stem = std::string(to_string(category)) + "-" + buf;
    for (auto* t : {&la, &lua}) {
      LabeledSentence s;
      s.category = category;
      s.gold = t == &la ? Label::LA : Label::LUA;
      s.id = stem + "-" + std::string(to_string(s.gold));
      s.text = sentence_text(*t);
      // Leaf words follow the sentence's capitalization.
      if (!s.text.empty()) {
        ParseTree* first = t;
        while (!first->is_terminal()) first = &first->children.front();
        if (first->word) (*first->word)[0] = s.text[0];
      }
      s.tree = *t;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<LabeledSentence> generate_all(std::size_t n_pairs, std::uint64_t seed) {
  std::vector<LabeledSentence> out;
  for (Category c : kAllCategories) {
    auto part = generate_synthetic(c, n_pairs, seed);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

// ---- split ------------------------------------------------------------------------

Split split(std::span<const LabeledSentence> corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("train fraction must lie strictly between 0 and 1");
  }
  std::map<std::pair<Category, Label>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) strata[{corpus[i].category, corpus[i].gold}].push_back(i);
  Rng rng = Rng::substream(seed, "split");
  std::vector<bool> in_train(corpus.size(), false);
  for (auto& [cell, members] : strata) {
    if (members.size() < 2) {
      throw DataError("stratum " + std::string(to_string(cell.first)) + "/" +
                      std::string(to_string(cell.second)) + " has " + std::to_string(members.size()) +
                      " sentence(s); at least 2 are needed to split");
    }
    rng.shuffle(members);
    auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(members.size()) + 0.5);
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    for (std::size_t k = 0; k < n_train; ++k) in_train[members[k]] = true;
  }
  Split out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (in_train[i] ? out.train : out.test).push_back(corpus[i]);
  }
  return out;
}

}  // namespace ligas::corpus

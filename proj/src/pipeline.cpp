#include "ligas/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "ligas/corpus.hpp"
#include "ligas/errors.hpp"
#include "ligas/format.hpp"
#include "ligas/rng.hpp"
#include "ligas/tokenizer.hpp"

namespace ligas::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError("config key '" + key + "': expected true/false, got '" + text + "'");
}

struct Key {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;  // empty: not part of the digest
};

template <typename T>
Key number_key(const char* name, T RunConfig::*field) {
  return {[name, field](RunConfig& c, const std::string& v) { c.*field = parse_number<T>(name, v); },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          }};
}

#define LIGAS_SIZE_KEY(name, path)                                                                  \
  Key {                                                                                       \
    [](RunConfig& c, const std::string& v) { c.path = parse_number<std::size_t>(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.path); }                             \
  }
#define LIGAS_REAL_KEY(name, path)                                                             \
  Key {                                                                                  \
    [](RunConfig& c, const std::string& v) { c.path = parse_number<double>(name, v); }, \
        [](const RunConfig& c) { return format_double(c.path); }                         \
  }

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = {
      {"seed", number_key("seed", &RunConfig::seed)},
      {"category",
       {[](RunConfig& c, const std::string& v) {
          if (v != "all" && !parse_category(v)) throw UsageError("config key 'category': unknown '" + v + "'");
          c.category = v;
        },
        [](const RunConfig& c) { return c.category; }}},
      {"pairs", number_key("pairs", &RunConfig::pairs)},
      {"vocab_budget", number_key("vocab_budget", &RunConfig::vocab_budget)},
      {"train_fraction", number_key("train_fraction", &RunConfig::train_fraction)},
      {"d_model", LIGAS_SIZE_KEY("d_model", model.d_model)},
      {"n_heads", LIGAS_SIZE_KEY("n_heads", model.n_heads)},
      {"n_layers", LIGAS_SIZE_KEY("n_layers", model.n_layers)},
      {"d_ff", LIGAS_SIZE_KEY("d_ff", model.d_ff)},
      {"max_seq_len", LIGAS_SIZE_KEY("max_seq_len", model.max_seq_len)},
      {"tie_class",
       {[](RunConfig& c, const std::string& v) {
          auto l = parse_label(v);
          if (!l) throw UsageError("config key 'tie_class': unknown label '" + v + "'");
          c.model.tie_class = *l;
        },
        [](const RunConfig& c) { return std::string(to_string(c.model.tie_class)); }}},
      {"lr", LIGAS_REAL_KEY("lr", train.lr)},
      {"epochs", LIGAS_SIZE_KEY("epochs", train.epochs)},
      {"batch", LIGAS_SIZE_KEY("batch", train.batch)},
      {"beta1", LIGAS_REAL_KEY("beta1", train.beta1)},
      {"beta2", LIGAS_REAL_KEY("beta2", train.beta2)},
      {"adam_eps", LIGAS_REAL_KEY("adam_eps", train.adam_eps)},
      {"steps", LIGAS_SIZE_KEY("steps", ig.steps)},
      {"rule",
       {[](RunConfig& c, const std::string& v) {
          auto r = ig::parse_rule(v);
          if (!r) throw UsageError("config key 'rule': expected left|right|trapezoid, got '" + v + "'");
          c.ig.rule = *r;
        },
        [](const RunConfig& c) { return std::string(ig::to_string(c.ig.rule)); }}},
      {"baseline",
       {[](RunConfig& c, const std::string& v) {
          auto b = ig::parse_baseline(v);
          if (!b) throw UsageError("config key 'baseline': expected pad_embeddings|zero, got '" + v + "'");
          c.ig.baseline = *b;
        },
        [](const RunConfig& c) { return std::string(ig::to_string(c.ig.baseline)); }}},
      {"target_space",
       {[](RunConfig& c, const std::string& v) {
          auto t = ig::parse_target_space(v);
          if (!t) throw UsageError("config key 'target_space': expected logit|probability, got '" + v + "'");
          c.ig.target_space = *t;
        },
        [](const RunConfig& c) { return std::string(ig::to_string(c.ig.target_space)); }}},
      {"fixed_class",
       {[](RunConfig& c, const std::string& v) {
          if (v == "none" || v == "predicted") {
            c.ig.fixed_class.reset();
            return;
          }
          auto l = parse_label(v);
          if (!l) throw UsageError("config key 'fixed_class': expected none|LA|LUA, got '" + v + "'");
          c.ig.fixed_class = *l;
        },
        [](const RunConfig& c) {
          return c.ig.fixed_class ? std::string(to_string(*c.ig.fixed_class)) : std::string("none");
        }}},
      {"normalize",
       {[](RunConfig& c, const std::string& v) { c.ig.normalize = parse_bool("normalize", v); },
        [](const RunConfig& c) { return std::string(c.ig.normalize ? "true" : "false"); }}},
      {"aggregate",
       {[](RunConfig& c, const std::string& v) {
          if (v == "sum") {
            c.aggregate = cpt::Aggregate::Sum;
          } else if (v == "mean") {
            c.aggregate = cpt::Aggregate::Mean;
          } else {
            throw UsageError("config key 'aggregate': expected sum|mean, got '" + v + "'");
          }
        },
        [](const RunConfig& c) { return std::string(c.aggregate == cpt::Aggregate::Sum ? "sum" : "mean"); }}},
      {"patterns_from",
       {[](RunConfig& c, const std::string& v) {
          if (v != "cc" && v != "all") throw UsageError("config key 'patterns_from': expected cc|all, got '" + v + "'");
          c.patterns_from_all = v == "all";
        },
        [](const RunConfig& c) { return std::string(c.patterns_from_all ? "all" : "cc"); }}},
      {"threads",
       {[](RunConfig& c, const std::string& v) { c.ig.threads = parse_number<std::size_t>("threads", v); },
        nullptr}},
  };
  return table;
}

#undef LIGAS_SIZE_KEY
#undef LIGAS_REAL_KEY

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw DataError("failed writing " + path.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_digest(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(bytes));
}

std::vector<std::string> header_comments(const RunConfig& cfg, const std::string& command) {
  return {"ligas " + command + " config_digest=" + cfg.digest() + " seed=" + std::to_string(cfg.seed)};
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string join_path(const std::vector<std::size_t>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out.push_back('.');
    out += std::to_string(path[i]);
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

// ---- config ----------------------------------------------------------------------

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [name, key] : keys()) {
    if (!key.get) continue;
    out += name + "=" + key.get(*this) + "\n";
  }
  return out;
}

std::string RunConfig::digest() const { return hex64(fnv1a(canonical_text())); }

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [name, key] : keys()) out.push_back(name);
  return out;
}

KeyValues read_config_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file " + path.string());
  KeyValues out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(row) + ": expected key=value");
    }
    out.emplace_back(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

void apply(RunConfig& cfg, const KeyValues& values) {
  const auto& table = keys();
  for (const auto& [name, value] : values) {
    auto it = table.find(name);
    if (it == table.end()) throw UsageError("unknown config key '" + name + "'");
    it->second.set(cfg, value);
  }
}

// ---- gen ----------------------------------------------------------------------------

GenOutput run_gen(const RunConfig& cfg, const fs::path& out_dir) {
  std::vector<corpus::LabeledSentence> sentences;
  if (cfg.category == "all") {
    sentences = corpus::generate_all(cfg.pairs, cfg.seed);
  } else {
    auto cat = parse_category(cfg.category);
    if (!cat) throw UsageError("unknown category '" + cfg.category + "'");
    sentences = corpus::generate_synthetic(*cat, cfg.pairs, cfg.seed);
  }
  GenOutput out;
  out.corpus = out_dir / "corpus.tsv";
  out.trees = out_dir / "trees.tsv";
  out.sentences = sentences.size();
  const auto comments = header_comments(cfg, "gen");
  {
    auto f = open_out(out.corpus);
    corpus::write_corpus_tsv(f, sentences, comments);
    finish(f, out.corpus);
  }
  {
    auto f = open_out(out.trees);
    corpus::write_trees(f, sentences, comments);
    finish(f, out.trees);
  }
  return out;
}

// ---- train --------------------------------------------------------------------------

namespace {

std::vector<model::Example> to_examples(const std::vector<corpus::LabeledSentence>& sentences,
                                        const tok::Vocabulary& vocab, std::size_t max_len) {
  std::vector<model::Example> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto t = tok::tokenize(s.text, vocab);
    if (t.ids.size() > max_len) {
      throw DataError("sentence " + s.id + " has " + std::to_string(t.ids.size()) +
                      " tokens, more than max_seq_len " + std::to_string(max_len));
    }
    out.push_back({std::move(t.ids), s.gold});
  }
  return out;
}

}  // namespace

TrainOutput run_train(const RunConfig& cfg, const fs::path& corpus_path, const fs::path& weights_out) {
  const auto sentences = corpus::read_corpus_tsv(corpus_path);
  if (sentences.empty()) throw DataError(corpus_path.string() + ": corpus is empty");
  const auto parts = corpus::split(sentences, cfg.train_fraction, cfg.seed);

  std::vector<std::string> texts;
  texts.reserve(parts.train.size());
  for (const auto& s : parts.train) texts.push_back(s.text);
  const auto vocab = tok::Vocabulary::build(texts, cfg.vocab_budget);

  model::ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  mc.seed = cfg.seed;
  mc.validate();
  model::TrainConfig hyper = cfg.train;
  hyper.seed = cfg.seed;

  const auto train_set = to_examples(parts.train, vocab, mc.max_seq_len);
  const auto test_set = to_examples(parts.test, vocab, mc.max_seq_len);
  auto result = model::train(model::init(mc), train_set, hyper);

  TrainOutput out;
  out.weights = weights_out;
  const fs::path dir = weights_out.has_parent_path() ? weights_out.parent_path() : fs::path(".");
  out.loss_trace = dir / "loss_trace.csv";
  out.vocab = dir / "vocab.txt";
  out.train_size = train_set.size();
  out.test_size = test_set.size();
  out.train_accuracy = result.train_accuracy;
  out.test_accuracy = model::accuracy(result.weights, test_set);

  if (weights_out.has_parent_path()) fs::create_directories(weights_out.parent_path());
  model::save_weights(result.weights, weights_out, vocab.tokens());
  vocab.save(out.vocab);
  auto f = open_out(out.loss_trace);
  for (const auto& c : header_comments(cfg, "train")) f << "# " << c << '\n';
  f << "# train_size=" << out.train_size << " test_size=" << out.test_size
    << " train_accuracy=" << format_double(out.train_accuracy)
    << " test_accuracy=" << format_double(out.test_accuracy) << '\n';
  f << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    f << e + 1 << ',' << format_double(result.loss_trace[e]) << '\n';
  }
  finish(f, out.loss_trace);
  return out;
}

// ---- attribute ------------------------------------------------------------------------

AttributeOutput attribute_corpus(const model::ModelWeights& weights,
                                 const std::vector<std::string>& vocab_tokens,
                                 const fs::path& corpus_path, const ig::IGConfig& ig_cfg) {
  ig_cfg.validate();
  if (vocab_tokens.empty()) throw FormatError("weights file carries no vocabulary");
  const auto vocab = tok::Vocabulary::from_tokens(vocab_tokens);
  if (vocab.size() != weights.config.vocab_size) {
    throw FormatError("vocabulary size " + std::to_string(vocab.size()) +
                      " does not match model vocab_size " + std::to_string(weights.config.vocab_size));
  }
  const auto sentences = corpus::read_corpus_tsv(corpus_path);
  AttributeOutput out;
  out.records.reserve(sentences.size());
  for (const auto& s : sentences) {
    const auto t = tok::tokenize(s.text, vocab);
    if (t.ids.size() > weights.config.max_seq_len) {
      throw DataError("sentence " + s.id + " has " + std::to_string(t.ids.size()) +
                      " tokens, more than max_seq_len " + std::to_string(weights.config.max_seq_len));
    }
    ig::SentenceAttribution a;
    try {
      a = ig::integrated_gradients(weights, t, ig_cfg);
    } catch (const NumericError& e) {
      throw NumericError("sentence " + s.id + ": " + e.what());
    }
    ig::AttributionRecord r;
    r.id = s.id;
    r.category = s.category;
    r.gold = s.gold;
    r.predicted = a.prediction.predicted;
    r.prob = a.prediction.predicted_prob();
    r.sentence_ligas = a.sentence_ligas;
    r.completeness_gap = a.completeness_gap;
    for (std::size_t w = 0; w < t.words.size(); ++w) r.words.push_back({t.words[w], a.word_ligas[w]});
    out.records.push_back(std::move(r));
    const double delta = std::abs(a.f_input - a.f_baseline);
    out.relative_gaps.push_back(delta > 0.0 ? a.completeness_gap / delta : a.completeness_gap);
  }
  return out;
}

AttributeOutput run_attribute(const RunConfig& cfg, const fs::path& corpus_path,
                              const fs::path& weights_path, const fs::path& out_path) {
  cfg.ig.validate();
  std::vector<std::string> vocab;
  const auto weights = model::load_weights(weights_path, &vocab);
  auto out = attribute_corpus(weights, vocab, corpus_path, cfg.ig);

  nlohmann::ordered_json meta;
  meta["tool"] = "ligas attribute";
  meta["config_digest"] = cfg.digest();
  meta["steps"] = cfg.ig.steps;
  meta["rule"] = std::string(ig::to_string(cfg.ig.rule));
  meta["baseline"] = std::string(ig::to_string(cfg.ig.baseline));
  meta["target_space"] = std::string(ig::to_string(cfg.ig.target_space));
  meta["target"] = cfg.ig.fixed_class ? std::string(to_string(*cfg.ig.fixed_class)) : "predicted";
  meta["normalize"] = cfg.ig.normalize;
  meta["weights_checksum"] = hex64(weights.checksum());
  meta["corpus_digest"] = file_digest(corpus_path);
  meta["median_relative_gap"] = median(out.relative_gaps);

  auto f = open_out(out_path);
  ig::write_jsonl(f, out.records, meta.dump());
  finish(f, out_path);
  return out;
}

// ---- analyze --------------------------------------------------------------------------

AnalyzeOutput run_analyze(const RunConfig& cfg, const fs::path& attributions,
                          const std::optional<fs::path>& trees_path, const fs::path& out_dir) {
  std::string meta_text;
  const auto records = ig::read_jsonl(attributions, &meta_text);
  const auto meta = nlohmann::json::parse(meta_text.empty() ? "{}" : meta_text);
  const std::string input_digest = meta.value("config_digest", std::string("unknown"));
  const std::string target_space = meta.value("target_space", std::string("unknown"));
  fs::create_directories(out_dir);

  AnalyzeOutput out;
  auto comments = header_comments(cfg, "analyze");
  comments.push_back("attributions config_digest=" + input_digest + " target_space=" + target_space);

  // Sign statistics.
  std::vector<analysis::SignRecord> signs;
  std::vector<analysis::ScatterPoint> points;
  std::vector<Label> gold;
  std::vector<double> ligas;
  for (const auto& r : records) {
    const auto oc = analysis::outcome(r.predicted, r.gold);
    signs.push_back({r.category, oc, r.sentence_ligas});
    points.push_back({r.prob, r.sentence_ligas, oc});
    gold.push_back(r.gold);
    ligas.push_back(r.sentence_ligas);
  }
  out.stats = analysis::sign_stats(signs);
  out.mc_positive_pct = analysis::aggregate_mc_positive(out.stats);
  out.magnitudes = analysis::compare_magnitudes(gold, ligas);

  auto write_file = [&](const fs::path& path, const std::function<void(std::ostream&)>& body) {
    auto f = open_out(path);
    body(f);
    finish(f, path);
    out.written.push_back(path);
  };

  write_file(out_dir / "stats.csv", [&](std::ostream& f) {
    analysis::write_stats_csv(f, out.stats, comments);
    f << "# positive means sentence LIGAS > 0; exactly 0 counts as non-positive\n";
    f << "# percentages rounded half-to-even to 2 decimals; empty when the denominator is 0\n";
    f << "# aggregate MCplus_pct=" << analysis::format_percent(out.mc_positive_pct) << '\n';
  });
  for (auto which : {analysis::Outcome::CC, analysis::Outcome::MC}) {
    const std::string tag = which == analysis::Outcome::CC ? "cc" : "mc";
    write_file(out_dir / ("scatter_" + tag + ".csv"),
               [&](std::ostream& f) { analysis::write_scatter_csv(f, points, which, comments); });
    write_file(out_dir / ("scatter_" + tag + ".svg"), [&](std::ostream& f) {
      const std::string title = std::string(which == analysis::Outcome::CC ? "Correctly classified"
                                                                           : "Misclassified") +
                                ": prediction probability vs LIGAS";
      f << analysis::scatter_svg(points, which, title, comments.front());
    });
  }

  // Tree-dependent reports.
  if (!trees_path) {
    out.warnings.push_back("no trees given; patterns.csv and subtree_ranks.csv skipped");
  } else {
    const auto trees = corpus::read_trees(*trees_path);
    std::map<std::string, const cpt::ParseTree*> by_id;
    for (const auto& t : trees) by_id[t.id] = &t.tree;
    std::vector<cpt::MiningRecord> mining;
    // (category, gold, pattern) -> per-sentence subtree scores, in record order.
    std::map<std::tuple<Category, Label, cpt::PatternKey>, std::vector<std::vector<cpt::SubtreeScore>>> groups;
    std::map<std::tuple<Category, Label, cpt::PatternKey>, const cpt::ParseTree*> shapes;
    std::size_t missing = 0, skipped_mc = 0;
    for (const auto& r : records) {
      auto it = by_id.find(r.id);
      if (it == by_id.end()) {
        ++missing;
        continue;
      }
      ++out.sentences_with_tree;
      if (!cfg.patterns_from_all && r.predicted != r.gold) {
        ++skipped_mc;
        continue;
      }
      std::vector<std::string> words;
      std::vector<double> word_ligas;
      for (const auto& w : r.words) {
        words.push_back(w.text);
        word_ligas.push_back(w.ligas);
      }
      try {
        cpt::align(*it->second, words);
      } catch (const DataError& e) {
        throw DataError("sentence " + r.id + ": " + e.what());
      }
      const auto key = cpt::to_pattern(*it->second);
      mining.push_back({key, r.category, r.gold, r.sentence_ligas});
      const auto group_key = std::make_tuple(r.category, r.gold, key);
      groups[group_key].push_back(cpt::subtree_scores(*it->second, word_ligas));
      shapes.emplace(group_key, it->second);
    }
    if (missing) out.warnings.push_back(std::to_string(missing) + " sentence(s) without a tree were skipped");
    std::set<std::string> record_ids;
    for (const auto& r : records) record_ids.insert(r.id);
    std::size_t orphans = 0;
    for (const auto& t : trees) orphans += record_ids.count(t.id) == 0;
    if (orphans) out.warnings.push_back(std::to_string(orphans) + " tree(s) have no attribution record");

    auto tree_comments = comments;
    tree_comments.push_back(std::string("patterns from ") +
                            (cfg.patterns_from_all ? "all sentences" : "correctly classified sentences") +
                            "; ligas = " + (cfg.aggregate == cpt::Aggregate::Sum ? "sum" : "mean") +
                            " of sentence LIGAS");
    const auto report = cpt::mine_patterns(mining, cfg.aggregate);
    write_file(out_dir / "patterns.csv", [&](std::ostream& f) {
      for (const auto& c : tree_comments) f << "# " << c << '\n';
      f << "pattern,category,label,count,ligas\n";
      for (const auto& [cell, list] : report) {
        for (const auto& p : list) {
          f << csv_field(p.pattern.text) << ',' << to_string(cell.first) << ',' << to_string(cell.second)
            << ',' << p.count << ',' << format_double(p.ligas) << '\n';
        }
      }
    });
    write_file(out_dir / "subtree_ranks.csv", [&](std::ostream& f) {
      for (const auto& c : tree_comments) f << "# " << c << '\n';
      f << "# top subtree = largest summed subtree LIGAS over the pattern's sentences (root excluded)\n";
      f << "pattern,category,label,count,subtree_path,subtree,subtree_ligas,marked\n";
      for (const auto& [cell, list] : report) {
        for (const auto& p : list) {
          const auto key = std::make_tuple(cell.first, cell.second, p.pattern);
          const auto rank = cpt::rank_subtrees(groups.at(key));
          f << csv_field(p.pattern.text) << ',' << to_string(cell.first) << ',' << to_string(cell.second)
            << ',' << p.count << ',' << join_path(rank.path) << ',' << csv_field(rank.fragment) << ','
            << format_double(rank.ligas) << ',' << csv_field(cpt::mark_subtree(*shapes.at(key), rank.path))
            << '\n';
        }
      }
    });
  }

  // Summary.
  std::vector<double> gaps;
  for (const auto& r : records) gaps.push_back(r.completeness_gap);
  write_file(out_dir / "summary.txt", [&](std::ostream& f) {
    for (const auto& c : comments) f << "# " << c << '\n';
    std::size_t cc = 0;
    for (const auto& s : signs) cc += s.outcome == analysis::Outcome::CC;
    f << "sentences=" << records.size() << '\n';
    f << "correctly_classified=" << cc << '\n';
    f << "misclassified=" << records.size() - cc << '\n';
    f << "sentences_with_tree=" << out.sentences_with_tree << '\n';
    f << "mc_positive_pct=" << analysis::format_percent(out.mc_positive_pct) << '\n';
    const auto& m = out.magnitudes;
    f << "la_count=" << m.la_count << '\n';
    f << "lua_count=" << m.lua_count << '\n';
    f << "la_mean_abs_ligas=" << format_fixed(m.la_mean_abs, 6) << '\n';
    f << "lua_mean_abs_ligas=" << format_fixed(m.lua_mean_abs, 6) << '\n';
    f << "lua_to_la_ratio=" << (m.ratio ? format_fixed(*m.ratio, 4) : std::string()) << '\n';
    f << "median_completeness_gap=" << format_double(median(gaps)) << '\n';
    for (const auto& w : out.warnings) f << "warning=" << w << '\n';
  });
  return out;
}

// ---- render ---------------------------------------------------------------------------

std::size_t run_render(const RunConfig& cfg, const fs::path& attributions,
                       const std::vector<std::string>& ids, const fs::path& out_path) {
  const auto records = ig::read_jsonl(attributions);
  std::map<std::string, const ig::AttributionRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  std::vector<const ig::AttributionRecord*> chosen;
  if (ids.empty()) {
    for (const auto& r : records) chosen.push_back(&r);
  } else {
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("id '" + id + "' not found in " + attributions.string());
      chosen.push_back(it->second);
    }
  }
  std::vector<analysis::HeatmapInput> inputs;
  for (const auto* r : chosen) {
    analysis::HeatmapInput h;
    h.id = r->id + " (" + std::string(to_string(r->category)) + ", gold " + std::string(to_string(r->gold)) + ")";
    for (const auto& w : r->words) {
      h.words.push_back(w.text);
      h.ligas.push_back(w.ligas);
    }
    h.predicted = r->predicted;
    h.prob = r->prob;
    inputs.push_back(std::move(h));
  }
  auto f = open_out(out_path);
  f << analysis::heatmap_document(inputs, header_comments(cfg, "render").front());
  finish(f, out_path);
  return inputs.size();
}

}  // namespace ligas::pipeline

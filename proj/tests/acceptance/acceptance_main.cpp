// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any gated criterion fails; criterion 9 is reported, not gated.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gradient_cases.hpp"
#include "ligas/analysis.hpp"
#include "ligas/attribution.hpp"
#include "ligas/corpus.hpp"
#include "ligas/format.hpp"
#include "ligas/pipeline.hpp"
#include "ligas/rng.hpp"
#include "ligas/tokenizer.hpp"
#include "ligas/tree.hpp"

namespace fs = std::filesystem;
using namespace ligas;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// ---- 1 ---------------------------------------------------------------------

Outcome table_oracle() {
  const auto t0 = Clock::now();
  struct Row {
    Category cat;
    std::size_t cc_plus, cc_minus, mc_plus, mc_minus;
    double cc_pct, mc_pct;
  };
  const Row rows[] = {
      {Category::CIA, 144, 18, 7, 13, 88.88, 35},   {Category::RAA, 100, 0, 2, 42, 100, 4.54},
      {Category::SVA, 441, 35, 148, 52, 92.64, 74}, {Category::SVO, 362, 38, 54, 46, 90.5, 54},
      {Category::WHE, 465, 51, 0, 4, 90.11, 0},
  };
  std::vector<analysis::SignRecord> recs;
  for (const auto& r : rows) {
    recs.insert(recs.end(), r.cc_plus, {r.cat, analysis::Outcome::CC, 1.0});
    recs.insert(recs.end(), r.cc_minus, {r.cat, analysis::Outcome::CC, -1.0});
    recs.insert(recs.end(), r.mc_plus, {r.cat, analysis::Outcome::MC, 1.0});
    recs.insert(recs.end(), r.mc_minus, {r.cat, analysis::Outcome::MC, -1.0});
  }
  const auto stats = analysis::sign_stats(recs);
  bool ok = stats.size() == 5;
  double worst = 0.0;
  for (std::size_t i = 0; ok && i < 5; ++i) {
    ok = stats[i].cc_plus_pct && stats[i].mc_plus_pct && stats[i].c == rows[i].cc_plus + rows[i].cc_minus +
                                                                        rows[i].mc_plus + rows[i].mc_minus;
    if (!ok) break;
    worst = std::max({worst, std::abs(*stats[i].cc_plus_pct - rows[i].cc_pct),
                      std::abs(*stats[i].mc_plus_pct - rows[i].mc_pct)});
  }
  const auto agg = analysis::aggregate_mc_positive(stats);
  const double elapsed = seconds_since(t0);
  ok = ok && worst <= 0.01 && agg && std::abs(*agg - 57.34) <= 0.5 && std::abs(*agg - 57.0) <= 0.5 &&
       elapsed < 1.0;
  return {ok, "max |pct - printed| = " + fmt(worst) + ", aggregate MC+ = " + (agg ? fmt(*agg) : "n/a") +
                  "%, " + fmt(elapsed, 3) + " s"};
}

// ---- 2 ---------------------------------------------------------------------

Outcome completeness(const fs::path& dir) {
  const auto t0 = Clock::now();
  pipeline::RunConfig cfg;
  cfg.pairs = 12;  // 120 sentences
  cfg.seed = 11;
  const auto gen = pipeline::run_gen(cfg, dir);
  const auto trained = pipeline::run_train(cfg, gen.corpus, dir / "weights.bin");
  std::vector<std::string> vocab;
  const auto weights = model::load_weights(trained.weights, &vocab);

  std::vector<double> medians;
  double within = 0.0;
  std::size_t n = 0;
  for (std::size_t m : {16u, 64u, 256u}) {
    ig::IGConfig ig_cfg;
    ig_cfg.steps = m;
    ig_cfg.rule = ig::Rule::Trapezoid;
    auto out = pipeline::attribute_corpus(weights, vocab, gen.corpus, ig_cfg);
    n = out.relative_gaps.size();
    auto gaps = out.relative_gaps;
    std::sort(gaps.begin(), gaps.end());
    medians.push_back(gaps.size() % 2 ? gaps[gaps.size() / 2]
                                      : 0.5 * (gaps[gaps.size() / 2 - 1] + gaps[gaps.size() / 2]));
    if (m == 256) {
      within = static_cast<double>(std::count_if(gaps.begin(), gaps.end(), [](double g) { return g <= 0.01; })) /
               static_cast<double>(gaps.size());
    }
  }
  const double elapsed = seconds_since(t0);
  const bool monotone = medians[1] <= medians[0] && medians[2] <= medians[1];
  const bool ok = n >= 100 && within >= 0.95 && monotone && elapsed < 120.0;
  return {ok, std::to_string(n) + " sentences, m=256 within 1%: " + fmt(100 * within, 2) +
                  "%, median relative gap m=16/64/256: " + format_double(medians[0]) + " / " +
                  format_double(medians[1]) + " / " + format_double(medians[2]) + ", " + fmt(elapsed, 1) + " s"};
}

// ---- 3 ---------------------------------------------------------------------

Outcome linear_exactness() {
  Rng rng(2024);
  const ad::Shape shape = {5, 6};
  std::vector<double> w(30), x(30), xb(30);
  for (auto* v : {&w, &x, &xb}) {
    for (double& e : *v) e = rng.uniform(-3.0, 3.0);
  }
  ig::ScalarFunction f = [&](ad::Tape& tape, const ad::Tensor& e) {
    return ad::sum(ad::mul(e, tape.constant(shape, w)));
  };
  double worst = 0.0;
  for (ig::Rule r : {ig::Rule::Left, ig::Rule::Right, ig::Rule::Trapezoid}) {
    for (std::size_t m : {1u, 7u, 64u}) {
      for (const bool zero : {false, true}) {
        const std::vector<double> baseline = zero ? std::vector<double>(30, 0.0) : xb;
        const auto res = ig::integrate_path(f, shape, x, baseline, m, r);
        for (std::size_t i = 0; i < 30; ++i) {
          worst = std::max(worst, std::abs(res.attributions[i] - w[i] * (x[i] - baseline[i])));
        }
      }
    }
  }
  return {worst <= 1e-9, "max |IG - w*(x-x')| = " + format_double(worst) + " over 3 rules x m in {1,7,64}"};
}

// ---- 4 ---------------------------------------------------------------------

Outcome gradients() {
  double worst_prim = 0.0;
  std::string worst_op;
  for (const auto& op : oracle::primitive_names()) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto c = oracle::primitive_case(op, seed);
      const double e = oracle::max_gradient_error(c.f, c.inputs, 1e-4);
      if (e > worst_prim) {
        worst_prim = e;
        worst_op = op;
      }
    }
  }
  double worst_enc = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    model::ModelWeights w;
    const auto c = oracle::encoder_case(seed, w);
    worst_enc = std::max(worst_enc, oracle::max_gradient_error(c.f, c.inputs, 1e-5));
  }
  const bool ok = worst_prim <= 1e-4 && worst_enc <= 1e-3;
  return {ok, std::to_string(oracle::primitive_names().size()) + " primitives x 100: max rel err " +
                  format_double(worst_prim) + " (" + worst_op + "); encoder x 100: " + format_double(worst_enc)};
}

// ---- 5 ---------------------------------------------------------------------

// Recursive check: every node equals the sum of its children and the sum of
// its leaves' word scores.
bool check_node(const cpt::ParseTree& node, const std::vector<cpt::SubtreeScore>& scores, std::size_t& index,
                const std::vector<double>& words, std::size_t& leaf, std::size_t& nodes) {
  const std::size_t self = index++;
  ++nodes;
  if (node.is_terminal()) return scores[self].ligas == words[leaf++];
  const std::size_t first_leaf = leaf;
  double children = 0.0;
  bool ok = true;
  for (std::size_t c = 0; c < node.children.size(); ++c) {
    const std::size_t child_index = index;
    ok = check_node(node.children[c], scores, index, words, leaf, nodes) && ok;
    children = c == 0 ? scores[child_index].ligas : children + scores[child_index].ligas;
  }
  double leaves = 0.0;
  for (std::size_t i = first_leaf; i < leaf; ++i) leaves = i == first_leaf ? words[i] : leaves + words[i];
  return ok && scores[self].ligas == children && scores[self].ligas == leaves;
}

Outcome subtree_identities(const fs::path& attributions, const fs::path& trees_path) {
  const auto records = ig::read_jsonl(attributions);
  const auto trees = corpus::read_trees(trees_path);
  std::map<std::string, const cpt::ParseTree*> by_id;
  for (const auto& t : trees) by_id[t.id] = &t.tree;
  std::size_t sentences = 0, nodes = 0, failures = 0;
  for (const auto& r : records) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      ++failures;
      continue;
    }
    std::vector<double> words;
    for (const auto& w : r.words) words.push_back(w.ligas);
    const auto scores = cpt::subtree_scores(*it->second, words);
    std::size_t index = 0, leaf = 0;
    const bool ok = check_node(*it->second, scores, index, words, leaf, nodes) && scores[0].ligas == r.sentence_ligas;
    failures += !ok;
    ++sentences;
  }
  return {failures == 0 && sentences > 0, std::to_string(sentences) + " sentences, " + std::to_string(nodes) +
                                              " nodes, " + std::to_string(failures) + " mismatches (tolerance 0)"};
}

// ---- 6 ---------------------------------------------------------------------

Outcome pattern_fidelity() {
  const std::string sva_la = "(ROOT(S(NP(DT)(NN))(VP(VBZ)(ADVP(RB)))(.)))";
  const std::string cia_lua = "(ROOT(S(NP(DT)(NN))(VP(VBD))(.)))";
  std::size_t sva_hits = 0, cia_hits = 0, cia_total = 0;
  for (const auto& s : corpus::generate_synthetic(Category::SVA, 50, 7)) {
    if (s.gold == Label::LA && cpt::to_pattern(*s.tree).text == sva_la) ++sva_hits;
  }
  for (const auto& s : corpus::generate_synthetic(Category::CIA, 50, 7)) {
    if (s.gold != Label::LUA) continue;
    ++cia_total;
    cia_hits += cpt::to_pattern(*s.tree).text == cia_lua;
  }
  // The adverb frame of SVA^LA renders exactly the published string.
  const bool ok = sva_hits > 0 && cia_total > 0 && cia_hits == cia_total;
  return {ok, "SVA^LA adverb-frame trees matching: " + std::to_string(sva_hits) + "; CIA^LUA " +
                  std::to_string(cia_hits) + "/" + std::to_string(cia_total)};
}

// ---- 7 ---------------------------------------------------------------------

Outcome oov_summation() {
  const auto base = corpus::generate_all(10, 5);
  std::vector<std::string> texts;
  std::vector<std::string> lexicon;
  for (const auto& s : base) {
    texts.push_back(s.text);
    for (auto& w : tok::split_words(s.text)) lexicon.push_back(w);
  }
  // A tight budget leaves most words split into pieces.
  const auto vocab = tok::Vocabulary::build(texts, 120);
  model::ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.d_model = 8;
  mc.n_heads = 2;
  mc.n_layers = 1;
  mc.d_ff = 16;
  mc.max_seq_len = 48;
  mc.seed = 3;
  const auto weights = model::init(mc);
  ig::IGConfig cfg;
  cfg.steps = 8;

  Rng rng(77);
  std::size_t tested = 0, multi_words = 0, failures = 0;
  while (tested < 1000) {
    std::string text;
    const std::size_t n_words = 2 + rng.below(8);
    for (std::size_t i = 0; i < n_words; ++i) {
      if (i) text += ' ';
      const auto& a = lexicon[rng.below(lexicon.size())];
      // Glue two lexicon words to make an out-of-vocabulary compound.
      text += rng.below(3) == 0 ? a + lexicon[rng.below(lexicon.size())] : a;
    }
    const auto t = tok::tokenize(text, vocab);
    if (t.ids.size() > mc.max_seq_len) continue;
    bool has_multi = false;
    for (const auto& span : t.alignment) has_multi |= span.end - span.begin > 1;
    if (!has_multi) continue;
    ++tested;
    const auto a = ig::integrated_gradients(weights, t, cfg);
    bool ok = true;
    double sentence = 0.0;
    for (std::size_t w = 0; w < t.alignment.size(); ++w) {
      const auto& span = t.alignment[w];
      multi_words += span.end - span.begin > 1;
      double fwd = 0.0, rev = 0.0;
      for (std::size_t k = span.begin; k < span.end; ++k) fwd = k == span.begin ? a.token_scores[k] : fwd + a.token_scores[k];
      for (std::size_t k = span.end; k-- > span.begin;) rev = k + 1 == span.end ? a.token_scores[k] : rev + a.token_scores[k];
      ok = ok && a.word_ligas[w] == fwd && a.word_ligas[w] == rev;
      sentence = w == 0 ? a.word_ligas[w] : sentence + a.word_ligas[w];
    }
    // Also against the flat sum of interior token scores.
    double interior = 0.0;
    for (std::size_t k = 1; k + 1 < t.ids.size(); ++k) interior = k == 1 ? a.token_scores[k] : interior + a.token_scores[k];
    ok = ok && a.sentence_ligas == sentence && a.sentence_ligas == interior;
    failures += !ok;
  }
  return {failures == 0, std::to_string(tested) + " random sentences, " + std::to_string(multi_words) +
                             " multi-piece words, " + std::to_string(failures) + " inexact sums"};
}

// ---- 8, 9 ---------------------------------------------------------------------

void run_pipeline(const pipeline::RunConfig& cfg, const fs::path& dir) {
  const auto gen = pipeline::run_gen(cfg, dir);
  pipeline::run_train(cfg, gen.corpus, dir / "weights.bin");
  pipeline::run_attribute(cfg, gen.corpus, dir / "weights.bin", dir / "attributions.jsonl");
  pipeline::run_analyze(cfg, dir / "attributions.jsonl", gen.trees, dir / "report");
}

Outcome determinism(const fs::path& a, const fs::path& b) {
  std::string detail;
  bool ok = true;
  for (const fs::path rel : {fs::path("attributions.jsonl"), fs::path("report/stats.csv"),
                             fs::path("report/patterns.csv")}) {
    const std::string x = slurp(a / rel), y = slurp(b / rel);
    const bool same = !x.empty() && x == y;
    ok = ok && same;
    if (!detail.empty()) detail += ", ";
    detail += rel.filename().string() + (same ? " identical" : " DIFFERS") + " (" + std::to_string(x.size()) + " B)";
  }
  return {ok, detail};
}

Outcome magnitude_report(const fs::path& dir) {
  std::ifstream f(dir / "report" / "summary.txt");
  std::string line, la, lua, ratio;
  while (std::getline(f, line)) {
    auto take = [&](const std::string& key, std::string& dst) {
      if (line.rfind(key + "=", 0) == 0) dst = line.substr(key.size() + 1);
    };
    take("la_mean_abs_ligas", la);
    take("lua_mean_abs_ligas", lua);
    take("lua_to_la_ratio", ratio);
  }
  const bool ok = !la.empty() && !lua.empty() && !ratio.empty();
  return {ok, "reported, not gated: mean |sentence LIGAS| LA " + la + ", LUA " + lua + ", LUA/LA ratio " + ratio};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / ("ligas_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  int failed = 0;
  auto report = [&](int id, const std::string& name, bool gated, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
    if (!o.pass && gated) ++failed;
  };

  pipeline::RunConfig cfg;  // defaults: seed 7, 50 pairs per category
  bool pipeline_ok = true;
  std::string pipeline_error;
  try {
    run_pipeline(cfg, root / "run_a");
    run_pipeline(cfg, root / "run_b");
  } catch (const std::exception& e) {
    pipeline_ok = false;
    pipeline_error = e.what();
  }
  auto needs_pipeline = [&](const std::function<Outcome()>& f) {
    return [&, f]() -> Outcome {
      if (!pipeline_ok) return {false, "pipeline failed: " + pipeline_error};
      return f();
    };
  };

  report(1, "sign-table oracle", true, table_oracle);
  report(2, "IG completeness", true, [&] { return completeness(root / "completeness"); });
  report(3, "linear exactness", true, linear_exactness);
  report(4, "gradient correctness", true, gradients);
  report(5, "subtree identities", true, needs_pipeline([&] {
           return subtree_identities(root / "run_a" / "attributions.jsonl", root / "run_a" / "trees.tsv");
         }));
  report(6, "pattern fidelity", true, pattern_fidelity);
  report(7, "OOV summation", true, oov_summation);
  report(8, "pipeline determinism", true, needs_pipeline([&] { return determinism(root / "run_a", root / "run_b"); }));
  report(9, "LA vs LUA magnitude", false, needs_pipeline([&] { return magnitude_report(root / "run_a"); }));

  fs::remove_all(root);
  return failed == 0 ? 0 : 1;
}

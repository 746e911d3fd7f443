// ligas: synthetic acceptability corpus -> toy encoder -> integrated-gradient
// attributions -> sign statistics, CPT pattern reports and heatmaps.
//
// Exit codes: 0 ok, 1 usage, 2 data, 3 numeric.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ligas/errors.hpp"
#include "ligas/format.hpp"
#include "ligas/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using ligas::pipeline::KeyValues;
using ligas::pipeline::RunConfig;

// Flags that map onto config keys; only those given on the command line
// override the config file.
struct Overrides {
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

struct Common {
  std::string config_file;
  Overrides overrides;
};

void add_common(CLI::App* app, Common& common) {
  app->add_option("--config", common.config_file, "flat key=value config file")
      ->check(CLI::ExistingFile);
  common.overrides.add(app, "--seed", "seed", "global seed");
  common.overrides.add(app, "--threads", "threads", "worker threads (env LIGAS_THREADS)");
}

RunConfig resolve(const Common& common) {
  RunConfig cfg;
  if (!common.config_file.empty()) ligas::pipeline::apply(cfg, ligas::pipeline::read_config_file(common.config_file));
  if (const char* env = std::getenv("LIGAS_THREADS"); env && *env) {
    ligas::pipeline::apply(cfg, {{"threads", env}});
  }
  KeyValues flags(common.overrides.values.begin(), common.overrides.values.end());
  ligas::pipeline::apply(cfg, flags);
  return cfg;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> out;
  if (text == "all") return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ligas::UsageError("--ids: expected 'all' or a comma-separated id list");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Integrated-gradient attribution analysis of an acceptability classifier"};
  app.require_subcommand(1);

  Common gen_c, train_c, attr_c, analyze_c, render_c;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "write a synthetic five-category corpus and its trees");
  add_common(gen, gen_c);
  gen_c.overrides.add(gen, "--category", "category", "all|CIA|RAA|SVA|SVO|WHE");
  gen_c.overrides.add(gen, "--pairs", "pairs", "LA/LUA pairs per category");
  gen->add_option("--out", gen_out, "output directory")->required();

  std::string train_corpus, train_out;
  auto* train = app.add_subcommand("train", "train the encoder on the corpus's training split");
  add_common(train, train_c);
  train->add_option("--corpus", train_corpus, "corpus TSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "weights file")->required();
  for (const char* k : {"epochs", "lr", "batch", "d_model", "n_heads", "n_layers", "d_ff", "max_seq_len",
                        "vocab_budget", "train_fraction"}) {
    std::string flag = std::string("--") + k;
    for (auto& ch : flag) ch = ch == '_' ? '-' : ch;
    train_c.overrides.add(train, flag, k, std::string("config key ") + k);
  }

  std::string attr_corpus, attr_weights, attr_out;
  auto* attr = app.add_subcommand("attribute", "integrated gradients for every corpus sentence");
  add_common(attr, attr_c);
  attr->add_option("--corpus", attr_corpus, "corpus TSV")->required()->check(CLI::ExistingFile);
  attr->add_option("--weights", attr_weights, "weights file")->required()->check(CLI::ExistingFile);
  attr->add_option("--out", attr_out, "attributions JSONL")->required();
  attr_c.overrides.add(attr, "--steps", "steps", "interpolation steps m");
  attr_c.overrides.add(attr, "--rule", "rule", "left|right|trapezoid");
  attr_c.overrides.add(attr, "--baseline", "baseline", "pad_embeddings|zero");
  attr_c.overrides.add(attr, "--target-space", "target_space", "logit|probability");
  attr_c.overrides.add(attr, "--fixed-class", "fixed_class", "none|LA|LUA");

  std::string an_attr, an_trees, an_out;
  auto* analyze = app.add_subcommand("analyze", "sign statistics, scatter plots and pattern reports");
  add_common(analyze, analyze_c);
  analyze->add_option("--attributions", an_attr, "attributions JSONL")->required()->check(CLI::ExistingFile);
  analyze->add_option("--trees", an_trees, "trees file")->check(CLI::ExistingFile);
  analyze->add_option("--out", an_out, "output directory")->required();
  analyze_c.overrides.add(analyze, "--aggregate", "aggregate", "sum|mean");
  analyze_c.overrides.add(analyze, "--patterns-from", "patterns_from", "cc|all");

  std::string r_attr, r_ids = "all", r_out;
  auto* render = app.add_subcommand("render", "HTML heatmaps of word LIGAS");
  add_common(render, render_c);
  render->add_option("--attributions", r_attr, "attributions JSONL")->required()->check(CLI::ExistingFile);
  render->add_option("--ids", r_ids, "comma-separated ids or 'all'");
  render->add_option("--out", r_out, "HTML file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*gen) {
    const auto cfg = resolve(gen_c);
    const auto out = ligas::pipeline::run_gen(cfg, gen_out);
    std::cout << "wrote " << out.sentences << " sentences to " << out.corpus.string() << " and "
              << out.trees.string() << "\n";
  } else if (*train) {
    const auto cfg = resolve(train_c);
    const auto out = ligas::pipeline::run_train(cfg, train_corpus, train_out);
    std::cout << "train " << out.train_size << " / test " << out.test_size
              << " sentences; train accuracy " << ligas::format_fixed(out.train_accuracy, 4)
              << ", held-out accuracy " << ligas::format_fixed(out.test_accuracy, 4) << "\n"
              << "wrote " << out.weights.string() << ", " << out.loss_trace.string() << ", "
              << out.vocab.string() << "\n";
  } else if (*attr) {
    const auto cfg = resolve(attr_c);
    const auto out = ligas::pipeline::run_attribute(cfg, attr_corpus, attr_weights, attr_out);
    std::cout << "attributed " << out.records.size() << " sentences to " << attr_out << "\n";
  } else if (*analyze) {
    const auto cfg = resolve(analyze_c);
    std::optional<fs::path> trees;
    if (!an_trees.empty()) trees = an_trees;
    const auto out = ligas::pipeline::run_analyze(cfg, an_attr, trees, an_out);
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
    const auto& m = out.magnitudes;
    std::cout << "mean |sentence LIGAS|: LA " << ligas::format_fixed(m.la_mean_abs, 4) << ", LUA "
              << ligas::format_fixed(m.lua_mean_abs, 4);
    if (m.ratio) std::cout << " (LUA/LA " << ligas::format_fixed(*m.ratio, 3) << ")";
    std::cout << "\nwrote " << out.written.size() << " files to " << an_out << "\n";
  } else if (*render) {
    const auto cfg = resolve(render_c);
    const auto n = ligas::pipeline::run_render(cfg, r_attr, split_ids(r_ids), r_out);
    std::cout << "rendered " << n << " sentences to " << r_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ligas::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ligas::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const ligas::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

#pragma once

// End-to-end commands behind the `ligas` executable: gen, train, attribute,
// analyze, render. Every file written carries the run's config digest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ligas/analysis.hpp"
#include "ligas/attribution.hpp"
#include "ligas/model.hpp"
#include "ligas/tree.hpp"

namespace ligas::pipeline {

namespace fs = std::filesystem;

struct RunConfig {
  std::uint64_t seed = 7;

  std::string category = "all";
  std::size_t pairs = 50;

  std::size_t vocab_budget = 256;
  model::ModelConfig model;
  model::TrainConfig train;
  double train_fraction = 0.8;

  ig::IGConfig ig;

  cpt::Aggregate aggregate = cpt::Aggregate::Sum;
  bool patterns_from_all = false;  // default: correctly classified only

  // Flat "key=value" text, sorted by key. Threads are excluded: they never
  // change output bytes.
  std::string canonical_text() const;
  // 16 hex digits of FNV-1a over canonical_text().
  std::string digest() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// "key = value" per line; blank lines and '#' comments skipped. Malformed
// lines are a UsageError naming the line.
KeyValues read_config_file(const fs::path& path);
// Unknown keys or unparsable values raise UsageError.
void apply(RunConfig& cfg, const KeyValues& values);
std::vector<std::string> config_keys();

// ---- gen -------------------------------------------------------------------

struct GenOutput {
  fs::path corpus, trees;
  std::size_t sentences = 0;
};
GenOutput run_gen(const RunConfig& cfg, const fs::path& out_dir);

// ---- train -----------------------------------------------------------------

struct TrainOutput {
  fs::path weights, loss_trace, vocab;
  std::size_t train_size = 0, test_size = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};
TrainOutput run_train(const RunConfig& cfg, const fs::path& corpus, const fs::path& weights_out);

// ---- attribute -------------------------------------------------------------

struct AttributeOutput {
  std::vector<ig::AttributionRecord> records;
  std::vector<double> relative_gaps;  // completeness gap / |F(x) - F(x')|
};

// Attributes every sentence of a corpus; sentences too long for the model are
// a DataError naming the id.
AttributeOutput attribute_corpus(const model::ModelWeights& weights,
                                 const std::vector<std::string>& vocab_tokens,
                                 const fs::path& corpus, const ig::IGConfig& ig_cfg);
AttributeOutput run_attribute(const RunConfig& cfg, const fs::path& corpus,
                              const fs::path& weights, const fs::path& out);

// ---- analyze ---------------------------------------------------------------

struct AnalyzeOutput {
  std::vector<analysis::CategoryStats> stats;
  std::optional<double> mc_positive_pct;
  analysis::MagnitudeComparison magnitudes;
  std::size_t sentences_with_tree = 0;
  std::vector<std::string> warnings;
  std::vector<fs::path> written;
};
AnalyzeOutput run_analyze(const RunConfig& cfg, const fs::path& attributions,
                          const std::optional<fs::path>& trees, const fs::path& out_dir);

// ---- render ----------------------------------------------------------------

// ids empty = all records. Unknown ids are a DataError.
std::size_t run_render(const RunConfig& cfg, const fs::path& attributions,
                       const std::vector<std::string>& ids, const fs::path& out);

}  // namespace ligas::pipeline

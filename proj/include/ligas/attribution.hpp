#pragma once

// Layer Integrated Gradients at the embedding layer.
//
//   IG_i = (x_i - x'_i) * sum_k w_k * dF/de_i (x' + a_k (x - x'))
//
// for a quadrature table (a_k, w_k). Per-token scores sum the attribution over
// embedding dimensions; a word's score sums its sub-word tokens; the sentence
// score sums its words.
//
// Token scores are snapped to a 2^-32 grid. Sums of grid values are exact in
// f64 (well within its range), so the word, sentence and subtree totals agree
// bit-for-bit no matter how they are grouped.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ligas/autodiff.hpp"
#include "ligas/model.hpp"
#include "ligas/tokenizer.hpp"
#include "ligas/types.hpp"

namespace ligas::ig {

enum class Rule { Left, Right, Trapezoid };
enum class BaselineMode { PadEmbeddings, Zero };
enum class TargetSpace { Logit, Probability };

std::string_view to_string(Rule rule);
std::string_view to_string(BaselineMode mode);
std::string_view to_string(TargetSpace space);
std::optional<Rule> parse_rule(std::string_view text);
std::optional<BaselineMode> parse_baseline(std::string_view text);
std::optional<TargetSpace> parse_target_space(std::string_view text);

struct IGConfig {
  std::size_t steps = 64;
  Rule rule = Rule::Trapezoid;
  BaselineMode baseline = BaselineMode::PadEmbeddings;
  // Empty: explain the class predicted on the clean input.
  std::optional<Label> fixed_class;
  TargetSpace target_space = TargetSpace::Logit;
  // Divide token scores by their L2 norm. Off for every report.
  bool normalize = false;
  // Worker threads for per-step gradient evaluations; results are reduced
  // in step order, so output does not depend on this.
  std::size_t threads = 1;

  void validate() const;
};

struct QuadraturePoint {
  double alpha = 0.0;
  double weight = 0.0;

  bool operator==(const QuadraturePoint&) const = default;
};

// right: a_k = k/m, k = 1..m; left: a_k = (k-1)/m; trapezoid: a_k = k/m,
// k = 0..m, endpoint weights 1/(2m). The last weight absorbs rounding so the
// weights sum to exactly 1.
std::vector<QuadraturePoint> interpolation_points(std::size_t steps, Rule rule);

// Differentiable scalar function of one input tensor.
using ScalarFunction = std::function<ad::Tensor(ad::Tape&, const ad::Tensor&)>;

struct PathIntegral {
  std::vector<double> attributions;  // same layout as the input
  double f_input = 0.0;
  double f_baseline = 0.0;
};

// Straight-line path integral from baseline to input. Every quadrature point
// is an independent forward/backward evaluation.
PathIntegral integrate_path(const ScalarFunction& f, const ad::Shape& shape,
                            std::span<const double> input, std::span<const double> baseline,
                            std::size_t steps, Rule rule, std::size_t threads = 1);

// pad_embeddings: interior ids replaced by [PAD], first and last kept, then
// embedded with positions; zero: all zeros.
std::vector<double> make_baseline(const model::ModelWeights& weights,
                                  std::span<const tok::TokenId> ids, BaselineMode mode);

double snap_score(double value);

// Exact per-word sums over alignment spans; special tokens are excluded.
std::vector<double> word_scores(std::span<const double> token_scores,
                                std::span<const tok::WordSpan> alignment);

struct SentenceAttribution {
  std::size_t length = 0;   // tokens, specials included
  std::size_t d_model = 0;
  std::vector<double> per_token;     // length × d_model
  std::vector<double> token_scores;  // length
  std::vector<double> word_ligas;
  double sentence_ligas = 0.0;
  model::Prediction prediction;
  Label target = Label::LUA;
  double f_input = 0.0;
  double f_baseline = 0.0;
  // |sum of raw token scores - (F(x) - F(x'))|
  double completeness_gap = 0.0;
};

SentenceAttribution integrated_gradients(const model::ModelWeights& weights,
                                         const tok::TokenizedSentence& sentence,
                                         const IGConfig& cfg);

// ---- JSON-lines output ----------------------------------------------------------

struct WordScore {
  std::string text;
  double ligas = 0.0;
};

struct AttributionRecord {
  std::string id;
  Category category = Category::CIA;
  Label gold = Label::LA;
  Label predicted = Label::LA;
  double prob = 0.0;  // probability of the predicted class
  double sentence_ligas = 0.0;
  double completeness_gap = 0.0;
  std::vector<WordScore> words;
};

// First line is a metadata object {"_meta": {...}}; then one record per line.
void write_jsonl(std::ostream& out, std::span<const AttributionRecord> records,
                 const std::string& meta_json);
std::vector<AttributionRecord> read_jsonl(const std::filesystem::path& path,
                                          std::string* meta_json = nullptr);

}  // namespace ligas::ig

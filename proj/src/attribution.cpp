#include "ligas/attribution.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "ligas/errors.hpp"

namespace ligas::ig {

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::Left: return "left";
    case Rule::Right: return "right";
    case Rule::Trapezoid: return "trapezoid";
  }
  return "?";
}

std::string_view to_string(BaselineMode mode) {
  return mode == BaselineMode::PadEmbeddings ? "pad_embeddings" : "zero";
}

std::string_view to_string(TargetSpace space) {
  return space == TargetSpace::Logit ? "logit" : "probability";
}

std::optional<Rule> parse_rule(std::string_view text) {
  for (Rule r : {Rule::Left, Rule::Right, Rule::Trapezoid}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

std::optional<BaselineMode> parse_baseline(std::string_view text) {
  if (text == "pad_embeddings" || text == "pad") return BaselineMode::PadEmbeddings;
  if (text == "zero") return BaselineMode::Zero;
  return std::nullopt;
}

std::optional<TargetSpace> parse_target_space(std::string_view text) {
  if (text == "logit") return TargetSpace::Logit;
  if (text == "probability" || text == "prob") return TargetSpace::Probability;
  return std::nullopt;
}

void IGConfig::validate() const {
  if (steps == 0) throw UsageError("integrated gradients needs at least one step");
  if (threads == 0) throw UsageError("thread count must be positive");
}

std::vector<QuadraturePoint> interpolation_points(std::size_t steps, Rule rule) {
  if (steps == 0) throw UsageError("integrated gradients needs at least one step");
  const double m = static_cast<double>(steps);
  std::vector<QuadraturePoint> points;
  switch (rule) {
    case Rule::Right:
      for (std::size_t k = 1; k <= steps; ++k) points.push_back({static_cast<double>(k) / m, 1.0 / m});
      break;
    case Rule::Left:
      for (std::size_t k = 1; k <= steps; ++k) {
        points.push_back({static_cast<double>(k - 1) / m, 1.0 / m});
      }
      break;
    case Rule::Trapezoid:
      for (std::size_t k = 0; k <= steps; ++k) {
        const bool endpoint = k == 0 || k == steps;
        points.push_back({static_cast<double>(k) / m, endpoint ? 0.5 / m : 1.0 / m});
      }
      break;
  }
  // The partial sum before the last point lies in [0.5, 1], so 1 - partial is
  // exact and the sequential total is exactly 1.
  double partial = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) partial += points[k].weight;
  points.back().weight = 1.0 - partial;
  return points;
}

namespace {

struct Evaluation {
  double value = 0.0;
  std::vector<double> grad;
};

Evaluation evaluate_at(const ScalarFunction& f, const ad::Shape& shape, std::vector<double> point,
                       bool with_grad) {
  ad::Tape tape;
  ad::Tensor x = tape.leaf(shape, std::move(point), with_grad);
  ad::Tensor y = f(tape, x);
  if (y.numel() != 1) {
    throw DimensionError("attribution target must be scalar, got " + ad::to_string(y.shape()));
  }
  Evaluation e;
  e.value = y.item();
  if (with_grad) {
    tape.backward(y);
    auto g = x.grad();
    e.grad.assign(g.begin(), g.end());
  }
  return e;
}

// Runs job(k) for k in [0, n) on up to `threads` workers. The exception of the
// lowest failing index is rethrown.
template <typename Job>
void parallel_for(std::size_t n, std::size_t threads, Job job) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&](std::size_t t) {
    for (std::size_t k = t; k < n; k += threads) {
      try {
        job(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

constexpr double kGrid = 4294967296.0;  // 2^32

}  // namespace

PathIntegral integrate_path(const ScalarFunction& f, const ad::Shape& shape,
                            std::span<const double> input, std::span<const double> baseline,
                            std::size_t steps, Rule rule, std::size_t threads) {
  const std::size_t n = ad::numel(shape);
  if (input.size() != n || baseline.size() != n) {
    throw DimensionError("integrate_path: input/baseline sizes do not match shape " +
                         ad::to_string(shape));
  }
  const auto points = interpolation_points(steps, rule);
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) delta[i] = input[i] - baseline[i];

  std::vector<std::vector<double>> grads(points.size());
  parallel_for(points.size(), threads, [&](std::size_t k) {
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = baseline[i] + points[k].alpha * delta[i];
    Evaluation e = evaluate_at(f, shape, std::move(z), true);
    for (double g : e.grad) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient at interpolation step " + std::to_string(k));
      }
    }
    grads[k] = std::move(e.grad);
  });

  PathIntegral out;
  std::vector<double> avg(n, 0.0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) avg[i] += points[k].weight * grads[k][i];
  }
  out.attributions.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.attributions[i] = delta[i] * avg[i];
  out.f_input = evaluate_at(f, shape, std::vector<double>(input.begin(), input.end()), false).value;
  out.f_baseline =
      evaluate_at(f, shape, std::vector<double>(baseline.begin(), baseline.end()), false).value;
  return out;
}

std::vector<double> make_baseline(const model::ModelWeights& weights,
                                  std::span<const tok::TokenId> ids, BaselineMode mode) {
  const std::size_t d = weights.config.d_model;
  if (mode == BaselineMode::Zero) return std::vector<double>(ids.size() * d, 0.0);
  std::vector<tok::TokenId> padded(ids.begin(), ids.end());
  for (std::size_t i = 1; i + 1 < padded.size(); ++i) padded[i] = tok::kPadId;
  ad::Tape tape;
  ad::Tensor e = model::embed(tape, weights, padded);
  return std::vector<double>(e.data().begin(), e.data().end());
}

double snap_score(double value) {
  return std::nearbyint(value * kGrid) / kGrid;
}

std::vector<double> word_scores(std::span<const double> token_scores,
                                std::span<const tok::WordSpan> alignment) {
  std::vector<double> words;
  words.reserve(alignment.size());
  for (const auto& span : alignment) {
    if (span.begin >= span.end || span.end > token_scores.size()) {
      throw DataError("word span [" + std::to_string(span.begin) + ", " + std::to_string(span.end) +
                      ") out of range for " + std::to_string(token_scores.size()) + " tokens");
    }
    double s = token_scores[span.begin];
    for (std::size_t t = span.begin + 1; t < span.end; ++t) s += token_scores[t];
    words.push_back(s);
  }
  return words;
}

SentenceAttribution integrated_gradients(const model::ModelWeights& weights,
                                         const tok::TokenizedSentence& sentence,
                                         const IGConfig& cfg) {
  cfg.validate();
  const auto& ids = sentence.ids;
  const std::size_t d = weights.config.d_model;

  SentenceAttribution out;
  out.length = ids.size();
  out.d_model = d;
  out.prediction = model::predict(weights, ids);
  out.target = cfg.fixed_class.value_or(out.prediction.predicted);
  const std::size_t target = static_cast<std::size_t>(class_index(out.target));

  ScalarFunction f = [&weights, target, space = cfg.target_space](ad::Tape& tape,
                                                                  const ad::Tensor& e) {
    model::BoundWeights bound(tape, weights, false);
    ad::Tensor z = bound.logits(e);
    if (space == TargetSpace::Probability) z = ad::softmax(z, -1);
    return ad::element(z, target);
  };

  std::vector<double> input;
  {
    ad::Tape tape;
    ad::Tensor e = model::embed(tape, weights, ids);
    input.assign(e.data().begin(), e.data().end());
  }
  const std::vector<double> baseline = make_baseline(weights, ids, cfg.baseline);
  PathIntegral path = integrate_path(f, {ids.size(), d}, input, baseline, cfg.steps, cfg.rule,
                                     cfg.threads);

  out.per_token = std::move(path.attributions);
  out.f_input = path.f_input;
  out.f_baseline = path.f_baseline;
  out.token_scores.resize(out.length);
  double raw_total = 0.0;
  for (std::size_t t = 0; t < out.length; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += out.per_token[t * d + j];
    raw_total += s;
    out.token_scores[t] = s;
  }
  out.completeness_gap = std::abs(raw_total - (out.f_input - out.f_baseline));
  if (cfg.normalize) {
    double norm = 0.0;
    for (double s : out.token_scores) norm += s * s;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& s : out.token_scores) s /= norm;
    }
  }
  for (double& s : out.token_scores) s = snap_score(s);

  out.word_ligas = word_scores(out.token_scores, sentence.alignment);
  out.sentence_ligas = 0.0;
  for (std::size_t w = 0; w < out.word_ligas.size(); ++w) {
    out.sentence_ligas = w == 0 ? out.word_ligas[w] : out.sentence_ligas + out.word_ligas[w];
  }
  return out;
}

// ---- JSON lines -----------------------------------------------------------------

void write_jsonl(std::ostream& out, std::span<const AttributionRecord> records,
                 const std::string& meta_json) {
  nlohmann::ordered_json meta;
  meta["_meta"] = nlohmann::ordered_json::parse(meta_json.empty() ? "{}" : meta_json);
  out << meta.dump() << '\n';
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["category"] = std::string(to_string(r.category));
    j["gold"] = std::string(to_string(r.gold));
    j["predicted"] = std::string(to_string(r.predicted));
    j["prob"] = r.prob;
    j["sentence_ligas"] = r.sentence_ligas;
    j["completeness_gap"] = r.completeness_gap;
    auto words = nlohmann::ordered_json::array();
    for (const auto& w : r.words) words.push_back({{"text", w.text}, {"ligas", w.ligas}});
    j["words"] = std::move(words);
    out << j.dump() << '\n';
  }
}

std::vector<AttributionRecord> read_jsonl(const std::filesystem::path& path, std::string* meta_json) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read attributions file " + path.string());
  std::vector<AttributionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      auto j = nlohmann::json::parse(line);
      if (j.contains("_meta")) {
        if (meta_json) *meta_json = j["_meta"].dump();
        continue;
      }
      AttributionRecord r;
      r.id = j.at("id").get<std::string>();
      auto cat = parse_category(j.at("category").get<std::string>());
      auto gold = parse_label(j.at("gold").get<std::string>());
      auto pred = parse_label(j.at("predicted").get<std::string>());
      if (!cat) throw DataError(where + "unknown category");
      if (!gold || !pred) throw DataError(where + "unknown label");
      r.category = *cat;
      r.gold = *gold;
      r.predicted = *pred;
      r.prob = j.at("prob").get<double>();
      r.sentence_ligas = j.at("sentence_ligas").get<double>();
      r.completeness_gap = j.at("completeness_gap").get<double>();
      for (const auto& w : j.at("words")) {
        r.words.push_back({w.at("text").get<std::string>(), w.at("ligas").get<double>()});
      }
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    }
  }
  return records;
}

}  // namespace ligas::ig

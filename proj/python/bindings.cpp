// Python bindings: corpus generation, tokenizer, model inference and
// attribution, tree utilities and the pipeline commands.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ligas/analysis.hpp"
#include "ligas/attribution.hpp"
#include "ligas/corpus.hpp"
#include "ligas/errors.hpp"
#include "ligas/model.hpp"
#include "ligas/pipeline.hpp"
#include "ligas/tokenizer.hpp"
#include "ligas/tree.hpp"

namespace py = pybind11;
using namespace ligas;

namespace {

pipeline::RunConfig make_config(const py::dict& options) {
  pipeline::RunConfig cfg;
  pipeline::KeyValues kv;
  for (const auto& [k, v] : options) kv.emplace_back(py::str(k), py::str(v));
  pipeline::apply(cfg, kv);
  return cfg;
}

Category category_arg(const std::string& text) {
  auto c = parse_category(text);
  if (!c) throw UsageError("unknown category '" + text + "'");
  return *c;
}

py::dict sentence_dict(const corpus::LabeledSentence& s) {
  py::dict d;
  d["id"] = s.id;
  d["category"] = std::string(to_string(s.category));
  d["label"] = std::string(to_string(s.gold));
  d["text"] = s.text;
  d["tree"] = s.tree ? py::object(py::str(cpt::render_leafed(*s.tree))) : py::object(py::none());
  return d;
}

// Trained weights plus the vocabulary they were trained with.
class Model {
 public:
  static Model load(const std::filesystem::path& path) {
    Model m;
    std::vector<std::string> tokens;
    m.weights_ = model::load_weights(path, &tokens);
    if (tokens.empty()) throw DataError(path.string() + ": weights file carries no vocabulary");
    m.vocab_ = tok::Vocabulary::from_tokens(std::move(tokens));
    return m;
  }

  py::dict predict(const std::string& text) const {
    const auto t = tok::tokenize(text, vocab_);
    const auto p = model::predict(weights_, t.ids);
    py::dict d;
    d["label"] = std::string(to_string(p.predicted));
    d["probs"] = std::vector<double>(p.probs.begin(), p.probs.end());
    d["logits"] = std::vector<double>(p.logits.begin(), p.logits.end());
    return d;
  }

  py::dict attribute(const std::string& text, std::size_t steps, const std::string& rule,
                     const std::string& baseline, const std::string& target_space,
                     const std::optional<std::string>& fixed_class, std::size_t threads) const {
    ig::IGConfig cfg;
    cfg.steps = steps;
    cfg.threads = threads;
    auto r = ig::parse_rule(rule);
    auto b = ig::parse_baseline(baseline);
    auto s = ig::parse_target_space(target_space);
    if (!r || !b || !s) throw UsageError("unknown rule, baseline or target space");
    cfg.rule = *r;
    cfg.baseline = *b;
    cfg.target_space = *s;
    if (fixed_class) {
      auto l = parse_label(*fixed_class);
      if (!l) throw UsageError("unknown class '" + *fixed_class + "'");
      cfg.fixed_class = *l;
    }
    cfg.validate();
    const auto t = tok::tokenize(text, vocab_);
    const auto a = ig::integrated_gradients(weights_, t, cfg);
    std::vector<std::string> tokens;
    for (auto id : t.ids) tokens.push_back(vocab_.token(id));
    py::dict d;
    d["words"] = t.words;
    d["tokens"] = tokens;
    d["token_scores"] = a.token_scores;
    d["word_ligas"] = a.word_ligas;
    d["sentence_ligas"] = a.sentence_ligas;
    d["predicted"] = std::string(to_string(a.prediction.predicted));
    d["target"] = std::string(to_string(a.target));
    d["f_input"] = a.f_input;
    d["f_baseline"] = a.f_baseline;
    d["completeness_gap"] = a.completeness_gap;
    return d;
  }

  const tok::Vocabulary& vocabulary() const { return vocab_; }
  std::string checksum() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(weights_.checksum()));
    return buf;
  }

 private:
  model::ModelWeights weights_;
  tok::Vocabulary vocab_ = tok::Vocabulary::from_tokens({"[PAD]", "[UNK]", "[CLS]", "[SEP]"});
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ligas core bindings";

  // DataError subclasses (parse, format, dimension) map to DataError too.
  static py::exception<UsageError> usage_error(m, "UsageError", PyExc_ValueError);
  static py::exception<DataError> data_error(m, "DataError", PyExc_RuntimeError);
  static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const UsageError& e) {
      py::set_error(usage_error, e.what());
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric_error, e.what());
    }
  });

  m.def(
      "generate",
      [](const std::string& category, std::size_t pairs, std::uint64_t seed) {
        const auto sentences = category == "all" ? corpus::generate_all(pairs, seed)
                                                 : corpus::generate_synthetic(category_arg(category), pairs, seed);
        py::list out;
        for (const auto& s : sentences) out.append(sentence_dict(s));
        return out;
      },
      py::arg("category") = "all", py::arg("pairs") = 50, py::arg("seed") = 7,
      "Synthetic LA/LUA minimal pairs with gold trees.");

  py::class_<tok::Vocabulary>(m, "Vocabulary")
      .def_static(
          "build",
          [](const std::vector<std::string>& texts, std::size_t max_size) {
            return tok::Vocabulary::build(texts, max_size);
          },
          py::arg("texts"), py::arg("max_size"))
      .def_static("load", &tok::Vocabulary::load)
      .def("save", &tok::Vocabulary::save)
      .def_property_readonly("tokens", &tok::Vocabulary::tokens)
      .def("__len__", &tok::Vocabulary::size)
      .def(
          "tokenize",
          [](const tok::Vocabulary& v, const std::string& text) {
            const auto t = tok::tokenize(text, v);
            std::vector<std::pair<std::size_t, std::size_t>> spans;
            for (const auto& s : t.alignment) spans.emplace_back(s.begin, s.end);
            py::dict d;
            d["words"] = t.words;
            d["ids"] = t.ids;
            d["spans"] = spans;
            return d;
          },
          py::arg("text"));

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def("predict", &Model::predict, py::arg("text"))
      .def("attribute", &Model::attribute, py::arg("text"), py::arg("steps") = 64,
           py::arg("rule") = "trapezoid", py::arg("baseline") = "pad_embeddings",
           py::arg("target_space") = "logit", py::arg("fixed_class") = py::none(), py::arg("threads") = 1)
      .def_property_readonly("vocabulary", &Model::vocabulary)
      .def_property_readonly("checksum", &Model::checksum);

  m.def(
      "pattern", [](const std::string& tree) { return cpt::to_pattern(cpt::parse_bracketed(tree)).text; },
      py::arg("tree"), "Leafless canonical form of a bracketed tree.");
  m.def(
      "subtree_scores",
      [](const std::string& tree, const std::vector<double>& word_ligas) {
        py::list out;
        for (const auto& s : cpt::subtree_scores(cpt::parse_bracketed(tree), word_ligas)) {
          out.append(py::make_tuple(s.path, s.fragment, s.ligas));
        }
        return out;
      },
      py::arg("tree"), py::arg("word_ligas"));

  m.def(
      "sign_stats",
      [](const std::vector<std::tuple<std::string, std::string, double>>& records) {
        std::vector<analysis::SignRecord> recs;
        for (const auto& [cat, outcome, score] : records) {
          if (outcome != "CC" && outcome != "MC") throw UsageError("outcome must be CC or MC");
          recs.push_back({category_arg(cat), outcome == "CC" ? analysis::Outcome::CC : analysis::Outcome::MC, score});
        }
        py::list out;
        for (const auto& s : analysis::sign_stats(recs)) {
          py::dict d;
          d["category"] = std::string(to_string(s.category));
          d["c"] = s.c;
          d["cc"] = s.cc;
          d["mc"] = s.mc;
          d["cc_plus"] = s.cc_plus;
          d["cc_minus"] = s.cc_minus;
          d["mc_plus"] = s.mc_plus;
          d["mc_minus"] = s.mc_minus;
          d["cc_plus_pct"] = s.cc_plus_pct;
          d["mc_plus_pct"] = s.mc_plus_pct;
          out.append(d);
        }
        return out;
      },
      py::arg("records"), "records: (category, 'CC'|'MC', sentence LIGAS) tuples.");

  // Pipeline commands; keyword options are config keys.
  m.def(
      "gen",
      [](const std::filesystem::path& out, const py::kwargs& options) {
        const auto r = pipeline::run_gen(make_config(options), out);
        return py::make_tuple(r.corpus, r.trees, r.sentences);
      },
      py::arg("out"));
  m.def(
      "train",
      [](const std::filesystem::path& corpus, const std::filesystem::path& out, const py::kwargs& options) {
        const auto r = pipeline::run_train(make_config(options), corpus, out);
        py::dict d;
        d["weights"] = r.weights;
        d["train_size"] = r.train_size;
        d["test_size"] = r.test_size;
        d["train_accuracy"] = r.train_accuracy;
        d["test_accuracy"] = r.test_accuracy;
        return d;
      },
      py::arg("corpus"), py::arg("out"));
  m.def(
      "attribute",
      [](const std::filesystem::path& corpus, const std::filesystem::path& weights,
         const std::filesystem::path& out, const py::kwargs& options) {
        const auto r = pipeline::run_attribute(make_config(options), corpus, weights, out);
        return r.records.size();
      },
      py::arg("corpus"), py::arg("weights"), py::arg("out"));
  m.def(
      "analyze",
      [](const std::filesystem::path& attributions, const std::filesystem::path& out,
         const std::optional<std::filesystem::path>& trees, const py::kwargs& options) {
        const auto r = pipeline::run_analyze(make_config(options), attributions, trees, out);
        py::dict d;
        d["mc_positive_pct"] = r.mc_positive_pct;
        d["la_mean_abs"] = r.magnitudes.la_mean_abs;
        d["lua_mean_abs"] = r.magnitudes.lua_mean_abs;
        d["ratio"] = r.magnitudes.ratio;
        d["warnings"] = r.warnings;
        d["written"] = r.written;
        return d;
      },
      py::arg("attributions"), py::arg("out"), py::arg("trees") = py::none());
  m.def(
      "render",
      [](const std::filesystem::path& attributions, const std::filesystem::path& out,
         const std::vector<std::string>& ids) {
        return pipeline::run_render(pipeline::RunConfig{}, attributions, ids, out);
      },
      py::arg("attributions"), py::arg("out"), py::arg("ids") = std::vector<std::string>{});
}

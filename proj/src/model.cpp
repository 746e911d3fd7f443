#include "ligas/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ligas/errors.hpp"
#include "ligas/rng.hpp"

namespace ligas::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("model config: " + msg); };
  if (vocab_size == 0) fail("vocab_size must be positive");
  if (d_model == 0 || n_heads == 0 || n_layers == 0 || d_ff == 0 || max_seq_len == 0) {
    fail("dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    fail("d_model=" + std::to_string(d_model) + " is not divisible by n_heads=" +
         std::to_string(n_heads));
  }
  if (n_classes != 2) fail("n_classes must be 2");
}

namespace {

template <typename W, typename P>
std::vector<std::pair<std::string, P*>> collect(W& w) {
  std::vector<std::pair<std::string, P*>> out;
  out.emplace_back("token_embedding", &w.token_embedding);
  out.emplace_back("position_embedding", &w.position_embedding);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    auto& l = w.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    out.emplace_back(p + "wq", &l.wq);
    out.emplace_back(p + "bq", &l.bq);
    out.emplace_back(p + "wk", &l.wk);
    out.emplace_back(p + "bk", &l.bk);
    out.emplace_back(p + "wv", &l.wv);
    out.emplace_back(p + "bv", &l.bv);
    out.emplace_back(p + "wo", &l.wo);
    out.emplace_back(p + "bo", &l.bo);
    out.emplace_back(p + "ln1_gain", &l.ln1_gain);
    out.emplace_back(p + "ln1_bias", &l.ln1_bias);
    out.emplace_back(p + "ff1", &l.ff1);
    out.emplace_back(p + "ff1_bias", &l.ff1_bias);
    out.emplace_back(p + "ff2", &l.ff2);
    out.emplace_back(p + "ff2_bias", &l.ff2_bias);
    out.emplace_back(p + "ln2_gain", &l.ln2_gain);
    out.emplace_back(p + "ln2_bias", &l.ln2_bias);
  }
  out.emplace_back("classifier", &w.classifier);
  out.emplace_back("classifier_bias", &w.classifier_bias);
  return out;
}

Parameter uniform(Rng& rng, ad::Shape shape, double scale) {
  Parameter p{shape, std::vector<double>(ad::numel(shape))};
  for (auto& v : p.values) v = rng.uniform(-scale, scale);
  return p;
}

Parameter filled(ad::Shape shape, double value) {
  return Parameter{shape, std::vector<double>(ad::numel(shape), value)};
}

// Zero-valued weights with the shapes implied by the config.
ModelWeights allocate(const ModelConfig& c) {
  ModelWeights w;
  w.config = c;
  const std::size_t d = c.d_model;
  w.token_embedding = filled({c.vocab_size, d}, 0.0);
  w.position_embedding = filled({c.max_seq_len, d}, 0.0);
  w.layers.resize(c.n_layers);
  for (auto& l : w.layers) {
    l.wq = l.wk = l.wv = l.wo = filled({d, d}, 0.0);
    l.bq = l.bk = l.bv = l.bo = filled({d}, 0.0);
    l.ln1_gain = l.ln2_gain = filled({d}, 1.0);
    l.ln1_bias = l.ln2_bias = filled({d}, 0.0);
    l.ff1 = filled({d, c.d_ff}, 0.0);
    l.ff1_bias = filled({c.d_ff}, 0.0);
    l.ff2 = filled({c.d_ff, d}, 0.0);
    l.ff2_bias = filled({d}, 0.0);
  }
  w.classifier = filled({d, c.n_classes}, 0.0);
  w.classifier_bias = filled({c.n_classes}, 0.0);
  return w;
}

void require_finite(const ad::Tensor& t, const std::string& where) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite activation in " + where);
  }
}

}  // namespace

std::vector<std::pair<std::string, Parameter*>> ModelWeights::named_parameters() {
  return collect<ModelWeights, Parameter>(*this);
}

std::vector<std::pair<std::string, const Parameter*>> ModelWeights::named_parameters() const {
  return collect<const ModelWeights, const Parameter>(*this);
}

std::uint64_t ModelWeights::checksum() const {
  std::uint64_t h = fnv1a(std::string_view("LIGASW01"));
  for (const auto& [name, p] : named_parameters()) {
    h = fnv1a(name, h);
    h = fnv1a(std::span<const double>(p->values), h);
  }
  return h;
}

ModelWeights init(const ModelConfig& config) {
  config.validate();
  ModelWeights w = allocate(config);
  Rng rng = Rng::substream(config.seed, "model-init");
  const double s = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  for (auto& [name, p] : w.named_parameters()) {
    const bool is_matrix = p->shape.size() == 2;
    if (is_matrix) *p = uniform(rng, p->shape, s);
  }
  return w;
}

// ---- forward ----------------------------------------------------------------

BoundWeights::BoundWeights(ad::Tape& tape, const ModelWeights& weights, bool trainable)
    : tape_(&tape), weights_(&weights) {
  for (const auto& [name, p] : weights.named_parameters()) {
    tensors_.push_back(tape.leaf(p->shape, p->values, trainable));
  }
}

ad::Tensor BoundWeights::embed(std::span<const TokenId> ids) const {
  const auto& c = weights_->config;
  if (ids.size() > c.max_seq_len) {
    throw DataError("sequence of " + std::to_string(ids.size()) + " tokens exceeds max_seq_len " +
                    std::to_string(c.max_seq_len));
  }
  for (TokenId id : ids) {
    if (id >= c.vocab_size) {
      throw DataError("token id " + std::to_string(id) + " out of range for vocab_size " +
                      std::to_string(c.vocab_size));
    }
  }
  std::vector<TokenId> positions(ids.size());
  std::iota(positions.begin(), positions.end(), TokenId{0});
  return ad::add(ad::gather_rows(tensors_[0], ids), ad::gather_rows(tensors_[1], positions));
}

ad::Tensor BoundWeights::logits(const ad::Tensor& embeddings) const {
  const auto& c = weights_->config;
  if (embeddings.rank() != 2 || embeddings.cols() != c.d_model || embeddings.rows() == 0 ||
      embeddings.rows() > c.max_seq_len) {
    throw DimensionError("embeddings of shape " + ad::to_string(embeddings.shape()) +
                         " do not fit d_model=" + std::to_string(c.d_model));
  }
  require_finite(embeddings, "embedding input");
  const std::size_t dh = c.d_model / c.n_heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  ad::Tensor x = embeddings;
  std::size_t k = 2;
  for (std::size_t layer = 0; layer < c.n_layers; ++layer) {
    const ad::Tensor* p = &tensors_[k];
    k += 16;
    const ad::Tensor& wq = p[0];
    const ad::Tensor& bq = p[1];
    const ad::Tensor& wk = p[2];
    const ad::Tensor& bk = p[3];
    const ad::Tensor& wv = p[4];
    const ad::Tensor& bv = p[5];
    const ad::Tensor& wo = p[6];
    const ad::Tensor& bo = p[7];
    const ad::Tensor& ln1g = p[8];
    const ad::Tensor& ln1b = p[9];
    const ad::Tensor& ff1 = p[10];
    const ad::Tensor& ff1b = p[11];
    const ad::Tensor& ff2 = p[12];
    const ad::Tensor& ff2b = p[13];
    const ad::Tensor& ln2g = p[14];
    const ad::Tensor& ln2b = p[15];

    ad::Tensor q = ad::add_row_bias(ad::matmul(x, wq), bq);
    ad::Tensor kk = ad::add_row_bias(ad::matmul(x, wk), bk);
    ad::Tensor v = ad::add_row_bias(ad::matmul(x, wv), bv);
    std::vector<ad::Tensor> heads;
    heads.reserve(c.n_heads);
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      ad::Tensor qh = ad::slice_cols(q, h * dh, dh);
      ad::Tensor kh = ad::slice_cols(kk, h * dh, dh);
      ad::Tensor vh = ad::slice_cols(v, h * dh, dh);
      ad::Tensor scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), attn_scale);
      heads.push_back(ad::matmul(ad::softmax(scores, -1), vh));
    }
    ad::Tensor attn = ad::add_row_bias(ad::matmul(ad::concat_cols(heads), wo), bo);
    x = ad::layer_norm(ad::add(x, attn), ln1g, ln1b);
    ad::Tensor hidden = ad::gelu(ad::add_row_bias(ad::matmul(x, ff1), ff1b));
    ad::Tensor ff = ad::add_row_bias(ad::matmul(hidden, ff2), ff2b);
    x = ad::layer_norm(ad::add(x, ff), ln2g, ln2b);
    require_finite(x, "encoder layer " + std::to_string(layer));
  }
  ad::Tensor pooled = ad::row(x, 0);
  ad::Tensor out = ad::add_row_bias(ad::matmul(pooled, tensors_[k]), tensors_[k + 1]);
  require_finite(out, "classifier head");
  return out;
}

ad::Tensor embed(ad::Tape& tape, const ModelWeights& weights, std::span<const TokenId> ids) {
  const auto& c = weights.config;
  if (ids.size() > c.max_seq_len) {
    throw DataError("sequence of " + std::to_string(ids.size()) + " tokens exceeds max_seq_len " +
                    std::to_string(c.max_seq_len));
  }
  if (ids.empty()) throw DataError("cannot embed an empty token sequence");
  const std::size_t d = c.d_model;
  std::vector<double> e(ids.size() * d);
  const auto& tok = weights.token_embedding.values;
  const auto& pos = weights.position_embedding.values;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= c.vocab_size) {
      throw DataError("token id " + std::to_string(ids[i]) + " out of range for vocab_size " +
                      std::to_string(c.vocab_size));
    }
    for (std::size_t j = 0; j < d; ++j) e[i * d + j] = tok[ids[i] * d + j] + pos[i * d + j];
  }
  return tape.leaf({ids.size(), d}, std::move(e), true);
}

Prediction make_prediction(std::span<const double> logits, Label tie_class) {
  Prediction p;
  p.logits = {logits[0], logits[1]};
  const double mx = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
  p.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
  if (p.probs[0] == p.probs[1]) {
    p.predicted = tie_class;
  } else {
    p.predicted = p.probs[1] > p.probs[0] ? Label::LA : Label::LUA;
  }
  return p;
}

Prediction forward_from_embeddings(const ModelWeights& weights, ad::Tape& tape,
                                   const ad::Tensor& embeddings) {
  BoundWeights bound(tape, weights, false);
  ad::Tensor z = bound.logits(embeddings);
  return make_prediction(z.data(), weights.config.tie_class);
}

Prediction predict(const ModelWeights& weights, std::span<const TokenId> ids) {
  ad::Tape tape;
  return forward_from_embeddings(weights, tape, embed(tape, weights, ids));
}

double accuracy(const ModelWeights& weights, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    if (predict(weights, ex.ids).predicted == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// ---- training -----------------------------------------------------------------

TrainResult train(ModelWeights weights, std::span<const Example> corpus, const TrainConfig& hyper) {
  if (corpus.empty()) throw UsageError("training corpus is empty");
  bool has_la = false, has_lua = false;
  for (const auto& ex : corpus) (ex.label == Label::LA ? has_la : has_lua) = true;
  if (!has_la || !has_lua) throw UsageError("training corpus must contain both LA and LUA examples");
  if (hyper.batch == 0) throw UsageError("batch size must be positive");

  auto params = weights.named_parameters();
  std::vector<std::vector<double>> m1(params.size()), m2(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m1[i].assign(params[i].second->values.size(), 0.0);
    m2[i].assign(params[i].second->values.size(), 0.0);
  }

  Rng rng = Rng::substream(hyper.seed, "train-shuffle");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      const std::size_t end = std::min(order.size(), start + hyper.batch);
      ad::Tape tape;
      BoundWeights bound(tape, weights, true);
      ad::Tensor total;
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = corpus[order[i]];
        ad::Tensor loss = ad::cross_entropy(bound.logits(bound.embed(ex.ids)),
                                            static_cast<std::size_t>(class_index(ex.label)));
        total = total.valid() ? ad::add(total, loss) : loss;
      }
      const double batch_loss = total.item();
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss;
      ad::Tensor mean_loss = ad::scale(total, 1.0 / static_cast<double>(end - start));
      tape.backward(mean_loss);

      ++step;
      const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
      auto tensors = bound.tensors();
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto g = tensors[p].grad();
        auto& values = params[p].second->values;
        for (std::size_t j = 0; j < values.size(); ++j) {
          m1[p][j] = hyper.beta1 * m1[p][j] + (1.0 - hyper.beta1) * g[j];
          m2[p][j] = hyper.beta2 * m2[p][j] + (1.0 - hyper.beta2) * g[j] * g[j];
          values[j] -= hyper.lr * (m1[p][j] / bc1) / (std::sqrt(m2[p][j] / bc2) + hyper.adam_eps);
        }
      }
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(corpus.size()));
  }
  result.train_accuracy = accuracy(weights, corpus);
  result.weights = std::move(weights);
  return result;
}

// ---- serialization ---------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'L', 'I', 'G', 'A', 'S', 'W', '0', '1'};

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},   {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},     {"d_ff", c.d_ff},         {"max_seq_len", c.max_seq_len},
          {"n_classes", c.n_classes},   {"seed", c.seed},
          {"tie_class", std::string(to_string(c.tie_class))}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  auto tie = parse_label(j.value("tie_class", std::string("LUA")));
  if (!tie) throw FormatError("weights header: bad tie_class");
  c.tie_class = *tie;
  return c;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void save_weights(const ModelWeights& weights, const std::filesystem::path& path,
                  std::span<const std::string> vocab_tokens) {
  nlohmann::json header;
  header["config"] = config_to_json(weights.config);
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, p] : weights.named_parameters()) {
    table.push_back({{"name", name}, {"shape", p->shape}, {"offset", offset}});
    offset += 8 * p->values.size();
  }
  header["tensors"] = table;
  header["payload_bytes"] = offset;
  if (!vocab_tokens.empty()) {
    header["vocab"] = std::vector<std::string>(vocab_tokens.begin(), vocab_tokens.end());
  }
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto& [name, p] : weights.named_parameters()) {
    for (double v : p->values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write weights file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing weights file " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path, std::vector<std::string>* vocab_tokens) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read weights file " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw FormatError(where + "bad magic (expected LIGASW01)");
  }
  if (bytes.size() < 16) throw FormatError(where + "truncated before header length");
  const std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw FormatError(where + "truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed header: " + e.what());
  }
  ModelWeights w;
  try {
    const ModelConfig config = config_from_json(header.at("config"));
    config.validate();
    w = allocate(config);
    const std::uint64_t payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
    const std::size_t payload_start = 16 + header_len;
    if (bytes.size() - payload_start != payload_bytes) {
      throw FormatError(where + "truncated: header declares " + std::to_string(payload_bytes) +
                        " payload bytes, file holds " + std::to_string(bytes.size() - payload_start));
    }
    const auto& table = header.at("tensors");
    auto params = w.named_parameters();
    if (table.size() != params.size()) {
      throw FormatError(where + "tensor count " + std::to_string(table.size()) +
                        " does not match config (" + std::to_string(params.size()) + ")");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& entry = table[i];
      auto& [name, p] = params[i];
      if (entry.at("name").get<std::string>() != name) {
        throw FormatError(where + "unexpected tensor '" + entry.at("name").get<std::string>() +
                          "', expected '" + name + "'");
      }
      if (entry.at("shape").get<ad::Shape>() != p->shape) {
        throw FormatError(where + "shape mismatch for " + name + ": file " +
                          ad::to_string(entry.at("shape").get<ad::Shape>()) + ", config " +
                          ad::to_string(p->shape));
      }
      const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
      if (offset + 8 * p->values.size() > payload_bytes) {
        throw FormatError(where + "tensor " + name + " extends past payload");
      }
      const char* src = bytes.data() + payload_start + offset;
      for (std::size_t j = 0; j < p->values.size(); ++j) {
        p->values[j] = std::bit_cast<double>(get_u64(src + 8 * j));
      }
    }
    if (vocab_tokens) {
      vocab_tokens->clear();
      if (header.contains("vocab")) *vocab_tokens = header["vocab"].get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed header: " + e.what());
  } catch (const UsageError& e) {
    throw FormatError(where + e.what());
  }
  for (const auto& [name, p] : w.named_parameters()) {
    for (double v : p->values) {
      if (!std::isfinite(v)) throw FormatError(where + "non-finite value in " + name);
    }
  }
  return w;
}

}  // namespace ligas::model

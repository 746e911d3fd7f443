#pragma once

// Small post-LN transformer encoder classifier over token embeddings.
//
//   embed(ids)           token_table[id] + position_table[pos]
//   encoder layer × L    x = LN(x + MHA(x)); x = LN(x + FFN(x)), FFN uses GELU
//   pool                 first position ([CLS])
//   head                 logits = pooled · W + b, two classes (LUA=0, LA=1)
//
// No dropout. Attribution evaluates each sentence at its natural length.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ligas/autodiff.hpp"
#include "ligas/types.hpp"

namespace ligas::model {

using TokenId = std::size_t;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 64;
  std::size_t max_seq_len = 32;
  std::size_t n_classes = 2;
  std::uint64_t seed = 0;
  // Class chosen when both probabilities are exactly equal.
  Label tie_class = Label::LUA;

  // Throws UsageError on an inconsistent configuration.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct Parameter {
  ad::Shape shape;
  std::vector<double> values;
};

struct LayerWeights {
  Parameter wq, bq, wk, bk, wv, bv, wo, bo;
  Parameter ln1_gain, ln1_bias;
  Parameter ff1, ff1_bias, ff2, ff2_bias;
  Parameter ln2_gain, ln2_bias;
};

struct ModelWeights {
  ModelConfig config;
  Parameter token_embedding;     // vocab_size × d_model
  Parameter position_embedding;  // max_seq_len × d_model
  std::vector<LayerWeights> layers;
  Parameter classifier;       // d_model × n_classes
  Parameter classifier_bias;  // n_classes

  // Canonical (name, parameter) order used by serialization and optimizers.
  std::vector<std::pair<std::string, Parameter*>> named_parameters();
  std::vector<std::pair<std::string, const Parameter*>> named_parameters() const;
  std::uint64_t checksum() const;
};

struct Prediction {
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
  Label predicted = Label::LUA;

  double predicted_prob() const { return probs[static_cast<std::size_t>(class_index(predicted))]; }
};

// Deterministic scaled-uniform initialization: weight matrices and embeddings
// draw from U(-1/sqrt(d_model), 1/sqrt(d_model)); biases start at zero and
// layer-norm gains at one.
ModelWeights init(const ModelConfig& config);

// All model parameters placed on one tape, either as constants (attribution)
// or as gradient-tracked leaves (training).
class BoundWeights {
 public:
  BoundWeights(ad::Tape& tape, const ModelWeights& weights, bool trainable);

  ad::Tape& tape() const { return *tape_; }
  const ModelWeights& weights() const { return *weights_; }
  // Tensors in named_parameters() order.
  std::span<const ad::Tensor> tensors() const { return tensors_; }

  ad::Tensor embed(std::span<const TokenId> ids) const;
  // Logits [1×2] for an embedding tensor [len×d_model].
  ad::Tensor logits(const ad::Tensor& embeddings) const;

 private:
  ad::Tape* tape_;
  const ModelWeights* weights_;
  std::vector<ad::Tensor> tensors_;
};

// Token + position embedding with requires_grad set so attribution can
// target the embedding layer.
ad::Tensor embed(ad::Tape& tape, const ModelWeights& weights, std::span<const TokenId> ids);

Prediction make_prediction(std::span<const double> logits, Label tie_class);

Prediction forward_from_embeddings(const ModelWeights& weights, ad::Tape& tape,
                                   const ad::Tensor& embeddings);
Prediction predict(const ModelWeights& weights, std::span<const TokenId> ids);

struct Example {
  std::vector<TokenId> ids;
  Label label = Label::LUA;
};

struct TrainConfig {
  double lr = 3e-3;
  std::size_t epochs = 20;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainResult {
  ModelWeights weights;
  // Mean cross-entropy per epoch.
  std::vector<double> loss_trace;
  double train_accuracy = 0.0;
};

// Adam on mean cross-entropy over shuffled mini-batches.
TrainResult train(ModelWeights weights, std::span<const Example> corpus, const TrainConfig& hyper);

double accuracy(const ModelWeights& weights, std::span<const Example> examples);

// Binary container: magic "LIGASW01", u64 little-endian header length, JSON
// header (config, tensor table, optional vocabulary), little-endian f64 payload.
void save_weights(const ModelWeights& weights, const std::filesystem::path& path,
                  std::span<const std::string> vocab_tokens = {});
ModelWeights load_weights(const std::filesystem::path& path,
                          std::vector<std::string>* vocab_tokens = nullptr);

}  // namespace ligas::model

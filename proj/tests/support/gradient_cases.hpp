#pragma once

// Seeded random gradient-check instances shared by the unit and acceptance
// suites: one generator per primitive plus the full encoder.

#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "ligas/model.hpp"

namespace ligas::oracle {

struct GradientCase {
  std::vector<GradInput> inputs;
  ScalarBuilder f;
};

inline const std::vector<std::string>& primitive_names() {
  static const std::vector<std::string> names = {
      "matmul", "add",        "sub",          "mul",           "scale",         "row_bias",
      "tanh",   "gelu",       "exp",          "softmax",       "layer_norm",    "slice_concat",
      "transpose_row", "gather_rows", "cross_entropy"};
  return names;
}

inline GradientCase primitive_case(const std::string& op, std::uint64_t seed) {
  using namespace ad;
  Rng rng(seed * 7919 + 1);
  const std::size_t m = 1 + rng.below(4), n = 1 + rng.below(5), k = 1 + rng.below(4);
  GradientCase c;
  if (op == "matmul") {
    c.inputs = {random_input(rng, {m, k}), random_input(rng, {k, n})};
    c.f = [seed](Tape& t, const std::vector<Tensor>& x) { return project(t, matmul(x[0], x[1]), seed); };
  } else if (op == "add" || op == "sub" || op == "mul") {
    c.inputs = {random_input(rng, {m, n}), random_input(rng, {m, n})};
    c.f = [op, seed](Tape& t, const std::vector<Tensor>& x) {
      Tensor y = op == "add" ? add(x[0], x[1]) : op == "sub" ? sub(x[0], x[1]) : mul(x[0], x[1]);
      return project(t, y, seed);
    };
  } else if (op == "scale") {
    const double s = rng.uniform(-3, 3);
    c.inputs = {random_input(rng, {m, n})};
    c.f = [seed, s](Tape& t, const std::vector<Tensor>& x) { return project(t, scale(x[0], s), seed); };
  } else if (op == "row_bias") {
    c.inputs = {random_input(rng, {m, n}), random_input(rng, {n})};
    c.f = [seed](Tape& t, const std::vector<Tensor>& x) { return project(t, add_row_bias(x[0], x[1]), seed); };
  } else if (op == "tanh" || op == "gelu" || op == "exp") {
    c.inputs = {random_input(rng, {m, n}, -2, 2)};
    c.f = [op, seed](Tape& t, const std::vector<Tensor>& x) {
      Tensor y = op == "tanh" ? ad::tanh(x[0]) : op == "gelu" ? gelu(x[0]) : ad::exp(x[0]);
      return project(t, y, seed);
    };
  } else if (op == "softmax") {
    const int axis = static_cast<int>(rng.below(2));
    c.inputs = {random_input(rng, {m, n}, -3, 3)};
    c.f = [seed, axis](Tape& t, const std::vector<Tensor>& x) { return project(t, softmax(x[0], axis), seed); };
  } else if (op == "layer_norm") {
    const std::size_t w = n + 1;
    c.inputs = {random_input(rng, {m, w}), random_input(rng, {w}), random_input(rng, {w})};
    c.f = [seed](Tape& t, const std::vector<Tensor>& x) {
      return project(t, layer_norm(x[0], x[1], x[2]), seed);
    };
  } else if (op == "slice_concat") {
    c.inputs = {random_input(rng, {m, n + 1})};
    c.f = [seed](Tape& t, const std::vector<Tensor>& x) {
      const std::size_t cols = x[0].cols();
      const Tensor parts[] = {slice_cols(x[0], cols - 1, 1), slice_cols(x[0], 0, cols)};
      return project(t, concat_cols(parts), seed);
    };
  } else if (op == "transpose_row") {
    c.inputs = {random_input(rng, {m, n})};
    c.f = [seed, m](Tape& t, const std::vector<Tensor>& x) {
      return add(project(t, transpose(x[0]), seed), sum(ad::tanh(row(x[0], m - 1))));
    };
  } else if (op == "gather_rows") {
    // Repeated ids exercise the scatter-add.
    std::vector<std::size_t> ids(1 + rng.below(6));
    for (auto& id : ids) id = rng.below(m);
    c.inputs = {random_input(rng, {m, n})};
    c.f = [seed, ids](Tape& t, const std::vector<Tensor>& x) { return project(t, gather_rows(x[0], ids), seed); };
  } else if (op == "cross_entropy") {
    const std::size_t label = rng.below(n + 1);
    c.inputs = {random_input(rng, {1, n + 1}, -3, 3)};
    c.f = [label](Tape&, const std::vector<Tensor>& x) { return cross_entropy(x[0], label); };
  }
  return c;
}

// Small encoder, random ids, gradient of the predicted logit w.r.t. the
// embedding input.
inline GradientCase encoder_case(std::uint64_t seed, model::ModelWeights& weights) {
  model::ModelConfig cfg;
  cfg.vocab_size = 16;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_layers = 2;
  cfg.d_ff = 12;
  cfg.max_seq_len = 10;
  cfg.seed = seed;
  weights = model::init(cfg);
  Rng rng(seed + 1000);
  std::vector<model::TokenId> ids(2 + rng.below(6));
  for (auto& id : ids) id = rng.below(16);
  ad::Tape probe;
  auto e = model::embed(probe, weights, ids);
  const auto target =
      static_cast<std::size_t>(class_index(model::forward_from_embeddings(weights, probe, e).predicted));
  GradientCase c;
  c.inputs = {{e.shape(), {e.data().begin(), e.data().end()}}};
  const model::ModelWeights* w = &weights;
  c.f = [w, target](ad::Tape& tape, const std::vector<ad::Tensor>& xs) {
    model::BoundWeights bound(tape, *w, false);
    return ad::element(bound.logits(xs[0]), target);
  };
  return c;
}

}  // namespace ligas::oracle

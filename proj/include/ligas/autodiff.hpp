#pragma once

// Dense f64 tensors with a reverse-mode differentiation tape.
//
// A Tape owns every value produced during one evaluation. Tensors are cheap
// handles (tape pointer + node index); they stay valid for the lifetime of
// the tape. Operations whose inputs do not require gradients record no
// backward rule, so constant subgraphs cost nothing on the reverse pass.
//
// Broadcasting is limited to scalar scaling and row-bias addition.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ligas::ad {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t numel(const Shape& shape);

class Tape;

class Tensor {
 public:
  Tensor() = default;

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  // Leading/trailing dimension of a rank-2 tensor; rank-1 is treated as 1×n.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  // Empty until backward() has run and only for tensors that need gradients.
  std::span<const double> grad() const;
  bool requires_grad() const;

  double item() const;
  double at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Receives the gradient and value of the node's output and accumulates
  // into the node's inputs.
  using BackwardFn = std::function<void(std::span<const double> out_grad,
                                        std::span<const double> out_value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad = false);
  Tensor constant(Shape shape, std::vector<double> data) {
    return leaf(std::move(shape), std::move(data), false);
  }
  Tensor zeros(Shape shape, bool requires_grad = false);
  Tensor scalar(double v, bool requires_grad = false) {
    return leaf({1}, {v}, requires_grad);
  }

  // Propagates d(out)/d(node) to every node. `out` must hold one element.
  // A second call requires reset_grads() first.
  void backward(const Tensor& out);
  void reset_grads();

  std::size_t size() const { return nodes_.size(); }

  // Used by operation implementations.
  Tensor record(Shape shape, std::vector<double> value,
                std::span<const Tensor> inputs, BackwardFn backward);
  void accumulate(const Tensor& t, std::span<const double> g);
  void accumulate(const Tensor& t, std::size_t index, double g);
  bool needs_grad(const Tensor& t) const { return nodes_[t.id_].requires_grad; }

 private:
  friend class Tensor;
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// x[m×n] + bias[n] broadcast over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);

Tensor tanh(const Tensor& a);
// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor gelu(const Tensor& a);
Tensor exp(const Tensor& a);

// Numerically stabilized by max-subtraction. axis may be negative.
Tensor softmax(const Tensor& x, int axis = -1);
// Normalizes over the last axis, then applies gain[n] and bias[n].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// Columns [start, start+count) of a rank-2 tensor.
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
Tensor concat_cols(std::span<const Tensor> parts);
// Rows table[ids[i]] stacked into a len×n tensor; backward scatter-adds.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
// Row r as a 1×n tensor.
Tensor row(const Tensor& x, std::size_t r);
// Single element (flat index) as shape {1}.
Tensor element(const Tensor& x, std::size_t index);
// Sum of all elements as shape {1}.
Tensor sum(const Tensor& x);
// -log softmax(logits)[label]; logits hold n_classes elements.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

}  // namespace ligas::ad

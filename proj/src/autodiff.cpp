#include "ligas/autodiff.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ligas/errors.hpp"

namespace ligas::ad {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

// ---- Tensor ---------------------------------------------------------------

const Shape& Tensor::shape() const { return tape_->nodes_[id_].shape; }
std::size_t Tensor::numel() const { return tape_->nodes_[id_].value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  return s.size() >= 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  return s.empty() ? 1 : s.back();
}

std::span<const double> Tensor::data() const { return tape_->nodes_[id_].value; }
std::span<const double> Tensor::grad() const { return tape_->nodes_[id_].grad; }
bool Tensor::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + to_string(shape()));
  }
  return data()[0];
}

// ---- Tape -----------------------------------------------------------------

Tensor Tape::leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("zero-sized dimension in shape " + to_string(shape));
  }
  if (ad::numel(shape) != data.size()) {
    throw DimensionError("shape " + to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  nodes_.push_back(Node{std::move(shape), std::move(data), {}, requires_grad, {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::zeros(Shape shape, bool requires_grad) {
  std::vector<double> data(ad::numel(shape), 0.0);
  return leaf(std::move(shape), std::move(data), requires_grad);
}

Tensor Tape::record(Shape shape, std::vector<double> value,
                    std::span<const Tensor> inputs, BackwardFn backward) {
  bool rg = false;
  for (const auto& in : inputs) {
    if (in.tape_ != this) throw DataError("operands belong to different tapes");
    rg = rg || nodes_[in.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(shape), std::move(value), {}, rg,
                        rg ? std::move(backward) : BackwardFn{}});
  return Tensor(this, nodes_.size() - 1);
}

void Tape::accumulate(const Tensor& t, std::span<const double> g) {
  auto& node = nodes_[t.id_];
  if (!node.requires_grad) return;
  for (std::size_t i = 0; i < g.size(); ++i) node.grad[i] += g[i];
}

void Tape::accumulate(const Tensor& t, std::size_t index, double g) {
  auto& node = nodes_[t.id_];
  if (node.requires_grad) node.grad[index] += g;
}

void Tape::backward(const Tensor& out) {
  if (out.tape_ != this) throw DataError("backward on a tensor from another tape");
  if (nodes_[out.id_].value.size() != 1) {
    throw DimensionError("backward requires a scalar output, got shape " +
                         to_string(nodes_[out.id_].shape));
  }
  if (backward_done_) {
    throw DataError("backward already ran on this tape; call reset_grads() first");
  }
  backward_done_ = true;
  for (auto& node : nodes_) {
    if (node.requires_grad) node.grad.assign(node.value.size(), 0.0);
  }
  if (!nodes_[out.id_].requires_grad) return;
  nodes_[out.id_].grad[0] = 1.0;
  for (std::size_t i = out.id_ + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.backward) node.backward(node.grad, node.value);
  }
}

void Tape::reset_grads() {
  for (auto& node : nodes_) node.grad.clear();
  backward_done_ = false;
}

// ---- helpers --------------------------------------------------------------

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                         " vs " + to_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " +
                         to_string(a.shape()));
  }
}

template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dydx) {
  auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const Tensor ins[] = {a};
  return a.tape().record(a.shape(), std::move(y), ins,
                         [a, dydx](std::span<const double> g, std::span<const double> out) {
                           auto x = a.data();
                           std::vector<double> gx(x.size());
                           for (std::size_t i = 0; i < x.size(); ++i) {
                             gx[i] = g[i] * dydx(x[i], out[i]);
                           }
                           a.tape().accumulate(a, gx);
                         });
}

// Axis split of a shape into (outer, n, inner) for a reduction along `axis`.
struct AxisView {
  std::size_t outer, n, inner;
};

AxisView axis_view(const Shape& shape, int axis) {
  const int rank = static_cast<int>(shape.size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw DimensionError("softmax: axis out of range for shape " + to_string(shape));
  }
  AxisView v{1, shape[static_cast<std::size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) v.outer *= shape[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < rank; ++i) v.inner *= shape[static_cast<std::size_t>(i)];
  return v;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  auto A = a.data();
  auto B = b.data();
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += aip * B[p * n + j];
    }
  }
  const Tensor ins[] = {a, b};
  return a.tape().record({m, n}, std::move(c), ins,
                         [a, b, m, k, n](std::span<const double> g, std::span<const double>) {
                           Tape& tape = a.tape();
                           auto A = a.data();
                           auto B = b.data();
                           if (tape.needs_grad(a)) {
                             std::vector<double> ga(m * k, 0.0);
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t p = 0; p < k; ++p) {
                                 double s = 0.0;
                                 for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B[p * n + j];
                                 ga[i * k + p] = s;
                               }
                             tape.accumulate(a, ga);
                           }
                           if (tape.needs_grad(b)) {
                             std::vector<double> gb(k * n, 0.0);
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t p = 0; p < k; ++p) {
                                 const double aip = A[i * k + p];
                                 for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                               }
                             tape.accumulate(b, gb);
                           }
                         });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  auto x = a.data();
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
  const Tensor ins[] = {a};
  return a.tape().record({n, m}, std::move(y), ins,
                         [a, m, n](std::span<const double> g, std::span<const double>) {
                           std::vector<double> gx(m * n);
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < n; ++j) gx[i * n + j] = g[j * m + i];
                           a.tape().accumulate(a, gx);
                         });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data();
  auto y = b.data();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
  const Tensor ins[] = {a, b};
  return a.tape().record(a.shape(), std::move(z), ins,
                         [a, b](std::span<const double> g, std::span<const double>) {
                           a.tape().accumulate(a, g);
                           a.tape().accumulate(b, g);
                         });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto x = a.data();
  auto y = b.data();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  const Tensor ins[] = {a, b};
  return a.tape().record(a.shape(), std::move(z), ins,
                         [a, b](std::span<const double> g, std::span<const double>) {
                           a.tape().accumulate(a, g);
                           std::vector<double> neg(g.begin(), g.end());
                           for (auto& v : neg) v = -v;
                           a.tape().accumulate(b, neg);
                         });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto x = a.data();
  auto y = b.data();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] * y[i];
  const Tensor ins[] = {a, b};
  return a.tape().record(a.shape(), std::move(z), ins,
                         [a, b](std::span<const double> g, std::span<const double>) {
                           Tape& tape = a.tape();
                           auto x = a.data();
                           auto y = b.data();
                           std::vector<double> t(g.size());
                           if (tape.needs_grad(a)) {
                             for (std::size_t i = 0; i < g.size(); ++i) t[i] = g[i] * y[i];
                             tape.accumulate(a, t);
                           }
                           if (tape.needs_grad(b)) {
                             for (std::size_t i = 0; i < g.size(); ++i) t[i] = g[i] * x[i];
                             tape.accumulate(b, t);
                           }
                         });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t n = x.cols();
  if (bias.numel() != n || (bias.rank() == 2 && bias.shape()[0] != 1) || bias.rank() > 2 ||
      x.rank() > 2) {
    throw DimensionError("add_row_bias: cannot broadcast " + to_string(bias.shape()) +
                         " over rows of " + to_string(x.shape()));
  }
  const std::size_t m = x.numel() / n;
  auto xv = x.data();
  auto bv = bias.data();
  std::vector<double> y(xv.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = xv[i * n + j] + bv[j];
  const Tensor ins[] = {x, bias};
  return x.tape().record(x.shape(), std::move(y), ins,
                         [x, bias, m, n](std::span<const double> g, std::span<const double>) {
                           Tape& tape = x.tape();
                           tape.accumulate(x, g);
                           if (tape.needs_grad(bias)) {
                             std::vector<double> gb(n, 0.0);
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
                             tape.accumulate(bias, gb);
                           }
                         });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        const double u = kGeluC * (x + kGeluA * x * x * x);
        return 0.5 * x * (1.0 + std::tanh(u));
      },
      [](double x, double) {
        const double u = kGeluC * (x + kGeluA * x * x * x);
        const double t = std::tanh(u);
        const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor softmax(const Tensor& x, int axis) {
  const AxisView v = axis_view(x.shape(), axis);
  auto in = x.data();
  std::vector<double> y(in.size());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t j = 0; j < v.inner; ++j) {
      auto idx = [&](std::size_t i) { return (o * v.n + i) * v.inner + j; };
      double mx = in[idx(0)];
      for (std::size_t i = 1; i < v.n; ++i) mx = std::max(mx, in[idx(i)]);
      double s = 0.0;
      for (std::size_t i = 0; i < v.n; ++i) {
        y[idx(i)] = std::exp(in[idx(i)] - mx);
        s += y[idx(i)];
      }
      for (std::size_t i = 0; i < v.n; ++i) y[idx(i)] /= s;
    }
  }
  const Tensor ins[] = {x};
  return x.tape().record(x.shape(), std::move(y), ins,
                         [x, v](std::span<const double> g, std::span<const double> y) {
                           std::vector<double> gx(g.size());
                           for (std::size_t o = 0; o < v.outer; ++o) {
                             for (std::size_t j = 0; j < v.inner; ++j) {
                               auto idx = [&](std::size_t i) { return (o * v.n + i) * v.inner + j; };
                               double dot = 0.0;
                               for (std::size_t i = 0; i < v.n; ++i) dot += g[idx(i)] * y[idx(i)];
                               for (std::size_t i = 0; i < v.n; ++i) {
                                 gx[idx(i)] = y[idx(i)] * (g[idx(i)] - dot);
                               }
                             }
                           }
                           x.tape().accumulate(x, gx);
                         });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t n = x.cols();
  if (gain.numel() != n || bias.numel() != n) {
    throw DimensionError("layer_norm: gain/bias " + to_string(gain.shape()) + "/" +
                         to_string(bias.shape()) + " do not match last axis of " +
                         to_string(x.shape()));
  }
  const std::size_t m = x.numel() / n;
  auto xv = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  std::vector<double> y(xv.size());
  // Normalized activations and inverse std are needed by the backward rule.
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xv[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xv[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (xv[i * n + j] - mean) * is;
      (*xhat)[i * n + j] = h;
      y[i * n + j] = gv[j] * h + bv[j];
    }
  }
  const Tensor ins[] = {x, gain, bias};
  return x.tape().record(
      x.shape(), std::move(y), ins,
      [x, gain, bias, m, n, xhat, inv_std](std::span<const double> g, std::span<const double>) {
        Tape& tape = x.tape();
        auto gv = gain.data();
        const auto& h = *xhat;
        if (tape.needs_grad(x)) {
          std::vector<double> gx(m * n);
          std::vector<double> dh(n);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              dh[j] = g[i * n + j] * gv[j];
              mean_dh += dh[j];
              mean_dh_h += dh[j] * h[i * n + j];
            }
            mean_dh /= static_cast<double>(n);
            mean_dh_h /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              gx[i * n + j] = (*inv_std)[i] * (dh[j] - mean_dh - h[i * n + j] * mean_dh_h);
            }
          }
          tape.accumulate(x, gx);
        }
        if (tape.needs_grad(gain) || tape.needs_grad(bias)) {
          std::vector<double> gg(n, 0.0), gb(n, 0.0);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              gg[j] += g[i * n + j] * h[i * n + j];
              gb[j] += g[i * n + j];
            }
          tape.accumulate(gain, gg);
          tape.accumulate(bias, gb);
        }
      });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  require_rank2(x, "slice_cols");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (count == 0 || start + count > n) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " +
                         to_string(x.shape()));
  }
  auto xv = x.data();
  std::vector<double> y(m * count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) y[i * count + j] = xv[i * n + start + j];
  const Tensor ins[] = {x};
  return x.tape().record({m, count}, std::move(y), ins,
                         [x, m, n, start, count](std::span<const double> g, std::span<const double>) {
                           std::vector<double> gx(m * n, 0.0);
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < count; ++j)
                               gx[i * n + start + j] = g[i * count + j];
                           x.tape().accumulate(x, gx);
                         });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row mismatch " + to_string(parts[0].shape()) + " vs " +
                           to_string(p.shape()));
    }
    total += p.cols();
  }
  std::vector<double> y(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto pv = p.data();
    const std::size_t c = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < c; ++j) y[i * total + offset + j] = pv[i * c + j];
    offset += c;
  }
  std::vector<Tensor> saved(parts.begin(), parts.end());
  return parts[0].tape().record(
      {m, total}, std::move(y), parts,
      [saved, m, total](std::span<const double> g, std::span<const double>) {
        std::size_t offset = 0;
        for (const auto& p : saved) {
          const std::size_t c = p.cols();
          if (p.tape().needs_grad(p)) {
            std::vector<double> gp(m * c);
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < c; ++j) gp[i * c + j] = g[i * total + offset + j];
            p.tape().accumulate(p, gp);
          }
          offset += c;
        }
      });
}

Tensor row(const Tensor& x, std::size_t r) {
  require_rank2(x, "row");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (r >= m) {
    throw DimensionError("row: index " + std::to_string(r) + " out of range for " +
                         to_string(x.shape()));
  }
  auto xv = x.data();
  std::vector<double> y(xv.begin() + static_cast<std::ptrdiff_t>(r * n),
                        xv.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  const Tensor ins[] = {x};
  return x.tape().record({1, n}, std::move(y), ins,
                         [x, r, n](std::span<const double> g, std::span<const double>) {
                           for (std::size_t j = 0; j < n; ++j) x.tape().accumulate(x, r * n + j, g[j]);
                         });
}

Tensor element(const Tensor& x, std::size_t index) {
  if (index >= x.numel()) {
    throw DimensionError("element: index " + std::to_string(index) + " out of range for " +
                         to_string(x.shape()));
  }
  const Tensor ins[] = {x};
  return x.tape().record({1}, {x.data()[index]}, ins,
                         [x, index](std::span<const double> g, std::span<const double>) {
                           x.tape().accumulate(x, index, g[0]);
                         });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const Tensor ins[] = {x};
  return x.tape().record({1}, {s}, ins, [x](std::span<const double> g, std::span<const double>) {
    std::vector<double> gx(x.numel(), g[0]);
    x.tape().accumulate(x, gx);
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  const std::size_t n = logits.numel();
  if (label >= n) {
    throw DimensionError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                         to_string(logits.shape()));
  }
  auto z = logits.data();
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  const Tensor ins[] = {logits};
  return logits.tape().record(
      {1}, {lse - z[label]}, ins,
      [logits, label, lse](std::span<const double> g, std::span<const double>) {
        auto z = logits.data();
        std::vector<double> gz(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
          gz[i] = g[0] * (std::exp(z[i] - lse) - (i == label ? 1.0 : 0.0));
        }
        logits.tape().accumulate(logits, gz);
      });
}

}  // namespace ligas::ad

namespace ligas::ad {

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank2(table, "gather_rows");
  const std::size_t rows = table.shape()[0], n = table.shape()[1];
  if (ids.empty()) throw DimensionError("gather_rows: empty index list");
  auto tv = table.data();
  std::vector<double> y(ids.size() * n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      throw DimensionError("gather_rows: index " + std::to_string(ids[i]) + " out of range for " +
                           to_string(table.shape()));
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(ids[i] * n), n,
                y.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  std::vector<std::size_t> saved(ids.begin(), ids.end());
  const Tensor ins[] = {table};
  return table.tape().record({ids.size(), n}, std::move(y), ins,
                             [table, saved, n](std::span<const double> g, std::span<const double>) {
                               for (std::size_t i = 0; i < saved.size(); ++i)
                                 for (std::size_t j = 0; j < n; ++j)
                                   table.tape().accumulate(table, saved[i] * n + j, g[i * n + j]);
                             });
}

}  // namespace ligas::ad

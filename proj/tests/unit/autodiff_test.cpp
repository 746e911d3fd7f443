#include "ligas/autodiff.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "gradient_cases.hpp"
#include "ligas/errors.hpp"

using namespace ligas;
using namespace ligas::ad;
using ligas::oracle::GradInput;
using ligas::oracle::max_gradient_error;
using ligas::oracle::project;
using ligas::oracle::random_input;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Tape tape;
  Tensor eye = tape.constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor a = tape.constant({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor c = matmul(eye, a);
  EXPECT_EQ(c.shape(), (Shape{3, 2}));
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()),
            (std::vector<double>{1, 2, 3, 4, 5, 6}));
}

TEST(Matmul, HandArithmetic) {
  Tape tape;
  Tensor a = tape.constant({2, 2}, {1, 2, 3, 4});
  Tensor b = tape.constant({2, 1}, {1, 1});
  Tensor c = matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_DOUBLE_EQ(c.data()[0], 3.0);
  EXPECT_DOUBLE_EQ(c.data()[1], 7.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tape tape;
  Tensor a = tape.zeros({2, 3});
  Tensor b = tape.zeros({2, 3});
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3] and [2x3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  const std::vector<GradInput> in{random_input(rng, {4, 5}), random_input(rng, {5, 3})};
  auto f = [](Tape& t, const std::vector<Tensor>& x) { return project(t, matmul(x[0], x[1]), 3); };
  EXPECT_LE(max_gradient_error(f, in, 1e-4), 1e-4);
}

TEST(Elementwise, AddZeroIsIdentity) {
  Tape tape;
  Tensor x = tape.constant({3}, {1.5, -2.0, 0.25});
  Tensor y = add(x, tape.zeros({3}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Elementwise, TanhAtZero) {
  Tape tape;
  Tensor x = tape.scalar(0.0, true);
  Tensor y = ad::tanh(x);
  EXPECT_EQ(y.item(), 0.0);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 1.0);
}

TEST(Elementwise, GeluGradientAtOne) {
  const std::vector<GradInput> in{{{1}, {1.0}}};
  auto f = [](Tape&, const std::vector<Tensor>& x) { return gelu(x[0]); };
  EXPECT_LE(max_gradient_error(f, in, 1e-4), 1e-4);
}

TEST(Elementwise, ShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(add(tape.zeros({2}), tape.zeros({3})), DimensionError);
  EXPECT_THROW(mul(tape.zeros({2, 1}), tape.zeros({1, 2})), DimensionError);
  EXPECT_THROW(add_row_bias(tape.zeros({2, 3}), tape.zeros({2})), DimensionError);
}

TEST(Softmax, SymmetricInputGivesUniform) {
  Tape tape;
  Tensor y = softmax(tape.constant({2}, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(y.data()[0], 0.5);
  EXPECT_DOUBLE_EQ(y.data()[1], 0.5);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Tape tape;
  Tensor y = softmax(tape.constant({2}, {1000.0, 1000.0}));
  EXPECT_DOUBLE_EQ(y.data()[0], 0.5);
  EXPECT_DOUBLE_EQ(y.data()[1], 0.5);
}

TEST(Softmax, JacobianMatchesFiniteDifferences) {
  // Each output component in turn, so the full Jacobian is covered.
  for (std::size_t k = 0; k < 3; ++k) {
    const std::vector<GradInput> in{{{3}, {0.3, -0.2, 1.1}}};
    auto f = [k](Tape&, const std::vector<Tensor>& x) { return element(softmax(x[0]), k); };
    EXPECT_LE(max_gradient_error(f, in, 1e-4), 1e-4) << "component " << k;
  }
}

TEST(Softmax, RowsSumToOneAlongEitherAxis) {
  Rng rng(5);
  Tape tape;
  auto in = random_input(rng, {3, 4}, -5, 5);
  Tensor x = tape.constant(in.shape, in.values);
  for (int axis : {0, 1, -1}) {
    Tensor y = softmax(x, axis);
    const std::size_t outer = axis == 0 ? 4 : 3, n = axis == 0 ? 3 : 4;
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = axis == 0 ? y.at(i, o) : y.at(o, i);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
  EXPECT_THROW(softmax(x, 2), DimensionError);
}

TEST(LayerNorm, ConstantRowBecomesZero) {
  Tape tape;
  Tensor x = tape.constant({1, 4}, {2.5, 2.5, 2.5, 2.5});
  Tensor y = layer_norm(x, tape.constant({4}, {1, 1, 1, 1}), tape.zeros({4}), 1e-5);
  for (double v : y.data()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(v, 0.0);
  }
}

TEST(LayerNorm, RowsHaveZeroMeanUnitVariance) {
  Rng rng(9);
  Tape tape;
  auto in = random_input(rng, {5, 8}, -3, 3);
  Tensor y = layer_norm(tape.constant(in.shape, in.values),
                        tape.constant({8}, std::vector<double>(8, 1.0)), tape.zeros({8}), 1e-14);
  for (std::size_t i = 0; i < 5; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 8; ++j) mean += y.at(i, j);
    mean /= 8;
    for (std::size_t j = 0; j < 8; ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
    var /= 8;
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  const std::vector<GradInput> in{random_input(rng, {3, 6}), random_input(rng, {6}),
                                  random_input(rng, {6})};
  auto f = [](Tape& t, const std::vector<Tensor>& x) {
    return project(t, layer_norm(x[0], x[1], x[2], 1e-5), 4);
  };
  EXPECT_LE(max_gradient_error(f, in, 1e-4), 1e-4);
}

TEST(Backward, LinearFunction) {
  Tape tape;
  Tensor w = tape.constant({2}, {2.0, -1.0});
  Tensor x = tape.leaf({2}, {5.0, 3.0}, true);
  tape.backward(sum(mul(w, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -1.0);
}

TEST(Backward, ProductRule) {
  Tape tape;
  Tensor a = tape.scalar(2.0, true);
  Tensor b = tape.scalar(3.0, true);
  tape.backward(mul(a, b));
  EXPECT_DOUBLE_EQ(a.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(b.grad()[0], 2.0);
}

TEST(Backward, NonScalarOutputIsAnError) {
  Tape tape;
  Tensor x = tape.leaf({2}, {1.0, 2.0}, true);
  EXPECT_THROW(tape.backward(ad::tanh(x)), DimensionError);
}

TEST(Backward, RepeatedCallRequiresReset) {
  Tape tape;
  Tensor x = tape.scalar(1.5, true);
  Tensor y = mul(x, x);
  tape.backward(y);
  EXPECT_THROW(tape.backward(y), DataError);
  tape.reset_grads();
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);
}

TEST(Backward, DisconnectedLeafGetsZeroGradient) {
  Tape tape;
  Tensor x = tape.scalar(1.0, true);
  Tensor unused = tape.leaf({3}, {1, 2, 3}, true);
  tape.backward(scale(x, 4.0));
  ASSERT_EQ(unused.grad().size(), 3u);
  for (double g : unused.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, SumOfScalarsIsSumOfSeparatePasses) {
  Rng rng(3);
  auto in = random_input(rng, {2, 3});
  auto f1 = [](Tape& t, const Tensor& x) { return project(t, ad::tanh(x), 1); };
  auto f2 = [](Tape& t, const Tensor& x) { return project(t, gelu(x), 2); };

  Tape joint;
  Tensor xj = joint.leaf(in.shape, in.values, true);
  joint.backward(add(f1(joint, xj), f2(joint, xj)));

  std::vector<double> separate(in.values.size(), 0.0);
  for (int k = 0; k < 2; ++k) {
    Tape tape;
    Tensor x = tape.leaf(in.shape, in.values, true);
    tape.backward(k == 0 ? f1(tape, x) : f2(tape, x));
    for (std::size_t i = 0; i < separate.size(); ++i) separate[i] += x.grad()[i];
  }
  for (std::size_t i = 0; i < separate.size(); ++i) {
    EXPECT_NEAR(xj.grad()[i], separate[i], 1e-12);
  }
}

TEST(Backward, ReplayIsBitIdentical) {
  auto run = [] {
    Rng rng(77);
    auto in = random_input(rng, {3, 4});
    Tape tape;
    Tensor x = tape.leaf(in.shape, in.values, true);
    Tensor y = softmax(matmul(gelu(x), transpose(x)));
    return std::vector<double>(y.data().begin(), y.data().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Tape, LeafValidatesShape) {
  Tape tape;
  EXPECT_THROW(tape.leaf({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(tape.leaf({0}, {}), DimensionError);
}

// 100 seeded random instances per primitive, f64 finite differences.
class PrimitiveGradients : public ::testing::TestWithParam<std::string> {};

TEST_P(PrimitiveGradients, HundredRandomInstances) {
  const std::string op = GetParam();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto c = oracle::primitive_case(op, seed);
    worst = std::max(worst, max_gradient_error(c.f, c.inputs, 1e-4));
  }
  EXPECT_LE(worst, 1e-4) << op;
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradients,
                         ::testing::ValuesIn(oracle::primitive_names()));

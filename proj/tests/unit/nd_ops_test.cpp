#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <cstring>
#include <fstream>

#include "../oracle/gradient_suite.hpp"
#include "embrec/errors.hpp"
#include "embrec/nd/ops.hpp"
#include "embrec/nd/parameters.hpp"

using namespace embrec;
using namespace embrec::nd;

TEST(Conv2d, IdentityKernelReproducesInput) {
  Graph g;
  Var x = g.constant(Tensor({1, 3, 3}, 1.0f));
  Var k = g.constant(Tensor({1, 1, 1, 1}, 1.0f));
  Var y = conv2d(x, k, 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 3, 3}));
  for (float v : y.value().values()) EXPECT_EQ(v, 1.0f);
}

TEST(Conv2d, FullWindowSum) {
  Graph g;
  Var x = g.constant(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  Var k = g.constant(Tensor({1, 1, 2, 2}, 1.0f));
  Var y = conv2d(x, k, 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y.value()[0], 10.0f);
}

TEST(Conv2d, ChannelMismatchIsDimensionError) {
  Graph g;
  Var x = g.constant(Tensor({2, 4, 4}));
  Var k = g.constant(Tensor({1, 3, 3, 3}));
  EXPECT_THROW(conv2d(x, k, 1, 1), DimensionError);
  Var big = g.constant(Tensor({1, 2, 7, 7}));
  EXPECT_THROW(conv2d(x, big, 1, 1), DimensionError);
}

TEST(Conv2d, OutputShapeFollowsClosedForm) {
  for (std::size_t h : {5u, 8u, 11u})
    for (std::size_t k : {1u, 2u, 3u})
      for (std::size_t stride : {1u, 2u, 3u})
        for (std::size_t pad : {0u, 1u, 2u}) {
          Graph g;
          Var x = g.constant(Tensor({2, h, h + 1}));
          Var kern = g.constant(Tensor({3, 2, k, k}));
          Var y = conv2d(x, kern, stride, pad);
          EXPECT_EQ(y.shape(), (Shape{3, (h + 2 * pad - k) / stride + 1,
                                      (h + 1 + 2 * pad - k) / stride + 1}));
        }
}

TEST(MaxPool2d, PicksWindowMaximum) {
  Graph g;
  Var y = maxpool2d(g.constant(Tensor({1, 2, 2}, {1, 2, 3, 4})), {2, 2});
  EXPECT_EQ(y.value().size(), 1u);
  EXPECT_EQ(y.value()[0], 4.0f);
}

TEST(MaxPool2d, ConstantInputAndFirstArgmaxOnTies) {
  Graph g;
  Var x = g.input(Tensor({1, 4, 4}, 2.5f));
  Var y = maxpool2d(x, {2, 2});
  EXPECT_EQ(y.shape(), (Shape{1, 2, 2}));
  for (float v : y.value().values()) EXPECT_EQ(v, 2.5f);
  g.backward(sum(y));
  const Tensor dx = g.grad(x);
  // first cell of each window in row-major order gets the gradient
  const std::vector<float> expected{1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0};
  EXPECT_EQ(std::vector<float>(dx.values().begin(), dx.values().end()), expected);
}

TEST(MaxPool2d, TruncatesPartialWindowsAndRejectsOversizedWindow) {
  Graph g;
  Var y = maxpool2d(g.constant(Tensor({1, 5, 7})), {2, 2});
  EXPECT_EQ(y.shape(), (Shape{1, 2, 3}));
  EXPECT_THROW(maxpool2d(g.constant(Tensor({1, 1, 4})), {2, 2}), DimensionError);
}

TEST(Dense, IdentityAndBiasOnly) {
  Graph g;
  Tensor eye({3, 3}, 0.0f);
  for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0f;
  Tensor x({3}, {0.5f, -2.0f, 7.0f});
  Var y = dense(g.constant(x), g.constant(eye), g.constant(Tensor({3}, 0.0f)));
  EXPECT_EQ(y.value(), x);
  Tensor b({3}, {1.0f, 2.0f, 3.0f});
  Var z = dense(g.constant(x), g.constant(Tensor({3, 3}, 0.0f)), g.constant(b));
  EXPECT_EQ(z.value(), b);
  EXPECT_THROW(dense(g.constant(Tensor({4})), g.constant(eye), g.constant(b)), DimensionError);
}

TEST(Activation, ReluAndLeakyValues) {
  Graph g;
  Var r = relu(g.constant(Tensor({3}, {-1.0f, 0.0f, 2.0f})));
  EXPECT_EQ(r.value(), Tensor({3}, {0.0f, 0.0f, 2.0f}));
  Var l = leaky_relu(g.constant(Tensor({1}, {-10.0f})), 0.01f);
  EXPECT_NEAR(l.value()[0], -0.1f, 1e-7);
}

TEST(Activation, KinkTakesNegativeSideSlope) {
  Graph g;
  Var x = g.input(Tensor({2}, 0.0f));
  g.backward(sum(leaky_relu(x, 0.25f)));
  EXPECT_EQ(g.grad(x)[0], 0.25f);
  Graph h;
  Var z = h.input(Tensor({1}, 0.0f));
  h.backward(sum(relu(z)));
  EXPECT_EQ(h.grad(z)[0], 0.0f);
}

TEST(Cosine, ClosedFormCases) {
  Graph g;
  Tensor e1({5}, 0.0f);
  e1[0] = 1.0f;
  EXPECT_EQ(cosine_similarity(g.constant(e1), g.constant(e1)).value().item(), 1.0f);
  EXPECT_EQ(cosine_similarity(g.constant(Tensor({2}, {1, 0})), g.constant(Tensor({2}, {0, 1})))
                .value()
                .item(),
            0.0f);
  Var u = g.constant(Tensor({2}, {1, 1}));
  EXPECT_NEAR(cosine_similarity(u, g.constant(Tensor({2}, {1, 0}))).value().item(),
              1.0 / std::sqrt(2.0), 1e-4);
  for (float alpha : {0.5f, 3.0f}) {
    EXPECT_NEAR(cosine_similarity(g.constant(Tensor({2}, {alpha, 0})), u).value().item(),
                1.0 / std::sqrt(2.0), 1e-6);
  }
}

TEST(Cosine, ZeroNormIsDegenerate) {
  Graph g;
  EXPECT_THROW(cosine_similarity(g.constant(Tensor({3}, 0.0f)), g.constant(Tensor({3}, 1.0f))),
               DegenerateInputError);
}

TEST(Backward, SumGivesOnes) {
  Graph g;
  Var x = g.input(Tensor({2, 3, 4}, 0.3f));
  g.backward(sum(x));
  const Tensor dx = g.grad(x);
  for (float v : dx.values()) EXPECT_EQ(v, 1.0f);
}

TEST(Backward, SelfCosineHasZeroGradient) {
  Graph g;
  Var u = g.input(Tensor({4}, {0.3f, -1.2f, 2.0f, 0.7f}));
  g.backward(cosine_similarity(u, u));
  const Tensor du = g.grad(u);
  for (float v : du.values()) EXPECT_NEAR(v, 0.0f, 1e-6);
}

TEST(Backward, NonScalarLossIsContractError) {
  Graph g;
  Var u = g.input(Tensor({4}, 1.0f));
  EXPECT_THROW(g.backward(relu(u)), ContractError);
}

TEST(Backward, RepeatedCallsDoNotAccumulate) {
  Tensor w({3}, {1.0f, 2.0f, 3.0f});
  Graph g;
  Var p = g.parameter("w", w);
  Var loss = sum(p);
  GradMap first = g.backward(loss);
  GradMap second = g.backward(loss);
  EXPECT_EQ(first.at("w"), second.at("w"));
  EXPECT_EQ(second.at("w"), Tensor({3}, 1.0f));
}

TEST(Backward, UnreachedParameterGetsZeroGradientOfSameShape) {
  Tensor a({2, 2}, 1.0f), b({5}, 1.0f);
  Graph g;
  Var pa = g.parameter("a", a);
  g.parameter("b", b);
  GradMap grads = g.backward(sum(pa));
  ASSERT_EQ(grads.size(), 2u);
  EXPECT_EQ(grads.at("b"), Tensor({5}, 0.0f));
  EXPECT_EQ(grads.at("a").shape(), a.shape());
}

TEST(Determinism, IdenticalInputsGiveBitIdenticalOutputs) {
  auto run = [] {
    Rng rng(99);
    Graph g;
    Var x = g.constant(oracle::random_tensor({2, 16, 16}, rng));
    Var k = g.constant(oracle::random_tensor({4, 2, 3, 3}, rng));
    return maxpool2d(relu(conv2d(x, k, 1, 1)), {2, 2}).value();
  };
  EXPECT_EQ(run(), run());
}

// Finite-difference suite against the double-precision oracle.
TEST(GradientCheck, Conv2d) {
  auto r = oracle::check_conv2d(20, 11);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel_error, oracle::kGradTolerance);
}

TEST(GradientCheck, MaxPool2d) {
  auto r = oracle::check_maxpool2d(20, 12);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel_error, oracle::kGradTolerance);
}

TEST(GradientCheck, Dense) {
  auto r = oracle::check_dense(20, 13);
  EXPECT_LT(r.max_rel_error, oracle::kGradTolerance);
}

TEST(GradientCheck, Activations) {
  auto r = oracle::check_relu(20, 14);
  EXPECT_LT(r.max_rel_error, oracle::kGradTolerance);
  auto l = oracle::check_leaky_relu(20, 15);
  EXPECT_LT(l.max_rel_error, oracle::kGradTolerance);
}

TEST(GradientCheck, Cosine) {
  auto r = oracle::check_cosine(20, 16);
  EXPECT_LT(r.max_rel_error, oracle::kGradTolerance);
}

TEST(GradientCheck, CompositeConvPoolDenseCosine) {
  auto r = oracle::check_composite(20, 17);
  EXPECT_GT(r.checked, 1000u);
  EXPECT_LT(r.max_rel_error, oracle::kGradTolerance);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(5);
  ParameterSet params;
  params.emplace("conv1.weight", oracle::random_tensor({4, 1, 3, 3}, rng));
  params.emplace("proj.bias", oracle::random_tensor({40}, rng));
  params.emplace("odd", Tensor({1}, {-0.0f}));
  const auto path = std::filesystem::temp_directory_path() / "embrec_ckpt_test.embr";
  save_checkpoint(path, params);
  ParameterSet loaded = load_checkpoint(path);
  ASSERT_EQ(loaded.size(), params.size());
  for (const auto& [name, t] : params) {
    const Tensor& l = loaded.at(name);
    ASSERT_EQ(l.shape(), t.shape());
    EXPECT_EQ(0, std::memcmp(l.data(), t.data(), t.size() * 4)) << name;
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptOrTruncatedBytesAreRejected) {
  ParameterSet params;
  params.emplace("w", Tensor({3, 2}, 1.5f));
  const std::string bytes = encode_checkpoint(params);
  EXPECT_EQ(bytes.substr(0, 4), "EMBR");
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    if (cut == 6) continue;  // header only is a valid empty checkpoint
    EXPECT_THROW(decode_checkpoint(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
  }
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
}

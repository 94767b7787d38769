#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "hyperinv/errors.hpp"
#include "hyperinv/numerics/checkpoint.hpp"
#include "hyperinv/numerics/ops.hpp"
#include "hyperinv/numerics/optim.hpp"
#include "hyperinv/numerics/rng.hpp"
#include "hyperinv/numerics/tensor.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace hyperinv;
using hyperinv::testing::random_tensor;
using hyperinv::testing::max_fd_error;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, DerivedSeedsDifferByLabelAndIndex) {
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
  EXPECT_EQ(derive_seed(7, "x", 3), derive_seed(7, "x", 3));
}

TEST(Rng, UniformIndexCoversRange) {
  Rng r(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[r.uniform_index(7)];
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Tensor, ShapeAndData) {
  auto t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.at(4), 5.0);
  EXPECT_THROW(Tensor::from_data({2, 2}, {1, 2, 3}), ContractError);
}

TEST(Tensor, OpResultsAreReadOnly) {
  auto a = Tensor::full({2}, 1.0, true);
  auto b = add(a, a);
  EXPECT_THROW(b.mutable_data(), ContractError);
}

TEST(Tensor, LeafGradientsAccumulate) {
  auto a = Tensor::from_data({2}, {1.0, 2.0}, true);
  sum(mul(a, a)).backward();
  sum(mul(a, a)).backward();
  EXPECT_DOUBLE_EQ(a.grad()[0], 4.0);
  EXPECT_DOUBLE_EQ(a.grad()[1], 8.0);
  a.zero_grad();
  EXPECT_TRUE(a.grad().empty());
}

TEST(Tensor, NoGradGuardRecordsNothing) {
  auto a = Tensor::full({3}, 2.0, true);
  Tensor b;
  {
    NoGradGuard g;
    b = scale(a, 3.0);
  }
  EXPECT_FALSE(b.requires_grad());
  EXPECT_TRUE(grad_mode_enabled());
}

TEST(Ops, MatmulValues) {
  auto a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::from_data({2, 1}, {5, 6});
  auto c = matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_DOUBLE_EQ(c.at(0), 17.0);
  EXPECT_DOUBLE_EQ(c.at(1), 39.0);
  EXPECT_THROW(matmul(a, Tensor::zeros({3, 1})), DimensionError);
}

TEST(Ops, ElementwiseGradientsMatchFiniteDifferences) {
  Rng rng(5);
  auto x = random_tensor({3, 4}, rng, true);
  auto y = random_tensor({3, 4}, rng, true);
  auto f = [&] { return sum(mul(sigmoid(x), add(relu(y), clamp(sub(x, y), -0.3, 0.3)))); };
  EXPECT_LT(max_fd_error(f, {x, y}), 1e-7);
}

TEST(Ops, LinearAndReshapeGradients) {
  Rng rng(6);
  auto x = random_tensor({4, 5}, rng, true);
  auto w = random_tensor({5, 3}, rng, true);
  auto b = random_tensor({3}, rng, true);
  auto f = [&] { return mean(mul(linear(reshape(flatten(reshape(x, {4, 5, 1})), {4, 5}), w, b),
                                  linear(x, w, b))); };
  EXPECT_LT(max_fd_error(f, {x, w, b}), 1e-7);
}

TEST(Ops, Conv2dMatchesNestedLoopOracle) {
  EXPECT_LT(hyperinv::testing::conv_oracle_worst_error(50, 11), 1e-10);
}

TEST(Ops, Conv2dGradientsFlowIntoInputKernelAndBias) {
  Rng rng(12);
  auto x = random_tensor({2, 2, 6, 5}, rng, true);
  auto k = random_tensor({3, 2, 3, 3}, rng, true);
  auto bias = random_tensor({3}, rng, true);
  auto w = random_tensor({2, 3, 3, 3}, rng);
  auto f = [&] { return sum(mul(conv2d(x, k, bias, 2, 1), w)); };
  EXPECT_LT(max_fd_error(f, {x, k, bias}), 1e-7);
}

TEST(Ops, Conv2dRejectsMismatchedChannels) {
  EXPECT_THROW(conv2d(Tensor::zeros({1, 3, 8, 8}), Tensor::zeros({4, 2, 3, 3}), Tensor(), 1, 0), DimensionError);
}

TEST(Ops, BatchnormTrainNormalisesAndUpdatesStats) {
  Rng rng(13);
  auto x = random_tensor({4, 2, 3, 3}, rng);
  auto gamma = Tensor::full({2}, 1.0), beta = Tensor::zeros({2});
  auto stats = RunningStats::fresh(2);
  auto y = batchnorm2d(x, gamma, beta, stats, BnMode::train, 0.1, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t i = 0; i < 9; ++i) m += y.at((b * 2 + c) * 9 + i);
    m /= 36.0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t i = 0; i < 9; ++i) v += std::pow(y.at((b * 2 + c) * 9 + i) - m, 2);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 36.0, 1.0, 1e-9);
  }
  EXPECT_NE(stats.mean[0], 0.0);
  auto frozen = stats;
  batchnorm2d(x, gamma, beta, stats, BnMode::eval);
  EXPECT_EQ(stats.mean, frozen.mean);
}

TEST(Ops, BatchnormGradients) {
  Rng rng(14);
  auto x = random_tensor({3, 2, 2, 2}, rng, true);
  auto gamma = random_tensor({2}, rng, true), beta = random_tensor({2}, rng, true);
  auto w = random_tensor({3, 2, 2, 2}, rng);
  auto f = [&] {
    auto stats = RunningStats::fresh(2);
    return sum(mul(batchnorm2d(x, gamma, beta, stats, BnMode::train), w));
  };
  EXPECT_LT(max_fd_error(f, {x, gamma, beta}), 1e-6);
}

TEST(Ops, CrossEntropyOfUniformLogitsIsLogClasses) {
  auto logits = Tensor::zeros({4, 10});
  std::vector<int> labels{0, 3, 5, 9};
  EXPECT_NEAR(softmax_cross_entropy(logits, labels).item(), std::log(10.0), 1e-15);
  std::vector<int> bad{0, 3, 5, 10};
  EXPECT_THROW(softmax_cross_entropy(logits, bad), IndexError);
}

TEST(Ops, CrossEntropyGradient) {
  Rng rng(15);
  auto logits = random_tensor({5, 4}, rng, true);
  std::vector<int> labels{0, 1, 2, 3, 1};
  EXPECT_LT(max_fd_error([&] { return softmax_cross_entropy(logits, labels); }, {logits}), 1e-8);
}

// Two-view NT-Xent written out over the 2B x 2B similarity matrix.
double nt_xent_oracle(const Tensor& z1, const Tensor& z2, double tau) {
  const std::size_t B = z1.dim(0), D = z1.dim(1);
  std::vector<std::vector<double>> z;
  for (std::size_t r = 0; r < 2 * B; ++r) {
    const Tensor& src = r < B ? z1 : z2;
    const std::size_t row = r % B;
    std::vector<double> v(D);
    double n = 0.0;
    for (std::size_t d = 0; d < D; ++d) n += src.at(row * D + d) * src.at(row * D + d);
    for (std::size_t d = 0; d < D; ++d) v[d] = src.at(row * D + d) / std::sqrt(n);
    z.push_back(v);
  }
  double loss = 0.0;
  for (std::size_t r = 0; r < 2 * B; ++r) {
    const std::size_t pos = (r + B) % (2 * B);
    double denom = 0.0, num = 0.0;
    for (std::size_t c = 0; c < 2 * B; ++c) {
      if (c == r) continue;
      double s = 0.0;
      for (std::size_t d = 0; d < D; ++d) s += z[r][d] * z[c][d];
      denom += std::exp(s / tau);
      if (c == pos) num = s / tau;
    }
    loss += std::log(denom) - num;
  }
  return loss / static_cast<double>(2 * B);
}

TEST(Ops, NtXentMatchesOracleAndGradients) {
  Rng rng(16);
  auto z1 = random_tensor({4, 3}, rng, true), z2 = random_tensor({4, 3}, rng, true);
  EXPECT_NEAR(nt_xent_loss(z1, z2, 0.5).item(), nt_xent_oracle(z1, z2, 0.5), 1e-12);
  EXPECT_LT(max_fd_error([&] { return nt_xent_loss(z1, z2, 0.5); }, {z1, z2}), 1e-7);
}

TEST(Ops, NtXentIdenticalPairsAreLowerThanRandom) {
  Rng rng(17);
  auto z = random_tensor({6, 5}, rng);
  auto other = random_tensor({6, 5}, rng);
  EXPECT_LT(nt_xent_loss(z, z, 0.5).item(), nt_xent_loss(z, other, 0.5).item());
}

TEST(Ops, CosineSimilarity) {
  std::vector<double> a{1, 2, 3}, b{2, 4, 6}, c{-1, -2, -3}, zero{0, 0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), -1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(zero, zero), 0.0);
}

TEST(Optim, AdamFirstStepsByHand) {
  // Single scalar, gradient 2 at every step: m1 = 0.2, v1 = 0.004, so the
  // bias-corrected step is lr * 2 / (2 + eps).
  auto p = Tensor::full({1}, 1.0, true);
  std::vector<NamedParameter> params{{"p", p}};
  auto state = AdamState::for_parameters(params);
  p.mutable_grad()[0] = 2.0;
  adam_step(params, state, 0.1);
  EXPECT_NEAR(p.at(0), 1.0 - 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  // Second step with gradient -1: m = 0.9*0.2 - 0.1 = 0.08, v = 0.999*0.004 + 0.001.
  p.mutable_grad()[0] = -1.0;
  const double m = 0.08 / (1 - 0.81), v = (0.999 * 0.004 + 0.001) / (1 - 0.999 * 0.999);
  const double before = p.at(0);
  adam_step(params, state, 0.1);
  EXPECT_NEAR(p.at(0), before - 0.1 * m / (std::sqrt(v) + 1e-8), 1e-15);
}

TEST(Optim, DecoupledWeightDecayRespectsScale) {
  auto a = Tensor::full({1}, 2.0, true), b = Tensor::full({1}, 2.0, true);
  std::vector<NamedParameter> params{{"a", a, 1.0}, {"b", b, 0.0}};
  auto state = AdamState::for_parameters(params, {0.9, 0.999, 1e-8, 0.5});
  a.mutable_grad()[0] = 0.0;
  b.mutable_grad()[0] = 0.0;
  adam_step(params, state, 0.1);
  EXPECT_NEAR(a.at(0), 2.0 - 0.1 * 0.5 * 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(b.at(0), 2.0);
}

TEST(Optim, NonFiniteGradientAbortsStep) {
  auto a = Tensor::full({1}, 1.0, true), b = Tensor::full({1}, 1.0, true);
  std::vector<NamedParameter> params{{"a", a}, {"b", b}};
  auto state = AdamState::for_parameters(params);
  a.mutable_grad()[0] = 1.0;
  b.mutable_grad()[0] = std::nan("");
  EXPECT_THROW(adam_step(params, state, 0.1), DivergenceError);
  EXPECT_DOUBLE_EQ(a.at(0), 1.0);
}

TEST(Optim, ClipGradNorm) {
  auto a = Tensor::full({2}, 0.0, true);
  std::vector<NamedParameter> params{{"a", a}};
  a.mutable_grad()[0] = 3.0;
  a.mutable_grad()[1] = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(a.grad()[1], 0.8, 1e-15);
}

TEST(Optim, Schedules) {
  auto c = LrSchedule::cosine(1.0, 10);
  EXPECT_DOUBLE_EQ(c.at(0), 1.0);
  EXPECT_NEAR(c.at(5), 0.5, 1e-15);
  EXPECT_NEAR(c.at(10), 0.0, 1e-15);
  auto m = LrSchedule::multi_step(1.0, 10, {3, 6}, 0.1);
  EXPECT_DOUBLE_EQ(m.at(2), 1.0);
  EXPECT_NEAR(m.at(3), 0.1, 1e-15);
  EXPECT_NEAR(m.at(9), 0.01, 1e-15);
  EXPECT_THROW(c.at(11), ContractError);
  EXPECT_EQ(schedule_kind_from_string(to_string(ScheduleKind::multi_step)), ScheduleKind::multi_step);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = std::filesystem::temp_directory_path() / "hyperinv_ckpt_test";
  std::filesystem::remove_all(dir);
  Rng rng(21);
  Checkpoint cp;
  cp.tensors.push_back({"a", random_tensor({3, 4}, rng)});
  cp.tensors.push_back({"b", Tensor::from_data({2}, {0.1, -1e-300})});
  cp.metadata["note"] = "x";
  write_checkpoint(dir, "m", cp);
  const auto back = read_checkpoint(dir, "m");
  ASSERT_EQ(back.tensors.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto x = cp.tensors[i].tensor.data(), y = back.tensors[i].tensor.data();
    ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
  EXPECT_EQ(checkpoint_digest(cp), checkpoint_digest(back));
  EXPECT_EQ(back.metadata["note"], "x");
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, MalformedManifestIsParseError) {
  const auto dir = std::filesystem::temp_directory_path() / "hyperinv_ckpt_bad";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "m.json", "{not json");
  write_file_atomic(dir / "m.bin", "");
  EXPECT_THROW(read_checkpoint(dir, "m"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST(Ops, Conv2dHandExample) {
  std::vector<double> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i);
  const auto y = conv2d(Tensor::from_data({1, 1, 4, 4}, v), Tensor::full({1, 1, 2, 2}, 1.0), Tensor(), 2, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{10, 18, 42, 50}));
  EXPECT_EQ(conv2d(Tensor::zeros({1, 3, 28, 28}), Tensor::zeros({16, 3, 5, 5}), Tensor(), 2, 2).shape(),
            (Shape{1, 16, 14, 14}));
}

TEST(Ops, BatchnormEvalHandExample) {
  RunningStats stats{{2.0}, {4.0}};
  const auto y = batchnorm2d(Tensor::full({1, 1, 1, 1}, 4.0), Tensor::full({1}, 1.0), Tensor::zeros({1}), stats,
                             BnMode::eval, 0.1, 1e-5);
  EXPECT_NEAR(y.item(), 2.0 / std::sqrt(4.0 + 1e-5), 1e-15);
  EXPECT_NEAR(y.item(), 0.99999875, 1e-8);
}

TEST(Ops, CrossEntropyHandExample) {
  const auto l = softmax_cross_entropy(Tensor::from_data({1, 2}, {1.0, 2.0}), std::vector<int>{1});
  EXPECT_NEAR(l.item(), -std::log(std::exp(2.0) / (std::exp(1.0) + std::exp(2.0))), 1e-15);
  EXPECT_NEAR(l.item(), 0.313262, 1e-6);
}

TEST(Ops, CosineHandExample) {
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 1}), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Ops, WeightsAsActivationsChainRule) {
  // loss = <M i, x> so dloss/di = M^T x.
  Rng rng(18);
  auto i = random_tensor({1, 3}, rng, true);
  const auto m = random_tensor({3, 5}, rng);
  const auto x = random_tensor({1, 5}, rng);
  sum(mul(matmul(i, m), x)).backward();
  for (std::size_t r = 0; r < 3; ++r) {
    double expected = 0.0;
    for (std::size_t c = 0; c < 5; ++c) expected += m.at(r * 5 + c) * x.at(c);
    EXPECT_NEAR(i.grad()[r], expected, 1e-14);
  }
}

TEST(Ops, NtXentSpecialCases) {
  const auto same = Tensor::from_data({2, 2}, {1.0, 0.0, 1.0, 0.0});
  EXPECT_NEAR(nt_xent_loss(same, same, 0.5).item(), nt_xent_oracle(same, same, 0.5), 1e-12);
  EXPECT_NEAR(nt_xent_loss(same, same, 0.5).item(), std::log(3.0), 1e-12);
  const auto a = Tensor::from_data({2, 2}, {1.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(nt_xent_loss(a, a, 0.5).item(), nt_xent_oracle(a, a, 0.5), 1e-12);
  EXPECT_NEAR(nt_xent_loss(a, a, 0.5).item(), std::log(std::exp(2.0) + 2.0) - 2.0, 1e-12);
}

TEST(Optim, FirstStepIsSignOfGradient) {
  auto p = Tensor::from_data({3}, {0.0, 0.0, 0.0}, true);
  std::vector<NamedParameter> params{{"p", p}};
  auto state = AdamState::for_parameters(params);
  const std::vector<double> g{3.0, -0.5, 1e-3};
  for (std::size_t i = 0; i < 3; ++i) p.mutable_grad()[i] = g[i];
  adam_step(params, state, 0.01);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.at(i), -0.01 * (g[i] > 0 ? 1.0 : -1.0), 1e-7);
}

TEST(Optim, ZeroGradientIsFixedPoint) {
  auto p = Tensor::from_data({2}, {0.3, -0.7}, true);
  std::vector<NamedParameter> params{{"p", p}};
  auto state = AdamState::for_parameters(params);
  p.mutable_grad()[0] = 0.0;
  p.mutable_grad()[1] = 0.0;
  adam_step(params, state, 0.1);
  EXPECT_EQ(p.at(0), 0.3);
  EXPECT_EQ(p.at(1), -0.7);
}

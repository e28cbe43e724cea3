#include <doctest.h>

#include <cmath>
#include <random>

#include "mrcner/errors.h"
#include "mrcner/span_model.h"
#include "test_util.h"

using namespace mrcner;

namespace {

// Independent transliteration of the dice formula used as the scripted
// oracle; long double accumulation, reversed iteration order.
long double dice_oracle(const std::vector<double>& p, const std::vector<double>& g,
                        double lambda) {
  long double overlap = 0, p_sq = 0, g_sq = 0;
  for (size_t i = p.size(); i-- > 0;) {
    overlap += static_cast<long double>(p[i]) * g[i];
    p_sq += static_cast<long double>(p[i]) * p[i];
    g_sq += static_cast<long double>(g[i]) * g[i];
  }
  return 1.0L - (2.0L * overlap + lambda) / (p_sq + g_sq + lambda);
}

std::vector<double> random_probs(std::mt19937_64& rng, size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  for (auto& v : p) v = u(rng);
  return p;
}

std::vector<double> random_binary(std::mt19937_64& rng, size_t n, double rate = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> g(n);
  for (auto& v : g) v = u(rng) < rate ? 1.0 : 0.0;
  return g;
}

}  // namespace

TEST_CASE("dice loss worked examples") {
  CHECK(dice_loss(std::vector{1.0, 0.0, 0.0}, std::vector{1.0, 0.0, 0.0}, 0.0) ==
        0.0);
  CHECK(dice_loss(std::vector{0.0, 0.0, 0.0}, std::vector{1.0, 0.0, 0.0}, 0.0) ==
        1.0);
  CHECK(dice_loss(std::vector{0.5, 0.5}, std::vector{1.0, 0.0}, 1.0) ==
        doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("dice loss matches the scripted oracle on 200 random triples") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lam(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 24;
    auto p = random_probs(rng, n);
    auto g = random_binary(rng, n);
    const double lambda = trial % 7 == 0 ? 0.0 : lam(rng);
    if (lambda == 0.0 && g == std::vector<double>(n, 0.0)) continue;
    const double got = dice_loss(p, g, lambda);
    CHECK(std::abs(got - static_cast<double>(dice_oracle(p, g, lambda))) < 1e-10);
  }
}

TEST_CASE("dice loss properties: range and symmetry") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 16;
    auto p = random_probs(rng, n);
    auto g = random_binary(rng, n);
    const double lambda = 0.25 + static_cast<double>(rng() % 100) / 50.0;
    const double loss = dice_loss(p, g, lambda);
    CHECK(loss >= 0.0);
    CHECK(loss <= 1.0);
    CHECK(dice_loss(g, p, lambda) == doctest::Approx(loss).epsilon(1e-15));
  }
}

TEST_CASE("dice loss degenerate input") {
  CHECK_THROWS_AS(dice_loss(std::vector{0.0, 0.0}, std::vector{0.0, 0.0}, 0.0),
                  DegenerateInput);
  CHECK_THROWS_AS(
      dice_decomposition(std::vector{0.0}, std::vector{0.0}, 0.0),
      DegenerateInput);
  CHECK_THROWS_AS(dice_loss(std::vector{0.5}, std::vector{0.0, 1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("dice decomposition identity and negative-example behaviour") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 16;
    auto p = random_probs(rng, n);
    auto g = random_binary(rng, n);
    const double lambda = 0.5 + static_cast<double>(rng() % 100) / 40.0;
    auto [recall_part, precision_part] = dice_decomposition(p, g, lambda);
    const double loss = dice_loss(p, g, lambda);
    CHECK(std::abs(recall_part + precision_part + loss - 1.0) < 1e-12);
  }

  // all-negative gold: the overlap term ignores p entirely
  auto [recall_part, precision_part] =
      dice_decomposition(std::vector{1.0, 0.0}, std::vector{0.0, 0.0}, 1.0);
  CHECK(recall_part == 0.0);
  CHECK(precision_part == doctest::Approx(0.5).epsilon(1e-15));

  // and the smoothing term strictly shrinks as predicted mass grows
  double prev = 2.0;
  for (double mass : {0.0, 0.3, 0.8, 1.5, 2.5}) {
    auto part = dice_decomposition(std::vector{mass}, std::vector{0.0}, 1.0).second;
    CHECK(part < prev);
    prev = part;
  }
}

TEST_CASE("dice gradient hand case and sign property") {
  auto grad = dice_grad(std::vector{1.0, 0.0}, std::vector{1.0, 0.0}, 1.0);
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] == 0.0);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng() % 10;
    auto p = random_probs(rng, n);
    std::vector<double> g(n, 0.0);
    auto grads = dice_grad(p, g, 0.7);
    for (double v : grads) CHECK(v >= 0.0);  // raising a negative never helps
  }
}

TEST_CASE("dice gradient matches central finite differences") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> lam(0.1, 3.0);
  const double step = 1e-5;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 12;
    auto p = random_probs(rng, n);
    auto g = random_binary(rng, n);
    const double lambda = lam(rng);
    auto analytic = dice_grad(p, g, lambda);
    for (size_t i = 0; i < n; ++i) {
      auto plus = p, minus = p;
      plus[i] += step;
      minus[i] -= step;
      const double fd =
          (dice_loss(plus, g, lambda) - dice_loss(minus, g, lambda)) / (2 * step);
      CHECK(test::rel_err(analytic[i], fd) < 1e-4);
    }
  }
}

TEST_CASE("cross entropy worked examples") {
  std::vector<double> g{1.0, 0.0, 1.0};
  CHECK(cross_entropy_loss(g, g) <= -std::log(1.0 - 1e-7) + 1e-12);
  std::vector<double> half{0.5, 0.5, 0.5};
  CHECK(cross_entropy_loss(half, g) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("cross entropy gradient matches central finite differences") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> interior(0.05, 0.95);
  const double step = 1e-5;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 12;
    std::vector<double> p(n);
    for (auto& v : p) v = interior(rng);
    auto g = random_binary(rng, n);
    auto analytic = cross_entropy_grad(p, g);
    for (size_t i = 0; i < n; ++i) {
      auto plus = p, minus = p;
      plus[i] += step;
      minus[i] -= step;
      const double fd =
          (cross_entropy_loss(plus, g) - cross_entropy_loss(minus, g)) / (2 * step);
      CHECK(test::rel_err(analytic[i], fd) < 1e-4);
    }
  }
}

TEST_CASE("instance loss combines both sides") {
  MrcInstance inst;
  inst.query = TokenSequence::from_tokens({"q"});
  inst.context = TokenSequence::from_tokens({"a", "b", "c"});
  inst.g_start = {1, 0, 0};
  inst.g_end = {0, 0, 1};

  PredictionOutput perfect{{1, 0, 0}, {0, 0, 1}};
  LossConfig dice{LossConfig::Kind::dice, 1.0};
  CHECK(instance_loss(perfect, inst, dice) == 0.0);

  // symmetric instance: total is exactly twice the single-vector loss
  MrcInstance sym = inst;
  sym.g_end = sym.g_start;
  PredictionOutput pred{{0.7, 0.2, 0.1}, {0.7, 0.2, 0.1}};
  const double single = dice_loss(pred.p_start, sym.g_start, 1.0);
  CHECK(instance_loss(pred, sym, dice) == doctest::Approx(2 * single).epsilon(1e-15));
}

TEST_CASE("instance loss agrees with an independent recomputation") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + rng() % 10;
    MrcInstance inst;
    inst.query = TokenSequence::from_tokens({"q"});
    std::vector<std::string> toks(n, "w");
    inst.context = TokenSequence::from_tokens(toks);
    inst.g_start = random_binary(rng, n);
    inst.g_end = random_binary(rng, n);
    PredictionOutput pred{random_probs(rng, n), random_probs(rng, n)};

    LossConfig dice{LossConfig::Kind::dice, 1.3};
    const long double expected = dice_oracle(pred.p_start, inst.g_start, 1.3) +
                                 dice_oracle(pred.p_end, inst.g_end, 1.3);
    CHECK(std::abs(instance_loss(pred, inst, dice) -
                   static_cast<double>(expected)) < 1e-10);
  }
}

TEST_CASE("predict with zero weights is maximally uncertain") {
  test::SmallFixture fx;
  const int n = 5;
  Matrix hidden = Matrix::Random(n + 4, fx.config.d_model);

  SpanHeadParams head;
  head.strategy = SpanStrategy::per_token;
  head.w_start = Vector::Zero(fx.config.d_model);
  head.w_end = Vector::Zero(fx.config.d_model);
  auto pred = predict(head, hidden, 2, n);
  for (double v : pred.p_start) CHECK(v == 0.5);
  for (double v : pred.p_end) CHECK(v == 0.5);

  head.strategy = SpanStrategy::position_classifier;
  pred = predict(head, hidden, 2, n);
  for (double v : pred.p_start) CHECK(v == 1.0 / n);
  for (double v : pred.p_end) CHECK(v == 1.0 / n);
}

TEST_CASE("raising the start bias raises every per-token start probability") {
  test::SmallFixture fx;
  auto params = fx.make_params();
  const auto& inst = fx.instances.front();
  auto input = build_input(inst.query, inst.context, fx.vocab, 64);
  Matrix hidden = encode(params, input);

  auto base = predict(params.head, hidden, input.context_offset, input.context_len);
  SpanHeadParams shifted = params.head;
  shifted.b_start += 0.35;
  auto moved = predict(shifted, hidden, input.context_offset, input.context_len);
  for (size_t i = 0; i < base.p_start.size(); ++i) {
    CHECK(moved.p_start[i] > base.p_start[i]);
    CHECK(moved.p_end[i] == base.p_end[i]);
  }
}

TEST_CASE("per_token can mark one token as both start and end; "
          "position_classifier cannot") {
  test::SmallFixture fx;
  const int d = fx.config.d_model;
  const int n = 4;
  Matrix hidden = Matrix::Zero(n + 3, d);
  hidden(2 + 1, 0) = 3.0;  // distinguished context token

  SpanHeadParams head;
  head.strategy = SpanStrategy::per_token;
  head.w_start = Vector::Zero(d);
  head.w_end = Vector::Zero(d);
  head.w_start(0) = 4.0;
  head.w_end(0) = 4.0;
  auto pred = predict(head, hidden, 2, n);
  CHECK(pred.p_start[1] > 0.9);
  CHECK(pred.p_end[1] > 0.9);  // single-token entity expressible

  head.strategy = SpanStrategy::position_classifier;
  pred = predict(head, hidden, 2, n);
  double sum_start = 0.0;
  int above_half = 0;
  for (double v : pred.p_start) {
    sum_start += v;
    if (v > 0.5) ++above_half;
  }
  CHECK(sum_start == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(above_half <= 1);  // a distribution cannot flag two starts
}

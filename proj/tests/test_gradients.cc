#include <doctest.h>

#include "mrcner/span_model.h"
#include "test_util.h"

using namespace mrcner;

// Full backward through span heads and encoder against central finite
// differences, sampling coordinates from every tensor.
TEST_CASE("full model gradients match finite differences") {
  test::SmallFixture fx;
  std::mt19937_64 rng(71);

  for (auto strategy :
       {SpanStrategy::per_token, SpanStrategy::position_classifier}) {
    for (auto kind : {LossConfig::Kind::dice, LossConfig::Kind::cross_entropy}) {
      auto params = fx.make_params(strategy, 1000 + static_cast<uint64_t>(kind));
      LossConfig cfg{kind, 0.8};
      double worst = 0.0;
      for (int trial = 0; trial < 5; ++trial) {
        const auto& inst = fx.instances[rng() % fx.instances.size()];
        worst = std::max(worst,
                         test::check_model_gradients(params, fx.vocab, inst, cfg, rng));
      }
      INFO("strategy=", to_string(strategy), " loss=", to_string(kind));
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("gradients flow into every tensor for a typical instance") {
  test::SmallFixture fx;
  auto params = fx.make_params();
  LossConfig cfg{LossConfig::Kind::dice, 1.0};

  // pick an instance with at least one gold span
  const MrcInstance* chosen = nullptr;
  for (const auto& inst : fx.instances) {
    for (double v : inst.g_start) {
      if (v > 0) {
        chosen = &inst;
        break;
      }
    }
    if (chosen) break;
  }
  REQUIRE(chosen != nullptr);

  ModelParams grads = test::model_grads(params, fx.vocab, *chosen, cfg);
  for (const auto& ref : tensor_refs(grads)) {
    const double norm =
        Eigen::Map<Vector>(ref.data, ref.size()).cwiseAbs().maxCoeff();
    INFO("tensor ", ref.name);
    if (ref.name == "pos_emb" || ref.name == "tok_emb") {
      CHECK(norm > 0.0);  // used rows must receive gradient
    } else {
      CHECK(norm > 0.0);
    }
  }
}

#ifndef MRCNER_OPTIMIZER_H_
#define MRCNER_OPTIMIZER_H_

#include <memory>
#include <string>

#include "mrcner/encoder.h"

namespace mrcner {

// First-order parameter update from accumulated gradients.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ModelParams& params, ModelParams& grads) = 0;
};

class SgdOptimizer : public Optimizer {
 public:
  explicit SgdOptimizer(double lr) : lr_(lr) {}
  void step(ModelParams& params, ModelParams& grads) override;

 private:
  double lr_;
};

class AdamOptimizer : public Optimizer {
 public:
  AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ModelParams& params, ModelParams& grads) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::unique_ptr<ModelParams> m_, v_;
};

// name is "adam" or "sgd".
std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr,
                                          double beta1 = 0.9, double beta2 = 0.999,
                                          double eps = 1e-8);

}  // namespace mrcner

#endif  // MRCNER_OPTIMIZER_H_

#include "mrcner/optimizer.h"

#include <cmath>

#include "mrcner/errors.h"

namespace mrcner {

void SgdOptimizer::step(ModelParams& params, ModelParams& grads) {
  auto p_refs = tensor_refs(params);
  auto g_refs = tensor_refs(grads);
  for (size_t i = 0; i < p_refs.size(); ++i) {
    Eigen::Map<Vector> p(p_refs[i].data, p_refs[i].size());
    Eigen::Map<Vector> g(g_refs[i].data, g_refs[i].size());
    p -= lr_ * g;
  }
}

void AdamOptimizer::step(ModelParams& params, ModelParams& grads) {
  if (!m_) {
    m_ = std::make_unique<ModelParams>(zeros_like(params));
    v_ = std::make_unique<ModelParams>(zeros_like(params));
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

  auto p_refs = tensor_refs(params);
  auto g_refs = tensor_refs(grads);
  auto m_refs = tensor_refs(*m_);
  auto v_refs = tensor_refs(*v_);
  for (size_t i = 0; i < p_refs.size(); ++i) {
    Eigen::Map<Vector> p(p_refs[i].data, p_refs[i].size());
    Eigen::Map<Vector> g(g_refs[i].data, g_refs[i].size());
    Eigen::Map<Vector> m(m_refs[i].data, m_refs[i].size());
    Eigen::Map<Vector> v(v_refs[i].data, v_refs[i].size());
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
  }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr,
                                          double beta1, double beta2, double eps) {
  if (name == "adam") return std::make_unique<AdamOptimizer>(lr, beta1, beta2, eps);
  if (name == "sgd") return std::make_unique<SgdOptimizer>(lr);
  throw ConfigError("unknown optimizer '" + name + "'");
}

}  // namespace mrcner

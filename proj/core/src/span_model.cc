#include "mrcner/span_model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrcner/errors.h"

namespace mrcner {

namespace {

constexpr double kCeClamp = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_sizes(std::span<const double> p, std::span<const double> g) {
  if (p.size() != g.size()) {
    throw std::invalid_argument("p and g must have equal length");
  }
  if (p.empty()) throw std::invalid_argument("empty probability vector");
}

// Shared accumulators of Eq-style sums.
struct DiceSums {
  double overlap = 0.0;  // sum p_i * g_i
  double p_sq = 0.0;
  double g_sq = 0.0;
};

DiceSums dice_sums(std::span<const double> p, std::span<const double> g) {
  DiceSums s;
  for (size_t i = 0; i < p.size(); ++i) {
    s.overlap += p[i] * g[i];
    s.p_sq += p[i] * p[i];
    s.g_sq += g[i] * g[i];
  }
  return s;
}

}  // namespace

LossConfig::Kind parse_loss_kind(const std::string& name) {
  if (name == "dice") return LossConfig::Kind::dice;
  if (name == "cross_entropy" || name == "entropy") {
    return LossConfig::Kind::cross_entropy;
  }
  throw ConfigError("unknown loss kind '" + name + "'");
}

const char* to_string(LossConfig::Kind kind) {
  return kind == LossConfig::Kind::dice ? "dice" : "cross_entropy";
}

PredictionOutput predict(const SpanHeadParams& head, const Matrix& hidden,
                         int context_offset, int context_len) {
  if (context_offset < 0 || context_len < 1 ||
      context_offset + context_len > hidden.rows()) {
    throw std::invalid_argument("context slice out of range");
  }
  const auto ctx = hidden.middleRows(context_offset, context_len);
  Vector z_start = (ctx * head.w_start).array() + head.b_start;
  Vector z_end = (ctx * head.w_end).array() + head.b_end;

  PredictionOutput out;
  out.p_start.resize(static_cast<size_t>(context_len));
  out.p_end.resize(static_cast<size_t>(context_len));
  if (head.strategy == SpanStrategy::per_token) {
    for (int i = 0; i < context_len; ++i) {
      out.p_start[static_cast<size_t>(i)] = sigmoid(z_start(i));
      out.p_end[static_cast<size_t>(i)] = sigmoid(z_end(i));
    }
  } else {
    auto softmax = [](const Vector& z, std::vector<double>& out_p) {
      const double zmax = z.maxCoeff();
      double sum = 0.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        out_p[static_cast<size_t>(i)] = std::exp(z(i) - zmax);
        sum += out_p[static_cast<size_t>(i)];
      }
      for (auto& v : out_p) v /= sum;
    };
    softmax(z_start, out.p_start);
    softmax(z_end, out.p_end);
  }
  return out;
}

double dice_loss(std::span<const double> p, std::span<const double> g,
                 double lambda) {
  check_sizes(p, g);
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  DiceSums s = dice_sums(p, g);
  const double denom = s.p_sq + s.g_sq + lambda;
  if (denom == 0.0) {
    throw DegenerateInput("dice loss is 0/0 for all-zero p and g with lambda 0");
  }
  return 1.0 - (2.0 * s.overlap + lambda) / denom;
}

std::pair<double, double> dice_decomposition(std::span<const double> p,
                                             std::span<const double> g,
                                             double lambda) {
  check_sizes(p, g);
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  DiceSums s = dice_sums(p, g);
  const double denom = s.p_sq + s.g_sq + lambda;
  if (denom == 0.0) {
    throw DegenerateInput("dice decomposition is 0/0 for all-zero p and g with lambda 0");
  }
  return {2.0 * s.overlap / denom, lambda / denom};
}

std::vector<double> dice_grad(std::span<const double> p,
                              std::span<const double> g, double lambda) {
  check_sizes(p, g);
  if (lambda <= 0.0) {
    throw std::invalid_argument("dice gradient requires lambda > 0");
  }
  DiceSums s = dice_sums(p, g);
  const double num = 2.0 * s.overlap + lambda;
  const double denom = s.p_sq + s.g_sq + lambda;
  std::vector<double> grad(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    grad[i] = -(2.0 * g[i] * denom - 2.0 * p[i] * num) / (denom * denom);
  }
  return grad;
}

double cross_entropy_loss(std::span<const double> p, std::span<const double> g) {
  check_sizes(p, g);
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(p[i], kCeClamp, 1.0 - kCeClamp);
    total += -(g[i] * std::log(pc) + (1.0 - g[i]) * std::log(1.0 - pc));
  }
  return total / static_cast<double>(p.size());
}

std::vector<double> cross_entropy_grad(std::span<const double> p,
                                       std::span<const double> g) {
  check_sizes(p, g);
  const double inv_n = 1.0 / static_cast<double>(p.size());
  std::vector<double> grad(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < kCeClamp || p[i] > 1.0 - kCeClamp) {
      grad[i] = 0.0;  // clamped region is flat
      continue;
    }
    grad[i] = inv_n * (-g[i] / p[i] + (1.0 - g[i]) / (1.0 - p[i]));
  }
  return grad;
}

namespace {

double vector_loss(std::span<const double> p, std::span<const double> g,
                   const LossConfig& cfg) {
  return cfg.kind == LossConfig::Kind::dice ? dice_loss(p, g, cfg.lambda)
                                            : cross_entropy_loss(p, g);
}

std::vector<double> vector_grad(std::span<const double> p,
                                std::span<const double> g,
                                const LossConfig& cfg) {
  return cfg.kind == LossConfig::Kind::dice ? dice_grad(p, g, cfg.lambda)
                                            : cross_entropy_grad(p, g);
}

}  // namespace

double instance_loss(const PredictionOutput& pred, const MrcInstance& inst,
                     const LossConfig& cfg) {
  return vector_loss(pred.p_start, inst.g_start, cfg) +
         vector_loss(pred.p_end, inst.g_end, cfg);
}

double instance_backward(const SpanHeadParams& head, const Matrix& hidden,
                         const CombinedInput& input, const MrcInstance& inst,
                         const LossConfig& cfg, Matrix& d_hidden,
                         SpanHeadParams& grads) {
  const int off = input.context_offset;
  const int n = input.context_len;
  PredictionOutput pred = predict(head, hidden, off, n);
  const double loss = instance_loss(pred, inst, cfg);

  d_hidden = Matrix::Zero(hidden.rows(), hidden.cols());
  const auto ctx = hidden.middleRows(off, n);

  auto backprop_side = [&](const std::vector<double>& p,
                           const std::vector<double>& g, const Vector& w,
                           Vector& dw, double& db) {
    std::vector<double> dp = vector_grad(p, g, cfg);
    Vector dz(n);
    if (head.strategy == SpanStrategy::per_token) {
      for (int i = 0; i < n; ++i) {
        const double pi = p[static_cast<size_t>(i)];
        dz(i) = dp[static_cast<size_t>(i)] * pi * (1.0 - pi);
      }
    } else {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += dp[static_cast<size_t>(i)] * p[static_cast<size_t>(i)];
      for (int i = 0; i < n; ++i) {
        dz(i) = p[static_cast<size_t>(i)] * (dp[static_cast<size_t>(i)] - dot);
      }
    }
    dw += ctx.transpose() * dz;
    db += dz.sum();
    d_hidden.middleRows(off, n) += dz * w.transpose();
  };

  backprop_side(pred.p_start, inst.g_start, head.w_start, grads.w_start,
                grads.b_start);
  backprop_side(pred.p_end, inst.g_end, head.w_end, grads.w_end, grads.b_end);
  return loss;
}

}  // namespace mrcner

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ocn/params.hpp"

namespace ocn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;        // global gradient-norm clip; <= 0 disables
  double warmup_fraction = 0.1;  // linear warmup over this fraction of total steps
};

// Adaptive-moment gradient descent over a ParamStore, with linear warmup and
// global-norm clipping. step() consumes and zeroes the accumulated grads;
// parameters are visited in registration order so updates are deterministic.
class AdamOptimizer {
 public:
  AdamOptimizer(ParamStore& store, const AdamConfig& cfg, long long total_steps)
      : store_(store), cfg_(cfg) {
    warmup_steps_ = std::max<long long>(
        1, static_cast<long long>(std::llround(cfg.warmup_fraction * total_steps)));
    for (auto& p : store_.all()) {
      m_.emplace_back(p.tensor.size(), 0.0);
      v_.emplace_back(p.tensor.size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double lr = current_lr();
    double clip_scale = 1.0;
    if (cfg_.clip_norm > 0.0) {
      double sq = 0.0;
      for (auto& p : store_.all()) {
        if (!p.trainable || !p.tensor.has_grad()) continue;
        for (double g : p.tensor.grad()) sq += g * g;
      }
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) clip_scale = cfg_.clip_norm / norm;
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto& params = store_.all();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      if (!p.trainable || !p.tensor.has_grad()) continue;
      auto& w = p.tensor.values();
      auto& g = p.tensor.grad();
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double gj = g[j] * clip_scale;
        m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * gj;
        v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * gj * gj;
        w[j] -= lr * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + cfg_.eps);
      }
    }
    store_.zero_grad();
  }

  double current_lr() const {
    const double ramp =
        std::min(1.0, static_cast<double>(t_ == 0 ? 1 : t_) / static_cast<double>(warmup_steps_));
    return cfg_.lr * ramp;
  }

  long long steps_taken() const { return t_; }

 private:
  ParamStore& store_;
  AdamConfig cfg_;
  long long warmup_steps_ = 1;
  long long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace ocn

#pragma once

#include <vector>

#include "cemb/tensor.hpp"

namespace cemb {

// Linear warmup to base_lr over the first ceil(warmup_fraction * total)
// steps, then linear decay to zero at total_steps. Piecewise linear and
// continuous; peaks exactly at the warmup boundary.
double lr_schedule(int step, int total_steps, double base_lr, double warmup_fraction);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are allocated on the first
// step; callers pass the parameter pointers each step in a fixed order.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr);

  int steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_, v_;
  int t_ = 0;
};

}  // namespace cemb

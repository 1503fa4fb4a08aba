#include "cemb/optim.hpp"

#include <cmath>

#include "cemb/errors.hpp"

namespace cemb {

double lr_schedule(int step, int total_steps, double base_lr, double warmup_fraction) {
  if (total_steps < 1) throw UsageError("lr_schedule: total_steps must be >= 1");
  if (step < 0 || step > total_steps)
    throw UsageError("lr_schedule: step must lie in [0, total_steps]");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
    throw ParameterError("lr_schedule: warmup_fraction must be in [0, 1)");
  int warmup = static_cast<int>(std::ceil(warmup_fraction * total_steps));
  if (step <= warmup) {
    if (warmup == 0) return base_lr * (total_steps - step) / total_steps;
    return base_lr * step / warmup;
  }
  return base_lr * (total_steps - step) / (total_steps - warmup);
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr) {
  if (params.size() != grads.size())
    throw UsageError("Adam::step: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.push_back(Tensor::zeros(p->shape()));
      v_.push_back(Tensor::zeros(p->shape()));
    }
  }
  if (m_.size() != params.size())
    throw UsageError("Adam::step: parameter set changed between steps");

  ++t_;
  double bc1 = 1.0 - std::pow(config_.beta1, t_);
  double bc2 = 1.0 - std::pow(config_.beta2, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g))
      throw ShapeError("Adam::step: gradient shape " + g.shape_str() +
                       " does not match parameter " + p.shape_str());
    if (!g.all_finite()) throw NumericalError("Adam::step: non-finite gradient");
    m_[i].flat() = config_.beta1 * m_[i].flat() + (1.0 - config_.beta1) * g.flat();
    v_[i].flat() = config_.beta2 * v_[i].flat() + (1.0 - config_.beta2) * g.flat().square();
    p.flat() -= lr * (m_[i].flat() / bc1) / ((v_[i].flat() / bc2).sqrt() + config_.eps);
    if (!p.all_finite()) throw NumericalError("Adam::step: parameter became non-finite");
  }
}

}  // namespace cemb

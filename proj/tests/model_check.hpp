#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "cemb/encoder.hpp"

namespace testutil {

struct ModelGradReport {
  double max_abs = 0.0;
  double max_rel = 0.0;
  int failures = 0;
  int coords = 0;
  std::string worst;
};

// Central finite differences over every model parameter against the tape
// gradients. loss_fn must be a deterministic function of the parameters.
inline ModelGradReport check_model_gradients(
    cemb::Model& model,
    const std::function<cemb::Var(cemb::Graph&, cemb::BoundModel&)>& loss_fn, double h = 1e-4,
    double rel_tol = 1e-4, double abs_tol = 1e-6) {
  auto eval = [&]() {
    cemb::Graph g;
    cemb::BoundModel bound = cemb::bind_model(g, model);
    return loss_fn(g, bound).value().item();
  };

  cemb::Graph g;
  cemb::BoundModel bound = cemb::bind_model(g, model);
  cemb::Var loss = loss_fn(g, bound);
  g.backward(loss);

  ModelGradReport report;
  for (auto& [tensor, var] : bound.slots) {
    cemb::Tensor analytic = g.grad_or_zero(var);
    for (Eigen::Index i = 0; i < tensor->numel(); ++i) {
      double saved = (*tensor)(i);
      (*tensor)(i) = saved + h;
      double fp = eval();
      (*tensor)(i) = saved - h;
      double fm = eval();
      (*tensor)(i) = saved;
      double fd = (fp - fm) / (2.0 * h);
      double an = analytic(i);
      double abs_err = std::abs(an - fd);
      double rel_err = abs_err / std::max({std::abs(an), std::abs(fd), 1e-300});
      ++report.coords;
      report.max_abs = std::max(report.max_abs, abs_err);
      report.max_rel = std::max(report.max_rel, rel_err);
      if (abs_err > abs_tol && rel_err > rel_tol) {
        ++report.failures;
        if (report.worst.empty())
          report.worst = "coord " + std::to_string(i) + ": analytic " + std::to_string(an) +
                         " vs fd " + std::to_string(fd);
      }
    }
  }
  return report;
}

}  // namespace testutil

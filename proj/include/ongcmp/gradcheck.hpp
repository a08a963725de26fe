// Finite-difference gradient checking in double precision.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tensor.hpp"

namespace ongcmp::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// `loss` evaluates the scalar objective from the current parameter values.
// `backward` must zero and then fill the gradient buffers of every tensor in
// `wrt` with the analytic gradient at the current values. Each entry is
// compared with the central difference (L(p+eps) - L(p-eps)) / 2eps and the
// relative error |a-f| / max(|a|, |f|, 1e-8) is maximised over all entries.
inline GradCheckResult grad_check(const std::function<double()>& loss,
                                  const std::function<void()>& backward,
                                  const std::vector<Tensor<double>*>& wrt, double eps = 1e-6) {
  for (auto* t : wrt) {
    t->enable_grad();
    t->zero_grad();
  }
  backward();
  GradCheckResult r;
  for (auto* t : wrt) {
    const std::vector<double> analytic(t->grad().begin(), t->grad().end());
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double orig = (*t)[i];
      (*t)[i] = orig + eps;
      const double lp = loss();
      (*t)[i] = orig - eps;
      const double lm = loss();
      (*t)[i] = orig;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw NumericError("grad_check: non-finite loss");
      const double fd = (lp - lm) / (2.0 * eps);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(a - fd) / denom);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace ongcmp::nn

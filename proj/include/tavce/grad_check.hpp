#ifndef TAVCE_GRAD_CHECK_HPP
#define TAVCE_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tavce/ops.hpp"
#include "tavce/tensor.hpp"

namespace tavce {

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
};

// Compares backward() against central finite differences, coordinate by
// coordinate. f must build a scalar loss on the given tape from the given
// input tensor. Relative error uses max(|analytic|, |numeric|, 1e-8) as
// denominator; pass iff the max over coordinates is <= tol.
inline GradCheckReport check_gradients(
    const std::function<Tensor<double>(Tape<double>&, const Tensor<double>&)>& f,
    const std::vector<double>& x0, const Shape& shape, double eps, double tol) {
  std::vector<double> analytic(x0.size());
  {
    Tape<double> tape;
    Tensor<double> x = Tensor<double>::leaf(&tape, shape, x0, true);
    Tensor<double> loss = f(tape, x);
    check_finite("grad_check(loss)", loss.value());
    // A loss detached from x (e.g. a constant function) has zero gradient.
    if (loss.requires_grad()) {
      tape.backward(loss);
      analytic = x.grad();
    }
  }
  auto eval = [&](const std::vector<double>& v) {
    Tape<double> tape;
    tape.set_recording(false);
    Tensor<double> x = Tensor<double>::leaf(&tape, shape, v, false);
    double y = f(tape, x).item();
    if (!std::isfinite(y)) throw TensorError("grad_check: non-finite evaluation");
    return y;
  };
  GradCheckReport report;
  std::vector<double> probe = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    probe[i] = x0[i] + eps;
    const double up = eval(probe);
    probe[i] = x0[i] - eps;
    const double down = eval(probe);
    probe[i] = x0[i];
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic[i] - numeric) / denom);
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace tavce

#endif  // TAVCE_GRAD_CHECK_HPP

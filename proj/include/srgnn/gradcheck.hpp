#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "srgnn/autodiff.hpp"

namespace srgnn::ad {

template <typename Scalar>
struct GradCheckReport {
  Scalar max_rel_error = 0;
  std::size_t param = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  Scalar analytic = 0;
  Scalar numeric = 0;
  std::size_t entries_checked = 0;
};

// Compares tape gradients with central differences for every entry of every
// parameter. `f(tape, vars)` must build a 1x1 loss from the leaves `vars`
// (one per entry of `params`, same order) and be deterministic.
//
// Relative error per entry: |analytic - numeric| / max(1e-8, |analytic|).
template <typename Scalar, typename F>
GradCheckReport<Scalar> finite_diff_check(F&& f, std::vector<MatrixX<Scalar>> params, Scalar h) {
  if (!(h > Scalar(0))) throw ContractError("finite_diff_check: step must be positive");

  auto evaluate = [&](const std::vector<MatrixX<Scalar>>& ps, std::vector<MatrixX<Scalar>>* grads) {
    Tape<Scalar> tape;
    std::vector<Var<Scalar>> vars;
    vars.reserve(ps.size());
    for (const auto& p : ps) vars.push_back(grads ? tape.leaf(p) : tape.constant(p));
    Var<Scalar> loss = f(tape, vars);
    const Scalar value = loss.value()(0, 0);
    if (!std::isfinite(value)) throw NumericError("finite_diff_check: objective is not finite");
    if (grads) {
      tape.backward(loss);
      grads->clear();
      for (const auto& v : vars) grads->push_back(v.grad());
    }
    return value;
  };

  std::vector<MatrixX<Scalar>> analytic;
  evaluate(params, &analytic);

  GradCheckReport<Scalar> report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index j = 0; j < params[p].cols(); ++j) {
      for (Eigen::Index i = 0; i < params[p].rows(); ++i) {
        const Scalar saved = params[p](i, j);
        params[p](i, j) = saved + h;
        const Scalar up = evaluate(params, nullptr);
        params[p](i, j) = saved - h;
        const Scalar down = evaluate(params, nullptr);
        params[p](i, j) = saved;

        const Scalar numeric = (up - down) / (Scalar(2) * h);
        const Scalar a = analytic[p](i, j);
        const Scalar err = std::abs(a - numeric) / std::max(Scalar(1e-8), std::abs(a));
        ++report.entries_checked;
        if (err > report.max_rel_error || report.entries_checked == 1) {
          report.max_rel_error = err;
          report.param = p;
          report.row = i;
          report.col = j;
          report.analytic = a;
          report.numeric = numeric;
        }
      }
    }
  }
  return report;
}

}  // namespace srgnn::ad

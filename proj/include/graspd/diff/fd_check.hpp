#pragma once

// Central-difference validation harness for tape gradients.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "graspd/diff/tape.hpp"
#include "graspd/errors.hpp"

namespace graspd::diff {

struct FdReport {
  double max_rel_error = 0.0;
  int worst_coordinate = -1;
  std::vector<double> tape_gradient;
  std::vector<double> fd_gradient;
};

// f takes a span of scalars (Vars on the tape pass, constants on the FD
// evaluations) and returns a single scalar. Relative error is
// |g_ad − g_fd| / max(1, |g_fd|) per coordinate; the max is reported.
// Kinks are the caller's problem: evaluate away from them (or expect the
// report to flag the intentional bias, as with the leaky branch).
template <class F>
FdReport finite_difference_check(F&& f, std::span<const double> x, double h) {
  const std::size_t n = x.size();
  FdReport report;
  report.tape_gradient.resize(n);
  report.fd_gradient.resize(n);

  {
    Tape tape;
    std::vector<Var> inputs(n);
    for (std::size_t i = 0; i < n; ++i) inputs[i] = tape.input(x[i]);
    Var out = f(std::span<const Var>(inputs));
    if (!out.on_tape())
      throw ValidationError("finite_difference_check: f did not touch any input");
    if (!std::isfinite(out.v))
      throw NumericalError("finite_difference_check: f(x) is not finite");
    std::vector<double> adjoints = tape.backward(out.idx);
    for (std::size_t i = 0; i < n; ++i)
      report.tape_gradient[i] = adjoints[inputs[i].idx];
  }

  std::vector<Var> probe(n);
  auto eval = [&](std::size_t i, double xi) {
    for (std::size_t j = 0; j < n; ++j) probe[j] = Var(x[j]);
    probe[i] = Var(xi);
    return f(std::span<const Var>(probe)).v;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const double fp = eval(i, x[i] + h);
    const double fm = eval(i, x[i] - h);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("finite_difference_check: non-finite value at coordinate " +
                           std::to_string(i));
    const double g_fd = (fp - fm) / (2.0 * h);
    report.fd_gradient[i] = g_fd;
    const double rel =
        std::abs(report.tape_gradient[i] - g_fd) / std::max(1.0, std::abs(g_fd));
    if (!std::isfinite(rel))
      throw NumericalError("finite_difference_check: non-finite gradient at coordinate " +
                           std::to_string(i));
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coordinate = static_cast<int>(i);
    }
  }
  return report;
}

}  // namespace graspd::diff

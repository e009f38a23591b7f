#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "csca/tensor.hpp"

namespace csca {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_leaf = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
  std::size_t coordinates_skipped = 0;
  double tolerance = 0.0;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  // Upper bound on perturbed coordinates per leaf; 0 checks all of them.
  // When bounded, coordinates are taken at an even stride.
  std::size_t max_coordinates_per_leaf = 0;
  // Skip coordinates whose +/- step flips any relu activation relative to the
  // unperturbed point: central differences are not exact across a kink.
  bool skip_kink_crossings = false;
};

// Compares reverse-mode gradients of the scalar `f()` with respect to every
// tensor in `leaves` against central differences. The leaves must be
// requires_grad leaves that `f` reads; they are perturbed in place and
// restored. Error per coordinate is |analytic − numeric| / max(1, |analytic|).
// Throws NumericError if f produces a non-finite value. A report with no
// checked coordinates does not pass.
template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>()>& f, std::vector<Tensor<T>> leaves,
                                  const GradCheckOptions& options = {});

// Single-input convenience form: f is evaluated at a leaf copy of x.
template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, const Tensor<T>& x,
                                  double step, double tol);

}  // namespace csca

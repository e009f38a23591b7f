#include "csca/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "csca/error.hpp"
#include "csca/ops.hpp"

namespace csca {

namespace {

template <typename T>
T evaluate(const std::function<Tensor<T>()>& f, std::uint64_t* pattern = nullptr) {
  KinkPatternScope scope;
  const auto out = f();
  if (out.numel() != 1) throw ContractError("finite_diff_check: f must be scalar-valued, got " + to_string(out.shape()));
  const T v = out.item();
  if (!std::isfinite(static_cast<double>(v))) throw NumericError("finite_diff_check: non-finite function value");
  if (pattern) *pattern = scope.signature();
  return v;
}

}  // namespace

template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>()>& f, std::vector<Tensor<T>> leaves,
                                  const GradCheckOptions& options) {
  for (auto& leaf : leaves) {
    if (!leaf.is_leaf() || !leaf.requires_grad()) {
      throw ContractError("finite_diff_check: every checked tensor must be a requires_grad leaf");
    }
    leaf.zero_grad();
  }
  {
    const auto loss = f();
    if (loss.numel() != 1) throw ContractError("finite_diff_check: f must be scalar-valued");
    backward(loss);
  }
  std::vector<std::vector<T>> analytic;
  analytic.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    auto g = leaf.grad();
    for (auto v : g) {
      if (!std::isfinite(static_cast<double>(v))) throw NumericError("finite_diff_check: non-finite analytic gradient");
    }
    analytic.push_back(std::move(g));
  }

  std::uint64_t base_pattern = 0;
  if (options.skip_kink_crossings) evaluate(f, &base_pattern);

  GradCheckReport report;
  report.tolerance = options.tolerance;
  const T h = static_cast<T>(options.step);
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto values = leaves[l].mutable_data();
    const std::size_t n = values.size();
    std::size_t stride = 1;
    if (options.max_coordinates_per_leaf > 0 && n > options.max_coordinates_per_leaf) {
      stride = (n + options.max_coordinates_per_leaf - 1) / options.max_coordinates_per_leaf;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const T original = values[i];
      std::uint64_t up_pattern = 0, down_pattern = 0;
      values[i] = original + h;
      const T up = evaluate(f, &up_pattern);
      values[i] = original - h;
      const T down = evaluate(f, &down_pattern);
      values[i] = original;
      if (options.skip_kink_crossings && (up_pattern != base_pattern || down_pattern != base_pattern)) {
        ++report.coordinates_skipped;
        continue;
      }
      const double numeric = (static_cast<double>(up) - static_cast<double>(down)) / (2.0 * options.step);
      const double a = static_cast<double>(analytic[l][i]);
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++report.coordinates_checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_leaf = l;
        report.worst_index = i;
      }
    }
    leaves[l].zero_grad();
  }
  report.passed = report.coordinates_checked > 0 && report.max_rel_error <= options.tolerance;
  return report;
}

template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, const Tensor<T>& x,
                                  double step, double tol) {
  auto leaf = x.clone_leaf(true);
  std::function<Tensor<T>()> g = [&f, leaf]() { return f(leaf); };
  return finite_diff_check<T>(g, {leaf}, GradCheckOptions{step, tol, 0, false});
}

template GradCheckReport finite_diff_check<float>(const std::function<Tensor<float>()>&, std::vector<Tensor<float>>,
                                                  const GradCheckOptions&);
template GradCheckReport finite_diff_check<double>(const std::function<Tensor<double>()>&,
                                                   std::vector<Tensor<double>>, const GradCheckOptions&);
template GradCheckReport finite_diff_check<float>(const std::function<Tensor<float>(const Tensor<float>&)>&,
                                                  const Tensor<float>&, double, double);
template GradCheckReport finite_diff_check<double>(const std::function<Tensor<double>(const Tensor<double>&)>&,
                                                   const Tensor<double>&, double, double);

}  // namespace csca

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csca {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class Tensor;

namespace detail {

// One vertex of the recorded computation. Leaves have an empty `inputs` list
// and no adjoint. `seq` orders nodes by execution so the tape can be replayed
// in reverse.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  std::string op = "leaf";
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  // Receives d(loss)/d(output) and accumulates into inputs[i]->grad.
  std::function<void(const Node& self, std::span<const T> grad_out)> adjoint;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

std::uint64_t next_sequence();

}  // namespace detail

// Dense row-major tensor with optional gradient tracking.
//
// A Tensor is a handle: copies share the underlying storage and graph node,
// matching the identity semantics an autodiff graph needs. Values are never
// modified by operations; only leaf parameters may be updated in place
// through `mutable_data()` (used by optimizers).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor();
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }
  std::size_t extent(std::size_t axis) const;

  std::span<const T> data() const { return node_->data; }
  // Only leaves may be written; throws ContractError otherwise.
  std::span<T> mutable_data();

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zero-filled view when no gradient has been accumulated yet.
  std::vector<T> grad() const;
  void zero_grad();

  bool is_leaf() const { return node_->inputs.empty() && !node_->adjoint; }
  const std::string& op_name() const { return node_->op; }

  T item() const;
  T at(std::initializer_list<std::size_t> index) const;

  // Same values, no history, no gradient tracking.
  Tensor detach() const;
  // Independent leaf copy (fresh storage) with the requested tracking flag.
  Tensor clone_leaf(bool requires_grad) const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node<T>> node);

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// Ordered record of the operations that produced a loss. Replaying visits
// every recorded operation once, latest first.
template <typename T>
class GradTape {
 public:
  struct Entry {
    std::shared_ptr<detail::Node<T>> node;
  };

  static GradTape record(const Tensor<T>& loss);

  std::span<const Entry> entries() const { return entries_; }
  // Seeds d(loss)/d(loss) = 1 and propagates adjoints. Returns the op names in
  // visit order.
  std::vector<std::string> replay();

 private:
  std::shared_ptr<detail::Node<T>> root_;
  std::vector<Entry> entries_;
};

// Populates `grad` of every requires_grad leaf reachable from `loss`.
// Throws ContractError if `loss` does not hold exactly one element.
template <typename T>
void backward(const Tensor<T>& loss);

namespace testing {

// Fault injection for gradient-check self tests: scales the incoming adjoint
// of every op named `op` by `factor` during backward. Empty name disables.
void corrupt_adjoint(std::string op, double factor = 1.5);
void clear_corruption();
double adjoint_corruption_for(std::string_view op);

}  // namespace testing

}  // namespace csca

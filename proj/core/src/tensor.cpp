#include "csca/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <unordered_set>

#include "csca/error.hpp"

namespace csca {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

std::uint64_t next_sequence() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace detail

template <typename T>
Tensor<T>::Tensor() : Tensor(Shape{}, std::vector<T>{T(0)}) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
  }
  if (data.size() != csca::numel(shape)) {
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + to_string(shape));
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
  node_->seq = detail::next_sequence();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(shape, std::vector<T>(csca::numel(shape), T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value, bool requires_grad) {
  return Tensor(shape, std::vector<T>(csca::numel(shape), value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::extent(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         to_string(shape()));
  }
  return node_->shape[axis];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!is_leaf()) throw ContractError("only leaf tensors may be modified in place");
  return node_->data;
}

template <typename T>
std::vector<T> Tensor<T>::grad() const {
  if (node_->grad.empty()) return std::vector<T>(node_->data.size(), T(0));
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  node_->grad.clear();
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ContractError("item() requires a one-element tensor, shape is " + to_string(shape()));
  return node_->data[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw DimensionError("index rank does not match shape " + to_string(shape()));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= node_->shape[axis]) throw DimensionError("index out of range for shape " + to_string(shape()));
    flat = flat * node_->shape[axis] + i;
    ++axis;
  }
  return node_->data[flat];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->data, false);
}

template <typename T>
Tensor<T> Tensor<T>::clone_leaf(bool requires_grad) const {
  return Tensor(node_->shape, node_->data, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_node(std::shared_ptr<detail::Node<T>> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

template <typename T>
GradTape<T> GradTape<T>::record(const Tensor<T>& loss) {
  GradTape tape;
  tape.root_ = loss.node();
  std::unordered_set<const detail::Node<T>*> seen;
  std::vector<std::shared_ptr<detail::Node<T>>> stack{loss.node()};
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    if (!node->requires_grad || !seen.insert(node.get()).second) continue;
    if (node->adjoint) tape.entries_.push_back({node});
    for (const auto& in : node->inputs) stack.push_back(in);
  }
  std::sort(tape.entries_.begin(), tape.entries_.end(),
            [](const Entry& a, const Entry& b) { return a.node->seq > b.node->seq; });
  return tape;
}

template <typename T>
std::vector<std::string> GradTape<T>::replay() {
  std::vector<std::string> visited;
  if (!root_ || !root_->requires_grad) return visited;
  root_->ensure_grad();
  root_->grad[0] += T(1);
  for (auto& entry : entries_) {
    auto& node = *entry.node;
    if (node.grad.empty()) continue;
    const double factor = testing::adjoint_corruption_for(node.op);
    if (factor != 1.0) {
      std::vector<T> scaled(node.grad);
      for (auto& g : scaled) g = static_cast<T>(g * factor);
      node.adjoint(node, scaled);
    } else {
      node.adjoint(node, node.grad);
    }
    visited.push_back(node.op);
  }
  return visited;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + to_string(loss.shape()));
  }
  GradTape<T>::record(loss).replay();
}

namespace testing {
namespace {
std::mutex g_corrupt_mutex;
std::string g_corrupt_op;
double g_corrupt_factor = 1.0;
std::atomic<bool> g_corrupt_active{false};
}  // namespace

void corrupt_adjoint(std::string op, double factor) {
  std::lock_guard lock(g_corrupt_mutex);
  g_corrupt_op = std::move(op);
  g_corrupt_factor = factor;
  g_corrupt_active = !g_corrupt_op.empty();
}

void clear_corruption() { corrupt_adjoint("", 1.0); }

double adjoint_corruption_for(std::string_view op) {
  if (!g_corrupt_active.load(std::memory_order_relaxed)) return 1.0;
  std::lock_guard lock(g_corrupt_mutex);
  return op == g_corrupt_op ? g_corrupt_factor : 1.0;
}

}  // namespace testing

template class Tensor<float>;
template class Tensor<double>;
template class GradTape<float>;
template class GradTape<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace csca

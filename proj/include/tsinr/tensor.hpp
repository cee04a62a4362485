#pragma once

// Dense row-major float64 tensors with define-by-run reverse-mode autodiff.
//
// A Tensor is a cheap handle onto shared storage; copying a Tensor aliases the
// same buffer (use clone() for a deep copy). Operations record themselves on
// the Tape installed by the innermost TapeScope of the calling thread, but only
// when at least one operand requires a gradient. Without an active tape every
// op is a plain forward computation.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tsinr {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until populated by backward
  bool requires_grad = false;
};
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  /// Row-major 2-D literal, e.g. Tensor::matrix({{1, 2}, {3, 4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();  // allocates zeros when absent
  void zero_grad();

  /// Deep copy of values (and the requires_grad flag); no gradient, no tape link.
  Tensor clone() const;
  /// Same values in fresh storage with requires_grad off.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

bool bitwise_equal(const Tensor& a, const Tensor& b);

/// Ordered record of primitive operations for one training step.
class Tape {
 public:
  struct Node {
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    // Reads output->grad and accumulates into the inputs' grads.
    std::function<void(detail::TensorImpl& out)> backward;
  };

  void record(Node node);
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Replays adjoints in reverse order from a scalar loss, then clears the tape.
  void backward(const Tensor& loss);
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

/// Installs a tape as the recording target for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// backward() on the thread's active tape.
void backward(const Tensor& loss);

// -- primitives ---------------------------------------------------------------

Shape broadcast_shape(const Shape& a, const Shape& b);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor cos(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor pow_scalar(const Tensor& x, double exponent);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);

enum class Elementwise { add, sub, mul, relu, square, sin, cos, pow_scalar };
/// Dispatch form; `b` is ignored for unary ops, `exponent` only used by pow_scalar.
Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b = {}, double exponent = 1.0);

Tensor softmax_lastdim(const Tensor& x);
/// (x - mean) / sqrt(var + eps) over the last dimension, no affine terms.
Tensor normalize_lastdim(const Tensor& x, double eps);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);

}  // namespace tsinr

#include "tsinr/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "tsinr/errors.hpp"

namespace tsinr {

namespace {

using detail::TensorImpl;
using ImplPtr = std::shared_ptr<TensorImpl>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

thread_local Tape* g_active_tape = nullptr;

ImplPtr make_impl(Shape shape, std::vector<double> data) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return impl;
}

std::vector<double>& grad_buffer(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

const TensorImpl& checked(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor operand");
  return *t.impl();
}

// Builds the result tensor and, when a tape is active and an operand needs a
// gradient, records the backward closure.
Tensor finish(Shape shape, std::vector<double> data, std::initializer_list<const Tensor*> inputs,
              std::function<void(TensorImpl&)> backward_fn) {
  auto out = make_impl(std::move(shape), std::move(data));
  Tape* tape = g_active_tape;
  bool needs = false;
  for (const Tensor* in : inputs) needs = needs || in->requires_grad();
  if (tape != nullptr && needs) {
    out->requires_grad = true;
    Tape::Node node;
    for (const Tensor* in : inputs) node.inputs.push_back(in->impl());
    node.output = out;
    node.backward = std::move(backward_fn);
    tape->record(std::move(node));
  }
  return Tensor(out);
}

Tensor finish_n(Shape shape, std::vector<double> data, std::span<const Tensor> inputs,
                std::function<void(TensorImpl&)> backward_fn) {
  auto out = make_impl(std::move(shape), std::move(data));
  Tape* tape = g_active_tape;
  bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (tape != nullptr && needs) {
    out->requires_grad = true;
    Tape::Node node;
    for (const Tensor& in : inputs) node.inputs.push_back(in.impl());
    node.output = out;
    node.backward = std::move(backward_fn);
    tape->record(std::move(node));
  }
  return Tensor(out);
}

void require_rank2(const TensorImpl& t, const char* op) {
  if (t.shape.size() != 2)
    throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " + shape_to_string(t.shape));
}

// For each flat index of `out`, the flat index of the broadcast operand `in`.
std::vector<std::size_t> broadcast_offsets(const Shape& in, const Shape& out) {
  const std::size_t rank = out.size();
  std::vector<std::size_t> in_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t axis_in = in.size() - 1 - k;
    const std::size_t axis_out = rank - 1 - k;
    in_stride[axis_out] = in[axis_in] == 1 ? 0 : stride;
    stride *= in[axis_in];
  }
  const std::size_t n = shape_numel(out);
  std::vector<std::size_t> offsets(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i] = off;
    for (std::size_t ax = rank; ax-- > 0;) {
      ++counter[ax];
      off += in_stride[ax];
      if (counter[ax] < out[ax]) break;
      off -= in_stride[ax] * counter[ax];
      counter[ax] = 0;
    }
  }
  return offsets;
}

enum class BinKind { add, sub, mul };

double apply_bin(BinKind k, double x, double y) {
  switch (k) {
    case BinKind::add: return x + y;
    case BinKind::sub: return x - y;
    case BinKind::mul: return x * y;
  }
  return 0.0;
}

Tensor binary(BinKind kind, const Tensor& a, const Tensor& b, const char* name) {
  const TensorImpl& A = checked(a, name);
  const TensorImpl& B = checked(b, name);
  Shape out_shape = broadcast_shape(A.shape, B.shape);
  const std::size_t n = shape_numel(out_shape);
  std::vector<double> out(n);

  const bool same = A.shape == out_shape && B.shape == out_shape;
  std::vector<std::size_t> ia, ib;
  if (same) {
    for (std::size_t i = 0; i < n; ++i) out[i] = apply_bin(kind, A.data[i], B.data[i]);
  } else {
    ia = A.shape == out_shape ? std::vector<std::size_t>{} : broadcast_offsets(A.shape, out_shape);
    ib = B.shape == out_shape ? std::vector<std::size_t>{} : broadcast_offsets(B.shape, out_shape);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ia.empty() ? A.data[i] : A.data[ia[i]];
      const double y = ib.empty() ? B.data[i] : B.data[ib[i]];
      out[i] = apply_bin(kind, x, y);
    }
  }

  auto pa = a.impl();
  auto pb = b.impl();
  return finish(std::move(out_shape), std::move(out), {&a, &b},
                [kind, pa, pb, ia = std::move(ia), ib = std::move(ib)](TensorImpl& o) {
                  const std::size_t n = o.grad.size();
                  auto index_a = [&](std::size_t i) { return ia.empty() ? i : ia[i]; };
                  auto index_b = [&](std::size_t i) { return ib.empty() ? i : ib[i]; };
                  if (pa->requires_grad) {
                    auto& ga = grad_buffer(*pa);
                    for (std::size_t i = 0; i < n; ++i) {
                      const double g = o.grad[i];
                      ga[index_a(i)] += kind == BinKind::mul ? g * pb->data[index_b(i)] : g;
                    }
                  }
                  if (pb->requires_grad) {
                    auto& gb = grad_buffer(*pb);
                    for (std::size_t i = 0; i < n; ++i) {
                      const double g = o.grad[i];
                      double d = g;
                      if (kind == BinKind::sub) d = -g;
                      if (kind == BinKind::mul) d = g * pa->data[index_a(i)];
                      gb[index_b(i)] += d;
                    }
                  }
                });
}

// Pointwise op with derivative expressed through input x and output y.
template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df, const char* name) {
  const TensorImpl& X = checked(x, name);
  std::vector<double> out(X.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(X.data[i]);
  auto px = x.impl();
  return finish(X.shape, std::move(out), {&x}, [px, df](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * df(px->data[i], o.data[i]);
  });
}

}  // namespace

// -- shape helpers --------------------------------------------------------------

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t ea = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t eb = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (ea != eb && ea != 1 && eb != 1)
      throw DimensionError("cannot broadcast " + shape_to_string(a) + " with " + shape_to_string(b));
    out[rank - 1 - k] = std::max(ea, eb);
  }
  return out;
}

// -- Tensor ---------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  for (std::size_t e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_to_string(shape));
  const std::size_t n = shape_numel(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  for (std::size_t e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_to_string(shape));
  if (shape_numel(shape) != values.size())
    throw DimensionError("shape " + shape_to_string(shape) + " does not hold " + std::to_string(values.size()) +
                         " values");
  return Tensor(make_impl(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return from({r, c}, std::move(values));
}

const Shape& Tensor::shape() const { return checked(*this, "shape").shape; }
std::size_t Tensor::numel() const { return checked(*this, "numel").data.size(); }

std::size_t Tensor::rows() const {
  require_rank2(checked(*this, "rows"), "rows");
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  require_rank2(checked(*this, "cols"), "cols");
  return impl_->shape[1];
}

std::span<const double> Tensor::data() const { return checked(*this, "data").data; }
std::span<double> Tensor::mutable_data() {
  checked(*this, "mutable_data");
  return impl_->data;
}

double Tensor::item() const {
  const auto& t = checked(*this, "item");
  if (t.data.size() != 1) throw ContractError("item() on tensor of shape " + shape_to_string(t.shape));
  return t.data[0];
}

double Tensor::at(std::size_t i) const { return checked(*this, "at").data.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
  const auto& t = checked(*this, "at");
  require_rank2(t, "at");
  if (r >= t.shape[0] || c >= t.shape[1]) throw std::out_of_range("tensor index out of range");
  return t.data[r * t.shape[1] + c];
}

bool Tensor::requires_grad() const { return impl_ != nullptr && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  checked(*this, "set_requires_grad");
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return impl_ != nullptr && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const { return checked(*this, "grad").grad; }

std::span<double> Tensor::mutable_grad() {
  checked(*this, "mutable_grad");
  return grad_buffer(*impl_);
}

void Tensor::zero_grad() {
  checked(*this, "zero_grad");
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  const auto& t = checked(*this, "clone");
  auto impl = make_impl(t.shape, t.data);
  impl->requires_grad = t.requires_grad;
  return Tensor(impl);
}

Tensor Tensor::detach() const {
  const auto& t = checked(*this, "detach");
  return Tensor(make_impl(t.shape, t.data));
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  auto x = a.data();
  auto y = b.data();
  return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                    [](double p, double q) { return std::memcmp(&p, &q, sizeof(double)) == 0; });
}

// -- Tape ----------------------------------------------------------------------

void Tape::record(Node node) { nodes_.push_back(std::move(node)); }

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward: undefined loss");
  if (loss.numel() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " + shape_to_string(loss.shape()));
  if (nodes_.empty()) throw ContractError("backward: tape is empty");
  if (!loss.requires_grad()) throw ContractError("backward: loss is not connected to the tape");

  for (auto& node : nodes_) {
    grad_buffer(*node.output);
    for (auto& in : node.inputs)
      if (in->requires_grad) grad_buffer(*in);
  }
  loss.impl()->grad.assign(1, 1.0);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward(*it->output);
  nodes_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss) {
  if (g_active_tape == nullptr) throw ContractError("backward: no active tape");
  g_active_tape->backward(loss);
}

// -- primitives ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const TensorImpl& A = checked(a, "matmul");
  const TensorImpl& B = checked(b, "matmul");
  if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[0])
    throw DimensionError("matmul: cannot multiply " + shape_to_string(A.shape) + " by " + shape_to_string(B.shape));
  const auto m = static_cast<Eigen::Index>(A.shape[0]);
  const auto k = static_cast<Eigen::Index>(A.shape[1]);
  const auto n = static_cast<Eigen::Index>(B.shape[1]);
  std::vector<double> out(static_cast<std::size_t>(m * n));
  MapMat(out.data(), m, n).noalias() = ConstMapMat(A.data.data(), m, k) * ConstMapMat(B.data.data(), k, n);

  auto pa = a.impl();
  auto pb = b.impl();
  return finish({A.shape[0], B.shape[1]}, std::move(out), {&a, &b}, [pa, pb, m, k, n](TensorImpl& o) {
    ConstMapMat g(o.grad.data(), m, n);
    if (pa->requires_grad) {
      MapMat ga(grad_buffer(*pa).data(), m, k);
      ga.noalias() += g * ConstMapMat(pb->data.data(), k, n).transpose();
    }
    if (pb->requires_grad) {
      MapMat gb(grad_buffer(*pb).data(), k, n);
      gb.noalias() += ConstMapMat(pa->data.data(), m, k).transpose() * g;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(BinKind::add, a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinKind::sub, a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinKind::mul, a, b, "mul"); }

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor square(const Tensor& x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; }, "square");
}

Tensor sin(const Tensor& x) {
  return unary(
      x, [](double v) { return std::sin(v); }, [](double v, double) { return std::cos(v); }, "sin");
}

Tensor cos(const Tensor& x) {
  return unary(
      x, [](double v) { return std::cos(v); }, [](double v, double) { return -std::sin(v); }, "cos");
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Tensor pow_scalar(const Tensor& x, double exponent) {
  return unary(
      x, [exponent](double v) { return std::pow(v, exponent); },
      [exponent](double v, double) { return exponent * std::pow(v, exponent - 1.0); }, "pow_scalar");
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; }, "scale");
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      x, [value](double v) { return v + value; }, [](double, double) { return 1.0; }, "add_scalar");
}

Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b, double exponent) {
  switch (op) {
    case Elementwise::add: return add(a, b);
    case Elementwise::sub: return sub(a, b);
    case Elementwise::mul: return mul(a, b);
    case Elementwise::relu: return relu(a);
    case Elementwise::square: return square(a);
    case Elementwise::sin: return sin(a);
    case Elementwise::cos: return cos(a);
    case Elementwise::pow_scalar: return pow_scalar(a, exponent);
  }
  throw ContractError("elementwise: unknown op");
}

Tensor softmax_lastdim(const Tensor& x) {
  const TensorImpl& X = checked(x, "softmax_lastdim");
  if (X.shape.empty()) throw DimensionError("softmax_lastdim: rank-0 tensor");
  const std::size_t n = X.shape.back();
  const std::size_t rows = X.data.size() / n;
  std::vector<double> out(X.data.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = X.data.data() + r * n;
    double* y = out.data() + r * n;
    double mx = in[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = std::exp(in[j] - mx);
      total += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= total;
  }
  auto px = x.impl();
  return finish(X.shape, std::move(out), {&x}, [px, n, rows](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = o.data.data() + r * n;
      const double* go = o.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += go[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[j] * (go[j] - dot);
    }
  });
}

Tensor normalize_lastdim(const Tensor& x, double eps) {
  const TensorImpl& X = checked(x, "normalize_lastdim");
  if (X.shape.empty()) throw DimensionError("normalize_lastdim: rank-0 tensor");
  const std::size_t n = X.shape.back();
  const std::size_t rows = X.data.size() / n;
  std::vector<double> out(X.data.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = X.data.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += in[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (in[j] - mu) * inv_std[r];
  }
  auto px = x.impl();
  return finish(X.shape, std::move(out), {&x}, [px, n, rows, inv_std = std::move(inv_std)](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xh = o.data.data() + r * n;
      const double* go = o.grad.data() + r * n;
      double mean_g = 0.0;
      double mean_gx = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        mean_g += go[j];
        mean_gx += go[j] * xh[j];
      }
      mean_g *= inv_n;
      mean_gx *= inv_n;
      for (std::size_t j = 0; j < n; ++j) g[r * n + j] += inv_std[r] * (go[j] - mean_g - xh[j] * mean_gx);
    }
  });
}

Tensor sum(const Tensor& x) {
  const TensorImpl& X = checked(x, "sum");
  double total = 0.0;
  for (double v : X.data) total += v;
  auto px = x.impl();
  return finish({1}, {total}, {&x}, [px](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (double& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const TensorImpl& X = checked(x, "mean");
  double total = 0.0;
  for (double v : X.data) total += v;
  const double inv = 1.0 / static_cast<double>(X.data.size());
  auto px = x.impl();
  return finish({1}, {total * inv}, {&x}, [px, inv](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (double& v : g) v += o.grad[0] * inv;
  });
}

Tensor transpose(const Tensor& x) {
  const TensorImpl& X = checked(x, "transpose");
  require_rank2(X, "transpose");
  const std::size_t r = X.shape[0], c = X.shape[1];
  std::vector<double> out(X.data.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = X.data[i * c + j];
  auto px = x.impl();
  return finish({c, r}, std::move(out), {&x}, [px, r, c](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += o.grad[j * r + i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  const TensorImpl& X = checked(x, "reshape");
  if (shape_numel(shape) != X.data.size())
    throw DimensionError("reshape: cannot view " + shape_to_string(X.shape) + " as " + shape_to_string(shape));
  auto px = x.impl();
  return finish(std::move(shape), X.data, {&x}, [px](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  const TensorImpl& X = checked(x, "slice_rows");
  require_rank2(X, "slice_rows");
  if (count == 0 || begin + count > X.shape[0])
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_to_string(X.shape));
  const std::size_t c = X.shape[1];
  std::vector<double> out(X.data.begin() + static_cast<std::ptrdiff_t>(begin * c),
                          X.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
  auto px = x.impl();
  return finish({count, c}, std::move(out), {&x}, [px, begin, c](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[begin * c + i] += o.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  const TensorImpl& X = checked(x, "slice_cols");
  require_rank2(X, "slice_cols");
  if (count == 0 || begin + count > X.shape[1])
    throw DimensionError("slice_cols: cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_to_string(X.shape));
  const std::size_t r = X.shape[0], c = X.shape[1];
  std::vector<double> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(X.data.data() + i * c + begin, count, out.data() + i * count);
  auto px = x.impl();
  return finish({r, count}, std::move(out), {&x}, [px, begin, r, c, count](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * c + begin + j] += o.grad[i * count + j];
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const TensorImpl& X = checked(x, "gather_rows");
  require_rank2(X, "gather_rows");
  if (rows.empty()) throw DimensionError("gather_rows: empty row list");
  const std::size_t c = X.shape[1];
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  std::vector<double> out(idx.size() * c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= X.shape[0]) throw DimensionError("gather_rows: row index out of range");
    std::copy_n(X.data.data() + idx[i] * c, c, out.data() + i * c);
  }
  auto px = x.impl();
  const std::size_t n = idx.size();
  return finish({n, c}, std::move(out), {&x}, [px, c, idx = std::move(idx)](TensorImpl& o) {
    if (!px->requires_grad) return;
    auto& g = grad_buffer(*px);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += o.grad[i * c + j];
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  std::size_t c = 0, total_rows = 0;
  for (const Tensor& p : parts) {
    const TensorImpl& P = checked(p, "concat_rows");
    require_rank2(P, "concat_rows");
    if (c == 0) c = P.shape[1];
    if (P.shape[1] != c)
      throw DimensionError("concat_rows: column mismatch " + shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(P.shape));
    total_rows += P.shape[0];
  }
  std::vector<double> out;
  out.reserve(total_rows * c);
  std::vector<ImplPtr> impls;
  for (const Tensor& p : parts) {
    out.insert(out.end(), p.impl()->data.begin(), p.impl()->data.end());
    impls.push_back(p.impl());
  }
  return finish_n({total_rows, c}, std::move(out), parts, [impls = std::move(impls)](TensorImpl& o) {
    std::size_t offset = 0;
    for (const auto& p : impls) {
      if (p->requires_grad) {
        auto& g = grad_buffer(*p);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[offset + i];
      }
      offset += p->data.size();
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  std::size_t r = 0, total_cols = 0;
  bool first = true;
  for (const Tensor& p : parts) {
    const TensorImpl& P = checked(p, "concat_cols");
    require_rank2(P, "concat_cols");
    if (first) r = P.shape[0];
    first = false;
    if (P.shape[0] != r)
      throw DimensionError("concat_cols: row mismatch " + shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(P.shape));
    total_cols += P.shape[1];
  }
  std::vector<double> out(r * total_cols);
  std::vector<ImplPtr> impls;
  std::size_t col0 = 0;
  for (const Tensor& p : parts) {
    const std::size_t c = p.impl()->shape[1];
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(p.impl()->data.data() + i * c, c, out.data() + i * total_cols + col0);
    col0 += c;
    impls.push_back(p.impl());
  }
  return finish_n({r, total_cols}, std::move(out), parts, [impls = std::move(impls), r, total_cols](TensorImpl& o) {
    std::size_t col0 = 0;
    for (const auto& p : impls) {
      const std::size_t c = p->shape[1];
      if (p->requires_grad) {
        auto& g = grad_buffer(*p);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) g[i * c + j] += o.grad[i * total_cols + col0 + j];
      }
      col0 += c;
    }
  });
}

}  // namespace tsinr

// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// A Tensor is a shared handle to a node in an acyclic computation graph.
// Operations record a backward rule; backward() walks the graph in reverse
// topological order and accumulates gradients into tracked leaves.
#pragma once

#include <Eigen/Core>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace gwm {

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

class EmptySoftmaxError : public std::runtime_error {
 public:
  explicit EmptySoftmaxError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

enum class OpKind {
  Leaf,
  MatMul,
  Bmm,
  Add,
  Mul,
  Affine,
  Concat,
  SumReduce,
  Tanh,
  Sigmoid,
  Relu,
  SoftmaxMasked,
  Slice,
  Broadcast,
  BceLoss,
  MseLoss,
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Bmm: return "bmm";
    case OpKind::Add: return "add";
    case OpKind::Mul: return "mul";
    case OpKind::Affine: return "affine";
    case OpKind::Concat: return "concat";
    case OpKind::SumReduce: return "sum_reduce";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Relu: return "relu";
    case OpKind::SoftmaxMasked: return "softmax_masked";
    case OpKind::Slice: return "slice";
    case OpKind::Broadcast: return "broadcast";
    case OpKind::BceLoss: return "bce_loss";
    case OpKind::MseLoss: return "mse_loss";
  }
  return "?";
}

namespace detail {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated lazily, same length as values when present
  bool tracked = false;
  OpKind op = OpKind::Leaf;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(TensorNode&)> backward_fn;

  std::size_t size() const { return values.size(); }
  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

inline std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Test hook: when set, backward propagation through the matching op kind is
// scaled, corrupting analytic gradients on purpose (negative controls).
struct BackwardFault {
  static std::atomic<bool>& active() {
    static std::atomic<bool> a{false};
    return a;
  }
  static std::atomic<OpKind>& kind() {
    static std::atomic<OpKind> k{OpKind::Leaf};
    return k;
  }
};

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

}  // namespace detail

inline void inject_backward_fault(OpKind kind) {
  detail::BackwardFault::kind().store(kind);
  detail::BackwardFault::active().store(true);
}

inline void clear_backward_fault() { detail::BackwardFault::active().store(false); }

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool tracked = false) {
    auto n = std::make_shared<detail::TensorNode>();
    n->values.assign(detail::shape_size(shape), 0.0);
    n->shape = std::move(shape);
    n->tracked = tracked;
    if (tracked) n->ensure_grad();
    return Tensor(std::move(n));
  }

  static Tensor constant(std::vector<int> shape, std::vector<double> values) {
    if (values.size() != detail::shape_size(shape))
      throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                       detail::shape_str(shape));
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    return Tensor(std::move(n));
  }

  static Tensor parameter(std::vector<int> shape, std::vector<double> values) {
    Tensor t = constant(std::move(shape), std::move(values));
    t.node_->tracked = true;
    t.node_->ensure_grad();
    return t;
  }

  static Tensor scalar(double v) { return constant({}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return node_->values.size(); }
  bool tracked() const { return node_->tracked; }

  std::vector<double>& values() { return node_->values; }
  const std::vector<double>& values() const { return node_->values; }

  const std::vector<double>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }

  double item() const {
    if (size() != 1) throw ShapeError("item: tensor " + detail::shape_str(shape()) + " is not scalar");
    return node_->values[0];
  }

  double at(std::initializer_list<int> idx) const {
    if (idx.size() != node_->shape.size()) throw ShapeError("at: rank mismatch");
    std::size_t flat = 0;
    auto it = idx.begin();
    for (std::size_t i = 0; i < node_->shape.size(); ++i, ++it)
      flat = flat * static_cast<std::size_t>(node_->shape[i]) + static_cast<std::size_t>(*it);
    return node_->values[flat];
  }

  void zero_grad() {
    if (node_->tracked) node_->grad.assign(node_->values.size(), 0.0);
  }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op(OpKind, std::vector<int>, std::vector<double>, std::vector<Tensor>,
                        std::function<void(detail::TensorNode&)>);
};

// Assembles an op node. Result is tracked iff any input is tracked.
inline Tensor make_op(OpKind op, std::vector<int> shape, std::vector<double> values,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::TensorNode&)> backward_fn) {
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->op = op;
  bool tracked = false;
  n->inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    tracked = tracked || t.tracked();
    n->inputs.push_back(t.node());
  }
  n->tracked = tracked;
  if (tracked) n->backward_fn = std::move(backward_fn);
  return Tensor(std::move(n));
}

namespace detail {

inline void accumulate(TensorNode& dst, const std::vector<double>& inc) {
  dst.ensure_grad();
  for (std::size_t i = 0; i < inc.size(); ++i) dst.grad[i] += inc[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// matmul: a[..., k] x b[k, n] -> [..., n]. Leading axes of a are flattened.

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 1 || b.rank() != 2)
    throw ShapeError(std::string("matmul: need [...,k] x [k,n], got ") +
                     detail::shape_str(a.shape()) + " x " + detail::shape_str(b.shape()));
  const int k = a.dim(a.rank() - 1);
  if (k != b.dim(0))
    throw ShapeError("matmul: inner extents disagree: " + detail::shape_str(a.shape()) + " vs " +
                     detail::shape_str(b.shape()));
  const int n = b.dim(1);
  const int rows = static_cast<int>(a.size()) / k;
  std::vector<int> out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(n);

  std::vector<double> out(static_cast<std::size_t>(rows) * n);
  {
    detail::ECMap A(a.values().data(), rows, k);
    detail::ECMap B(b.values().data(), k, n);
    detail::EMap C(out.data(), rows, n);
    C.noalias() = A * B;
  }
  return make_op(OpKind::MatMul, std::move(out_shape), std::move(out), {a, b},
                 [rows, k, n](detail::TensorNode& self) {
                   auto& ia = *self.inputs[0];
                   auto& ib = *self.inputs[1];
                   detail::ECMap D(self.grad.data(), rows, n);
                   if (ia.tracked) {
                     ia.ensure_grad();
                     detail::ECMap B(ib.values.data(), k, n);
                     detail::EMap GA(ia.grad.data(), rows, k);
                     GA.noalias() += D * B.transpose();
                   }
                   if (ib.tracked) {
                     ib.ensure_grad();
                     detail::ECMap A(ia.values.data(), rows, k);
                     detail::EMap GB(ib.grad.data(), k, n);
                     GB.noalias() += A.transpose() * D;
                   }
                 });
}

// Batched matmul: a[B,m,k] x b[B,k,n] -> [B,m,n]; with transpose_b, b is [B,n,k].
inline Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0))
    throw ShapeError(std::string("bmm: need [B,m,k] x [B,k,n], got ") +
                     detail::shape_str(a.shape()) + " x " + detail::shape_str(b.shape()));
  const int batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const int n = transpose_b ? b.dim(1) : b.dim(2);
  const int bk = transpose_b ? b.dim(2) : b.dim(1);
  if (bk != k)
    throw ShapeError("bmm: inner extents disagree: " + detail::shape_str(a.shape()) + " vs " +
                     detail::shape_str(b.shape()));

  std::vector<double> out(static_cast<std::size_t>(batch) * m * n);
  for (int g = 0; g < batch; ++g) {
    detail::ECMap A(a.values().data() + static_cast<std::size_t>(g) * m * k, m, k);
    detail::EMap C(out.data() + static_cast<std::size_t>(g) * m * n, m, n);
    if (transpose_b) {
      detail::ECMap B(b.values().data() + static_cast<std::size_t>(g) * n * k, n, k);
      C.noalias() = A * B.transpose();
    } else {
      detail::ECMap B(b.values().data() + static_cast<std::size_t>(g) * k * n, k, n);
      C.noalias() = A * B;
    }
  }
  return make_op(OpKind::Bmm, {batch, m, n}, std::move(out), {a, b},
                 [batch, m, k, n, transpose_b](detail::TensorNode& self) {
                   auto& ia = *self.inputs[0];
                   auto& ib = *self.inputs[1];
                   if (ia.tracked) ia.ensure_grad();
                   if (ib.tracked) ib.ensure_grad();
                   for (int g = 0; g < batch; ++g) {
                     detail::ECMap D(self.grad.data() + static_cast<std::size_t>(g) * m * n, m, n);
                     if (ia.tracked) {
                       detail::EMap GA(ia.grad.data() + static_cast<std::size_t>(g) * m * k, m, k);
                       if (transpose_b) {
                         detail::ECMap B(ib.values.data() + static_cast<std::size_t>(g) * n * k, n, k);
                         GA.noalias() += D * B;
                       } else {
                         detail::ECMap B(ib.values.data() + static_cast<std::size_t>(g) * k * n, k, n);
                         GA.noalias() += D * B.transpose();
                       }
                     }
                     if (ib.tracked) {
                       detail::ECMap A(ia.values.data() + static_cast<std::size_t>(g) * m * k, m, k);
                       if (transpose_b) {
                         detail::EMap GB(ib.grad.data() + static_cast<std::size_t>(g) * n * k, n, k);
                         GB.noalias() += D.transpose() * A;
                       } else {
                         detail::EMap GB(ib.grad.data() + static_cast<std::size_t>(g) * k * n, k, n);
                         GB.noalias() += A.transpose() * D;
                       }
                     }
                   }
                 });
}

// ---------------------------------------------------------------------------
// add: same-shape elementwise, or b a rank-1 bias broadcast over the last axis.

inline Tensor add(const Tensor& a, const Tensor& b) {
  const bool bias = b.rank() == 1 && a.rank() >= 1 && a.dim(a.rank() - 1) == b.dim(0) &&
                    a.shape() != b.shape();
  if (!bias && a.shape() != b.shape())
    throw ShapeError("add: shape mismatch: " + detail::shape_str(a.shape()) + " vs " +
                     detail::shape_str(b.shape()));
  std::vector<double> out(a.size());
  if (bias) {
    const std::size_t d = b.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i % d];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  }
  return make_op(OpKind::Add, a.shape(), std::move(out), {a, b},
                 [bias](detail::TensorNode& self) {
                   auto& ia = *self.inputs[0];
                   auto& ib = *self.inputs[1];
                   if (ia.tracked) detail::accumulate(ia, self.grad);
                   if (ib.tracked) {
                     ib.ensure_grad();
                     if (bias) {
                       const std::size_t d = ib.values.size();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         ib.grad[i % d] += self.grad[i];
                     } else {
                       detail::accumulate(ib, self.grad);
                     }
                   }
                 });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mul: shape mismatch: " + detail::shape_str(a.shape()) + " vs " +
                     detail::shape_str(b.shape()));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_op(OpKind::Mul, a.shape(), std::move(out), {a, b},
                 [](detail::TensorNode& self) {
                   auto& ia = *self.inputs[0];
                   auto& ib = *self.inputs[1];
                   if (ia.tracked) {
                     ia.ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       ia.grad[i] += self.grad[i] * ib.values[i];
                   }
                   if (ib.tracked) {
                     ib.ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       ib.grad[i] += self.grad[i] * ia.values[i];
                   }
                 });
}

// scale*t + shift, elementwise with scalar coefficients.
inline Tensor affine(const Tensor& t, double scale, double shift) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * t.values()[i] + shift;
  return make_op(OpKind::Affine, t.shape(), std::move(out), {t},
                 [scale](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     in.grad[i] += scale * self.grad[i];
                 });
}

inline Tensor sub(const Tensor& a, const Tensor& b) { return add(a, affine(b, -1.0, 0.0)); }
inline Tensor one_minus(const Tensor& t) { return affine(t, -1.0, 1.0); }

// ---------------------------------------------------------------------------
// concat / slice along an arbitrary axis.

inline Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const int rank = parts[0].rank();
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("concat: bad axis");
  std::vector<int> out_shape = parts[0].shape();
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != rank) throw ShapeError("concat: rank mismatch");
    for (int i = 0; i < rank; ++i)
      if (i != axis && p.dim(i) != out_shape[i])
        throw ShapeError("concat: shape mismatch: " + detail::shape_str(out_shape) + " vs " +
                         detail::shape_str(p.shape()));
    total += p.dim(axis);
  }
  out_shape[static_cast<std::size_t>(axis)] = total;

  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(out_shape[i]);
  for (int i = axis + 1; i < rank; ++i) inner *= static_cast<std::size_t>(out_shape[i]);

  std::vector<double> out(detail::shape_size(out_shape));
  std::vector<int> extents;
  extents.reserve(parts.size());
  for (const Tensor& p : parts) extents.push_back(p.dim(axis));

  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto& src = parts[pi].values();
    const std::size_t block = static_cast<std::size_t>(extents[pi]) * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy(src.begin() + o * block, src.begin() + (o + 1) * block,
                out.begin() + o * (static_cast<std::size_t>(total) * inner) + offset);
    offset += block;
  }
  return make_op(OpKind::Concat, std::move(out_shape), std::move(out), parts,
                 [outer, inner, total, extents](detail::TensorNode& self) {
                   std::size_t offset = 0;
                   for (std::size_t pi = 0; pi < self.inputs.size(); ++pi) {
                     auto& in = *self.inputs[pi];
                     const std::size_t block = static_cast<std::size_t>(extents[pi]) * inner;
                     if (in.tracked) {
                       in.ensure_grad();
                       for (std::size_t o = 0; o < outer; ++o) {
                         const double* g =
                             self.grad.data() + o * (static_cast<std::size_t>(total) * inner) + offset;
                         double* dst = in.grad.data() + o * block;
                         for (std::size_t i = 0; i < block; ++i) dst[i] += g[i];
                       }
                     }
                     offset += block;
                   }
                 });
}

inline Tensor slice(const Tensor& t, int axis, int start, int len) {
  const int rank = t.rank();
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("slice: bad axis");
  if (start < 0 || len <= 0 || start + len > t.dim(axis))
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of extent " + std::to_string(t.dim(axis)));
  std::vector<int> out_shape = t.shape();
  out_shape[static_cast<std::size_t>(axis)] = len;
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(t.dim(i));
  for (int i = axis + 1; i < rank; ++i) inner *= static_cast<std::size_t>(t.dim(i));
  const std::size_t src_block = static_cast<std::size_t>(t.dim(axis)) * inner;
  const std::size_t dst_block = static_cast<std::size_t>(len) * inner;

  std::vector<double> out(detail::shape_size(out_shape));
  for (std::size_t o = 0; o < outer; ++o)
    std::copy(t.values().begin() + o * src_block + static_cast<std::size_t>(start) * inner,
              t.values().begin() + o * src_block + static_cast<std::size_t>(start + len) * inner,
              out.begin() + o * dst_block);
  return make_op(OpKind::Slice, std::move(out_shape), std::move(out), {t},
                 [outer, inner, src_block, dst_block, start](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t o = 0; o < outer; ++o) {
                     const double* g = self.grad.data() + o * dst_block;
                     double* dst = in.grad.data() + o * src_block + static_cast<std::size_t>(start) * inner;
                     for (std::size_t i = 0; i < dst_block; ++i) dst[i] += g[i];
                   }
                 });
}

// ---------------------------------------------------------------------------
// reductions

inline Tensor sum_axis(const Tensor& t, int axis) {
  const int rank = t.rank();
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("sum_axis: bad axis");
  std::vector<int> out_shape;
  for (int i = 0; i < rank; ++i)
    if (i != axis) out_shape.push_back(t.dim(i));
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(t.dim(i));
  for (int i = axis + 1; i < rank; ++i) inner *= static_cast<std::size_t>(t.dim(i));
  const std::size_t extent = static_cast<std::size_t>(t.dim(axis));

  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t e = 0; e < extent; ++e) {
      const double* src = t.values().data() + (o * extent + e) * inner;
      double* dst = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  return make_op(OpKind::SumReduce, std::move(out_shape), std::move(out), {t},
                 [outer, inner, extent](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t o = 0; o < outer; ++o)
                     for (std::size_t e = 0; e < extent; ++e) {
                       double* dst = in.grad.data() + (o * extent + e) * inner;
                       const double* g = self.grad.data() + o * inner;
                       for (std::size_t i = 0; i < inner; ++i) dst[i] += g[i];
                     }
                 });
}

inline Tensor sum_all(const Tensor& t) {
  double s = std::accumulate(t.values().begin(), t.values().end(), 0.0);
  return make_op(OpKind::SumReduce, {}, {s}, {t},
                 [](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   const double g = self.grad[0];
                   for (double& x : in.grad) x += g;
                 });
}

inline Tensor mean_all(const Tensor& t) {
  return affine(sum_all(t), 1.0 / static_cast<double>(t.size()), 0.0);
}

// ---------------------------------------------------------------------------
// elementwise nonlinearities

inline Tensor tanh(const Tensor& t) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(t.values()[i]);
  return make_op(OpKind::Tanh, t.shape(), std::move(out), {t},
                 [](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const double y = self.values[i];
                     in.grad[i] += self.grad[i] * (1.0 - y * y);
                   }
                 });
}

inline Tensor sigmoid(const Tensor& t) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = t.values()[i];
    out[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return make_op(OpKind::Sigmoid, t.shape(), std::move(out), {t},
                 [](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const double y = self.values[i];
                     in.grad[i] += self.grad[i] * y * (1.0 - y);
                   }
                 });
}

inline Tensor relu(const Tensor& t) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.values()[i] > 0 ? t.values()[i] : 0.0;
  return make_op(OpKind::Relu, t.shape(), std::move(out), {t},
                 [](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     if (in.values[i] > 0) in.grad[i] += self.grad[i];
                 });
}

// ---------------------------------------------------------------------------
// masked softmax over the last axis

enum class EmptyRows { Error, Zero };

// mask holds 0/1 entries, same shape as logits. Rows with no active entry
// either raise (transmitter contract) or come out all-zero (neighbor
// attention for isolated nodes).
inline Tensor softmax_masked(const Tensor& logits, const Tensor& mask,
                             EmptyRows policy = EmptyRows::Error) {
  if (logits.shape() != mask.shape())
    throw ShapeError("softmax_masked: mask shape " + detail::shape_str(mask.shape()) +
                     " != logits shape " + detail::shape_str(logits.shape()));
  const int rank = logits.rank();
  if (rank < 1) throw ShapeError("softmax_masked: need rank >= 1");
  const std::size_t n = static_cast<std::size_t>(logits.dim(rank - 1));
  const std::size_t rows = logits.size() / n;

  std::vector<double> out(logits.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = logits.values().data() + r * n;
    const double* m = mask.values().data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (m[i] > 0.5 && x[i] > mx) mx = x[i];
    if (mx == -std::numeric_limits<double>::infinity()) {
      if (policy == EmptyRows::Error)
        throw EmptySoftmaxError("softmax_masked: all entries masked out in row " + std::to_string(r));
      continue;  // all-zero row
    }
    double denom = 0.0;
    double* y = out.data() + r * n;
    for (std::size_t i = 0; i < n; ++i)
      if (m[i] > 0.5) {
        y[i] = std::exp(x[i] - mx);
        denom += y[i];
      }
    for (std::size_t i = 0; i < n; ++i) y[i] /= denom;
  }
  return make_op(OpKind::SoftmaxMasked, logits.shape(), std::move(out), {logits, mask},
                 [n, rows](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* y = self.values.data() + r * n;
                     const double* g = self.grad.data() + r * n;
                     double dot = 0.0;
                     for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
                     double* gx = in.grad.data() + r * n;
                     for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (g[i] - dot);
                   }
                 });
}

// ---------------------------------------------------------------------------
// broadcasts

// [B,D] -> [B,n,D]
inline Tensor broadcast_middle(const Tensor& t, int n) {
  if (t.rank() != 2) throw ShapeError("broadcast_middle: need rank 2, got " +
                                      detail::shape_str(t.shape()));
  const std::size_t b = static_cast<std::size_t>(t.dim(0));
  const std::size_t d = static_cast<std::size_t>(t.dim(1));
  std::vector<double> out(b * static_cast<std::size_t>(n) * d);
  for (std::size_t i = 0; i < b; ++i)
    for (int j = 0; j < n; ++j)
      std::copy(t.values().begin() + i * d, t.values().begin() + (i + 1) * d,
                out.begin() + (i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)) * d);
  return make_op(OpKind::Broadcast, {t.dim(0), n, t.dim(1)}, std::move(out), {t},
                 [b, n, d](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t i = 0; i < b; ++i)
                     for (int j = 0; j < n; ++j) {
                       const double* g =
                           self.grad.data() + (i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)) * d;
                       double* dst = in.grad.data() + i * d;
                       for (std::size_t kk = 0; kk < d; ++kk) dst[kk] += g[kk];
                     }
                 });
}

// [...] -> [..., d]: each entry repeated along a new trailing axis.
inline Tensor broadcast_trailing(const Tensor& t, int d) {
  std::vector<int> out_shape = t.shape();
  out_shape.push_back(d);
  std::vector<double> out(t.size() * static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < t.size(); ++i)
    std::fill(out.begin() + i * d, out.begin() + (i + 1) * d, t.values()[i]);
  return make_op(OpKind::Broadcast, std::move(out_shape), std::move(out), {t},
                 [d](detail::TensorNode& self) {
                   auto& in = *self.inputs[0];
                   if (!in.tracked) return;
                   in.ensure_grad();
                   for (std::size_t i = 0; i < in.grad.size(); ++i) {
                     double s = 0.0;
                     const double* g = self.grad.data() + i * d;
                     for (int kk = 0; kk < d; ++kk) s += g[kk];
                     in.grad[i] += s;
                   }
                 });
}

// ---------------------------------------------------------------------------
// reverse pass

inline void backward(const Tensor& loss) {
  if (loss.rank() != 0)
    throw ShapeError("backward: loss must be scalar, got " + detail::shape_str(loss.shape()));
  if (!loss.tracked()) return;

  // Post-order DFS: inputs precede consumers.
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> seen;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::TensorNode* child = node->inputs[next++].get();
      if (child->tracked && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are scratch per invocation; leaf grads accumulate.
  for (detail::TensorNode* n : order) {
    if (n->op != OpKind::Leaf)
      n->grad.assign(n->values.size(), 0.0);
    else
      n->ensure_grad();
  }
  loss.node()->grad[0] += 1.0;

  const bool fault = detail::BackwardFault::active().load();
  const OpKind fault_kind = detail::BackwardFault::kind().load();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* n = *it;
    if (!n->backward_fn) continue;
    if (fault && n->op == fault_kind)
      for (double& g : n->grad) g *= 1.05;
    n->backward_fn(*n);
  }
}

}  // namespace gwm

// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/ops.hpp"

#include <cmath>
#include <string>

#include "vmrnn/kernels.hpp"

namespace vmrnn {

namespace {

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
std::size_t last_dim(const Var<T>& x, const char* op) {
  if (x.shape().empty()) throw ConfigError(std::string(op) + ": scalar input");
  return x.shape().back();
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// Elementwise unary op: forward f(x), backward dy * df(x, y).
template <typename T, typename F, typename DF>
Var<T> unary(const Var<T>& x, F f, DF df) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  const std::size_t n = xv.numel();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(xv[i]);
  return make_op_result<T>(std::move(out), {x}, [df](Node<T>& self) {
    Tensor<T>* gx = parent_grad(self, 0);
    if (!gx) return;
    const auto& in = self.parents[0]->value;
    for (std::size_t i = 0; i < in.numel(); ++i) (*gx)[i] += self.grad[i] * df(in[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_op_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (Tensor<T>* g = parent_grad(self, p))
        for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_op_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
    if (Tensor<T>* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] -= self.grad[i];
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_op_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (Tensor<T>* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * s;
  return make_op_result<T>(std::move(out), {a}, [s](Node<T>& self) {
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * s;
  });
}

template <typename T>
Var<T> add_n(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ConfigError("add_n: no inputs");
  Tensor<T> out(xs.front().shape());
  for (const auto& x : xs) {
    require_same_shape(xs.front(), x, "add_n");
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += x.value()[i];
  }
  return make_op_result<T>(std::move(out), xs, [](Node<T>& self) {
    for (std::size_t p = 0; p < self.parents.size(); ++p)
      if (Tensor<T>* g = parent_grad(self, p))
        for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return unary(x, [](T v) { return stable_sigmoid(v); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> silu(const Var<T>& x) {
  return unary(
      x, [](T v) { return v * stable_sigmoid(v); },
      [](T v, T) {
        const T s = stable_sigmoid(v);
        return s * (T(1) + v * (T(1) - s));
      });
}

template <typename T>
Var<T> softplus(const Var<T>& x) {
  return unary(
      x, [](T v) { return v > T(20) ? v : std::log1p(std::exp(v)); }, [](T v, T) { return stable_sigmoid(v); });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value();
  out.reshape(std::move(shape));
  return make_op_result<T>(std::move(out), {x}, [](Node<T>& self) {
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias) {
  const std::size_t in = last_dim(x, "linear");
  if (w.shape().size() != 2 || w.dim(0) != in)
    throw ConfigError("linear: weight " + shape_str(w.shape()) + " incompatible with input " + shape_str(x.shape()));
  const std::size_t out_dim = w.dim(1);
  if (bias.defined() && bias.shape() != Shape{out_dim}) throw ConfigError("linear: bias shape mismatch");
  const std::size_t rows = x.numel() / in;

  Shape out_shape = x.shape();
  out_shape.back() = out_dim;
  Tensor<T> out(out_shape);
  if (bias.defined())
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < out_dim; ++j) out[r * out_dim + j] = bias.value()[j];
  kernels::gemm(rows, out_dim, in, x.value().data(), w.value().data(), out.data(), bias.defined());

  std::vector<Var<T>> parents{x, w};
  if (bias.defined()) parents.push_back(bias);
  return make_op_result<T>(std::move(out), std::move(parents), [rows, in, out_dim](Node<T>& self) {
    const auto& xv = self.parents[0]->value;
    const auto& wv = self.parents[1]->value;
    if (Tensor<T>* gx = parent_grad(self, 0)) {
      std::vector<T> wt(in * out_dim);
      kernels::transpose(in, out_dim, wv.data(), wt.data());
      kernels::gemm(rows, in, out_dim, self.grad.data(), wt.data(), gx->data(), true);
    }
    if (Tensor<T>* gw = parent_grad(self, 1)) {
      std::vector<T> xt(rows * in);
      kernels::transpose(rows, in, xv.data(), xt.data());
      kernels::gemm(in, out_dim, rows, xt.data(), self.grad.data(), gw->data(), true);
    }
    if (self.parents.size() > 2)
      if (Tensor<T>* gb = parent_grad(self, 2))
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < out_dim; ++j) (*gb)[j] += self.grad[r * out_dim + j];
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  const std::size_t c = last_dim(x, "layer_norm");
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) throw ConfigError("layer_norm: affine shape mismatch");
  const std::size_t rows = x.numel() / c;
  auto stats = std::make_shared<std::vector<T>>(2 * rows);  // mean, rstd per row
  Tensor<T> out(x.shape());
  const T* xv = x.value().data();
  const T* g = gamma.value().data();
  const T* b = beta.value().data();
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv + r * c;
    T mean = 0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= T(c);
    T var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= T(c);
    const T rstd = T(1) / std::sqrt(var + eps);
    (*stats)[2 * r] = mean;
    (*stats)[2 * r + 1] = rstd;
    T* o = out.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) o[j] = (row[j] - mean) * rstd * g[j] + b[j];
  }
  return make_op_result<T>(std::move(out), {x, gamma, beta}, [rows, c, stats](Node<T>& self) {
    const T* xv = self.parents[0]->value.data();
    const T* g = self.parents[1]->value.data();
    Tensor<T>* gx = parent_grad(self, 0);
    Tensor<T>* gg = parent_grad(self, 1);
    Tensor<T>* gb = parent_grad(self, 2);
    std::vector<T> xhat(c), dxhat(c);
    for (std::size_t r = 0; r < rows; ++r) {
      const T mean = (*stats)[2 * r], rstd = (*stats)[2 * r + 1];
      const T* dy = self.grad.data() + r * c;
      T m1 = 0, m2 = 0;
      for (std::size_t j = 0; j < c; ++j) {
        xhat[j] = (xv[r * c + j] - mean) * rstd;
        dxhat[j] = dy[j] * g[j];
        m1 += dxhat[j];
        m2 += dxhat[j] * xhat[j];
        if (gg) (*gg)[j] += dy[j] * xhat[j];
        if (gb) (*gb)[j] += dy[j];
      }
      if (!gx) continue;
      m1 /= T(c);
      m2 /= T(c);
      for (std::size_t j = 0; j < c; ++j) (*gx)[r * c + j] += rstd * (dxhat[j] - m1 - xhat[j] * m2);
    }
  });
}

template <typename T>
Var<T> concat_last(const Var<T>& a, const Var<T>& b) {
  const std::size_t ca = last_dim(a, "concat_last"), cb = last_dim(b, "concat_last");
  Shape sa(a.shape().begin(), a.shape().end() - 1), sb(b.shape().begin(), b.shape().end() - 1);
  if (sa != sb) throw ConfigError("concat_last: leading shape mismatch");
  const std::size_t rows = a.numel() / ca;
  Shape out_shape = a.shape();
  out_shape.back() = ca + cb;
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(b.value().data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return make_op_result<T>(std::move(out), {a, b}, [rows, ca, cb](Node<T>& self) {
    const std::size_t w = ca + cb;
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < ca; ++j) (*g)[r * ca + j] += self.grad[r * w + j];
    if (Tensor<T>* g = parent_grad(self, 1))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cb; ++j) (*g)[r * cb + j] += self.grad[r * w + ca + j];
  });
}

template <typename T>
Var<T> slice_last(const Var<T>& x, std::size_t offset, std::size_t width) {
  const std::size_t c = last_dim(x, "slice_last");
  if (offset + width > c) throw ConfigError("slice_last: range exceeds channel width");
  const std::size_t rows = x.numel() / c;
  Shape out_shape = x.shape();
  out_shape.back() = width;
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.value().data() + r * c + offset, width, out.data() + r * width);
  return make_op_result<T>(std::move(out), {x}, [rows, c, offset, width](Node<T>& self) {
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < width; ++j) (*g)[r * c + offset + j] += self.grad[r * width + j];
  });
}

template <typename T>
Var<T> gather(const Var<T>& x, IndexMap index, Shape out_shape) {
  if (shape_numel(out_shape) != index->size()) throw ConfigError("gather: index map size does not match output");
  Tensor<T> out(std::move(out_shape));
  const auto& idx = *index;
  const T* xv = x.value().data();
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = xv[idx[i]];
  return make_op_result<T>(std::move(out), {x}, [index](Node<T>& self) {
    if (Tensor<T>* g = parent_grad(self, 0)) {
      const auto& idx = *index;
      for (std::size_t i = 0; i < idx.size(); ++i) (*g)[idx[i]] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, Conv2dOptions opt) {
  if (x.shape().size() != 4) throw ConfigError("depthwise_conv2d: expected NHWC input");
  const std::size_t C = x.dim(3);
  if (weight.shape().size() != 3 || weight.dim(2) != C)
    throw ConfigError("depthwise_conv2d: weight must be [kh, kw, C] with C = " + std::to_string(C));
  kernels::DepthwiseGeometry g{x.dim(0), x.dim(1), x.dim(2), C, weight.dim(0), weight.dim(1),
                               opt.dilation, opt.padding, opt.padding};
  if (2 * g.pad_h != (g.kernel_h - 1) * g.dilation || 2 * g.pad_w != (g.kernel_w - 1) * g.dilation)
    throw ConfigError("depthwise_conv2d: padding does not preserve spatial size");
  Tensor<T> out(x.shape());
  kernels::depthwise_conv(g, x.value().data(), weight.value().data(), bias.defined() ? bias.value().data() : nullptr,
                          out.data());
  std::vector<Var<T>> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_op_result<T>(std::move(out), std::move(parents), [g](Node<T>& self) {
    Tensor<T>* gx = parent_grad(self, 0);
    Tensor<T>* gw = parent_grad(self, 1);
    Tensor<T>* gb = self.parents.size() > 2 ? parent_grad(self, 2) : nullptr;
    kernels::depthwise_conv_backward(g, self.parents[0]->value.data(), self.parents[1]->value.data(),
                                     self.grad.data(), gx ? gx->data() : nullptr, gw ? gw->data() : nullptr,
                                     gb ? gb->data() : nullptr);
  });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::size_t padding) {
  if (x.shape().size() != 4) throw ConfigError("conv2d: expected NHWC input");
  if (weight.shape().size() != 4 || weight.dim(2) != x.dim(3))
    throw ConfigError("conv2d: weight must be [kh, kw, C_in, C_out]");
  kernels::ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(3), weight.dim(0), weight.dim(1),
                          padding, padding};
  if (2 * padding + 1 != g.kernel_h || 2 * padding + 1 != g.kernel_w)
    throw ConfigError("conv2d: padding does not preserve spatial size");
  Tensor<T> out(Shape{g.batch, g.height, g.width, g.out_channels});
  kernels::conv2d(g, x.value().data(), weight.value().data(), bias.defined() ? bias.value().data() : nullptr,
                  out.data());
  std::vector<Var<T>> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_op_result<T>(std::move(out), std::move(parents), [g](Node<T>& self) {
    Tensor<T>* gx = parent_grad(self, 0);
    Tensor<T>* gw = parent_grad(self, 1);
    Tensor<T>* gb = self.parents.size() > 2 ? parent_grad(self, 2) : nullptr;
    kernels::conv2d_backward(g, self.parents[0]->value.data(), self.parents[1]->value.data(), self.grad.data(),
                             gx ? gx->data() : nullptr, gw ? gw->data() : nullptr, gb ? gb->data() : nullptr);
  });
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
  require_same_shape(pred, target, "mse_loss");
  const std::size_t n = pred.numel();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = double(pred.value()[i]) - double(target.value()[i]);
    acc += d * d;
  }
  Tensor<T> out(Shape{1}, T(acc / double(n)));
  return make_op_result<T>(std::move(out), {pred, target}, [n](Node<T>& self) {
    const auto& p = self.parents[0]->value;
    const auto& t = self.parents[1]->value;
    const T k = T(2) * self.grad[0] / T(n);
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) (*g)[i] += k * (p[i] - t[i]);
    if (Tensor<T>* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) (*g)[i] -= k * (p[i] - t[i]);
  });
}

template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w) {
  if (w.shape() != x.shape()) throw ConfigError("weighted_sum: weight shape mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < w.numel(); ++i) acc += x.value()[i] * w[i];
  return make_op_result<T>(Tensor<T>(Shape{1}, acc), {x}, [w](Node<T>& self) {
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[0] * w[i];
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T acc = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) acc += x.value()[i];
  return make_op_result<T>(Tensor<T>(Shape{1}, acc), {x}, [](Node<T>& self) {
    if (Tensor<T>* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[0];
  });
}

#define VMRNN_INSTANTIATE_OPS(T)                                                                 \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                          \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                          \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                          \
  template Var<T> scale<T>(const Var<T>&, T);                                                    \
  template Var<T> add_n<T>(const std::vector<Var<T>>&);                                          \
  template Var<T> sigmoid<T>(const Var<T>&);                                                     \
  template Var<T> tanh<T>(const Var<T>&);                                                        \
  template Var<T> silu<T>(const Var<T>&);                                                        \
  template Var<T> softplus<T>(const Var<T>&);                                                    \
  template Var<T> reshape<T>(const Var<T>&, Shape);                                              \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                        \
  template Var<T> layer_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, T);                 \
  template Var<T> concat_last<T>(const Var<T>&, const Var<T>&);                                  \
  template Var<T> slice_last<T>(const Var<T>&, std::size_t, std::size_t);                        \
  template Var<T> gather<T>(const Var<T>&, IndexMap, Shape);                                     \
  template Var<T> depthwise_conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, Conv2dOptions); \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, std::size_t);           \
  template Var<T> mse_loss<T>(const Var<T>&, const Var<T>&);                                     \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);                              \
  template Var<T> sum<T>(const Var<T>&);

VMRNN_INSTANTIATE_OPS(float)
VMRNN_INSTANTIATE_OPS(double)

}  // namespace vmrnn

// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/selective_scan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vmrnn/init.hpp"
#include "vmrnn/ops.hpp"

namespace vmrnn {

namespace kernels {

namespace {

// Branch-free exp that GCC can vectorize. Doubles go through std::exp.
inline float scan_exp(float x) {
  x = x < -87.0f ? -87.0f : x;
  x = x > 88.0f ? 88.0f : x;
  const float n = std::floor(x * 1.44269504088896341f + 0.5f);
  const float r = (x - n * 0.693359375f) + n * 2.12194440e-4f;
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  p = p * r * r + r + 1.0f;
  const auto bits = static_cast<std::int32_t>(static_cast<std::int32_t>(n) + 127) << 23;
  return p * std::bit_cast<float>(bits);
}
inline double scan_exp(double x) { return std::exp(x); }

// Channels advanced together by the blocked kernels. Each channel in a block
// runs the exact per-lane arithmetic of the reference, so results match it
// bit for bit; the block only turns the channel loop into SIMD lanes.
constexpr std::size_t kBlock = 16;

// Per-block inputs for one token, padded to kBlock with inert lanes
// (dt = u = 0 keeps the state at zero).
template <typename T>
struct TokenSlice {
  T dt[kBlock], u[kBlock];
  void load(const T* delta, const T* u_in, std::size_t base, std::size_t width) {
    for (std::size_t j = 0; j < kBlock; ++j) {
      dt[j] = j < width ? delta[base + j] : T(0);
      u[j] = j < width ? u_in[base + j] : T(0);
    }
  }
};

// a transposed to [N, E] and padded so each state row holds whole blocks.
template <typename T>
std::vector<T> transpose_a(const ScanGeometry& g, const T* a, std::size_t padded) {
  std::vector<T> at(g.state_dim * padded, T(0));
  for (std::size_t e = 0; e < g.channels; ++e)
    for (std::size_t n = 0; n < g.state_dim; ++n) at[n * padded + e] = a[e * g.state_dim + n];
  return at;
}

inline std::size_t padded_channels(std::size_t E) { return (E + kBlock - 1) / kBlock * kBlock; }

// Advances channels [e0, e0 + kBlock) of batch bi over positions [t0, t1).
// h is [N, kBlock]; y is written when non-null.
template <typename T>
void scan_block(const ScanGeometry& g, std::size_t bi, std::size_t e0, std::size_t t0, std::size_t t1, const T* u,
                const T* delta, const T* at, std::size_t padded, const T* b, const T* c, const T* d, T* h, T* y) {
  const std::size_t L = g.length, E = g.channels, N = g.state_dim;
  const std::size_t width = std::min(kBlock, E - e0);
  TokenSlice<T> s;
  for (std::size_t t = t0; t < t1; ++t) {
    const std::size_t tok = bi * L + t;
    s.load(delta, u, tok * E + e0, width);
    T acc[kBlock] = {};
    for (std::size_t n = 0; n < N; ++n) {
      const T bn = b[tok * N + n], cn = c[tok * N + n];
      const T* an = at + n * padded + e0;
      T* hn = h + n * kBlock;
#pragma GCC ivdep
      for (std::size_t j = 0; j < kBlock; ++j) {
        hn[j] = scan_exp(s.dt[j] * an[j]) * hn[j] + (s.dt[j] * bn) * s.u[j];
        acc[j] += cn * hn[j];
      }
    }
    if (y)
      for (std::size_t j = 0; j < width; ++j) y[tok * E + e0 + j] = acc[j] + d[e0 + j] * s.u[j];
  }
}

}  // namespace

template <typename T>
void selective_scan_reference(const ScanGeometry& g, const T* u, const T* delta, const T* a, const T* b, const T* c,
                              const T* d, T* y) {
  const std::size_t L = g.length, E = g.channels, N = g.state_dim;
  std::vector<T> h(N);
  for (std::size_t bi = 0; bi < g.batch; ++bi)
    for (std::size_t e = 0; e < E; ++e) {
      std::fill(h.begin(), h.end(), T(0));
      for (std::size_t t = 0; t < L; ++t) {
        const std::size_t tok = bi * L + t;
        const T dt = delta[tok * E + e];
        const T ut = u[tok * E + e];
        T acc = 0;
        for (std::size_t n = 0; n < N; ++n) {
          const T a_bar = scan_exp(dt * a[e * N + n]);
          h[n] = a_bar * h[n] + (dt * b[tok * N + n]) * ut;
          acc += c[tok * N + n] * h[n];
        }
        y[tok * E + e] = acc + d[e] * ut;
      }
    }
}

float fast_exp(float x) { return scan_exp(x); }

template <typename T>
void selective_scan_forward(const ScanGeometry& g, const T* u, const T* delta, const T* a, const T* b, const T* c,
                            const T* d, T* y) {
  const std::size_t N = g.state_dim, padded = padded_channels(g.channels);
  const std::vector<T> at = transpose_a(g, a, padded);
  const std::size_t blocks = padded / kBlock, work = g.batch * blocks;
#pragma omp parallel
  {
    std::vector<T> h(N * kBlock);
#pragma omp for schedule(static)
    for (std::size_t w = 0; w < work; ++w) {
      std::fill(h.begin(), h.end(), T(0));
      scan_block(g, w / blocks, (w % blocks) * kBlock, 0, g.length, u, delta, at.data(), padded, b, c, d, h.data(),
                 y);
    }
  }
}

template <typename T>
void selective_scan_chunked(const ScanGeometry& g, std::size_t chunk_len, const T* u, const T* delta, const T* a,
                            const T* b, const T* c, const T* d, T* y) {
  const std::size_t L = g.length, E = g.channels, N = g.state_dim;
  const std::size_t padded = padded_channels(E), blocks = padded / kBlock;
  const std::size_t chunks = (L + chunk_len - 1) / chunk_len;
  const std::vector<T> at = transpose_a(g, a, padded);
  // Per (batch, chunk, block): decay holds the product of A_bar over the
  // chunk, later replaced by the carried-in state; local is the chunk's end
  // state when started from zero. Both are [N, kBlock].
  const std::size_t tile = N * kBlock, work = g.batch * chunks * blocks;
  std::vector<T> decay(work * tile), local(work * tile);

#pragma omp parallel for schedule(static)
  for (std::size_t w = 0; w < work; ++w) {
    const std::size_t blk = w % blocks, k = (w / blocks) % chunks, bi = w / (blocks * chunks);
    const std::size_t e0 = blk * kBlock, width = std::min(kBlock, E - e0);
    T* p = decay.data() + w * tile;
    T* s = local.data() + w * tile;
    std::fill(p, p + tile, T(1));
    std::fill(s, s + tile, T(0));
    TokenSlice<T> ts;
    for (std::size_t t = k * chunk_len; t < std::min(L, (k + 1) * chunk_len); ++t) {
      const std::size_t tok = bi * L + t;
      ts.load(delta, u, tok * E + e0, width);
      for (std::size_t n = 0; n < N; ++n) {
        const T bn = b[tok * N + n];
        const T* an = at.data() + n * padded + e0;
#pragma GCC ivdep
        for (std::size_t j = 0; j < kBlock; ++j) {
          const T a_bar = scan_exp(ts.dt[j] * an[j]);
          s[n * kBlock + j] = a_bar * s[n * kBlock + j] + (ts.dt[j] * bn) * ts.u[j];
          p[n * kBlock + j] *= a_bar;
        }
      }
    }
  }

#pragma omp parallel
  {
    std::vector<T> carry(tile);
#pragma omp for schedule(static)
    for (std::size_t lane = 0; lane < g.batch * blocks; ++lane) {
      const std::size_t bi = lane / blocks, blk = lane % blocks;
      std::fill(carry.begin(), carry.end(), T(0));
      for (std::size_t k = 0; k < chunks; ++k) {
        const std::size_t w = (bi * chunks + k) * blocks + blk;
        T* p = decay.data() + w * tile;
        const T* s = local.data() + w * tile;
        for (std::size_t i = 0; i < tile; ++i) {
          const T next = p[i] * carry[i] + s[i];
          p[i] = carry[i];
          carry[i] = next;
        }
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (std::size_t w = 0; w < work; ++w) {
    const std::size_t blk = w % blocks, k = (w / blocks) % chunks, bi = w / (blocks * chunks);
    scan_block(g, bi, blk * kBlock, k * chunk_len, std::min(L, (k + 1) * chunk_len), u, delta, at.data(), padded, b,
               c, d, decay.data() + w * tile, y);
  }
}

namespace {

template <typename T>
struct BackwardScratch {
  std::vector<T> hs, bars, dh, gb_part, gc_part;
  T* ga = nullptr;  // [blocks, N, kBlock] for the current batch item
  T* gd = nullptr;  // [padded]
  BackwardScratch(std::size_t L, std::size_t tile)
      : hs((L + 1) * tile), bars(L * tile), dh(tile), gb_part(L * tile), gc_part(L * tile) {}
};

// Gradients for channels [e0, e0 + kBlock) of batch item bi. grad_b / grad_c
// contributions go to the per-lane partial buffers in w.
template <typename T>
void backward_block(std::size_t L, std::size_t E, std::size_t N, std::size_t padded, std::size_t bi, std::size_t blk,
                    const T* u, const T* delta, const T* at, const T* b, const T* c, const T* d, const T* grad_y,
                    T* grad_u, T* grad_delta, BackwardScratch<T>& w) {
  const std::size_t tile = N * kBlock, e0 = blk * kBlock, width = std::min(kBlock, E - e0);
  T* hs = w.hs.data();
  T* bars = w.bars.data();
  T* dh = w.dh.data();
  T* gab = w.ga + blk * tile;
  T* gd = w.gd + e0;
  TokenSlice<T> s;
  std::fill(hs, hs + tile, T(0));
  for (std::size_t t = 0; t < L; ++t) {
    const std::size_t tok = bi * L + t;
    s.load(delta, u, tok * E + e0, width);
    const T* prev = hs + t * tile;
    T* cur = hs + (t + 1) * tile;
    T* bar = bars + t * tile;
    for (std::size_t n = 0; n < N; ++n) {
      const T bn = b[tok * N + n];
      const T* an = at + n * padded + e0;
#pragma GCC ivdep
      for (std::size_t j = 0; j < kBlock; ++j) {
        bar[n * kBlock + j] = scan_exp(s.dt[j] * an[j]);
        cur[n * kBlock + j] = bar[n * kBlock + j] * prev[n * kBlock + j] + (s.dt[j] * bn) * s.u[j];
      }
    }
  }
  std::fill(dh, dh + tile, T(0));
  for (std::size_t t = L; t-- > 0;) {
    const std::size_t tok = bi * L + t;
    s.load(delta, u, tok * E + e0, width);
    T gy[kBlock];
    for (std::size_t j = 0; j < kBlock; ++j) gy[j] = j < width ? grad_y[tok * E + e0 + j] : T(0);
    const T* prev = hs + t * tile;
    const T* cur = hs + (t + 1) * tile;
    const T* bar = bars + t * tile;
    T* gcp = w.gc_part.data() + t * tile;
    T* gbp = w.gb_part.data() + t * tile;
    T g_u[kBlock], g_dt[kBlock] = {};
    for (std::size_t j = 0; j < kBlock; ++j) {
      g_u[j] = gy[j] * (j < width ? d[e0 + j] : T(0));
      gd[j] += gy[j] * s.u[j];
    }
    for (std::size_t n = 0; n < N; ++n) {
      const T bn = b[tok * N + n], cn = c[tok * N + n];
      const T* an = at + n * padded + e0;
      const std::size_t o = n * kBlock;
#pragma GCC ivdep
      for (std::size_t j = 0; j < kBlock; ++j) {
        gcp[o + j] += gy[j] * cur[o + j];
        const T dhj = dh[o + j] + gy[j] * cn;
        const T carry = bar[o + j] * prev[o + j];
        g_dt[j] += dhj * (an[j] * carry + bn * s.u[j]);
        gab[o + j] += dhj * s.dt[j] * carry;
        g_u[j] += dhj * s.dt[j] * bn;
        gbp[o + j] += dhj * s.dt[j] * s.u[j];
        dh[o + j] = dhj * bar[o + j];
      }
    }
    for (std::size_t j = 0; j < width; ++j) {
      if (grad_u) grad_u[tok * E + e0 + j] += g_u[j];
      if (grad_delta) grad_delta[tok * E + e0 + j] += g_dt[j];
    }
  }
}

}  // namespace

template <typename T>
void selective_scan_backward(const ScanGeometry& g, const T* u, const T* delta, const T* a, const T* b, const T* c,
                             const T* d, const T* grad_y, T* grad_u, T* grad_delta, T* grad_a, T* grad_b, T* grad_c,
                             T* grad_d) {
  const std::size_t L = g.length, E = g.channels, N = g.state_dim;
  const std::size_t padded = padded_channels(E), blocks = padded / kBlock, tile = N * kBlock;
  const std::vector<T> at = transpose_a(g, a, padded);
  // Parameter gradients are kept per batch item and summed in batch order
  // afterwards, so the result does not depend on the thread count.
  std::vector<T> ga_items(g.batch * tile * blocks, T(0)), gd_items(g.batch * padded, T(0));
  // Threads split the batch so that grad_b / grad_c rows have one writer.
#pragma omp parallel
  {
    BackwardScratch<T> w(L, tile);
#pragma omp for schedule(static)
    for (std::size_t bi = 0; bi < g.batch; ++bi) {
      w.ga = ga_items.data() + bi * tile * blocks;
      w.gd = gd_items.data() + bi * padded;
      std::fill(w.gb_part.begin(), w.gb_part.end(), T(0));
      std::fill(w.gc_part.begin(), w.gc_part.end(), T(0));
      for (std::size_t blk = 0; blk < blocks; ++blk)
        backward_block(L, E, N, padded, bi, blk, u, delta, at.data(), b, c, d, grad_y, grad_u, grad_delta, w);
      for (std::size_t t = 0; t < L; ++t)
        for (std::size_t n = 0; n < N; ++n) {
          const T* gcn = w.gc_part.data() + t * tile + n * kBlock;
          const T* gbn = w.gb_part.data() + t * tile + n * kBlock;
          T gc = 0, gb = 0;
          for (std::size_t j = 0; j < kBlock; ++j) {
            gc += gcn[j];
            gb += gbn[j];
          }
          if (grad_c) grad_c[(bi * L + t) * N + n] += gc;
          if (grad_b) grad_b[(bi * L + t) * N + n] += gb;
        }
    }
  }
  std::vector<T> ga_total(tile * blocks, T(0)), gd_total(padded, T(0));
  for (std::size_t bi = 0; bi < g.batch; ++bi) {
    for (std::size_t i = 0; i < ga_total.size(); ++i) ga_total[i] += ga_items[bi * tile * blocks + i];
    for (std::size_t i = 0; i < padded; ++i) gd_total[i] += gd_items[bi * padded + i];
  }
  for (std::size_t e = 0; e < E; ++e) {
    const std::size_t blk = e / kBlock, j = e % kBlock;
    if (grad_a)
      for (std::size_t n = 0; n < N; ++n) grad_a[e * N + n] += ga_total[blk * tile + n * kBlock + j];
    if (grad_d) grad_d[e] += gd_total[e];
  }
}

}  // namespace kernels

// ---------------------------------------------------------------------------

template <typename T>
S6Params<T> init_s6_params(const S6Shape& s, std::mt19937_64& rng) {
  const std::size_t E = s.channels, N = s.state_dim, R = s.delta_rank;
  S6Params<T> p;
  Tensor<T> a_log(Shape{E, N});
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t n = 0; n < N; ++n) a_log[e * N + n] = static_cast<T>(std::log(double(n + 1)));
  p.a_log = Var<T>::parameter(std::move(a_log));
  p.d = Var<T>::parameter(Tensor<T>(Shape{E}, T(1)));
  p.delta_down = Var<T>::parameter(init::trunc_normal<T>(Shape{E, R}, 0.02, rng));
  p.delta_up = Var<T>::parameter(init::trunc_normal<T>(Shape{R, E}, 0.02, rng));
  Tensor<T> bias(Shape{E});
  std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(1e-1));
  for (auto& v : bias.vec()) {
    const double dt = std::exp(log_dt(rng));
    v = static_cast<T>(dt + std::log(-std::expm1(-dt)));  // softplus^-1(dt)
  }
  p.delta_bias = Var<T>::parameter(std::move(bias));
  p.bc_weight = Var<T>::parameter(init::trunc_normal<T>(Shape{E, 2 * N}, 0.02, rng));
  p.bc_bias = Var<T>::parameter(Tensor<T>(Shape{2 * N}));
  return p;
}

template <typename T>
S6Params<T> zero_s6_params(const S6Shape& s) {
  const std::size_t E = s.channels, N = s.state_dim, R = s.delta_rank;
  S6Params<T> p;
  p.a_log = Var<T>::parameter(Tensor<T>(Shape{E, N}));
  p.d = Var<T>::parameter(Tensor<T>(Shape{E}));
  p.delta_down = Var<T>::parameter(Tensor<T>(Shape{E, R}));
  p.delta_up = Var<T>::parameter(Tensor<T>(Shape{R, E}));
  p.delta_bias = Var<T>::parameter(Tensor<T>(Shape{E}));
  p.bc_weight = Var<T>::parameter(Tensor<T>(Shape{E, 2 * N}));
  p.bc_bias = Var<T>::parameter(Tensor<T>(Shape{2 * N}));
  return p;
}

template <typename T>
SelectiveInputs<T> make_selective_params(const Var<T>& x, const S6Params<T>& p) {
  if (x.shape().size() != 3) throw ConfigError("make_selective_params: expected [batch, L, channels] input");
  if (x.dim(1) < 1) throw ConfigError("make_selective_params: empty sequence");
  if (x.dim(2) != p.channels())
    throw ConfigError("make_selective_params: input has " + std::to_string(x.dim(2)) + " channels, params expect " +
                      std::to_string(p.channels()));
  require_finite(x.value(), "selective-scan input");
  const std::size_t N = p.state_dim();
  SelectiveInputs<T> out;
  out.delta = softplus(linear(linear(x, p.delta_down, Var<T>()), p.delta_up, p.delta_bias));
  const Var<T> bc = linear(x, p.bc_weight, p.bc_bias);
  out.b = slice_last(bc, 0, N);
  out.c = slice_last(bc, N, N);
  return out;
}

template <typename T>
Discretized<T> discretize(const Tensor<T>& delta, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2) throw ConfigError("discretize: A must be [channels, state_dim]");
  const std::size_t E = a.dim(0), N = a.dim(1);
  if (delta.rank() < 1 || delta.shape().back() != E) throw ConfigError("discretize: delta channel mismatch");
  if (b.rank() < 1 || b.shape().back() != N) throw ConfigError("discretize: B state_dim mismatch");
  const std::size_t rows = delta.numel() / E;
  if (b.numel() / N != rows) throw ConfigError("discretize: delta and B leading axes differ");
  for (std::size_t i = 0; i < delta.numel(); ++i)
    if (!(delta[i] > T(0))) throw NumericError("discretize: delta must be strictly positive", i);
  Shape out_shape = delta.shape();
  out_shape.push_back(N);
  Discretized<T> r{Tensor<T>(out_shape), Tensor<T>(out_shape)};
  for (std::size_t l = 0; l < rows; ++l)
    for (std::size_t e = 0; e < E; ++e) {
      const T dt = delta[l * E + e];
      for (std::size_t n = 0; n < N; ++n) {
        r.a_bar[(l * E + e) * N + n] = std::exp(dt * a[e * N + n]);
        r.b_bar[(l * E + e) * N + n] = dt * b[l * N + n];
      }
    }
  return r;
}

template <typename T>
Var<T> selective_scan(const Var<T>& u, const Var<T>& delta, const Var<T>& a_log, const Var<T>& b, const Var<T>& c,
                      const Var<T>& d, ScanOptions opt) {
  if (u.shape().size() != 3) throw ConfigError("selective_scan: u must be [batch, L, channels]");
  const kernels::ScanGeometry g{u.dim(0), u.dim(1), u.dim(2), a_log.shape().size() == 2 ? a_log.dim(1) : 0};
  if (g.length < 1) throw ConfigError("selective_scan: empty sequence");
  if (delta.shape() != u.shape()) throw ConfigError("selective_scan: delta shape mismatch");
  if (a_log.shape() != Shape{g.channels, g.state_dim}) throw ConfigError("selective_scan: A shape mismatch");
  const Shape bc_shape{g.batch, g.length, g.state_dim};
  if (b.shape() != bc_shape || c.shape() != bc_shape) throw ConfigError("selective_scan: B/C shape mismatch");
  if (d.shape() != Shape{g.channels}) throw ConfigError("selective_scan: D shape mismatch");

  auto a = std::make_shared<std::vector<T>>(a_log.numel());
  for (std::size_t i = 0; i < a->size(); ++i) (*a)[i] = -std::exp(a_log.value()[i]);

  Tensor<T> y(u.shape());
  if (opt.chunk_len == 0)
    kernels::selective_scan_forward(g, u.value().data(), delta.value().data(), a->data(), b.value().data(),
                                    c.value().data(), d.value().data(), y.data());
  else
    kernels::selective_scan_chunked(g, opt.chunk_len, u.value().data(), delta.value().data(), a->data(),
                                    b.value().data(), c.value().data(), d.value().data(), y.data());
  const std::size_t bad = first_non_finite(y);
  if (bad != y.numel()) throw NumericError("selective_scan: non-finite output at step", (bad / g.channels) % g.length);

  return make_op_result<T>(std::move(y), {u, delta, a_log, b, c, d}, [g, a](Node<T>& self) {
    auto v = [&](std::size_t i) { return self.parents[i]->value.data(); };
    auto gp = [&](std::size_t i) {
      Tensor<T>* t = parent_grad(self, i);
      return t ? t->data() : nullptr;
    };
    Tensor<T>* ga_log = parent_grad(self, 2);
    std::vector<T> grad_a(ga_log ? a->size() : 0);
    kernels::selective_scan_backward(g, v(0), v(1), a->data(), v(3), v(4), v(5), self.grad.data(), gp(0), gp(1),
                                     ga_log ? grad_a.data() : nullptr, gp(3), gp(4), gp(5));
    if (ga_log)
      for (std::size_t i = 0; i < grad_a.size(); ++i) (*ga_log)[i] += grad_a[i] * (*a)[i];
  });
}

template <typename T>
Var<T> selective_scan_sequential(const Var<T>& u, const S6Params<T>& p) {
  const auto sel = make_selective_params(u, p);
  return selective_scan(u, sel.delta, p.a_log, sel.b, sel.c, p.d, ScanOptions{0});
}

template <typename T>
Var<T> selective_scan_chunked(const Var<T>& u, const S6Params<T>& p, std::size_t chunk_len) {
  if (chunk_len < 1) throw ConfigError("selective_scan_chunked: chunk_len must be >= 1");
  const auto sel = make_selective_params(u, p);
  return selective_scan(u, sel.delta, p.a_log, sel.b, sel.c, p.d, ScanOptions{chunk_len});
}

template <typename T>
ScanState<T> make_scan_state(std::size_t batch, std::size_t channels, std::size_t state_dim) {
  return ScanState<T>{Tensor<T>(Shape{batch, channels, state_dim}), 0};
}

template <typename T>
Tensor<T> scan_step(ScanState<T>& state, const Tensor<T>& u_t, const Tensor<T>& delta_t, const Tensor<T>& a,
                    const Tensor<T>& b_t, const Tensor<T>& c_t, const Tensor<T>& d) {
  const std::size_t B = state.h.dim(0), E = state.h.dim(1), N = state.h.dim(2);
  if (u_t.shape() != Shape{B, E} || delta_t.shape() != Shape{B, E} || a.shape() != Shape{E, N} ||
      b_t.shape() != Shape{B, N} || c_t.shape() != Shape{B, N} || d.shape() != Shape{E})
    throw ConfigError("scan_step: operand shapes do not match the state");
  Tensor<T> y(Shape{B, E});
  for (std::size_t bi = 0; bi < B; ++bi)
    for (std::size_t e = 0; e < E; ++e) {
      const T dt = delta_t[bi * E + e];
      if (!(dt > T(0))) throw NumericError("scan_step: delta must be strictly positive", state.position);
      const T ut = u_t[bi * E + e];
      T* h = state.h.data() + (bi * E + e) * N;
      T acc = 0;
      for (std::size_t n = 0; n < N; ++n) {
        h[n] = kernels::scan_exp(dt * a[e * N + n]) * h[n] + (dt * b_t[bi * N + n]) * ut;
        acc += c_t[bi * N + n] * h[n];
      }
      y[bi * E + e] = acc + d[e] * ut;
      if (!std::isfinite(y[bi * E + e])) throw NumericError("scan_step: non-finite state at step", state.position);
    }
  ++state.position;
  return y;
}

#define VMRNN_INSTANTIATE_SCAN(T)                                                                                   \
  template S6Params<T> init_s6_params<T>(const S6Shape&, std::mt19937_64&);                                        \
  template S6Params<T> zero_s6_params<T>(const S6Shape&);                                                           \
  template SelectiveInputs<T> make_selective_params<T>(const Var<T>&, const S6Params<T>&);                          \
  template Discretized<T> discretize<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                      \
  template Var<T> selective_scan<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&,      \
                                    const Var<T>&, ScanOptions);                                                    \
  template Var<T> selective_scan_sequential<T>(const Var<T>&, const S6Params<T>&);                                  \
  template Var<T> selective_scan_chunked<T>(const Var<T>&, const S6Params<T>&, std::size_t);                        \
  template ScanState<T> make_scan_state<T>(std::size_t, std::size_t, std::size_t);                                  \
  template Tensor<T> scan_step<T>(ScanState<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                  const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                            \
  template void kernels::selective_scan_reference<T>(const kernels::ScanGeometry&, const T*, const T*, const T*,    \
                                                     const T*, const T*, const T*, T*);                             \
  template void kernels::selective_scan_forward<T>(const kernels::ScanGeometry&, const T*, const T*, const T*,      \
                                                   const T*, const T*, const T*, T*);                               \
  template void kernels::selective_scan_chunked<T>(const kernels::ScanGeometry&, std::size_t, const T*, const T*,   \
                                                   const T*, const T*, const T*, const T*, T*);                     \
  template void kernels::selective_scan_backward<T>(const kernels::ScanGeometry&, const T*, const T*, const T*,     \
                                                    const T*, const T*, const T*, const T*, T*, T*, T*, T*, T*, T*);

VMRNN_INSTANTIATE_SCAN(float)
VMRNN_INSTANTIATE_SCAN(double)

}  // namespace vmrnn

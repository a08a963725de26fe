// Forward operations with hand-written backward passes: convolution, ReLU,
// max pooling, affine layers, a single LSTM cell, softmax/cross-entropy and
// a stepped-decay SGD optimizer. Everything is templated on the scalar type so
// the same code runs in float for training and in double for gradient checks.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "tensor.hpp"

namespace ongcmp::nn {

// ---------------------------------------------------------------- conv2d

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  const std::size_t padded = in + 2 * pad;
  if (k > padded) throw ValidationError("conv2d: kernel larger than padded input");
  if ((padded - k) % stride != 0)
    throw ValidationError("conv2d: output extent is not integral for this stride");
  return (padded - k) / stride + 1;
}

namespace detail {
// Reduction the compiler may vectorise (needs -fopenmp-simd to take effect);
// the summation order is fixed per build, so results stay deterministic.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
std::vector<T> pad_input(const Tensor<T>& x, std::size_t pad) {
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t Hp = H + 2 * pad, Wp = W + 2 * pad;
  std::vector<T> out(C * Hp * Wp, T{0});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y) {
      const T* src = x.data() + (c * H + y) * W;
      std::copy(src, src + W, out.data() + (c * Hp + y + pad) * Wp + pad);
    }
  return out;
}
}  // namespace detail

// Cross-correlation of a [C,H,W] input with [K,C,kh,kw] kernels.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride, std::size_t pad) {
  require(input.rank() == 3 && kernels.rank() == 4, "conv2d: expected input [C,H,W] and kernels [K,C,kh,kw]");
  require(stride > 0, "conv2d: stride must be positive");
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::size_t K = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  require(kernels.dim(1) == C, "conv2d: channel mismatch between input and kernels");
  const std::size_t Ho = conv_out_extent(H, kh, stride, pad);
  const std::size_t Wo = conv_out_extent(W, kw, stride, pad);
  const std::size_t Hp = H + 2 * pad, Wp = W + 2 * pad;
  const auto xp = detail::pad_input(input, pad);

  Tensor<T> out({K, Ho, Wo});
  T* o = out.data();
  const T* w = kernels.data();
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const T wv = w[((k * C + c) * kh + ky) * kw + kx];
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            T* orow = o + (k * Ho + oy) * Wo;
            const T* irow = xp.data() + (c * Hp + oy * stride + ky) * Wp + kx;
            if (stride == 1) {
              for (std::size_t ox = 0; ox < Wo; ++ox) orow[ox] += wv * irow[ox];
            } else {
              for (std::size_t ox = 0; ox < Wo; ++ox) orow[ox] += wv * irow[ox * stride];
            }
          }
        }
  out.require_finite("conv2d");
  return out;
}

template <typename T>
struct Conv2dGrads {
  Tensor<T> dinput;
  Tensor<T> dkernels;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride,
                               std::size_t pad, const Tensor<T>& dout, bool need_dinput = true) {
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::size_t K = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const std::size_t Ho = conv_out_extent(H, kh, stride, pad);
  const std::size_t Wo = conv_out_extent(W, kw, stride, pad);
  require(dout.shape() == Shape{K, Ho, Wo}, "conv2d_backward: upstream gradient shape mismatch");
  const std::size_t Hp = H + 2 * pad, Wp = W + 2 * pad;
  const auto xp = detail::pad_input(input, pad);
  std::vector<T> dxp(need_dinput ? xp.size() : 0, T{0});

  Conv2dGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(kernels.shape())};
  const T* w = kernels.data();
  T* dw = g.dkernels.data();
  const T* d = dout.data();
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::size_t widx = ((k * C + c) * kh + ky) * kw + kx;
          const T wv = w[widx];
          T acc{0};
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            const T* drow = d + (k * Ho + oy) * Wo;
            const std::size_t base = (c * Hp + oy * stride + ky) * Wp + kx;
            const T* irow = xp.data() + base;
            if (stride == 1)
              acc += detail::dot(drow, irow, Wo);
            else
              for (std::size_t ox = 0; ox < Wo; ++ox) acc += drow[ox] * irow[ox * stride];
            if (need_dinput) {
              T* dxrow = dxp.data() + base;
              for (std::size_t ox = 0; ox < Wo; ++ox) dxrow[ox * stride] += wv * drow[ox];
            }
          }
          dw[widx] += acc;
        }
  if (need_dinput) {
    T* dx = g.dinput.data();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y) {
        const T* src = dxp.data() + (c * Hp + y + pad) * Wp + pad;
        std::copy(src, src + W, dx + (c * H + y) * W);
      }
  }
  g.dinput.require_finite("conv2d_backward");
  g.dkernels.require_finite("conv2d_backward");
  return g;
}

// Adds bias[k] to every element of channel k of a [K,H,W] tensor.
template <typename T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias) {
  require(x.rank() == 3 && bias.size() == x.dim(0), "add_channel_bias: shape mismatch");
  const std::size_t plane = x.dim(1) * x.dim(2);
  for (std::size_t k = 0; k < x.dim(0); ++k) {
    T* p = x.data() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += bias[k];
  }
}

template <typename T>
Tensor<T> channel_bias_backward(const Tensor<T>& dout) {
  Tensor<T> db({dout.dim(0)});
  const std::size_t plane = dout.dim(1) * dout.dim(2);
  for (std::size_t k = 0; k < dout.dim(0); ++k) {
    T acc{0};
    const T* p = dout.data() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    db[k] = acc;
  }
  return db;
}

// ---------------------------------------------------------------- relu / pool

template <typename T>
Tensor<T> relu(Tensor<T> x) {
  for (auto& v : x.values()) v = v > T{0} ? v : T{0};
  return x;
}

// Gradient of relu given its output (out > 0 iff input > 0).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& out, Tensor<T> dout) {
  require(out.shape() == dout.shape(), "relu_backward: shape mismatch");
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(out[i] > T{0})) dout[i] = T{0};
  return dout;
}

template <typename T>
struct PoolResult {
  Tensor<T> out;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
// Ties resolve to the first element in raster order.
template <typename T>
PoolResult<T> maxpool2(const Tensor<T>& x) {
  require(x.rank() == 3 && x.dim(1) >= 2 && x.dim(2) >= 2, "maxpool2: expected [C,H,W] with H,W >= 2");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), Ho = H / 2, Wo = W / 2;
  PoolResult<T> r{Tensor<T>({C, Ho, Wo}), std::vector<std::uint32_t>(C * Ho * Wo)};
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        std::size_t best = (c * H + 2 * oy) * W + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * H + 2 * oy + dy) * W + 2 * ox + dx;
            if (x[idx] > x[best]) best = idx;
          }
        const std::size_t o = (c * Ho + oy) * Wo + ox;
        r.out[o] = x[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
  return r;
}

template <typename T>
Tensor<T> maxpool2_backward(const PoolResult<T>& pool, const Shape& input_shape, const Tensor<T>& dout) {
  require(dout.shape() == pool.out.shape(), "maxpool2_backward: shape mismatch");
  Tensor<T> dx(input_shape);
  for (std::size_t i = 0; i < dout.size(); ++i) dx[pool.argmax[i]] += dout[i];
  return dx;
}

// ---------------------------------------------------------------- linear

// Affine map with weights stored [in, out]: y_n = sum_i x_i * w_in + b_n.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require(w.rank() == 2 && x.size() == w.dim(0) && b.size() == w.dim(1), "linear: dimension mismatch");
  const std::size_t I = w.dim(0), N = w.dim(1);
  Tensor<T> y({N});
  for (std::size_t n = 0; n < N; ++n) y[n] = b[n];
  for (std::size_t i = 0; i < I; ++i) {
    const T xi = x[i];
    if (xi == T{0}) continue;
    const T* wrow = w.data() + i * N;
    for (std::size_t n = 0; n < N; ++n) y[n] += xi * wrow[n];
  }
  y.require_finite("linear");
  return y;
}

// Accumulates into w.grad() / b.grad() when present; returns dx.
template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, Tensor<T>& w, Tensor<T>& b, const Tensor<T>& dy) {
  const std::size_t I = w.dim(0), N = w.dim(1);
  require(dy.size() == N && x.size() == I, "linear_backward: dimension mismatch");
  Tensor<T> dx({I});
  const bool gw = w.has_grad(), gb = b.has_grad();
  T* dw = gw ? w.grad().data() : nullptr;
  for (std::size_t i = 0; i < I; ++i) {
    const T* wrow = w.data() + i * N;
    dx[i] = detail::dot(wrow, dy.data(), N);
    if (gw) {
      T* dwrow = dw + i * N;
      const T xi = x[i];
      for (std::size_t n = 0; n < N; ++n) dwrow[n] += xi * dy[n];
    }
  }
  if (gb) {
    auto db = b.grad();
    for (std::size_t n = 0; n < N; ++n) db[n] += dy[n];
  }
  dx.require_finite("linear_backward");
  return dx;
}

// ---------------------------------------------------------------- classification head

template <typename T>
struct LinearHead {
  Tensor<T> w;  // [hidden_dim, N]
  Tensor<T> b;  // [N]

  LinearHead() = default;
  LinearHead(std::size_t hidden_dim, std::size_t classes)
      : w({hidden_dim, classes}), b({classes}) {
    require(classes >= 2, "LinearHead: at least two classes required");
  }
  std::size_t classes() const { return b.size(); }
  std::size_t input_dim() const { return w.dim(0); }
};

template <typename T>
Tensor<T> classify_scores(const Tensor<T>& h, const LinearHead<T>& head) {
  return linear(h, head.w, head.b);
}

// ---------------------------------------------------------------- softmax / loss

template <typename T>
Tensor<T> softmax(const Tensor<T>& s) {
  require(s.size() > 0, "softmax: empty input");
  s.require_finite("softmax input");
  T mx = s[0];
  for (const T v : s.values()) mx = std::max(mx, v);
  Tensor<T> p(s.shape());
  T sum{0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    p[i] = std::exp(s[i] - mx);
    sum += p[i];
  }
  for (auto& v : p.values()) v /= sum;
  return p;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& s) {
  s.require_finite("log_softmax input");
  T mx = s[0];
  for (const T v : s.values()) mx = std::max(mx, v);
  T sum{0};
  for (const T v : s.values()) sum += std::exp(v - mx);
  const T lse = mx + std::log(sum);
  Tensor<T> out(s.shape());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] - lse;
  return out;
}

template <typename T>
struct LossGrad {
  T loss;
  Tensor<T> dscores;
};

// Cross-entropy of softmax(scores) against a class index, fused through
// log-softmax. Gradient is softmax(scores) - onehot(target).
template <typename T>
LossGrad<T> cross_entropy(const Tensor<T>& scores, std::size_t target) {
  require(target < scores.size(), "cross_entropy: target out of range");
  const auto ls = log_softmax(scores);
  LossGrad<T> r{-ls[target], Tensor<T>(scores.shape())};
  for (std::size_t i = 0; i < scores.size(); ++i) r.dscores[i] = std::exp(ls[i]);
  r.dscores[target] -= T{1};
  if (!std::isfinite(r.loss)) throw NumericError("non-finite cross-entropy");
  return r;
}

// Lowest index wins ties.
template <typename Range>
std::size_t argmax(const Range& r) {
  std::size_t best = 0, i = 0;
  auto bestv = *std::begin(r);
  for (const auto v : r) {
    if (v > bestv) {
      bestv = v;
      best = i;
    }
    ++i;
  }
  return best;
}

// ---------------------------------------------------------------- LSTM

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };

template <typename T>
struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<Tensor<T>, 4> wx;  // each [hidden, input]
  std::array<Tensor<T>, 4> wh;  // each [hidden, hidden]
  std::array<Tensor<T>, 4> b;   // each [hidden]

  LstmParams() = default;
  LstmParams(std::size_t in, std::size_t hidden) : input_dim(in), hidden_dim(hidden) {
    require(in > 0 && hidden > 0, "LstmParams: dimensions must be positive");
    for (std::size_t g = 0; g < 4; ++g) {
      wx[g] = Tensor<T>({hidden, in});
      wh[g] = Tensor<T>({hidden, hidden});
      b[g] = Tensor<T>({hidden});
    }
  }
};

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

template <typename T>
struct LstmCache {
  Tensor<T> x, h_prev, c_prev;
  std::array<Tensor<T>, 4> gate;  // post-activation i, f, o, g
  Tensor<T> c, tanh_c;
};

namespace detail {
template <typename T>
T sigmoid(T z) {
  return z >= T{0} ? T{1} / (T{1} + std::exp(-z)) : std::exp(z) / (T{1} + std::exp(z));
}
}  // namespace detail

// One step of the standard cell:
//   i = s(Wxi x + Whi h + bi), f = s(...), o = s(...), g = tanh(...)
//   c' = f*c + i*g,  h' = o*tanh(c')
template <typename T>
LstmState<T> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmParams<T>& p, LstmCache<T>* cache = nullptr) {
  const std::size_t I = p.input_dim, H = p.hidden_dim;
  require(x.size() == I, "lstm_step: input dimension mismatch");
  require(h_prev.size() == H && c_prev.size() == H, "lstm_step: state dimension mismatch");
  std::array<Tensor<T>, 4> gate;
  for (std::size_t g = 0; g < 4; ++g) {
    gate[g] = Tensor<T>({H});
    const T* wx = p.wx[g].data();
    const T* wh = p.wh[g].data();
    for (std::size_t r = 0; r < H; ++r) {
      const T z = p.b[g][r] + detail::dot(wx + r * I, x.data(), I) + detail::dot(wh + r * H, h_prev.data(), H);
      gate[g][r] = g == kCandidate ? std::tanh(z) : detail::sigmoid(z);
    }
  }
  LstmState<T> s{Tensor<T>({H}), Tensor<T>({H})};
  Tensor<T> tc({H});
  for (std::size_t r = 0; r < H; ++r) {
    s.c[r] = gate[kForgetGate][r] * c_prev[r] + gate[kInputGate][r] * gate[kCandidate][r];
    tc[r] = std::tanh(s.c[r]);
    s.h[r] = gate[kOutputGate][r] * tc[r];
  }
  s.h.require_finite("lstm_step");
  s.c.require_finite("lstm_step");
  if (cache) *cache = LstmCache<T>{x, h_prev, c_prev, std::move(gate), s.c, std::move(tc)};
  return s;
}

template <typename T>
struct LstmStepGrads {
  Tensor<T> dx, dh_prev, dc_prev;
};

// Backward through one step given dL/dh' and dL/dc'. Parameter gradients are
// accumulated into p's gradient buffers when enabled.
template <typename T>
LstmStepGrads<T> lstm_step_backward(const LstmCache<T>& k, const Tensor<T>& dh, const Tensor<T>& dc,
                                    LstmParams<T>& p) {
  const std::size_t I = p.input_dim, H = p.hidden_dim;
  LstmStepGrads<T> r{Tensor<T>({I}), Tensor<T>({H}), Tensor<T>({H})};
  std::array<Tensor<T>, 4> dz;
  for (auto& t : dz) t = Tensor<T>({H});
  for (std::size_t j = 0; j < H; ++j) {
    const T i = k.gate[kInputGate][j], f = k.gate[kForgetGate][j];
    const T o = k.gate[kOutputGate][j], g = k.gate[kCandidate][j];
    const T tc = k.tanh_c[j];
    const T dct = dc[j] + dh[j] * o * (T{1} - tc * tc);
    dz[kOutputGate][j] = dh[j] * tc * o * (T{1} - o);
    dz[kInputGate][j] = dct * g * i * (T{1} - i);
    dz[kForgetGate][j] = dct * k.c_prev[j] * f * (T{1} - f);
    dz[kCandidate][j] = dct * i * (T{1} - g * g);
    r.dc_prev[j] = dct * f;
  }
  for (std::size_t g = 0; g < 4; ++g) {
    const T* wx = p.wx[g].data();
    const T* wh = p.wh[g].data();
    T* dwx = p.wx[g].has_grad() ? p.wx[g].grad().data() : nullptr;
    T* dwh = p.wh[g].has_grad() ? p.wh[g].grad().data() : nullptr;
    T* db = p.b[g].has_grad() ? p.b[g].grad().data() : nullptr;
    for (std::size_t row = 0; row < H; ++row) {
      const T d = dz[g][row];
      if (d == T{0}) continue;
      const T* wxr = wx + row * I;
      for (std::size_t c = 0; c < I; ++c) r.dx[c] += wxr[c] * d;
      const T* whr = wh + row * H;
      for (std::size_t c = 0; c < H; ++c) r.dh_prev[c] += whr[c] * d;
      if (dwx) {
        T* dr = dwx + row * I;
        for (std::size_t c = 0; c < I; ++c) dr[c] += d * k.x[c];
      }
      if (dwh) {
        T* dr = dwh + row * H;
        for (std::size_t c = 0; c < H; ++c) dr[c] += d * k.h_prev[c];
      }
      if (db) db[row] += d;
    }
  }
  r.dx.require_finite("lstm_step_backward");
  r.dh_prev.require_finite("lstm_step_backward");
  return r;
}

// ---------------------------------------------------------------- SGD

// Step decay: lr(iteration) = base * factor^floor(iteration / every).
struct LrSchedule {
  double base_lr = 0.001;
  double decay_factor = 0.95;
  long long decay_every = 5000;

  double at(long long iteration) const {
    if (decay_every <= 0) return base_lr;
    return base_lr * std::pow(decay_factor, static_cast<double>(iteration / decay_every));
  }
};

// p <- p - lr * g. With momentum m > 0 the update uses v <- m*v + g instead of
// g; with clip_norm > 0 the joint gradient is rescaled to at most that norm.
template <typename T>
class Sgd {
 public:
  explicit Sgd(LrSchedule schedule, double momentum = 0.0, double clip_norm = 0.0)
      : schedule_(schedule), momentum_(momentum), clip_norm_(clip_norm) {
    require(schedule.base_lr > 0.0, "sgd: learning rate must be positive");
    require(momentum >= 0.0 && momentum < 1.0, "sgd: momentum must be in [0, 1)");
  }

  long long iteration() const { return iteration_; }
  double current_lr() const { return schedule_.at(iteration_); }

  void step(const std::vector<Tensor<T>*>& params) {
    double sq = 0.0;
    for (const auto* p : params)
      for (const T g : p->grad()) {
        if (!std::isfinite(g)) throw NumericError("sgd: non-finite gradient");
        sq += static_cast<double>(g) * g;
      }
    double scale = 1.0;
    if (clip_norm_ > 0.0 && std::sqrt(sq) > clip_norm_) scale = clip_norm_ / std::sqrt(sq);
    const T lr = static_cast<T>(schedule_.at(iteration_));
    if (momentum_ > 0.0 && velocity_.size() != params.size()) {
      velocity_.clear();
      for (const auto* p : params) velocity_.emplace_back(p->size(), T{0});
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto* p = params[k];
      auto g = p->grad();
      auto v = p->values();
      if (momentum_ > 0.0) {
        auto& vel = velocity_[k];
        for (std::size_t i = 0; i < v.size(); ++i) {
          vel[i] = static_cast<T>(momentum_) * vel[i] + static_cast<T>(scale) * g[i];
          v[i] -= lr * vel[i];
        }
      } else {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * static_cast<T>(scale) * g[i];
      }
    }
    ++iteration_;
  }

 private:
  LrSchedule schedule_;
  double momentum_;
  double clip_norm_;
  long long iteration_ = 0;
  std::vector<std::vector<T>> velocity_;
};

}  // namespace ongcmp::nn

#include "skssl/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace skssl {
namespace {

template <typename T>
void require(bool ok, const std::string& kind, const std::string& msg) {
  if (!ok) throw ValidationError(kind + ": " + msg);
}

template <typename T>
T uniform_draw(Rng& rng, double limit) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  return static_cast<T>(dist(rng));
}

}  // namespace

double xavier_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// ---------- Conv1d ----------

template <typename T>
Conv1d<T>::Conv1d(std::size_t in_ch_, std::size_t out_ch_, std::size_t k_, std::size_t stride_)
    : in_ch(in_ch_), out_ch(out_ch_), k(k_), stride(stride_),
      w({out_ch_, in_ch_, k_}), b({out_ch_}), dw({out_ch_, in_ch_, k_}), db({out_ch_}) {
  require<T>(in_ch > 0 && out_ch > 0 && k > 0 && stride > 0, "conv1d", "bad hyperparameters");
}

template <typename T>
std::vector<std::size_t> Conv1d<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() == 3, "conv1d", "expected rank-3 input [N,C,L], got " + shape_str(in));
  require<T>(in[1] == in_ch, "conv1d",
             "expected " + std::to_string(in_ch) + " input channels, got " + shape_str(in));
  require<T>(in[2] >= k, "conv1d", "kernel " + std::to_string(k) +
                                       " exceeds input length " + std::to_string(in[2]));
  return {in[0], out_ch, (in[2] - k) / stride + 1};
}

template <typename T>
Tensor<T> Conv1d<T>::forward(const Tensor<T>& x, bool) {
  const auto os = out_shape(x.shape);
  x_ = x;
  const std::size_t N = x.shape[0], L = x.shape[2], Lout = os[2];
  Tensor<T> y(os);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      T* yr = &y.data[(n * out_ch + oc) * Lout];
      const T bias = b.data[oc];
      for (std::size_t t = 0; t < Lout; ++t) yr[t] = bias;
      for (std::size_t ic = 0; ic < in_ch; ++ic) {
        const T* xr = &x.data[(n * in_ch + ic) * L];
        const T* wr = &w.data[(oc * in_ch + ic) * k];
        for (std::size_t kk = 0; kk < k; ++kk) {
          const T wv = wr[kk];
          if (stride == 1) {
            for (std::size_t t = 0; t < Lout; ++t) yr[t] += wv * xr[t + kk];
          } else {
            for (std::size_t t = 0; t < Lout; ++t) yr[t] += wv * xr[t * stride + kk];
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> Conv1d<T>::backward(const Tensor<T>& dy) {
  if (x_.numel() == 0) throw StateError("conv1d: backward before forward");
  const auto os = out_shape(x_.shape);
  require<T>(dy.shape == os, "conv1d", "upstream gradient shape " + shape_str(dy.shape) +
                                           " does not match output " + shape_str(os));
  const std::size_t N = x_.shape[0], L = x_.shape[2], Lout = os[2];
  Tensor<T> dx(x_.shape);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      const T* dyr = &dy.data[(n * out_ch + oc) * Lout];
      T bsum = 0;
      for (std::size_t t = 0; t < Lout; ++t) bsum += dyr[t];
      db.data[oc] += bsum;
      for (std::size_t ic = 0; ic < in_ch; ++ic) {
        const T* xr = &x_.data[(n * in_ch + ic) * L];
        T* dxr = &dx.data[(n * in_ch + ic) * L];
        const T* wr = &w.data[(oc * in_ch + ic) * k];
        T* dwr = &dw.data[(oc * in_ch + ic) * k];
        for (std::size_t kk = 0; kk < k; ++kk) {
          const T wv = wr[kk];
          T acc = 0;
          if (stride == 1) {
            for (std::size_t t = 0; t < Lout; ++t) {
              dxr[t + kk] += wv * dyr[t];
              acc += dyr[t] * xr[t + kk];
            }
          } else {
            for (std::size_t t = 0; t < Lout; ++t) {
              dxr[t * stride + kk] += wv * dyr[t];
              acc += dyr[t] * xr[t * stride + kk];
            }
          }
          dwr[kk] += acc;
        }
      }
    }
  }
  return dx;
}

template <typename T>
void Conv1d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "w", kind(), &w, &dw});
  out.push_back({prefix + "b", kind(), &b, &db});
}

template <typename T>
void Conv1d<T>::init_params(Rng& rng) {
  const double limit = xavier_limit(in_ch * k, out_ch * k);
  for (auto& v : w.data) v = uniform_draw<T>(rng, limit);
  b.fill(T(0));
}

template <typename T>
void Conv1d<T>::zero_grads() {
  dw.fill(T(0));
  db.fill(T(0));
}

// ---------- Conv2d ----------

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_ch_, std::size_t out_ch_, std::size_t kh_, std::size_t kw_,
                  std::size_t stride_, std::size_t pad_)
    : in_ch(in_ch_), out_ch(out_ch_), kh(kh_), kw(kw_), stride(stride_), pad(pad_),
      w({out_ch_, in_ch_, kh_, kw_}), b({out_ch_}),
      dw({out_ch_, in_ch_, kh_, kw_}), db({out_ch_}) {
  require<T>(in_ch > 0 && out_ch > 0 && kh > 0 && kw > 0 && stride > 0, "conv2d",
             "bad hyperparameters");
}

template <typename T>
std::vector<std::size_t> Conv2d<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() == 4, "conv2d", "expected rank-4 input [N,C,H,W], got " + shape_str(in));
  require<T>(in[1] == in_ch, "conv2d",
             "expected " + std::to_string(in_ch) + " input channels, got " + shape_str(in));
  const std::size_t Hp = in[2] + 2 * pad, Wp = in[3] + 2 * pad;
  require<T>(Hp >= kh && Wp >= kw, "conv2d",
             "kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                 " exceeds padded input " + std::to_string(Hp) + "x" + std::to_string(Wp));
  return {in[0], out_ch, (Hp - kh) / stride + 1, (Wp - kw) / stride + 1};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool) {
  const auto os = out_shape(x.shape);
  const std::size_t N = x.shape[0], H = x.shape[2], W = x.shape[3];
  const std::size_t Hp = H + 2 * pad, Wp = W + 2 * pad;
  xpad_ = Tensor<T>({N, in_ch, Hp, Wp});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t ic = 0; ic < in_ch; ++ic)
      for (std::size_t yy = 0; yy < H; ++yy) {
        const T* src = &x.data[((n * in_ch + ic) * H + yy) * W];
        T* dst = &xpad_.data[((n * in_ch + ic) * Hp + yy + pad) * Wp + pad];
        std::copy(src, src + W, dst);
      }
  const std::size_t Hout = os[2], Wout = os[3];
  Tensor<T> y(os);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      T* yplane = &y.data[(n * out_ch + oc) * Hout * Wout];
      const T bias = b.data[oc];
      for (std::size_t i = 0; i < Hout * Wout; ++i) yplane[i] = bias;
      for (std::size_t ic = 0; ic < in_ch; ++ic) {
        for (std::size_t ky = 0; ky < kh; ++ky) {
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const T wv = w.data[((oc * in_ch + ic) * kh + ky) * kw + kx];
            for (std::size_t yy = 0; yy < Hout; ++yy) {
              const T* xr = &xpad_.data[((n * in_ch + ic) * Hp + yy * stride + ky) * Wp + kx];
              T* yr = &yplane[yy * Wout];
              if (stride == 1) {
                for (std::size_t xx = 0; xx < Wout; ++xx) yr[xx] += wv * xr[xx];
              } else {
                for (std::size_t xx = 0; xx < Wout; ++xx) yr[xx] += wv * xr[xx * stride];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
  if (xpad_.numel() == 0) throw StateError("conv2d: backward before forward");
  const std::size_t N = xpad_.shape[0], Hp = xpad_.shape[2], Wp = xpad_.shape[3];
  const std::size_t H = Hp - 2 * pad, W = Wp - 2 * pad;
  const auto os = out_shape({N, in_ch, H, W});
  require<T>(dy.shape == os, "conv2d", "upstream gradient shape " + shape_str(dy.shape) +
                                           " does not match output " + shape_str(os));
  const std::size_t Hout = os[2], Wout = os[3];
  Tensor<T> dxpad({N, in_ch, Hp, Wp});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      const T* dyplane = &dy.data[(n * out_ch + oc) * Hout * Wout];
      T bsum = 0;
      for (std::size_t i = 0; i < Hout * Wout; ++i) bsum += dyplane[i];
      db.data[oc] += bsum;
      for (std::size_t ic = 0; ic < in_ch; ++ic) {
        for (std::size_t ky = 0; ky < kh; ++ky) {
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const T wv = w.data[((oc * in_ch + ic) * kh + ky) * kw + kx];
            T acc = 0;
            for (std::size_t yy = 0; yy < Hout; ++yy) {
              const T* dyr = &dyplane[yy * Wout];
              const T* xr = &xpad_.data[((n * in_ch + ic) * Hp + yy * stride + ky) * Wp + kx];
              T* dxr = &dxpad.data[((n * in_ch + ic) * Hp + yy * stride + ky) * Wp + kx];
              if (stride == 1) {
                for (std::size_t xx = 0; xx < Wout; ++xx) {
                  dxr[xx] += wv * dyr[xx];
                  acc += dyr[xx] * xr[xx];
                }
              } else {
                for (std::size_t xx = 0; xx < Wout; ++xx) {
                  dxr[xx * stride] += wv * dyr[xx];
                  acc += dyr[xx] * xr[xx * stride];
                }
              }
            }
            dw.data[((oc * in_ch + ic) * kh + ky) * kw + kx] += acc;
          }
        }
      }
    }
  }
  Tensor<T> dx({N, in_ch, H, W});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t ic = 0; ic < in_ch; ++ic)
      for (std::size_t yy = 0; yy < H; ++yy) {
        const T* src = &dxpad.data[((n * in_ch + ic) * Hp + yy + pad) * Wp + pad];
        T* dst = &dx.data[((n * in_ch + ic) * H + yy) * W];
        std::copy(src, src + W, dst);
      }
  return dx;
}

template <typename T>
void Conv2d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "w", kind(), &w, &dw});
  out.push_back({prefix + "b", kind(), &b, &db});
}

template <typename T>
void Conv2d<T>::init_params(Rng& rng) {
  const double limit = xavier_limit(in_ch * kh * kw, out_ch * kh * kw);
  for (auto& v : w.data) v = uniform_draw<T>(rng, limit);
  b.fill(T(0));
}

template <typename T>
void Conv2d<T>::zero_grads() {
  dw.fill(T(0));
  db.fill(T(0));
}

// ---------- FullyConnected ----------

template <typename T>
FullyConnected<T>::FullyConnected(std::size_t in_dim_, std::size_t out_dim_)
    : in_dim(in_dim_), out_dim(out_dim_),
      w({out_dim_, in_dim_}), b({out_dim_}), dw({out_dim_, in_dim_}), db({out_dim_}) {
  require<T>(in_dim > 0 && out_dim > 0, "fully_connected", "bad dimensions");
}

template <typename T>
std::vector<std::size_t> FullyConnected<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() == 2, "fully_connected",
             "expected rank-2 input [N,D], got " + shape_str(in));
  require<T>(in[1] == in_dim, "fully_connected",
             "expected width " + std::to_string(in_dim) + ", got " + shape_str(in));
  return {in[0], out_dim};
}

template <typename T>
Tensor<T> FullyConnected<T>::forward(const Tensor<T>& x, bool) {
  const auto os = out_shape(x.shape);
  x_ = x;
  const std::size_t N = x.shape[0];
  Tensor<T> y(os);
  for (std::size_t n = 0; n < N; ++n) {
    const T* xr = &x.data[n * in_dim];
    for (std::size_t o = 0; o < out_dim; ++o) {
      const T* wr = &w.data[o * in_dim];
      T acc = b.data[o];
      for (std::size_t i = 0; i < in_dim; ++i) acc += wr[i] * xr[i];
      y.data[n * out_dim + o] = acc;
    }
  }
  return y;
}

template <typename T>
Tensor<T> FullyConnected<T>::backward(const Tensor<T>& dy) {
  if (x_.numel() == 0) throw StateError("fully_connected: backward before forward");
  const std::size_t N = x_.shape[0];
  require<T>(dy.shape == std::vector<std::size_t>({N, out_dim}), "fully_connected",
             "upstream gradient shape " + shape_str(dy.shape));
  Tensor<T> dx(x_.shape);
  for (std::size_t n = 0; n < N; ++n) {
    const T* xr = &x_.data[n * in_dim];
    const T* dyr = &dy.data[n * out_dim];
    T* dxr = &dx.data[n * in_dim];
    for (std::size_t o = 0; o < out_dim; ++o) {
      const T g = dyr[o];
      db.data[o] += g;
      const T* wr = &w.data[o * in_dim];
      T* dwr = &dw.data[o * in_dim];
      for (std::size_t i = 0; i < in_dim; ++i) {
        dwr[i] += g * xr[i];
        dxr[i] += g * wr[i];
      }
    }
  }
  return dx;
}

template <typename T>
void FullyConnected<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "w", kind(), &w, &dw});
  out.push_back({prefix + "b", kind(), &b, &db});
}

template <typename T>
void FullyConnected<T>::init_params(Rng& rng) {
  const double limit = xavier_limit(in_dim, out_dim);
  for (auto& v : w.data) v = uniform_draw<T>(rng, limit);
  b.fill(T(0));
}

template <typename T>
void FullyConnected<T>::zero_grads() {
  dw.fill(T(0));
  db.fill(T(0));
}

// ---------- ReLU ----------

template <typename T>
std::vector<std::size_t> ReLU<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(!in.empty(), "relu", "rank-0 input");
  return in;
}

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, bool) {
  Tensor<T> y(x.shape);
  for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  y_ = y;
  return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& dy) {
  if (y_.numel() == 0 && dy.numel() != 0) throw StateError("relu: backward before forward");
  require<T>(dy.shape == y_.shape, "relu", "upstream gradient shape " + shape_str(dy.shape));
  Tensor<T> dx(dy.shape);
  for (std::size_t i = 0; i < dy.numel(); ++i)
    dx.data[i] = y_.data[i] > T(0) ? dy.data[i] : T(0);
  return dx;
}

// ---------- BatchNorm ----------

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t dim_)
    : dim(dim_), gamma({dim_}), beta({dim_}), dgamma({dim_}), dbeta({dim_}),
      running_mean({dim_}), running_var({dim_}) {
  require<T>(dim > 0, "batch_norm", "bad dimension");
  gamma.fill(T(1));
  running_var.fill(T(1));
}

template <typename T>
std::vector<std::size_t> BatchNorm<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() == 2, "batch_norm", "expected rank-2 input [N,D], got " + shape_str(in));
  require<T>(in[1] == dim, "batch_norm",
             "expected width " + std::to_string(dim) + ", got " + shape_str(in));
  return in;
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, bool train) {
  out_shape(x.shape);
  const std::size_t N = x.shape[0];
  xhat_ = Tensor<T>(x.shape);
  inv_std_.assign(dim, T(0));
  Tensor<T> y(x.shape);
  if (train) {
    require<T>(N > 0, "batch_norm", "empty batch in train mode");
    for (std::size_t j = 0; j < dim; ++j) {
      T mean = 0;
      for (std::size_t n = 0; n < N; ++n) mean += x.data[n * dim + j];
      mean /= static_cast<T>(N);
      T var = 0;
      for (std::size_t n = 0; n < N; ++n) {
        const T d = x.data[n * dim + j] - mean;
        var += d * d;
      }
      var /= static_cast<T>(N);
      const T is = T(1) / std::sqrt(var + eps);
      inv_std_[j] = is;
      for (std::size_t n = 0; n < N; ++n) {
        const T xh = (x.data[n * dim + j] - mean) * is;
        xhat_.data[n * dim + j] = xh;
        y.data[n * dim + j] = gamma.data[j] * xh + beta.data[j];
      }
      running_mean.data[j] = momentum * running_mean.data[j] + (T(1) - momentum) * mean;
      running_var.data[j] = momentum * running_var.data[j] + (T(1) - momentum) * var;
    }
  } else {
    for (std::size_t j = 0; j < dim; ++j) {
      const T is = T(1) / std::sqrt(running_var.data[j] + eps);
      inv_std_[j] = is;
      for (std::size_t n = 0; n < N; ++n) {
        const T xh = (x.data[n * dim + j] - running_mean.data[j]) * is;
        xhat_.data[n * dim + j] = xh;
        y.data[n * dim + j] = gamma.data[j] * xh + beta.data[j];
      }
    }
  }
  train_cache_ = train;
  return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& dy) {
  if (xhat_.numel() == 0) throw StateError("batch_norm: backward before forward");
  require<T>(dy.shape == xhat_.shape, "batch_norm",
             "upstream gradient shape " + shape_str(dy.shape));
  const std::size_t N = dy.shape[0];
  Tensor<T> dx(dy.shape);
  for (std::size_t j = 0; j < dim; ++j) {
    T s1 = 0, s2 = 0;
    for (std::size_t n = 0; n < N; ++n) {
      s1 += dy.data[n * dim + j];
      s2 += dy.data[n * dim + j] * xhat_.data[n * dim + j];
    }
    dbeta.data[j] += s1;
    dgamma.data[j] += s2;
    const T g = gamma.data[j] * inv_std_[j];
    if (train_cache_) {
      const T m1 = s1 / static_cast<T>(N), m2 = s2 / static_cast<T>(N);
      for (std::size_t n = 0; n < N; ++n) {
        dx.data[n * dim + j] =
            g * (dy.data[n * dim + j] - m1 - xhat_.data[n * dim + j] * m2);
      }
    } else {
      for (std::size_t n = 0; n < N; ++n) dx.data[n * dim + j] = g * dy.data[n * dim + j];
    }
  }
  return dx;
}

template <typename T>
void BatchNorm<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  out.push_back({prefix + "gamma", kind(), &gamma, &dgamma});
  out.push_back({prefix + "beta", kind(), &beta, &dbeta});
}

template <typename T>
void BatchNorm<T>::collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {
  out.push_back({prefix + "running_mean", &running_mean});
  out.push_back({prefix + "running_var", &running_var});
}

template <typename T>
void BatchNorm<T>::init_params(Rng&) {
  gamma.fill(T(1));
  beta.fill(T(0));
  running_mean.fill(T(0));
  running_var.fill(T(1));
}

template <typename T>
void BatchNorm<T>::zero_grads() {
  dgamma.fill(T(0));
  dbeta.fill(T(0));
}

// ---------- MaxPool2d ----------

template <typename T>
MaxPool2d<T>::MaxPool2d(std::size_t k_) : k(k_) {
  require<T>(k > 1, "max_pool", "kernel must exceed 1");
}

template <typename T>
std::vector<std::size_t> MaxPool2d<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() == 4, "max_pool", "expected rank-4 input [N,C,H,W], got " + shape_str(in));
  require<T>(in[2] % k == 0 && in[3] % k == 0, "max_pool",
             "spatial dims " + std::to_string(in[2]) + "x" + std::to_string(in[3]) +
                 " not divisible by pool size " + std::to_string(k));
  return {in[0], in[1], in[2] / k, in[3] / k};
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, bool) {
  const auto os = out_shape(x.shape);
  in_shape_ = x.shape;
  const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const std::size_t Ho = os[2], Wo = os[3];
  Tensor<T> y(os);
  argmax_.assign(y.numel(), 0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (n * C + c) * H * W;
      for (std::size_t yo = 0; yo < Ho; ++yo)
        for (std::size_t xo = 0; xo < Wo; ++xo) {
          std::size_t best = base + (yo * k) * W + xo * k;
          T bv = x.data[best];
          for (std::size_t dy_ = 0; dy_ < k; ++dy_)
            for (std::size_t dx_ = 0; dx_ < k; ++dx_) {
              const std::size_t idx = base + (yo * k + dy_) * W + (xo * k + dx_);
              if (x.data[idx] > bv) {
                bv = x.data[idx];
                best = idx;
              }
            }
          const std::size_t oidx = ((n * C + c) * Ho + yo) * Wo + xo;
          y.data[oidx] = bv;
          argmax_[oidx] = best;
        }
    }
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& dy) {
  if (in_shape_.empty()) throw StateError("max_pool: backward before forward");
  require<T>(dy.shape == out_shape(in_shape_), "max_pool",
             "upstream gradient shape " + shape_str(dy.shape));
  Tensor<T> dx(in_shape_);
  for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[argmax_[i]] += dy.data[i];
  return dx;
}

// ---------- GlobalMaxPool ----------

template <typename T>
std::vector<std::size_t> GlobalMaxPool<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() == 3 || in.size() == 4, "global_max_pool",
             "expected rank-3 or rank-4 input, got " + shape_str(in));
  for (std::size_t i = 2; i < in.size(); ++i)
    require<T>(in[i] > 0, "global_max_pool", "empty spatial dim in " + shape_str(in));
  return {in[0], in[1]};
}

template <typename T>
Tensor<T> GlobalMaxPool<T>::forward(const Tensor<T>& x, bool) {
  const auto os = out_shape(x.shape);
  in_shape_ = x.shape;
  const std::size_t N = x.shape[0], C = x.shape[1];
  std::size_t S = 1;
  for (std::size_t i = 2; i < x.shape.size(); ++i) S *= x.shape[i];
  Tensor<T> y(os);
  argmax_.assign(N * C, 0);
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T* xr = &x.data[nc * S];
    std::size_t best = 0;
    T bv = xr[0];
    for (std::size_t s = 1; s < S; ++s)
      if (xr[s] > bv) {
        bv = xr[s];
        best = s;
      }
    y.data[nc] = bv;
    argmax_[nc] = nc * S + best;
  }
  return y;
}

template <typename T>
Tensor<T> GlobalMaxPool<T>::backward(const Tensor<T>& dy) {
  if (in_shape_.empty()) throw StateError("global_max_pool: backward before forward");
  require<T>(dy.shape == out_shape(in_shape_), "global_max_pool",
             "upstream gradient shape " + shape_str(dy.shape));
  Tensor<T> dx(in_shape_);
  for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[argmax_[i]] += dy.data[i];
  return dx;
}

// ---------- Flatten ----------

template <typename T>
std::vector<std::size_t> Flatten<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() >= 2, "flatten", "expected batched input, got " + shape_str(in));
  std::size_t d = 1;
  for (std::size_t i = 1; i < in.size(); ++i) d *= in[i];
  return {in[0], d};
}

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x, bool) {
  const auto os = out_shape(x.shape);
  in_shape_ = x.shape;
  return Tensor<T>(os, x.data);
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& dy) {
  if (in_shape_.empty()) throw StateError("flatten: backward before forward");
  require<T>(dy.shape == out_shape(in_shape_), "flatten",
             "upstream gradient shape " + shape_str(dy.shape));
  return Tensor<T>(in_shape_, dy.data);
}

// ---------- AsSequence ----------

template <typename T>
std::vector<std::size_t> AsSequence<T>::out_shape(const std::vector<std::size_t>& in) const {
  require<T>(in.size() == 2, "as_sequence", "expected rank-2 input [N,D], got " + shape_str(in));
  return {in[0], 1, in[1]};
}

template <typename T>
Tensor<T> AsSequence<T>::forward(const Tensor<T>& x, bool) {
  return Tensor<T>(out_shape(x.shape), x.data);
}

template <typename T>
Tensor<T> AsSequence<T>::backward(const Tensor<T>& dy) {
  require<T>(dy.rank() == 3 && dy.shape[1] == 1, "as_sequence",
             "upstream gradient shape " + shape_str(dy.shape));
  return Tensor<T>({dy.shape[0], dy.shape[2]}, dy.data);
}

// ---------- ParallelConcat ----------

template <typename T>
ParallelConcat<T>::ParallelConcat(std::vector<std::vector<LayerPtr<T>>> branches)
    : branches_(std::move(branches)) {
  require<T>(!branches_.empty(), "parallel_concat", "no branches");
  for (const auto& br : branches_)
    require<T>(!br.empty(), "parallel_concat", "empty branch");
}

template <typename T>
std::vector<std::size_t> ParallelConcat<T>::out_shape(const std::vector<std::size_t>& in) const {
  std::size_t width = 0;
  for (const auto& br : branches_) {
    auto s = in;
    for (const auto& l : br) s = l->out_shape(s);
    require<T>(s.size() == 2, "parallel_concat",
               "branch must end rank-2, got " + shape_str(s));
    width += s[1];
  }
  return {in[0], width};
}

template <typename T>
Tensor<T> ParallelConcat<T>::forward(const Tensor<T>& x, bool train) {
  const auto os = out_shape(x.shape);
  const std::size_t N = x.shape[0];
  Tensor<T> y(os);
  widths_.clear();
  std::size_t col = 0;
  for (auto& br : branches_) {
    Tensor<T> h = x;
    for (auto& l : br) h = l->forward(h, train);
    const std::size_t wdt = h.shape[1];
    widths_.push_back(wdt);
    for (std::size_t n = 0; n < N; ++n)
      std::copy(&h.data[n * wdt], &h.data[(n + 1) * wdt], &y.data[n * os[1] + col]);
    col += wdt;
  }
  return y;
}

template <typename T>
Tensor<T> ParallelConcat<T>::backward(const Tensor<T>& dy) {
  if (widths_.empty()) throw StateError("parallel_concat: backward before forward");
  const std::size_t N = dy.shape[0];
  Tensor<T> dx;
  std::size_t col = 0;
  for (std::size_t bi = 0; bi < branches_.size(); ++bi) {
    const std::size_t wdt = widths_[bi];
    Tensor<T> d({N, wdt});
    for (std::size_t n = 0; n < N; ++n)
      std::copy(&dy.data[n * dy.shape[1] + col], &dy.data[n * dy.shape[1] + col + wdt],
                &d.data[n * wdt]);
    col += wdt;
    auto& br = branches_[bi];
    for (auto it = br.rbegin(); it != br.rend(); ++it) d = (*it)->backward(d);
    if (dx.numel() == 0) {
      dx = std::move(d);
    } else {
      require<T>(dx.shape == d.shape, "parallel_concat", "branch input gradients disagree");
      for (std::size_t i = 0; i < dx.numel(); ++i) dx.data[i] += d.data[i];
    }
  }
  require<T>(col == dy.shape[1], "parallel_concat",
             "upstream gradient width " + std::to_string(dy.shape[1]));
  return dx;
}

template <typename T>
void ParallelConcat<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
  for (std::size_t bi = 0; bi < branches_.size(); ++bi)
    for (std::size_t li = 0; li < branches_[bi].size(); ++li)
      branches_[bi][li]->collect_params(
          prefix + "b" + std::to_string(bi) + ".l" + std::to_string(li) + ".", out);
}

template <typename T>
void ParallelConcat<T>::collect_buffers(const std::string& prefix,
                                        std::vector<BufferRef<T>>& out) {
  for (std::size_t bi = 0; bi < branches_.size(); ++bi)
    for (std::size_t li = 0; li < branches_[bi].size(); ++li)
      branches_[bi][li]->collect_buffers(
          prefix + "b" + std::to_string(bi) + ".l" + std::to_string(li) + ".", out);
}

template <typename T>
void ParallelConcat<T>::collect_kinds(std::vector<std::string>& out) const {
  out.push_back(kind());
  for (const auto& br : branches_)
    for (const auto& l : br) l->collect_kinds(out);
}

template <typename T>
void ParallelConcat<T>::init_params(Rng& rng) {
  for (auto& br : branches_)
    for (auto& l : br) l->init_params(rng);
}

template <typename T>
void ParallelConcat<T>::zero_grads() {
  for (auto& br : branches_)
    for (auto& l : br) l->zero_grads();
}

template class Conv1d<float>;
template class Conv1d<double>;
template class Conv2d<float>;
template class Conv2d<double>;
template class FullyConnected<float>;
template class FullyConnected<double>;
template class ReLU<float>;
template class ReLU<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class GlobalMaxPool<float>;
template class GlobalMaxPool<double>;
template class Flatten<float>;
template class Flatten<double>;
template class AsSequence<float>;
template class AsSequence<double>;
template class ParallelConcat<float>;
template class ParallelConcat<double>;

}  // namespace skssl

// Copyright 2026 The lcslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch normalization, 2-D convolution and bilinear resizing.
//
// Images travel through the network as channels-last pixel matrices: a batch
// of B images of size H x W with C channels is a (B*H*W) x C matrix whose row
// (b*H + r)*W + c holds pixel (r, c) of image b.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lcslab/ad/ops.hpp"

namespace lcslab::ad {

struct BatchNormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-column batch normalization of x (N x D) with scale gamma and shift beta
/// (both 1 x D).
///
/// Training mode standardizes by the batch mean and biased variance and updates
/// the running statistics in place (running_var tracks the unbiased variance).
/// Inference mode uses the running statistics.
template <typename T>
Var<T> batch_norm(Var<T> x, Var<T> gamma, Var<T> beta, Matrix<T>& running_mean,
                  Matrix<T>& running_var, bool training, BatchNormOptions opt = {}) {
  const auto& X = x.value();
  const std::size_t N = X.rows(), D = X.cols();
  detail::require(gamma.rows() == 1 && gamma.cols() == D && beta.rows() == 1 &&
                      beta.cols() == D && running_mean.cols() == D && running_var.cols() == D,
                  "batch_norm", "parameter widths must match " + std::to_string(D) + " features");
  detail::require(!training || N >= 2, "batch_norm", "training mode needs at least 2 rows");
  const T eps = static_cast<T>(opt.eps);

  std::vector<T> mean(D, T{0}), inv_std(D, T{0});
  if (training) {
    std::vector<T> var(D, T{0});
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < D; ++j) mean[j] += X(i, j);
    }
    for (auto& m : mean) m /= static_cast<T>(N);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < D; ++j) {
        const T d = X(i, j) - mean[j];
        var[j] += d * d;
      }
    }
    const T mom = static_cast<T>(opt.momentum);
    for (std::size_t j = 0; j < D; ++j) {
      var[j] /= static_cast<T>(N);
      inv_std[j] = T{1} / std::sqrt(var[j] + eps);
      running_mean[j] = (T{1} - mom) * running_mean[j] + mom * mean[j];
      running_var[j] = (T{1} - mom) * running_var[j] +
                       mom * var[j] * static_cast<T>(N) / static_cast<T>(N - 1);
    }
  } else {
    for (std::size_t j = 0; j < D; ++j) {
      mean[j] = running_mean[j];
      inv_std[j] = T{1} / std::sqrt(running_var[j] + eps);
    }
  }

  const auto& G = gamma.value();
  const auto& Bt = beta.value();
  Matrix<T> xhat(N, D), out(N, D);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      xhat(i, j) = (X(i, j) - mean[j]) * inv_std[j];
      out(i, j) = G[j] * xhat(i, j) + Bt[j];
    }
  }
  return x.tape->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, training, inv_std = std::move(inv_std), xhat = std::move(xhat), N, D](
          Tape<T>& tp, const Matrix<T>& g) {
        const auto& G = tp.value(gamma);
        std::vector<T> gsum(D, T{0}), gxsum(D, T{0});
        for (std::size_t i = 0; i < N; ++i) {
          for (std::size_t j = 0; j < D; ++j) {
            gsum[j] += g(i, j);
            gxsum[j] += g(i, j) * xhat(i, j);
          }
        }
        if (auto* gg = tp.grad_buffer(gamma)) {
          for (std::size_t j = 0; j < D; ++j) (*gg)[j] += gxsum[j];
        }
        if (auto* gb = tp.grad_buffer(beta)) {
          for (std::size_t j = 0; j < D; ++j) (*gb)[j] += gsum[j];
        }
        if (auto* gx = tp.grad_buffer(x)) {
          const T invn = T{1} / static_cast<T>(N);
          for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < D; ++j) {
              T v = g(i, j);
              if (training) v -= invn * (gsum[j] + xhat(i, j) * gxsum[j]);
              (*gx)(i, j) += G[j] * inv_std[j] * v;
            }
          }
        }
      });
}

/// Batch geometry of a pixel matrix.
struct ImageGeometry {
  std::uint32_t batch = 1;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::size_t rows() const { return std::size_t{batch} * height * width; }
};

/// Stride-1 cross-correlation with zero padding ksize/2.
///
/// x: (B*H*W) x C_in; kernel: C_out x (C_in*k*k), entry
/// [co][(ci*k + dy)*k + dx]; bias: 1 x C_out. Output: (B*H*W) x C_out.
template <typename T>
Var<T> conv2d(Var<T> x, ImageGeometry geo, Var<T> kernel, Var<T> bias, std::uint32_t ksize) {
  const auto& X = x.value();
  const auto& K = kernel.value();
  detail::require(ksize % 2 == 1, "conv2d", "kernel size must be odd");
  detail::require(X.rows() == geo.rows(), "conv2d",
                  "input rows " + std::to_string(X.rows()) + " do not match the image geometry");
  const std::size_t cin = X.cols(), cout = K.rows(), kk = std::size_t{ksize} * ksize;
  detail::require(K.cols() == cin * kk, "conv2d",
                  "kernel " + shape_str(K) + " does not match " + std::to_string(cin) +
                      " input channels");
  detail::require(bias.rows() == 1 && bias.cols() == cout, "conv2d", "bias must be 1 x C_out");
  const int pad = static_cast<int>(ksize / 2);
  const int H = static_cast<int>(geo.height), W = static_cast<int>(geo.width);

  // Transposed kernel: kt[(tap * cin + ci) * cout + co].
  std::vector<T> kt(cin * kk * cout);
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t t = 0; t < kk; ++t) kt[(t * cin + ci) * cout + co] = K(co, ci * kk + t);
    }
  }
  Matrix<T> out(X.rows(), cout);
  const auto& Bv = bias.value();
  for (std::uint32_t b = 0; b < geo.batch; ++b) {
    const std::size_t base = std::size_t{b} * H * W;
    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        T* o = &out(base + std::size_t(r) * W + c, 0);
        for (std::size_t co = 0; co < cout; ++co) o[co] = Bv[co];
        for (int dy = 0; dy < static_cast<int>(ksize); ++dy) {
          const int rr = r + dy - pad;
          if (rr < 0 || rr >= H) continue;
          for (int dx = 0; dx < static_cast<int>(ksize); ++dx) {
            const int cc = c + dx - pad;
            if (cc < 0 || cc >= W) continue;
            const T* xi = &X(base + std::size_t(rr) * W + cc, 0);
            const std::size_t t = std::size_t(dy) * ksize + dx;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const T xv = xi[ci];
              const T* kr = &kt[(t * cin + ci) * cout];
              for (std::size_t co = 0; co < cout; ++co) o[co] += xv * kr[co];
            }
          }
        }
      }
    }
  }
  return x.tape->record(
      std::move(out), {x, kernel, bias},
      [x, kernel, bias, geo, ksize, cin, cout, kk, pad, kt = std::move(kt)](Tape<T>& tp,
                                                                          const Matrix<T>& g) {
        const auto& X = tp.value(x);
        auto* gx = tp.grad_buffer(x);
        auto* gk = tp.grad_buffer(kernel);
        auto* gb = tp.grad_buffer(bias);
        const int H = static_cast<int>(geo.height), W = static_cast<int>(geo.width);
        std::vector<T> gkt(gk ? kt.size() : 0, T{0});
        for (std::uint32_t b = 0; b < geo.batch; ++b) {
          const std::size_t base = std::size_t{b} * H * W;
          for (int r = 0; r < H; ++r) {
            for (int c = 0; c < W; ++c) {
              const T* go = &g(base + std::size_t(r) * W + c, 0);
              if (gb) {
                for (std::size_t co = 0; co < cout; ++co) (*gb)[co] += go[co];
              }
              for (int dy = 0; dy < static_cast<int>(ksize); ++dy) {
                const int rr = r + dy - pad;
                if (rr < 0 || rr >= H) continue;
                for (int dx = 0; dx < static_cast<int>(ksize); ++dx) {
                  const int cc = c + dx - pad;
                  if (cc < 0 || cc >= W) continue;
                  const std::size_t xrow = base + std::size_t(rr) * W + cc;
                  const std::size_t t = std::size_t(dy) * ksize + dx;
                  for (std::size_t ci = 0; ci < cin; ++ci) {
                    const T* kr = &kt[(t * cin + ci) * cout];
                    if (gx) {
                      T acc{0};
                      for (std::size_t co = 0; co < cout; ++co) acc += kr[co] * go[co];
                      (*gx)(xrow, ci) += acc;
                    }
                    if (gk) {
                      const T xv = X(xrow, ci);
                      T* gr = &gkt[(t * cin + ci) * cout];
                      for (std::size_t co = 0; co < cout; ++co) gr[co] += xv * go[co];
                    }
                  }
                }
              }
            }
          }
        }
        if (gk) {
          for (std::size_t co = 0; co < cout; ++co) {
            for (std::size_t ci = 0; ci < cin; ++ci) {
              for (std::size_t t = 0; t < kk; ++t) {
                (*gk)(co, ci * kk + t) += gkt[(t * cin + ci) * cout + co];
              }
            }
          }
        }
      });
}

namespace detail {

struct Tap {
  std::uint32_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

/// Half-pixel (align_corners = false) source coordinates along one axis.
inline std::vector<Tap> resize_taps(std::uint32_t in, std::uint32_t out) {
  std::vector<Tap> taps(out);
  const double s = static_cast<double>(in) / out;
  for (std::uint32_t o = 0; o < out; ++o) {
    const double src = std::max(0.0, (o + 0.5) * s - 0.5);
    const auto i0 = std::min(static_cast<std::uint32_t>(src), in - 1);
    const std::uint32_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace detail

/// Bilinear resize of each image in a pixel matrix to out_h x out_w
/// (align_corners = false sampling grid, edge clamped).
template <typename T>
Var<T> bilinear_resize(Var<T> x, ImageGeometry geo, std::uint32_t out_h, std::uint32_t out_w) {
  const auto& X = x.value();
  detail::require(out_h >= 1 && out_w >= 1, "bilinear_resize", "output size must be positive");
  detail::require(X.rows() == geo.rows(), "bilinear_resize", "rows do not match geometry");
  const auto ty = detail::resize_taps(geo.height, out_h);
  const auto tx = detail::resize_taps(geo.width, out_w);
  const std::size_t C = X.cols();
  Matrix<T> out(std::size_t{geo.batch} * out_h * out_w, C);
  auto for_each_tap = [ty, tx, geo, out_h, out_w](auto&& fn) {
    for (std::uint32_t b = 0; b < geo.batch; ++b) {
      const std::size_t ib = std::size_t{b} * geo.height * geo.width;
      const std::size_t ob = std::size_t{b} * out_h * out_w;
      for (std::uint32_t r = 0; r < out_h; ++r) {
        for (std::uint32_t c = 0; c < out_w; ++c) {
          const auto& a = ty[r];
          const auto& bb = tx[c];
          const std::size_t orow = ob + std::size_t{r} * out_w + c;
          const T wy1 = static_cast<T>(a.w1), wy0 = T{1} - wy1;
          const T wx1 = static_cast<T>(bb.w1), wx0 = T{1} - wx1;
          fn(orow, ib + std::size_t{a.i0} * geo.width + bb.i0, wy0 * wx0);
          fn(orow, ib + std::size_t{a.i0} * geo.width + bb.i1, wy0 * wx1);
          fn(orow, ib + std::size_t{a.i1} * geo.width + bb.i0, wy1 * wx0);
          fn(orow, ib + std::size_t{a.i1} * geo.width + bb.i1, wy1 * wx1);
        }
      }
    }
  };
  for_each_tap([&](std::size_t orow, std::size_t irow, T w) {
    for (std::size_t ch = 0; ch < C; ++ch) out(orow, ch) += w * X(irow, ch);
  });
  return x.tape->record(std::move(out), {x},
                        [x, for_each_tap, C](Tape<T>& tp, const Matrix<T>& g) {
                          auto* gx = tp.grad_buffer(x);
                          if (!gx) return;
                          for_each_tap([&](std::size_t orow, std::size_t irow, T w) {
                            for (std::size_t ch = 0; ch < C; ++ch) (*gx)(irow, ch) += w * g(orow, ch);
                          });
                        });
}

}  // namespace lcslab::ad

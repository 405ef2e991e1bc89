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

// Differentiable primitives on 2-D tensors.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lcslab/ad/tape.hpp"

namespace lcslab::ad {

namespace detail {

inline void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw ValidationError(std::string(op) + ": " + what);
}

template <typename T>
void require_same(const Matrix<T>& a, const Matrix<T>& b, const char* op) {
  require(a.same_shape(b), op,
          "shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace detail

/// a (n x k) times b (k x m).
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  detail::require(A.cols() == B.rows(), "matmul",
                  "inner dimensions differ: " + shape_str(A) + " x " + shape_str(B));
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Matrix<T> out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    T* o = &out(i, 0);
    for (std::size_t t = 0; t < k; ++t) {
      const T av = A(i, t);
      if (av == T{0}) continue;
      const T* br = &B(t, 0);
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
  return a.tape->record(std::move(out), {a, b}, [a, b, n, k, m](Tape<T>& tp, const Matrix<T>& g) {
    const auto& A = tp.value(a);
    const auto& B = tp.value(b);
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
          T acc{0};
          for (std::size_t j = 0; j < m; ++j) acc += g(i, j) * B(t, j);
          (*ga)(i, t) += acc;
        }
      }
    }
    if (auto* gb = tp.grad_buffer(b)) {
      for (std::size_t i = 0; i < n; ++i) {
        const T* gr = &g(i, 0);
        for (std::size_t t = 0; t < k; ++t) {
          const T av = A(i, t);
          if (av == T{0}) continue;
          T* o = &(*gb)(t, 0);
          for (std::size_t j = 0; j < m; ++j) o[j] += av * gr[j];
        }
      }
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::require_same(a.value(), b.value(), "add");
  Matrix<T> out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Matrix<T>& g) {
    for (Var<T> v : {a, b}) {
      if (auto* gv = tp.grad_buffer(v)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gv)[i] += g[i];
      }
    }
  });
}

/// a (n x m) plus row vector r (1 x m) broadcast over rows.
template <typename T>
Var<T> add_row(Var<T> a, Var<T> r) {
  const auto& A = a.value();
  const auto& R = r.value();
  detail::require(R.rows() == 1 && R.cols() == A.cols(), "add_row",
                  "row " + shape_str(R) + " does not broadcast over " + shape_str(A));
  Matrix<T> out = A;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += R[j];
  }
  return a.tape->record(std::move(out), {a, r}, [a, r](Tape<T>& tp, const Matrix<T>& g) {
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (auto* gr = tp.grad_buffer(r)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)[j] += g(i, j);
      }
    }
  });
}

/// Elementwise product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  detail::require_same(a.value(), b.value(), "mul");
  Matrix<T> out = a.value();
  const auto& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Matrix<T>& g) {
    const auto& A = tp.value(a);
    const auto& B = tp.value(b);
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * B[i];
    }
    if (auto* gb = tp.grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * A[i];
    }
  });
}

/// a (n x m) times row vector r (1 x m), broadcast over rows.
template <typename T>
Var<T> mul_row(Var<T> a, Var<T> r) {
  const auto& A = a.value();
  const auto& R = r.value();
  detail::require(R.rows() == 1 && R.cols() == A.cols(), "mul_row",
                  "row " + shape_str(R) + " does not broadcast over " + shape_str(A));
  Matrix<T> out = A;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= R[j];
  }
  return a.tape->record(std::move(out), {a, r}, [a, r](Tape<T>& tp, const Matrix<T>& g) {
    const auto& A = tp.value(a);
    const auto& R = tp.value(r);
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) * R[j];
      }
    }
    if (auto* gr = tp.grad_buffer(r)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)[j] += g(i, j) * A(i, j);
      }
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  Matrix<T> out = a.value();
  for (auto& v : out.values()) v *= s;
  return a.tape->record(std::move(out), {a}, [a, s](Tape<T>& tp, const Matrix<T>& g) {
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += s * g[i];
    }
  });
}

/// max(x, 0); the subgradient at exactly 0 is 0.
template <typename T>
Var<T> relu(Var<T> a) {
  Matrix<T> out = a.value();
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& tp, const Matrix<T>& g) {
    const auto& A = tp.value(a);
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (A[i] > T{0}) (*ga)[i] += g[i];
      }
    }
  });
}

template <typename T>
Var<T> leaky_relu(Var<T> a, T slope) {
  Matrix<T> out = a.value();
  for (auto& v : out.values()) v = v > T{0} ? v : slope * v;
  return a.tape->record(std::move(out), {a}, [a, slope](Tape<T>& tp, const Matrix<T>& g) {
    const auto& A = tp.value(a);
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += A[i] > T{0} ? g[i] : slope * g[i];
    }
  });
}

/// Column-wise concatenation [a | b | ...].
template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  detail::require(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t n = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == n, "concat_cols", "row counts differ");
    total += p.cols();
  }
  Matrix<T> out(n, total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& P = p.value();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(P.row(i).begin(), P.row(i).end(), out.row(i).begin() + off);
    }
    off += P.cols();
  }
  std::vector<Var<T>> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [inputs](Tape<T>& tp, const Matrix<T>& g) {
    std::size_t off = 0;
    for (const auto& p : inputs) {
      const std::size_t c = tp.value(p).cols();
      if (auto* gp = tp.grad_buffer(p)) {
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < c; ++j) (*gp)(i, j) += g(i, off + j);
        }
      }
      off += c;
    }
  });
}

template <typename T>
Var<T> concat_cols(std::initializer_list<Var<T>> parts) {
  return concat_cols(std::span<const Var<T>>(parts.begin(), parts.size()));
}

/// Columns [begin, begin + count).
template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t begin, std::size_t count) {
  const auto& A = a.value();
  detail::require(begin + count <= A.cols(), "slice_cols", "column range out of bounds");
  Matrix<T> out(A.rows(), count);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < count; ++j) out(i, j) = A(i, begin + j);
  }
  return a.tape->record(std::move(out), {a}, [a, begin, count](Tape<T>& tp, const Matrix<T>& g) {
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < count; ++j) (*ga)(i, begin + j) += g(i, j);
      }
    }
  });
}

/// Row i of the result is row idx[i] of a.
template <typename T>
Var<T> gather_rows(Var<T> a, std::vector<std::uint32_t> idx) {
  const auto& A = a.value();
  for (std::uint32_t i : idx) {
    detail::require(i < A.rows(), "gather_rows",
                    "row id " + std::to_string(i) + " out of range for " + shape_str(A));
  }
  Matrix<T> out(idx.size(), A.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(A.row(idx[i]).begin(), A.row(idx[i]).end(), out.row(i).begin());
  }
  return a.tape->record(std::move(out), {a},
                        [a, idx = std::move(idx)](Tape<T>& tp, const Matrix<T>& g) {
                          if (auto* ga = tp.grad_buffer(a)) {
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              auto dst = ga->row(idx[i]);
                              auto src = g.row(i);
                              for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                            }
                          }
                        });
}

namespace detail {

template <typename T>
Var<T> segment_reduce(Var<T> a, std::vector<std::uint32_t> ids, std::uint32_t segments,
                      bool mean, const char* op) {
  const auto& A = a.value();
  require(ids.size() == A.rows(), op, "one segment id per row required");
  std::vector<T> inv(segments, T{0});
  for (std::uint32_t id : ids) {
    require(id < segments, op, "segment id " + std::to_string(id) + " out of range");
    inv[id] += T{1};
  }
  for (auto& c : inv) c = mean ? (c > T{0} ? T{1} / c : T{0}) : T{1};
  Matrix<T> out(segments, A.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto dst = out.row(ids[i]);
    auto src = A.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
  }
  for (std::uint32_t s = 0; s < segments; ++s) {
    for (auto& v : out.row(s)) v *= inv[s];
  }
  return a.tape->record(std::move(out), {a},
                        [a, ids = std::move(ids), inv = std::move(inv)](Tape<T>& tp,
                                                                        const Matrix<T>& g) {
                          if (auto* ga = tp.grad_buffer(a)) {
                            for (std::size_t i = 0; i < ids.size(); ++i) {
                              auto dst = ga->row(i);
                              auto src = g.row(ids[i]);
                              const T w = inv[ids[i]];
                              for (std::size_t j = 0; j < src.size(); ++j) dst[j] += w * src[j];
                            }
                          }
                        });
}

}  // namespace detail

/// Row s of the result is the sum of rows i with ids[i] == s.
template <typename T>
Var<T> segment_sum(Var<T> a, std::vector<std::uint32_t> ids, std::uint32_t segments) {
  return detail::segment_reduce(a, std::move(ids), segments, false, "segment_sum");
}

/// Row s of the result is the mean of rows i with ids[i] == s (zero if none);
/// the adjoint spreads grad / |s| back to each member row.
template <typename T>
Var<T> segment_mean(Var<T> a, std::vector<std::uint32_t> ids, std::uint32_t segments) {
  return detail::segment_reduce(a, std::move(ids), segments, true, "segment_mean");
}

/// Sums consecutive column groups: out(r, j) = sum_t a(r, j*group + t).
template <typename T>
Var<T> sum_col_groups(Var<T> a, std::size_t group) {
  const auto& A = a.value();
  detail::require(group > 0 && A.cols() % group == 0, "sum_col_groups",
                  "column count not divisible by group width");
  const std::size_t groups = A.cols() / group;
  Matrix<T> out(A.rows(), groups);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < groups; ++j) {
      T acc{0};
      for (std::size_t t = 0; t < group; ++t) acc += A(i, j * group + t);
      out(i, j) = acc;
    }
  }
  return a.tape->record(std::move(out), {a}, [a, group, groups](Tape<T>& tp, const Matrix<T>& g) {
    if (auto* ga = tp.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < groups; ++j) {
          for (std::size_t t = 0; t < group; ++t) (*ga)(i, j * group + t) += g(i, j);
        }
      }
    }
  });
}

/// Averages `blocks` equally wide column blocks:
/// out(r, j) = mean_b a(r, b*width + j).
template <typename T>
Var<T> mean_col_blocks(Var<T> a, std::size_t blocks) {
  const auto& A = a.value();
  detail::require(blocks > 0 && A.cols() % blocks == 0, "mean_col_blocks",
                  "column count not divisible by block count");
  const std::size_t width = A.cols() / blocks;
  const T inv = T{1} / static_cast<T>(blocks);
  Matrix<T> out(A.rows(), width);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t j = 0; j < width; ++j) out(i, j) += A(i, b * width + j);
    }
    for (std::size_t j = 0; j < width; ++j) out(i, j) *= inv;
  }
  return a.tape->record(std::move(out), {a},
                        [a, blocks, width, inv](Tape<T>& tp, const Matrix<T>& g) {
                          if (auto* ga = tp.grad_buffer(a)) {
                            for (std::size_t i = 0; i < g.rows(); ++i) {
                              for (std::size_t b = 0; b < blocks; ++b) {
                                for (std::size_t j = 0; j < width; ++j) {
                                  (*ga)(i, b * width + j) += inv * g(i, j);
                                }
                              }
                            }
                          }
                        });
}

/// Softmax of each column of `scores` (E x H) within groups of rows sharing an
/// id. Used for attention over the closed neighbourhood of each target node.
template <typename T>
Var<T> segment_softmax(Var<T> scores, std::vector<std::uint32_t> ids, std::uint32_t segments) {
  const auto& X = scores.value();
  detail::require(ids.size() == X.rows(), "segment_softmax", "one group id per row required");
  const std::size_t H = X.cols();
  Matrix<T> mx(segments, H, -std::numeric_limits<T>::infinity());
  for (std::size_t e = 0; e < ids.size(); ++e) {
    detail::require(ids[e] < segments, "segment_softmax", "group id out of range");
    for (std::size_t h = 0; h < H; ++h) mx(ids[e], h) = std::max(mx(ids[e], h), X(e, h));
  }
  Matrix<T> denom(segments, H);
  Matrix<T> out(X.rows(), H);
  for (std::size_t e = 0; e < ids.size(); ++e) {
    for (std::size_t h = 0; h < H; ++h) {
      out(e, h) = std::exp(X(e, h) - mx(ids[e], h));
      denom(ids[e], h) += out(e, h);
    }
  }
  for (std::size_t e = 0; e < ids.size(); ++e) {
    for (std::size_t h = 0; h < H; ++h) out(e, h) /= denom(ids[e], h);
  }
  Var<T> result;
  result = scores.tape->record(
      std::move(out), {scores},
      [scores, ids = std::move(ids), segments, H, self = std::uint32_t(scores.tape->size())](
          Tape<T>& tp, const Matrix<T>& g) {
        auto* gx = tp.grad_buffer(scores);
        if (!gx) return;
        const auto& Y = tp.value(Var<T>{&tp, self});
        Matrix<T> dot(segments, H);
        for (std::size_t e = 0; e < ids.size(); ++e) {
          for (std::size_t h = 0; h < H; ++h) dot(ids[e], h) += g(e, h) * Y(e, h);
        }
        for (std::size_t e = 0; e < ids.size(); ++e) {
          for (std::size_t h = 0; h < H; ++h) {
            (*gx)(e, h) += Y(e, h) * (g(e, h) - dot(ids[e], h));
          }
        }
      });
  return result;
}

/// Message passing: out(dst[e], h*d + j) += w(e, h) * x(src[e], h*d + j) where
/// x has H*d columns and w is E x H.
template <typename T>
Var<T> propagate(Var<T> x, Var<T> w, std::vector<std::uint32_t> src,
                 std::vector<std::uint32_t> dst, std::uint32_t num_out) {
  const auto& X = x.value();
  const auto& W = w.value();
  detail::require(src.size() == dst.size() && W.rows() == src.size(), "propagate",
                  "edge arrays and weight rows must agree");
  detail::require(W.cols() > 0 && X.cols() % W.cols() == 0, "propagate",
                  "feature width not divisible by head count");
  const std::size_t H = W.cols();
  const std::size_t d = X.cols() / H;
  Matrix<T> out(num_out, X.cols());
  for (std::size_t e = 0; e < src.size(); ++e) {
    detail::require(src[e] < X.rows() && dst[e] < num_out, "propagate", "edge endpoint out of range");
    const T* xs = &X(src[e], 0);
    T* o = &out(dst[e], 0);
    for (std::size_t h = 0; h < H; ++h) {
      const T we = W(e, h);
      for (std::size_t j = 0; j < d; ++j) o[h * d + j] += we * xs[h * d + j];
    }
  }
  return x.tape->record(
      std::move(out), {x, w},
      [x, w, src = std::move(src), dst = std::move(dst), H, d](Tape<T>& tp, const Matrix<T>& g) {
        const auto& X = tp.value(x);
        const auto& W = tp.value(w);
        auto* gx = tp.grad_buffer(x);
        auto* gw = tp.grad_buffer(w);
        for (std::size_t e = 0; e < src.size(); ++e) {
          const T* ge = &g(dst[e], 0);
          for (std::size_t h = 0; h < H; ++h) {
            if (gx) {
              const T we = W(e, h);
              T* o = &(*gx)(src[e], 0);
              for (std::size_t j = 0; j < d; ++j) o[h * d + j] += we * ge[h * d + j];
            }
            if (gw) {
              const T* xs = &X(src[e], 0);
              T acc{0};
              for (std::size_t j = 0; j < d; ++j) acc += xs[h * d + j] * ge[h * d + j];
              (*gw)(e, h) += acc;
            }
          }
        }
      });
}

/// Row-wise log-softmax.
template <typename T>
Var<T> log_softmax_rows(Var<T> a) {
  const auto& A = a.value();
  Matrix<T> out(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto r = A.row(i);
    const T m = *std::max_element(r.begin(), r.end());
    T s{0};
    for (T v : r) s += std::exp(v - m);
    const T lse = m + std::log(s);
    for (std::size_t j = 0; j < r.size(); ++j) out(i, j) = r[j] - lse;
  }
  const std::uint32_t self = static_cast<std::uint32_t>(a.tape->size());
  return a.tape->record(std::move(out), {a}, [a, self](Tape<T>& tp, const Matrix<T>& g) {
    auto* ga = tp.grad_buffer(a);
    if (!ga) return;
    const auto& Y = tp.value(Var<T>{&tp, self});
    for (std::size_t i = 0; i < g.rows(); ++i) {
      T gs{0};
      for (std::size_t j = 0; j < g.cols(); ++j) gs += g(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) - std::exp(Y(i, j)) * gs;
    }
  });
}

/// L x 1 column of a(rows[l], cols[l]).
template <typename T>
Var<T> pick(Var<T> a, std::vector<std::uint32_t> rows, std::vector<std::uint32_t> cols) {
  const auto& A = a.value();
  detail::require(rows.size() == cols.size(), "pick", "row and column lists differ in length");
  Matrix<T> out(rows.size(), 1);
  for (std::size_t l = 0; l < rows.size(); ++l) {
    detail::require(rows[l] < A.rows() && cols[l] < A.cols(), "pick", "index out of range");
    out(l, 0) = A(rows[l], cols[l]);
  }
  return a.tape->record(std::move(out), {a},
                        [a, rows = std::move(rows), cols = std::move(cols)](Tape<T>& tp,
                                                                            const Matrix<T>& g) {
                          if (auto* ga = tp.grad_buffer(a)) {
                            for (std::size_t l = 0; l < rows.size(); ++l) {
                              (*ga)(rows[l], cols[l]) += g(l, 0);
                            }
                          }
                        });
}

template <typename T>
Var<T> sum_all(Var<T> a) {
  T s{0};
  for (T v : a.value().values()) s += v;
  return a.tape->record(Matrix<T>(1, 1, s), {a}, [a](Tape<T>& tp, const Matrix<T>& g) {
    if (auto* ga = tp.grad_buffer(a)) {
      for (auto& v : ga->values()) v += g[0];
    }
  });
}

template <typename T>
Var<T> mean_all(Var<T> a) {
  detail::require(a.value().size() > 0, "mean_all", "empty input");
  return scale(sum_all(a), T{1} / static_cast<T>(a.value().size()));
}

}  // namespace lcslab::ad

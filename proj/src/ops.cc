// Copyright 2026 The xvgeo Authors. All rights reserved.
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

#include "xvgeo/ops.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace xvgeo {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

Tape& TapeOf(const Var& a) {
  if (!a.valid()) throw std::logic_error("operation on an unbound Var");
  return *a.tape();
}

void RequireRank(const Tensor& t, int rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got " +
                     ShapeToString(t.shape()));
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
}

// im2col for a single image: column (c*k*k + ky*k + kx, oy*out_w + ox).
void Im2Col(const double* image, int channels, int height, int width, int k,
            int stride, int pad, int out_h, int out_w, double* col) {
  const int positions = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + ((c * k + ky) * k + kx) * positions;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          double* dst = row + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, 0.0);
            continue;
          }
          const double* src = image + (c * height + iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void Col2ImAccumulate(const double* col, int channels, int height, int width,
                      int k, int stride, int pad, int out_h, int out_w,
                      double* image) {
  const int positions = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + ((c * k + ky) * k + kx) * positions;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          double* dst = image + (c * height + iy) * width;
          const double* src = row + oy * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Per-axis element strides of `shape` viewed at the broadcast output shape:
// broadcast axes get stride 0.
std::vector<size_t> BroadcastStrides(const Shape& shape, const Shape& out) {
  std::vector<size_t> strides(shape.size(), 0);
  size_t stride = 1;
  for (int axis = static_cast<int>(shape.size()) - 1; axis >= 0; --axis) {
    strides[axis] = (shape[axis] == 1 && out[axis] != 1) ? 0 : stride;
    stride *= static_cast<size_t>(shape[axis]);
  }
  return strides;
}

Shape BroadcastShape(const Shape& a, const Shape& b, const char* op) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(op) + ": rank mismatch " + ShapeToString(a) +
                     " vs " + ShapeToString(b));
  }
  Shape out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i] && a[i] != 1 && b[i] != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " +
                       ShapeToString(a) + " with " + ShapeToString(b));
    }
    out[i] = std::max(a[i], b[i]);
  }
  return out;
}

// Visits every output index of a broadcast, yielding flat offsets into the
// output and both operands.
template <typename Fn>
void ForEachBroadcast(const Shape& out, const std::vector<size_t>& stride_a,
                      const std::vector<size_t>& stride_b, Fn&& fn) {
  const int rank = static_cast<int>(out.size());
  const size_t total = NumElements(out);
  std::vector<int> counter(rank, 0);
  size_t ia = 0;
  size_t ib = 0;
  for (size_t o = 0; o < total; ++o) {
    fn(o, ia, ib);
    for (int axis = rank - 1; axis >= 0; --axis) {
      ++counter[axis];
      ia += stride_a[axis];
      ib += stride_b[axis];
      if (counter[axis] < out[axis]) break;
      ia -= stride_a[axis] * out[axis];
      ib -= stride_b[axis] * out[axis];
      counter[axis] = 0;
    }
  }
}

enum class BinaryKind { kAdd, kMul };

Var BroadcastBinary(const Var& a, const Var& b, BinaryKind kind,
                    const char* op) {
  Tape& tape = TapeOf(a);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  const Shape out_shape = BroadcastShape(va.shape(), vb.shape(), op);
  const auto sa = BroadcastStrides(va.shape(), out_shape);
  const auto sb = BroadcastStrides(vb.shape(), out_shape);
  Tensor out(out_shape);
  ForEachBroadcast(out_shape, sa, sb, [&](size_t o, size_t ia, size_t ib) {
    out[o] = kind == BinaryKind::kAdd ? va[ia] + vb[ib] : va[ia] * vb[ib];
  });
  return tape.Record(
      std::move(out), {a, b},
      [a, b, kind, out_shape, sa, sb](Tape& t, const Tensor& g) {
        Tensor* ga = t.GradOf(a);
        Tensor* gb = t.GradOf(b);
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        ForEachBroadcast(out_shape, sa, sb,
                         [&](size_t o, size_t ia, size_t ib) {
                           if (kind == BinaryKind::kAdd) {
                             if (ga) (*ga)[ia] += g[o];
                             if (gb) (*gb)[ib] += g[o];
                           } else {
                             if (ga) (*ga)[ia] += g[o] * vb[ib];
                             if (gb) (*gb)[ib] += g[o] * va[ia];
                           }
                         });
      });
}

}  // namespace

Var Conv2d(const Var& x, const Var& weight, const Var& bias, int stride,
           int pad) {
  Tape& tape = TapeOf(x);
  const Tensor& vx = x.value();
  const Tensor& vw = weight.value();
  const Tensor& vb = bias.value();
  RequireRank(vx, 4, "conv2d input");
  RequireRank(vw, 4, "conv2d weight");
  RequireRank(vb, 1, "conv2d bias");
  const int n = vx.dim(0), c = vx.dim(1), h = vx.dim(2), w = vx.dim(3);
  const int o = vw.dim(0), k = vw.dim(2);
  if (vw.dim(1) != c) {
    throw ShapeError("conv2d: weight expects " + std::to_string(vw.dim(1)) +
                     " input channels, input has " + std::to_string(c));
  }
  if (vw.dim(3) != k) throw ShapeError("conv2d: kernel must be square");
  if (vb.dim(0) != o) throw ShapeError("conv2d: bias length mismatch");
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (pad < 0) throw std::invalid_argument("conv2d: negative padding");
  if (k > h + 2 * pad || k > w + 2 * pad) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  const int out_h = (h + 2 * pad - k) / stride + 1;
  const int out_w = (w + 2 * pad - k) / stride + 1;
  const int kdim = c * k * k;
  const int positions = out_h * out_w;
  const bool pointwise = (k == 1 && stride == 1 && pad == 0);

  auto cols = std::make_shared<std::vector<RowMatrix>>();
  if (!pointwise) cols->resize(n);

  Tensor out(Shape{n, o, out_h, out_w});
  ConstMatrixMap wm(vw.raw(), o, kdim);
  Eigen::Map<const Eigen::VectorXd> bv(vb.raw(), o);
  for (int i = 0; i < n; ++i) {
    const double* image = vx.raw() + static_cast<size_t>(i) * c * h * w;
    MatrixMap om(out.raw() + static_cast<size_t>(i) * o * positions, o,
                 positions);
    if (pointwise) {
      om.noalias() = wm * ConstMatrixMap(image, c, positions);
    } else {
      RowMatrix& col = (*cols)[i];
      col.resize(kdim, positions);
      Im2Col(image, c, h, w, k, stride, pad, out_h, out_w, col.data());
      om.noalias() = wm * col;
    }
    om.colwise() += bv;
  }

  return tape.Record(
      std::move(out), {x, weight, bias},
      [x, weight, bias, cols, n, c, h, w, o, k, stride, pad, out_h, out_w,
       kdim, positions, pointwise](Tape& t, const Tensor& g) {
        Tensor* gx = t.GradOf(x);
        Tensor* gw = t.GradOf(weight);
        Tensor* gb = t.GradOf(bias);
        const Tensor& vx = t.value(x);
        const Tensor& vw = t.value(weight);
        ConstMatrixMap wm(vw.raw(), o, kdim);
        RowMatrix dcol;
        for (int i = 0; i < n; ++i) {
          ConstMatrixMap gm(g.raw() + static_cast<size_t>(i) * o * positions,
                            o, positions);
          const double* image = vx.raw() + static_cast<size_t>(i) * c * h * w;
          if (gw) {
            MatrixMap gwm(gw->raw(), o, kdim);
            if (pointwise) {
              gwm.noalias() += gm * ConstMatrixMap(image, c, positions).transpose();
            } else {
              gwm.noalias() += gm * (*cols)[i].transpose();
            }
          }
          if (gb) {
            Eigen::Map<Eigen::VectorXd> gbv(gb->raw(), o);
            gbv += gm.rowwise().sum();
          }
          if (gx) {
            double* gimage = gx->raw() + static_cast<size_t>(i) * c * h * w;
            if (pointwise) {
              MatrixMap(gimage, c, positions).noalias() += wm.transpose() * gm;
            } else {
              dcol.noalias() = wm.transpose() * gm;
              Col2ImAccumulate(dcol.data(), c, h, w, k, stride, pad, out_h,
                               out_w, gimage);
            }
          }
        }
      });
}

Var Pool(const Var& x, PoolKind kind) {
  Tape& tape = TapeOf(x);
  const Tensor& vx = x.value();
  RequireRank(vx, 4, "pool");
  const int n = vx.dim(0), c = vx.dim(1), h = vx.dim(2), w = vx.dim(3);
  const int hw = h * w;

  if (kind == PoolKind::kSpatialAvg) {
    Tensor out(Shape{n, c, 1, 1});
    for (int i = 0; i < n * c; ++i) {
      double s = 0.0;
      for (int p = 0; p < hw; ++p) s += vx[static_cast<size_t>(i) * hw + p];
      out[i] = s / hw;
    }
    return tape.Record(std::move(out), {x},
                       [x, n, c, hw](Tape& t, const Tensor& g) {
                         Tensor* gx = t.GradOf(x);
                         for (int i = 0; i < n * c; ++i) {
                           const double gi = g[i] / hw;
                           for (int p = 0; p < hw; ++p) {
                             (*gx)[static_cast<size_t>(i) * hw + p] += gi;
                           }
                         }
                       });
  }

  const bool want_avg =
      kind == PoolKind::kChannelAvg || kind == PoolKind::kChannelAvgMax;
  const bool want_max =
      kind == PoolKind::kChannelMax || kind == PoolKind::kChannelAvgMax;
  const int out_c = (want_avg && want_max) ? 2 : 1;
  const int max_slot = want_avg ? 1 : 0;

  Tensor out(Shape{n, out_c, h, w});
  auto argmax = std::make_shared<std::vector<int>>();
  if (want_max) argmax->assign(static_cast<size_t>(n) * hw, 0);
  for (int i = 0; i < n; ++i) {
    const double* base = vx.raw() + static_cast<size_t>(i) * c * hw;
    double* obase = out.raw() + static_cast<size_t>(i) * out_c * hw;
    for (int p = 0; p < hw; ++p) {
      double sum = 0.0;
      double best = base[p];
      int best_c = 0;
      for (int ch = 0; ch < c; ++ch) {
        const double v = base[ch * hw + p];
        sum += v;
        if (v > best) {
          best = v;
          best_c = ch;
        }
      }
      if (want_avg) obase[p] = sum / c;
      if (want_max) {
        obase[max_slot * hw + p] = best;
        (*argmax)[static_cast<size_t>(i) * hw + p] = best_c;
      }
    }
  }
  return tape.Record(
      std::move(out), {x},
      [x, n, c, hw, out_c, want_avg, want_max, max_slot, argmax](
          Tape& t, const Tensor& g) {
        Tensor* gx = t.GradOf(x);
        for (int i = 0; i < n; ++i) {
          double* gbase = gx->raw() + static_cast<size_t>(i) * c * hw;
          const double* obase = g.raw() + static_cast<size_t>(i) * out_c * hw;
          for (int p = 0; p < hw; ++p) {
            if (want_avg) {
              const double ga = obase[p] / c;
              for (int ch = 0; ch < c; ++ch) gbase[ch * hw + p] += ga;
            }
            if (want_max) {
              const int ch = (*argmax)[static_cast<size_t>(i) * hw + p];
              gbase[ch * hw + p] += obase[max_slot * hw + p];
            }
          }
        }
      });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out.AddInPlace(b.value());
  return TapeOf(a).Record(std::move(out), {a, b},
                          [a, b](Tape& t, const Tensor& g) {
                            if (Tensor* ga = t.GradOf(a)) ga->AddInPlace(g);
                            if (Tensor* gb = t.GradOf(b)) gb->AddInPlace(g);
                          });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& vb = b.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return TapeOf(a).Record(std::move(out), {a, b},
                          [a, b](Tape& t, const Tensor& g) {
                            if (Tensor* ga = t.GradOf(a)) ga->AddInPlace(g);
                            if (Tensor* gb = t.GradOf(b)) {
                              for (size_t i = 0; i < g.size(); ++i) {
                                (*gb)[i] -= g[i];
                              }
                            }
                          });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& vb = b.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return TapeOf(a).Record(std::move(out), {a, b},
                          [a, b](Tape& t, const Tensor& g) {
                            const Tensor& va = t.value(a);
                            const Tensor& vb = t.value(b);
                            if (Tensor* ga = t.GradOf(a)) {
                              for (size_t i = 0; i < g.size(); ++i) {
                                (*ga)[i] += g[i] * vb[i];
                              }
                            }
                            if (Tensor* gb = t.GradOf(b)) {
                              for (size_t i = 0; i < g.size(); ++i) {
                                (*gb)[i] += g[i] * va[i];
                              }
                            }
                          });
}

Var Sigmoid(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  return TapeOf(x).Record(std::move(out), {x},
                          [x](Tape& t, const Tensor& g) {
                            Tensor* gx = t.GradOf(x);
                            const Tensor& vx = t.value(x);
                            for (size_t i = 0; i < g.size(); ++i) {
                              const double s = 1.0 / (1.0 + std::exp(-vx[i]));
                              (*gx)[i] += g[i] * s * (1.0 - s);
                            }
                          });
}

Var Relu(const Var& x) {
  Tensor out = x.value();
  // NaN passes through so that divergence surfaces in the loss.
  for (double& v : out.data()) v = v < 0.0 ? 0.0 : v;
  return TapeOf(x).Record(std::move(out), {x},
                          [x](Tape& t, const Tensor& g) {
                            Tensor* gx = t.GradOf(x);
                            const Tensor& vx = t.value(x);
                            for (size_t i = 0; i < g.size(); ++i) {
                              if (vx[i] > 0.0) (*gx)[i] += g[i];
                            }
                          });
}

Var Scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  return TapeOf(x).Record(std::move(out), {x},
                          [x, factor](Tape& t, const Tensor& g) {
                            Tensor* gx = t.GradOf(x);
                            for (size_t i = 0; i < g.size(); ++i) {
                              (*gx)[i] += factor * g[i];
                            }
                          });
}

Var BroadcastAdd(const Var& a, const Var& b) {
  return BroadcastBinary(a, b, BinaryKind::kAdd, "broadcast_add");
}

Var BroadcastMul(const Var& a, const Var& b) {
  return BroadcastBinary(a, b, BinaryKind::kMul, "broadcast_mul");
}

Var Linear(const Var& x, const Var& weight, const Var& bias) {
  Tape& tape = TapeOf(x);
  const Tensor& vx = x.value();
  const Tensor& vw = weight.value();
  const Tensor& vb = bias.value();
  RequireRank(vw, 2, "linear weight");
  RequireRank(vb, 1, "linear bias");
  if (vx.rank() < 1) throw ShapeError("linear: scalar input");
  const int in = vw.dim(0), outd = vw.dim(1);
  if (vx.dim(-1) != in) {
    throw ShapeError("linear: input last extent " +
                     std::to_string(vx.dim(-1)) + " != weight rows " +
                     std::to_string(in));
  }
  if (vb.dim(0) != outd) throw ShapeError("linear: bias length mismatch");
  const int rows = static_cast<int>(vx.size() / in);
  Shape out_shape = vx.shape();
  out_shape.back() = outd;
  Tensor out(out_shape);
  MatrixMap om(out.raw(), rows, outd);
  om.noalias() = ConstMatrixMap(vx.raw(), rows, in) *
                 ConstMatrixMap(vw.raw(), in, outd);
  om.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(vb.raw(), outd);
  return tape.Record(
      std::move(out), {x, weight, bias},
      [x, weight, bias, rows, in, outd](Tape& t, const Tensor& g) {
        ConstMatrixMap gm(g.raw(), rows, outd);
        if (Tensor* gx = t.GradOf(x)) {
          MatrixMap(gx->raw(), rows, in).noalias() +=
              gm * ConstMatrixMap(t.value(weight).raw(), in, outd).transpose();
        }
        if (Tensor* gw = t.GradOf(weight)) {
          MatrixMap(gw->raw(), in, outd).noalias() +=
              ConstMatrixMap(t.value(x).raw(), rows, in).transpose() * gm;
        }
        if (Tensor* gb = t.GradOf(bias)) {
          Eigen::Map<Eigen::RowVectorXd>(gb->raw(), outd) += gm.colwise().sum();
        }
      });
}

Var Reshape(const Var& x, Shape shape) {
  Tensor out = x.value().Reshaped(std::move(shape));
  return TapeOf(x).Record(std::move(out), {x},
                          [x](Tape& t, const Tensor& g) {
                            Tensor* gx = t.GradOf(x);
                            for (size_t i = 0; i < g.size(); ++i) {
                              (*gx)[i] += g[i];
                            }
                          });
}

Var ChannelConcat(const Var& a, const Var& b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.rank() < 2 || va.rank() != vb.rank()) {
    throw ShapeError("concat: incompatible ranks " + ShapeToString(va.shape()) +
                     " and " + ShapeToString(vb.shape()));
  }
  for (int axis = 0; axis < va.rank(); ++axis) {
    if (axis != 1 && va.dim(axis) != vb.dim(axis)) {
      throw ShapeError("concat: extents differ outside the channel axis: " +
                       ShapeToString(va.shape()) + " vs " +
                       ShapeToString(vb.shape()));
    }
  }
  const int n = va.dim(0);
  const size_t block_a = va.size() / n;
  const size_t block_b = vb.size() / n;
  Shape out_shape = va.shape();
  out_shape[1] += vb.dim(1);
  Tensor out(out_shape);
  for (int i = 0; i < n; ++i) {
    double* dst = out.raw() + i * (block_a + block_b);
    std::copy_n(va.raw() + i * block_a, block_a, dst);
    std::copy_n(vb.raw() + i * block_b, block_b, dst + block_a);
  }
  return TapeOf(a).Record(
      std::move(out), {a, b},
      [a, b, n, block_a, block_b](Tape& t, const Tensor& g) {
        Tensor* ga = t.GradOf(a);
        Tensor* gb = t.GradOf(b);
        for (int i = 0; i < n; ++i) {
          const double* src = g.raw() + i * (block_a + block_b);
          if (ga) {
            double* dst = ga->raw() + i * block_a;
            for (size_t j = 0; j < block_a; ++j) dst[j] += src[j];
          }
          if (gb) {
            double* dst = gb->raw() + i * block_b;
            for (size_t j = 0; j < block_b; ++j) dst[j] += src[block_a + j];
          }
        }
      });
}

std::vector<Var> ChannelSplit(const Var& x, int parts) {
  const Tensor& vx = x.value();
  if (vx.rank() < 2) throw ShapeError("split: rank must be >= 2");
  if (parts < 1 || vx.dim(1) % parts != 0) {
    throw ShapeError("split: " + std::to_string(vx.dim(1)) +
                     " channels not divisible into " + std::to_string(parts) +
                     " parts");
  }
  const int n = vx.dim(0);
  const size_t block = vx.size() / n;
  const size_t part_block = block / parts;
  Shape part_shape = vx.shape();
  part_shape[1] /= parts;

  std::vector<Var> out;
  out.reserve(parts);
  for (int p = 0; p < parts; ++p) {
    Tensor piece(part_shape);
    for (int i = 0; i < n; ++i) {
      std::copy_n(vx.raw() + i * block + p * part_block, part_block,
                  piece.raw() + i * part_block);
    }
    out.push_back(TapeOf(x).Record(
        std::move(piece), {x},
        [x, p, n, block, part_block](Tape& t, const Tensor& g) {
          Tensor* gx = t.GradOf(x);
          for (int i = 0; i < n; ++i) {
            double* dst = gx->raw() + i * block + p * part_block;
            const double* src = g.raw() + i * part_block;
            for (size_t j = 0; j < part_block; ++j) dst[j] += src[j];
          }
        }));
  }
  return out;
}

Var L2Normalize(const Var& v) {
  const Tensor& vv = v.value();
  if (vv.rank() != 1 && vv.rank() != 2) {
    throw ShapeError("l2_normalize: expected rank 1 or 2, got " +
                     ShapeToString(vv.shape()));
  }
  const int rows = vv.rank() == 1 ? 1 : vv.dim(0);
  const int cols = static_cast<int>(vv.size() / rows);
  auto norms = std::make_shared<std::vector<double>>(rows);
  Tensor out(vv.shape());
  for (int r = 0; r < rows; ++r) {
    const double* src = vv.raw() + static_cast<size_t>(r) * cols;
    double sq = 0.0;
    for (int j = 0; j < cols; ++j) sq += src[j] * src[j];
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) {
      throw std::domain_error("l2_normalize: non-finite vector norm");
    }
    if (!(norm > kNormEpsilon)) {
      throw std::domain_error("l2_normalize: vector norm " +
                              std::to_string(norm) + " is below 1e-12");
    }
    (*norms)[r] = norm;
    double* dst = out.raw() + static_cast<size_t>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = src[j] / norm;
  }
  // Backward: g_in = (g - u (u . g)) / |v| with u = v / |v|.
  return TapeOf(v).Record(
      std::move(out), {v}, [v, norms, rows, cols](Tape& t, const Tensor& g) {
        Tensor* gv = t.GradOf(v);
        const Tensor& vv = t.value(v);
        for (int r = 0; r < rows; ++r) {
          const size_t base = static_cast<size_t>(r) * cols;
          const double inv = 1.0 / (*norms)[r];
          double dot = 0.0;
          for (int j = 0; j < cols; ++j) dot += vv[base + j] * inv * g[base + j];
          for (int j = 0; j < cols; ++j) {
            (*gv)[base + j] += (g[base + j] - vv[base + j] * inv * dot) * inv;
          }
        }
      });
}

Var SoftmaxCrossEntropy(const Var& logits, std::span<const int> labels) {
  const Tensor& vl = logits.value();
  RequireRank(vl, 2, "softmax_cross_entropy");
  const int n = vl.dim(0), cls = vl.dim(1);
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " rows");
  }
  auto probs = std::make_shared<Tensor>(vl.shape());
  std::vector<int> label_copy(labels.begin(), labels.end());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || label >= cls) {
      throw std::out_of_range("softmax_cross_entropy: label " +
                              std::to_string(label) + " outside [0," +
                              std::to_string(cls) + ")");
    }
    const double* row = vl.raw() + static_cast<size_t>(i) * cls;
    const int arg = static_cast<int>(std::max_element(row, row + cls) - row);
    const double max = row[arg];
    // log(sum exp(row - max)) = log1p(sum over the non-maximal terms).
    double rest = 0.0;
    for (int j = 0; j < cls; ++j) {
      if (j != arg) rest += std::exp(row[j] - max);
    }
    const double log_denom = std::log1p(rest);
    for (int j = 0; j < cls; ++j) {
      (*probs)[static_cast<size_t>(i) * cls + j] =
          std::exp(row[j] - max - log_denom);
    }
    loss += -(row[label] - max - log_denom);
  }
  return TapeOf(logits).Record(
      Tensor::Scalar(loss / n), {logits},
      [logits, probs, label_copy, n, cls](Tape& t, const Tensor& g) {
        Tensor* gl = t.GradOf(logits);
        const double scale = g[0] / n;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < cls; ++j) {
            const size_t idx = static_cast<size_t>(i) * cls + j;
            const double target = (j == label_copy[i]) ? 1.0 : 0.0;
            (*gl)[idx] += scale * ((*probs)[idx] - target);
          }
        }
      });
}

Var Sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return TapeOf(x).Record(Tensor::Scalar(s), {x},
                          [x](Tape& t, const Tensor& g) {
                            Tensor* gx = t.GradOf(x);
                            for (double& v : gx->data()) v += g[0];
                          });
}

}  // namespace xvgeo

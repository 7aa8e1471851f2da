// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include <algorithm>

#include "agb/numcore/ops.hpp"
#include "kernels.hpp"

namespace agb::nc {

using namespace kernels;

namespace {

struct MatmulDims {
  std::int64_t batch, m, k, n;
  bool shared_b;
};

MatmulDims matmul_dims(const Tensor& a, const Tensor& b) {
  if (a.ndim() < 2 || b.ndim() < 2)
    throw_invalid("matmul: operands need at least 2 axes, got " + to_string(a.shape()) + " and " +
                  to_string(b.shape()));
  MatmulDims d{};
  d.m = a.dim(-2);
  d.k = a.dim(-1);
  d.n = b.dim(-1);
  if (b.dim(-2) != d.k)
    throw_invalid("matmul: inner dims differ in " + to_string(a.shape()) + " · " + to_string(b.shape()));
  d.batch = a.numel() / (d.m * d.k);
  d.shared_b = b.ndim() == 2;
  if (!d.shared_b) {
    Shape la(a.shape().begin(), a.shape().end() - 2);
    Shape lb(b.shape().begin(), b.shape().end() - 2);
    if (la != lb)
      throw_invalid("matmul: batch dims differ in " + to_string(a.shape()) + " · " + to_string(b.shape()));
  }
  return d;
}

template <typename T>
void im2col(const T* x, std::int64_t c, std::int64_t h, std::int64_t w, int kh, int kw, int stride,
            int pad, std::int64_t oh, std::int64_t ow, T* col) {
  const std::int64_t plane = oh * ow;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        T* row = col + ((ci * kh + i) * kw + j) * plane;
        for (std::int64_t y = 0; y < oh; ++y) {
          const std::int64_t iy = y * stride - pad + i;
          T* dst = row + y * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = x + (ci * h + iy) * w;
          for (std::int64_t xo = 0; xo < ow; ++xo) {
            const std::int64_t ix = xo * stride - pad + j;
            dst[xo] = (ix < 0 || ix >= w) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, std::int64_t c, std::int64_t h, std::int64_t w, int kh, int kw, int stride,
            int pad, std::int64_t oh, std::int64_t ow, T* x) {
  const std::int64_t plane = oh * ow;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        const T* row = col + ((ci * kh + i) * kw + j) * plane;
        for (std::int64_t y = 0; y < oh; ++y) {
          const std::int64_t iy = y * stride - pad + i;
          if (iy < 0 || iy >= h) continue;
          T* dst = x + (ci * h + iy) * w;
          const T* src = row + y * ow;
          for (std::int64_t xo = 0; xo < ow; ++xo) {
            const std::int64_t ix = xo * stride - pad + j;
            if (ix >= 0 && ix < w) dst[ix] += src[xo];
          }
        }
      }
    }
  }
}

struct ConvGeom {
  std::int64_t b, cin, h, w, cout, oh, ow;
  int kh, kw, stride, pad;
  bool direct() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

ConvGeom conv_geom(const Tensor& x, const Tensor& weight, int stride, int padding) {
  if (x.ndim() != 4 || weight.ndim() != 4)
    throw_invalid("conv2d: expected NCHW input and [Cout,Cin,kh,kw] weight, got " +
                  to_string(x.shape()) + " and " + to_string(weight.shape()));
  if (stride < 1 || padding < 0) throw_invalid("conv2d: stride must be >= 1 and padding >= 0");
  ConvGeom g{};
  g.b = x.dim(0);
  g.cin = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.cout = weight.dim(0);
  g.kh = static_cast<int>(weight.dim(2));
  g.kw = static_cast<int>(weight.dim(3));
  g.stride = stride;
  g.pad = padding;
  if (weight.dim(1) != g.cin)
    throw_invalid("conv2d: input has " + std::to_string(g.cin) + " channels but weight expects " +
                  std::to_string(weight.dim(1)));
  if (g.h + 2 * padding < g.kh || g.w + 2 * padding < g.kw)
    throw_invalid("conv2d: kernel larger than padded input");
  g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
  g.ow = (g.w + 2 * padding - g.kw) / stride + 1;
  return g;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  require_same_dtype(a, b, "matmul");
  const MatmulDims d = matmul_dims(a, b);
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(d.n);
  Tensor out = A::make(out_shape, a.dtype());
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>().data();
    const T* pb = b.data<T>().data();
    T* po = A::writable<T>(out).data();
    for (std::int64_t i = 0; i < d.batch; ++i)
      gemm<T>(false, false, d.m, d.n, d.k, pa + i * d.m * d.k, pb + (d.shared_b ? 0 : i * d.k * d.n),
              po + i * d.m * d.n, false);
  });
  if (A::needs_graph({&a, &b})) {
    A::attach(out, "matmul", {a, b}, [ad = a.detach(), bd = b.detach(), d, ra = a.requires_grad(),
                                      rb = b.requires_grad()](const Tensor& g) {
      Tensor ga, gb;
      if (ra) ga = A::make(ad.shape(), ad.dtype());
      if (rb) gb = A::make(bd.shape(), bd.dtype());
      dispatch(ad.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* pa = ad.data<T>().data();
        const T* pb = bd.data<T>().data();
        const T* pg = g.data<T>().data();
        for (std::int64_t i = 0; i < d.batch; ++i) {
          const T* bi = pb + (d.shared_b ? 0 : i * d.k * d.n);
          const T* gi = pg + i * d.m * d.n;
          if (ra)
            gemm<T>(false, true, d.m, d.k, d.n, gi, bi, A::writable<T>(ga).data() + i * d.m * d.k, false);
          if (rb)
            gemm<T>(true, false, d.k, d.n, d.m, pa + i * d.m * d.k, gi,
                    A::writable<T>(gb).data() + (d.shared_b ? 0 : i * d.k * d.n), d.shared_b);
        }
      });
      return std::vector<Tensor>{ga, gb};
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_defined(x, "linear");
  require_defined(weight, "linear");
  require_same_dtype(x, weight, "linear");
  if (weight.ndim() != 2) throw_invalid("linear: weight must be [out, in]");
  const std::int64_t in = weight.dim(1);
  const std::int64_t outf = weight.dim(0);
  if (x.ndim() < 1 || x.dim(-1) != in)
    throw_invalid("linear: input " + to_string(x.shape()) + " does not match weight " +
                  to_string(weight.shape()));
  if (bias.defined()) {
    require_same_dtype(x, bias, "linear");
    if (bias.ndim() != 1 || bias.dim(0) != outf) throw_invalid("linear: bias must be [out]");
  }
  const std::int64_t m = x.numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = outf;
  Tensor out = A::make(out_shape, x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    T* po = A::writable<T>(out).data();
    gemm<T>(false, true, m, outf, in, x.data<T>().data(), weight.data<T>().data(), po, false);
    if (bias.defined()) {
      const T* pb = bias.data<T>().data();
      for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < outf; ++c) po[r * outf + c] += pb[c];
    }
  });
  if (A::needs_graph({&x, &weight, &bias})) {
    A::attach(out, "linear", {x, weight, bias},
              [xd = x.detach(), wd = weight.detach(), m, in, outf, rx = x.requires_grad(),
               rw = weight.requires_grad(), rb = bias.defined() && bias.requires_grad()](const Tensor& g) {
                Tensor gx, gw, gb;
                dispatch(xd.dtype(), [&](auto tag) {
                  using T = decltype(tag);
                  const T* pg = g.data<T>().data();
                  if (rx) {
                    gx = A::make(xd.shape(), xd.dtype());
                    gemm<T>(false, false, m, in, outf, pg, wd.data<T>().data(), A::writable<T>(gx).data(), false);
                  }
                  if (rw) {
                    gw = A::make(wd.shape(), wd.dtype());
                    gemm<T>(true, false, outf, in, m, pg, xd.data<T>().data(), A::writable<T>(gw).data(), false);
                  }
                  if (rb) {
                    gb = A::make(Shape{outf}, xd.dtype());
                    T* pb = A::writable<T>(gb).data();
                    for (std::int64_t r = 0; r < m; ++r)
                      for (std::int64_t c = 0; c < outf; ++c) pb[c] += pg[r * outf + c];
                  }
                });
                return std::vector<Tensor>{gx, gw, gb};
              });
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  require_defined(input, "conv2d");
  require_defined(weight, "conv2d");
  require_same_dtype(input, weight, "conv2d");
  const ConvGeom gm = conv_geom(input, weight, stride, padding);
  if (bias.defined()) {
    require_same_dtype(input, bias, "conv2d");
    if (bias.ndim() != 1 || bias.dim(0) != gm.cout) throw_invalid("conv2d: bias must be [Cout]");
  }
  const std::int64_t k = gm.cin * gm.kh * gm.kw;
  const std::int64_t plane = gm.oh * gm.ow;
  Tensor out = A::make(Shape{gm.b, gm.cout, gm.oh, gm.ow}, input.dtype());
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = input.data<T>().data();
    const T* pw = weight.data<T>().data();
    T* po = A::writable<T>(out).data();
    std::vector<T> col(gm.direct() ? 0 : static_cast<std::size_t>(k * plane));
    for (std::int64_t b = 0; b < gm.b; ++b) {
      const T* xb = px + b * gm.cin * gm.h * gm.w;
      const T* src = xb;
      if (!gm.direct()) {
        im2col(xb, gm.cin, gm.h, gm.w, gm.kh, gm.kw, gm.stride, gm.pad, gm.oh, gm.ow, col.data());
        src = col.data();
      }
      T* ob = po + b * gm.cout * plane;
      gemm<T>(false, false, gm.cout, plane, k, pw, src, ob, false);
      if (bias.defined()) {
        const T* pb = bias.data<T>().data();
        for (std::int64_t c = 0; c < gm.cout; ++c)
          for (std::int64_t i = 0; i < plane; ++i) ob[c * plane + i] += pb[c];
      }
    }
  });
  if (A::needs_graph({&input, &weight, &bias})) {
    A::attach(out, "conv2d", {input, weight, bias},
              [xd = input.detach(), wd = weight.detach(), gm, k, plane, rx = input.requires_grad(),
               rw = weight.requires_grad(), rb = bias.defined() && bias.requires_grad()](const Tensor& g) {
                Tensor gx, gw, gb;
                if (rx) gx = A::make(xd.shape(), xd.dtype());
                if (rw) gw = A::make(wd.shape(), wd.dtype());
                if (rb) gb = A::make(Shape{gm.cout}, wd.dtype());
                dispatch(xd.dtype(), [&](auto tag) {
                  using T = decltype(tag);
                  const T* px = xd.data<T>().data();
                  const T* pw = wd.data<T>().data();
                  const T* pg = g.data<T>().data();
                  std::vector<T> col(gm.direct() ? 0 : static_cast<std::size_t>(k * plane));
                  std::vector<T> gcol(rx && !gm.direct() ? static_cast<std::size_t>(k * plane) : 0);
                  for (std::int64_t b = 0; b < gm.b; ++b) {
                    const T* gb_ = pg + b * gm.cout * plane;
                    const T* xb = px + b * gm.cin * gm.h * gm.w;
                    if (rw) {
                      const T* src = xb;
                      if (!gm.direct()) {
                        im2col(xb, gm.cin, gm.h, gm.w, gm.kh, gm.kw, gm.stride, gm.pad, gm.oh, gm.ow, col.data());
                        src = col.data();
                      }
                      gemm<T>(false, true, gm.cout, k, plane, gb_, src, A::writable<T>(gw).data(), b > 0);
                    }
                    if (rx) {
                      T* gxb = A::writable<T>(gx).data() + b * gm.cin * gm.h * gm.w;
                      if (gm.direct()) {
                        gemm<T>(true, false, k, plane, gm.cout, pw, gb_, gxb, false);
                      } else {
                        gemm<T>(true, false, k, plane, gm.cout, pw, gb_, gcol.data(), false);
                        col2im(gcol.data(), gm.cin, gm.h, gm.w, gm.kh, gm.kw, gm.stride, gm.pad, gm.oh, gm.ow, gxb);
                      }
                    }
                    if (rb) {
                      T* pbias = A::writable<T>(gb).data();
                      for (std::int64_t c = 0; c < gm.cout; ++c) {
                        T acc = 0;
                        for (std::int64_t i = 0; i < plane; ++i) acc += gb_[c * plane + i];
                        pbias[c] += acc;
                      }
                    }
                  }
                });
                return std::vector<Tensor>{gx, gw, gb};
              });
  }
  return out;
}

}  // namespace agb::nc

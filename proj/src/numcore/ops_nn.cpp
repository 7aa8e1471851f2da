// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "agb/numcore/ops.hpp"
#include "kernels.hpp"

namespace agb::nc {

using namespace kernels;

Tensor layer_norm(const Tensor& x, const Tensor& weight, const Tensor& bias, double eps) {
  require_defined(x, "layer_norm");
  require_defined(weight, "layer_norm");
  require_defined(bias, "layer_norm");
  require_same_dtype(x, weight, "layer_norm");
  require_same_dtype(x, bias, "layer_norm");
  const std::int64_t d = x.dim(-1);
  if (weight.numel() != d || bias.numel() != d)
    throw_invalid("layer_norm: affine params must match the last axis (" + std::to_string(d) + ")");
  const std::int64_t rows = x.numel() / d;
  Tensor out = A::make(x.shape(), x.dtype());
  Tensor xhat = A::make(x.shape(), x.dtype());
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>().data();
    const T* pw = weight.data<T>().data();
    const T* pb = bias.data<T>().data();
    T* po = A::writable<T>(out).data();
    T* ph = A::writable<T>(xhat).data();
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* row = px + r * d;
      double mu = 0.0;
      for (std::int64_t i = 0; i < d; ++i) mu += row[i];
      mu /= static_cast<double>(d);
      double var = 0.0;
      for (std::int64_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
      var /= static_cast<double>(d);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[static_cast<std::size_t>(r)] = is;
      for (std::int64_t i = 0; i < d; ++i) {
        const T h = static_cast<T>((row[i] - mu) * is);
        ph[r * d + i] = h;
        po[r * d + i] = h * pw[i] + pb[i];
      }
    }
  });
  if (A::needs_graph({&x, &weight, &bias})) {
    A::attach(out, "layer_norm", {x, weight, bias},
              [xhat, wd = weight.detach(), inv_std = std::move(inv_std), d, rows, rx = x.requires_grad(),
               rw = weight.requires_grad(), rb = bias.requires_grad()](const Tensor& g) {
                Tensor gx, gw, gb;
                if (rx) gx = A::make(xhat.shape(), xhat.dtype());
                if (rw) gw = A::make(wd.shape(), wd.dtype());
                if (rb) gb = A::make(wd.shape(), wd.dtype());
                dispatch(xhat.dtype(), [&](auto tag) {
                  using T = decltype(tag);
                  const T* pg = g.data<T>().data();
                  const T* ph = xhat.data<T>().data();
                  const T* pw = wd.data<T>().data();
                  for (std::int64_t r = 0; r < rows; ++r) {
                    const T* gr = pg + r * d;
                    const T* hr = ph + r * d;
                    if (rw) {
                      T* o = A::writable<T>(gw).data();
                      for (std::int64_t i = 0; i < d; ++i) o[i] += gr[i] * hr[i];
                    }
                    if (rb) {
                      T* o = A::writable<T>(gb).data();
                      for (std::int64_t i = 0; i < d; ++i) o[i] += gr[i];
                    }
                    if (rx) {
                      double m1 = 0.0, m2 = 0.0;
                      for (std::int64_t i = 0; i < d; ++i) {
                        const double dh = static_cast<double>(gr[i]) * pw[i];
                        m1 += dh;
                        m2 += dh * hr[i];
                      }
                      m1 /= static_cast<double>(d);
                      m2 /= static_cast<double>(d);
                      const double is = inv_std[static_cast<std::size_t>(r)];
                      T* o = A::writable<T>(gx).data() + r * d;
                      for (std::int64_t i = 0; i < d; ++i)
                        o[i] = static_cast<T>(is * (static_cast<double>(gr[i]) * pw[i] - m1 - hr[i] * m2));
                    }
                  }
                });
                return std::vector<Tensor>{gx, gw, gb};
              });
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  require_defined(x, "softmax");
  const std::int64_t d = x.dim(-1);
  const std::int64_t rows = x.numel() / d;
  Tensor out = A::make(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>().data();
    T* po = A::writable<T>(out).data();
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* row = px + r * d;
      T* o = po + r * d;
      T m = -std::numeric_limits<T>::infinity();
      for (std::int64_t i = 0; i < d; ++i) m = std::max(m, row[i]);
      T s = 0;
      for (std::int64_t i = 0; i < d; ++i) {
        o[i] = row[i] == -std::numeric_limits<T>::infinity() ? T(0) : std::exp(row[i] - m);
        s += o[i];
      }
      for (std::int64_t i = 0; i < d; ++i) o[i] /= s;
    }
  });
  if (A::needs_graph({&x})) {
    A::attach(out, "softmax", {x}, [y = out.detach(), d, rows](const Tensor& g) {
      Tensor gx = A::make(y.shape(), y.dtype());
      dispatch(y.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* py = y.data<T>().data();
        const T* pg = g.data<T>().data();
        T* o = A::writable<T>(gx).data();
        for (std::int64_t r = 0; r < rows; ++r) {
          T dot = 0;
          for (std::int64_t i = 0; i < d; ++i) dot += pg[r * d + i] * py[r * d + i];
          for (std::int64_t i = 0; i < d; ++i) o[r * d + i] = py[r * d + i] * (pg[r * d + i] - dot);
        }
      });
      return std::vector<Tensor>{gx};
    });
  }
  return out;
}

Tensor max_pool2d(const Tensor& x, int kernel, int stride) {
  require_defined(x, "max_pool2d");
  if (x.ndim() != 4) throw_invalid("max_pool2d: expected NCHW input");
  if (kernel < 1 || stride < 1) throw_invalid("max_pool2d: kernel and stride must be >= 1");
  const std::int64_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < kernel || w < kernel) throw_invalid("max_pool2d: kernel larger than input");
  const std::int64_t oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  Tensor out = A::make(Shape{b, c, oh, ow}, x.dtype());
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(out.numel()));
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>().data();
    std::size_t o = 0;
    for (std::int64_t p = 0; p < b * c; ++p)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xo = 0; xo < ow; ++xo, ++o) {
          std::int64_t best = (p * h + y * stride) * w + xo * stride;
          for (int i = 0; i < kernel; ++i)
            for (int j = 0; j < kernel; ++j) {
              const std::int64_t idx = (p * h + y * stride + i) * w + xo * stride + j;
              if (px[idx] > px[best]) best = idx;
            }
          argmax[o] = best;
        }
  });
  if (GateTape* tape = active_gate_tape()) tape->sync(argmax);
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>().data();
    T* po = A::writable<T>(out).data();
    for (std::size_t o = 0; o < argmax.size(); ++o) po[o] = px[argmax[o]];
  });
  if (A::needs_graph({&x})) {
    A::attach(out, "max_pool2d", {x}, [shape = x.shape(), argmax = std::move(argmax)](const Tensor& g) {
      Tensor gx = A::make(shape, g.dtype());
      dispatch(g.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* pg = g.data<T>().data();
        T* o = A::writable<T>(gx).data();
        for (std::size_t i = 0; i < argmax.size(); ++i) o[argmax[i]] += pg[i];
      });
      return std::vector<Tensor>{gx};
    });
  }
  return out;
}

namespace {

/// Sparse linear map over NCHW planes: each output pixel is a weighted sum of
/// input pixels of the same plane. Shared by adaptive pooling and resizing.
struct PlaneMap {
  std::int64_t in_h, in_w, out_h, out_w;
  std::vector<std::vector<std::pair<std::int64_t, double>>> taps;  // per output pixel
};

Tensor apply_plane_map(const Tensor& x, std::shared_ptr<const PlaneMap> pm, const char* op) {
  const std::int64_t planes = x.dim(0) * x.dim(1);
  Tensor out = A::make(Shape{x.dim(0), x.dim(1), pm->out_h, pm->out_w}, x.dtype());
  const std::int64_t in_plane = pm->in_h * pm->in_w, out_plane = pm->out_h * pm->out_w;
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* px = x.data<T>().data();
    T* po = A::writable<T>(out).data();
    for (std::int64_t p = 0; p < planes; ++p)
      for (std::int64_t o = 0; o < out_plane; ++o) {
        double acc = 0.0;
        for (const auto& [idx, wt] : pm->taps[static_cast<std::size_t>(o)]) acc += wt * px[p * in_plane + idx];
        po[p * out_plane + o] = static_cast<T>(acc);
      }
  });
  if (A::needs_graph({&x})) {
    A::attach(out, op, {x}, [shape = x.shape(), pm, planes, in_plane, out_plane](const Tensor& g) {
      Tensor gx = A::make(shape, g.dtype());
      dispatch(g.dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* pg = g.data<T>().data();
        T* o = A::writable<T>(gx).data();
        for (std::int64_t p = 0; p < planes; ++p)
          for (std::int64_t q = 0; q < out_plane; ++q)
            for (const auto& [idx, wt] : pm->taps[static_cast<std::size_t>(q)])
              o[p * in_plane + idx] += static_cast<T>(wt * pg[p * out_plane + q]);
      });
      return std::vector<Tensor>{gx};
    });
  }
  return out;
}

}  // namespace

Tensor adaptive_avg_pool2d(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
  require_defined(x, "adaptive_avg_pool2d");
  if (x.ndim() != 4) throw_invalid("adaptive_avg_pool2d: expected NCHW input");
  if (out_h < 1 || out_w < 1) throw_invalid("adaptive_avg_pool2d: output size must be positive");
  auto pm = std::make_shared<PlaneMap>();
  pm->in_h = x.dim(2);
  pm->in_w = x.dim(3);
  pm->out_h = out_h;
  pm->out_w = out_w;
  pm->taps.resize(static_cast<std::size_t>(out_h * out_w));
  for (std::int64_t i = 0; i < out_h; ++i) {
    const std::int64_t y0 = (i * pm->in_h) / out_h;
    const std::int64_t y1 = ((i + 1) * pm->in_h + out_h - 1) / out_h;
    for (std::int64_t j = 0; j < out_w; ++j) {
      const std::int64_t x0 = (j * pm->in_w) / out_w;
      const std::int64_t x1 = ((j + 1) * pm->in_w + out_w - 1) / out_w;
      const double wt = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
      auto& taps = pm->taps[static_cast<std::size_t>(i * out_w + j)];
      for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t xx = x0; xx < x1; ++xx) taps.emplace_back(y * pm->in_w + xx, wt);
    }
  }
  return apply_plane_map(x, std::move(pm), "adaptive_avg_pool2d");
}

Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
  require_defined(x, "bilinear_resize");
  if (x.ndim() != 4) throw_invalid("bilinear_resize: expected NCHW input");
  if (out_h < 1 || out_w < 1) throw_invalid("bilinear_resize: output size must be positive");
  if (x.dim(2) == out_h && x.dim(3) == out_w) return x;
  auto pm = std::make_shared<PlaneMap>();
  pm->in_h = x.dim(2);
  pm->in_w = x.dim(3);
  pm->out_h = out_h;
  pm->out_w = out_w;
  auto axis_taps = [](std::int64_t in, std::int64_t out) {
    std::vector<std::array<std::pair<std::int64_t, double>, 2>> t(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::int64_t o = 0; o < out; ++o) {
      const double src = std::max(0.0, (static_cast<double>(o) + 0.5) * ratio - 0.5);
      const auto i0 = std::min<std::int64_t>(static_cast<std::int64_t>(src), in - 1);
      const std::int64_t i1 = std::min<std::int64_t>(i0 + 1, in - 1);
      const double lam = src - static_cast<double>(i0);
      t[static_cast<std::size_t>(o)] = {std::pair{i0, 1.0 - lam}, std::pair{i1, lam}};
    }
    return t;
  };
  const auto ty = axis_taps(pm->in_h, out_h);
  const auto tx = axis_taps(pm->in_w, out_w);
  pm->taps.resize(static_cast<std::size_t>(out_h * out_w));
  for (std::int64_t i = 0; i < out_h; ++i)
    for (std::int64_t j = 0; j < out_w; ++j) {
      auto& taps = pm->taps[static_cast<std::size_t>(i * out_w + j)];
      for (const auto& [yi, wy] : ty[static_cast<std::size_t>(i)])
        for (const auto& [xi, wx] : tx[static_cast<std::size_t>(j)])
          if (wy * wx != 0.0) taps.emplace_back(yi * pm->in_w + xi, wy * wx);
    }
  return apply_plane_map(x, std::move(pm), "bilinear_resize");
}

namespace {
void require_mask(const Tensor& pred, const Tensor& other, const std::vector<std::uint8_t>& mask,
                  const char* op) {
  require_defined(pred, op);
  require_defined(other, op);
  require_same_dtype(pred, other, op);
  if (pred.shape() != other.shape())
    throw_invalid(std::string(op) + ": shapes differ " + to_string(pred.shape()) + " vs " +
                  to_string(other.shape()));
  if (static_cast<std::int64_t>(mask.size()) != pred.numel())
    throw_invalid(std::string(op) + ": mask size does not match tensor size");
}
}  // namespace

Tensor masked_rmse(const Tensor& pred, const Tensor& label, const std::vector<std::uint8_t>& valid) {
  require_mask(pred, label, valid, "masked_rmse");
  std::int64_t n = 0;
  for (auto v : valid) n += v ? 1 : 0;
  if (n == 0) throw_data("E_EMPTY_LABELS", "masked_rmse: no valid label pixels");
  Tensor out = A::make(Shape{}, pred.dtype());
  double rmse = 0.0;
  dispatch(pred.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto pp = pred.data<T>();
    auto pl = label.data<T>();
    double sse = 0.0;
    for (std::size_t i = 0; i < valid.size(); ++i)
      if (valid[i]) {
        const double e = static_cast<double>(pp[i]) - static_cast<double>(pl[i]);
        sse += e * e;
      }
    rmse = std::sqrt(sse / static_cast<double>(n));
    A::writable<T>(out)[0] = static_cast<T>(rmse);
  });
  if (A::needs_graph({&pred, &label})) {
    A::attach(out, "masked_rmse", {pred, label},
              [pd = pred.detach(), ld = label.detach(), valid, n, rmse, rp = pred.requires_grad(),
               rl = label.requires_grad()](const Tensor& g) {
                Tensor gp = A::make(pd.shape(), pd.dtype());
                Tensor gl = A::make(pd.shape(), pd.dtype());
                dispatch(pd.dtype(), [&](auto tag) {
                  using T = decltype(tag);
                  auto pp = pd.data<T>();
                  auto pl = ld.data<T>();
                  auto op = A::writable<T>(gp);
                  auto ol = A::writable<T>(gl);
                  const double k = rmse > 0.0 ? g.item() / (static_cast<double>(n) * rmse) : 0.0;
                  for (std::size_t i = 0; i < valid.size(); ++i)
                    if (valid[i]) {
                      const double d = k * (static_cast<double>(pp[i]) - static_cast<double>(pl[i]));
                      op[i] = static_cast<T>(d);
                      ol[i] = static_cast<T>(-d);
                    }
                });
                return std::vector<Tensor>{rp ? gp : Tensor{}, rl ? gl : Tensor{}};
              });
  }
  return out;
}

Tensor masked_mean_abs(const Tensor& pred, const Tensor& target, const std::vector<std::uint8_t>& mask) {
  require_mask(pred, target, mask, "masked_mean_abs");
  std::int64_t n = 0;
  for (auto v : mask) n += v ? 1 : 0;
  if (n == 0) throw_invalid("masked_mean_abs: mask selects no elements");
  auto signs = std::make_shared<std::vector<std::int64_t>>(mask.size(), 0);
  dispatch(pred.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto pp = pred.data<T>();
    auto pt = target.data<T>();
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) {
        const double diff = static_cast<double>(pp[i]) - static_cast<double>(pt[i]);
        (*signs)[i] = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
      }
  });
  if (GateTape* tape = active_gate_tape()) tape->sync(*signs);
  Tensor out = A::make(Shape{}, pred.dtype());
  dispatch(pred.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto pp = pred.data<T>();
    auto pt = target.data<T>();
    double acc = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i])
        acc += static_cast<double>((*signs)[i]) * (static_cast<double>(pp[i]) - static_cast<double>(pt[i]));
    A::writable<T>(out)[0] = static_cast<T>(acc / static_cast<double>(n));
  });
  if (A::needs_graph({&pred, &target})) {
    A::attach(out, "masked_mean_abs", {pred, target},
              [signs, n, shape = pred.shape(), rp = pred.requires_grad(), rt = target.requires_grad()](
                  const Tensor& g) {
                Tensor gp = A::make(shape, g.dtype());
                Tensor gt = A::make(shape, g.dtype());
                dispatch(g.dtype(), [&](auto tag) {
                  using T = decltype(tag);
                  auto op = A::writable<T>(gp);
                  auto ot = A::writable<T>(gt);
                  const double k = g.item() / static_cast<double>(n);
                  for (std::size_t i = 0; i < signs->size(); ++i) {
                    const double s = static_cast<double>((*signs)[i]) * k;
                    op[i] = static_cast<T>(s);
                    ot[i] = static_cast<T>(-s);
                  }
                });
                return std::vector<Tensor>{rp ? gp : Tensor{}, rt ? gt : Tensor{}};
              });
  }
  return out;
}

}  // namespace agb::nc

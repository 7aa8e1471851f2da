// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include <algorithm>
#include <limits>

#include "agb/numcore/ops.hpp"
#include "kernels.hpp"

namespace agb::nc {

using namespace kernels;

namespace {

constexpr std::int64_t kZero = -1;
constexpr std::int64_t kInvalid = std::numeric_limits<std::int64_t>::min() / 4;

/// out[i] = x[map[i]], or 0 where map[i] == kZero. Backward scatters.
Tensor gather_map(const Tensor& x, Shape out_shape, std::vector<std::int64_t> map, const char* op) {
  Tensor out = A::make(std::move(out_shape), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto px = x.data<T>();
    auto po = A::writable<T>(out);
    for (std::size_t i = 0; i < map.size(); ++i) po[i] = map[i] == kZero ? T(0) : px[map[i]];
  });
  if (A::needs_graph({&x})) {
    A::attach(out, op, {x}, [shape = x.shape(), map = std::move(map)](const Tensor& g) {
      Tensor gx = A::make(shape, g.dtype());
      dispatch(g.dtype(), [&](auto tag) {
        using T = decltype(tag);
        auto pg = g.data<T>();
        auto px = A::writable<T>(gx);
        for (std::size_t i = 0; i < map.size(); ++i)
          if (map[i] != kZero) px[map[i]] += pg[i];
      });
      return std::vector<Tensor>{gx};
    });
  }
  return out;
}

/// Index map whose source offset is a sum of one per-axis table lookup per
/// output axis; kInvalid entries mark padding.
std::vector<std::int64_t> separable_map(const Shape& out, const std::vector<std::vector<std::int64_t>>& tables) {
  const std::int64_t total = numel(out);
  const std::size_t nd = out.size();
  std::vector<std::int64_t> map(static_cast<std::size_t>(total));
  std::vector<std::int64_t> idx(nd, 0);
  for (std::int64_t i = 0; i < total; ++i) {
    std::int64_t off = 0;
    bool valid = true;
    for (std::size_t d = 0; d < nd; ++d) {
      const std::int64_t t = tables[d][static_cast<std::size_t>(idx[d])];
      if (t == kInvalid) valid = false;
      off += t;
    }
    map[static_cast<std::size_t>(i)] = valid ? off : kZero;
    for (std::size_t d = nd; d-- > 0;) {
      if (++idx[d] < out[d]) break;
      idx[d] = 0;
    }
  }
  return map;
}

std::vector<std::vector<std::int64_t>> identity_tables(const Shape& shape) {
  const auto st = strides_of(shape);
  std::vector<std::vector<std::int64_t>> tables(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d) {
    tables[d].resize(static_cast<std::size_t>(shape[d]));
    for (std::int64_t o = 0; o < shape[d]; ++o) tables[d][static_cast<std::size_t>(o)] = o * st[d];
  }
  return tables;
}

int norm_axis(int axis, int ndim, const char* op) {
  if (axis < 0) axis += ndim;
  if (axis < 0 || axis >= ndim) throw_invalid(std::string(op) + ": axis out of range");
  return axis;
}

}  // namespace

Tensor reshape(const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) throw_invalid("reshape: at most one inferred axis");
      infer = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0 && known > 0) shape[static_cast<std::size_t>(infer)] = x.numel() / known;
  if (numel(shape) != x.numel())
    throw_invalid("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  Tensor out = A::view(x, shape);
  if (A::needs_graph({&x})) {
    A::attach(out, "reshape", {x}, [src = x.shape()](const Tensor& g) {
      return std::vector<Tensor>{reshape(g, src)};
    });
  }
  return out;
}

Tensor permute(const Tensor& x, const std::vector<int>& axes) {
  require_defined(x, "permute");
  const int nd = x.ndim();
  if (static_cast<int>(axes.size()) != nd) throw_invalid("permute: axis count mismatch");
  std::vector<bool> seen(static_cast<std::size_t>(nd), false);
  for (int a : axes) {
    if (a < 0 || a >= nd || seen[static_cast<std::size_t>(a)]) throw_invalid("permute: invalid axis list");
    seen[static_cast<std::size_t>(a)] = true;
  }
  const auto st = strides_of(x.shape());
  Shape out(static_cast<std::size_t>(nd));
  std::vector<std::vector<std::int64_t>> tables(static_cast<std::size_t>(nd));
  for (int j = 0; j < nd; ++j) {
    const auto a = static_cast<std::size_t>(axes[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(j)] = x.shape()[a];
    auto& t = tables[static_cast<std::size_t>(j)];
    t.resize(static_cast<std::size_t>(x.shape()[a]));
    for (std::int64_t o = 0; o < x.shape()[a]; ++o) t[static_cast<std::size_t>(o)] = o * st[a];
  }
  return gather_map(x, out, separable_map(out, tables), "permute");
}

Tensor roll(const Tensor& x, const std::vector<std::int64_t>& shifts, const std::vector<int>& axes) {
  require_defined(x, "roll");
  if (shifts.size() != axes.size()) throw_invalid("roll: shifts and axes differ in length");
  auto tables = identity_tables(x.shape());
  const auto st = strides_of(x.shape());
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const auto a = static_cast<std::size_t>(norm_axis(axes[k], x.ndim(), "roll"));
    const std::int64_t n = x.shape()[a];
    for (std::int64_t o = 0; o < n; ++o) {
      const std::int64_t src = (((o - shifts[k]) % n) + n) % n;
      tables[a][static_cast<std::size_t>(o)] = src * st[a];
    }
  }
  return gather_map(x, x.shape(), separable_map(x.shape(), tables), "roll");
}

Tensor pad(const Tensor& x, int axis, std::int64_t before, std::int64_t after) {
  require_defined(x, "pad");
  if (before < 0 || after < 0) throw_invalid("pad: amounts must be non-negative");
  const auto a = static_cast<std::size_t>(norm_axis(axis, x.ndim(), "pad"));
  if (before == 0 && after == 0) return x;
  Shape out = x.shape();
  out[a] += before + after;
  const auto st = strides_of(x.shape());
  auto tables = identity_tables(out);
  for (std::size_t d = 0; d < out.size(); ++d) {
    for (std::int64_t o = 0; o < out[d]; ++o) {
      std::int64_t src = o;
      if (d == a) {
        src = o - before;
        if (src < 0 || src >= x.shape()[a]) {
          tables[d][static_cast<std::size_t>(o)] = kInvalid;
          continue;
        }
      }
      tables[d][static_cast<std::size_t>(o)] = src * st[d];
    }
  }
  return gather_map(x, out, separable_map(out, tables), "pad");
}

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length) {
  require_defined(x, "slice");
  const auto a = static_cast<std::size_t>(norm_axis(axis, x.ndim(), "slice"));
  if (start < 0 || length <= 0 || start + length > x.shape()[a])
    throw_invalid("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                  ") outside axis of length " + std::to_string(x.shape()[a]));
  Shape out = x.shape();
  out[a] = length;
  const auto st = strides_of(x.shape());
  auto tables = identity_tables(out);
  for (std::size_t d = 0; d < out.size(); ++d)
    for (std::int64_t o = 0; o < out[d]; ++o)
      tables[d][static_cast<std::size_t>(o)] = (d == a ? o + start : o) * st[d];
  return gather_map(x, out, separable_map(out, tables), "slice");
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw_invalid("concat: no inputs");
  for (const auto& p : parts) {
    require_defined(p, "concat");
    require_same_dtype(parts[0], p, "concat");
  }
  const auto a = static_cast<std::size_t>(norm_axis(axis, parts[0].ndim(), "concat"));
  Shape out = parts[0].shape();
  out[a] = 0;
  for (const auto& p : parts) {
    if (p.ndim() != parts[0].ndim()) throw_invalid("concat: rank mismatch");
    for (std::size_t d = 0; d < out.size(); ++d)
      if (d != a && p.shape()[d] != parts[0].shape()[d]) throw_invalid("concat: shape mismatch off the concat axis");
    out[a] += p.shape()[a];
  }
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < a; ++d) outer *= out[d];
  for (std::size_t d = a + 1; d < out.size(); ++d) inner *= out[d];
  Tensor result = A::make(out, parts[0].dtype());
  dispatch(parts[0].dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto po = A::writable<T>(result);
    std::int64_t offset = 0;
    for (const auto& p : parts) {
      const std::int64_t chunk = p.shape()[a] * inner;
      auto pp = p.data<T>();
      for (std::int64_t o = 0; o < outer; ++o)
        std::copy_n(pp.data() + o * chunk, chunk, po.data() + o * out[a] * inner + offset);
      offset += chunk;
    }
  });
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (any && grad_enabled()) {
    std::vector<std::int64_t> sizes;
    for (const auto& p : parts) sizes.push_back(p.shape()[a]);
    A::attach(result, "concat", parts, [sizes, axis = static_cast<int>(a)](const Tensor& g) {
      std::vector<Tensor> grads;
      std::int64_t start = 0;
      for (auto s : sizes) {
        grads.push_back(slice(g, axis, start, s));
        start += s;
      }
      return grads;
    });
  }
  return result;
}

Tensor pixel_shuffle(const Tensor& x, int r) {
  require_defined(x, "pixel_shuffle");
  if (x.ndim() != 4) throw_invalid("pixel_shuffle: expected NCHW input");
  if (r < 1) throw_invalid("pixel_shuffle: factor must be >= 1");
  const std::int64_t b = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (cin % (r * r) != 0)
    throw_invalid("pixel_shuffle: " + std::to_string(cin) + " channels not divisible by r^2 = " +
                  std::to_string(r * r));
  const std::int64_t c = cin / (r * r);
  const std::int64_t oh = h * r, ow = w * r;
  std::vector<std::int64_t> map(static_cast<std::size_t>(x.numel()));
  std::size_t i = 0;
  for (std::int64_t bi = 0; bi < b; ++bi)
    for (std::int64_t ci = 0; ci < c; ++ci)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xo = 0; xo < ow; ++xo) {
          const std::int64_t src_c = ci * r * r + (y % r) * r + (xo % r);
          map[i++] = ((bi * cin + src_c) * h + y / r) * w + xo / r;
        }
  return gather_map(x, Shape{b, c, oh, ow}, std::move(map), "pixel_shuffle");
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
  require_defined(x, "pixel_unshuffle");
  if (x.ndim() != 4) throw_invalid("pixel_unshuffle: expected NCHW input");
  if (r < 1) throw_invalid("pixel_unshuffle: factor must be >= 1");
  const std::int64_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % r != 0 || w % r != 0) throw_invalid("pixel_unshuffle: spatial dims not divisible by r");
  const std::int64_t oc = c * r * r, oh = h / r, ow = w / r;
  std::vector<std::int64_t> map(static_cast<std::size_t>(x.numel()));
  std::size_t i = 0;
  for (std::int64_t bi = 0; bi < b; ++bi)
    for (std::int64_t co = 0; co < oc; ++co)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xo = 0; xo < ow; ++xo) {
          const std::int64_t ci = co / (r * r);
          const std::int64_t di = (co % (r * r)) / r;
          const std::int64_t dj = co % r;
          map[i++] = ((bi * c + ci) * h + y * r + di) * w + xo * r + dj;
        }
  return gather_map(x, Shape{b, oc, oh, ow}, std::move(map), "pixel_unshuffle");
}

Tensor gather_rows(const Tensor& table, const std::vector<std::int64_t>& indices) {
  require_defined(table, "gather_rows");
  if (table.ndim() != 2) throw_invalid("gather_rows: table must be 2-D");
  const std::int64_t rows = table.dim(0), cols = table.dim(1);
  std::vector<std::int64_t> map(indices.size() * static_cast<std::size_t>(cols));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= rows) throw_invalid("gather_rows: index out of range");
    for (std::int64_t c = 0; c < cols; ++c)
      map[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] = indices[r] * cols + c;
  }
  return gather_map(table, Shape{static_cast<std::int64_t>(indices.size()), cols}, std::move(map),
                    "gather_rows");
}

}  // namespace agb::nc

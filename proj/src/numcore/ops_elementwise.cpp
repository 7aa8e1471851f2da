// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include <algorithm>
#include <cmath>
#include <numbers>

#include "agb/numcore/ops.hpp"
#include "kernels.hpp"

namespace agb::nc {

namespace kernels {
std::vector<std::int64_t> strides_of(const Shape& shape) {
  std::vector<std::int64_t> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
    s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i) + 1] * shape[static_cast<std::size_t>(i) + 1];
  return s;
}
}  // namespace kernels

using namespace kernels;

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t n = std::max(a.size(), b.size());
  Shape out(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t da = i < n - a.size() ? 1 : a[i - (n - a.size())];
    const std::int64_t db = i < n - b.size() ? 1 : b[i - (n - b.size())];
    if (da != db && da != 1 && db != 1)
      throw_invalid(std::string(op) + ": shapes " + to_string(a) + " and " + to_string(b) +
                    " do not broadcast");
    out[i] = std::max(da, db);
  }
  return out;
}

/// Strides of `in` expressed in the index space of `out`; broadcast axes get 0.
std::vector<std::int64_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::int64_t> s(out.size(), 0);
  const auto own = strides_of(in);
  const std::size_t off = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) s[off + i] = in[i] == 1 ? 0 : own[i];
  return s;
}

bool is_suffix(const Shape& small, const Shape& big) {
  std::size_t lead = 0;
  while (lead < small.size() && small[lead] == 1) ++lead;
  const std::size_t n = small.size() - lead;
  if (n > big.size()) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (small[lead + i] != big[big.size() - n + i]) return false;
  return true;
}

/// Calls f(out_index, a_offset, b_offset) over `out` in row-major order.
template <typename F>
void for_each_broadcast(const Shape& out, const std::vector<std::int64_t>& sa,
                        const std::vector<std::int64_t>& sb, F&& f) {
  const std::int64_t total = numel(out);
  const std::size_t nd = out.size();
  std::vector<std::int64_t> idx(nd, 0);
  std::int64_t oa = 0, ob = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    f(i, oa, ob);
    for (std::size_t d = nd; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < out[d]) break;
      oa -= sa[d] * out[d];
      ob -= sb[d] * out[d];
      idx[d] = 0;
    }
  }
}

template <typename Op>
Tensor binary_forward(const Tensor& a, const Tensor& b, const char* name, Op op) {
  require_defined(a, name);
  require_defined(b, name);
  require_same_dtype(a, b, name);
  const Shape out_shape = broadcast_shape(a.shape(), b.shape(), name);
  Tensor out = A::make(out_shape, a.dtype());
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto pa = a.data<T>();
    auto pb = b.data<T>();
    auto po = A::writable<T>(out);
    const auto na = static_cast<std::int64_t>(pa.size());
    const auto nb = static_cast<std::int64_t>(pb.size());
    const auto no = static_cast<std::int64_t>(po.size());
    if (na == no && nb == no) {
      for (std::int64_t i = 0; i < no; ++i) po[i] = op(pa[i], pb[i]);
    } else if (na == no && is_suffix(b.shape(), a.shape())) {
      for (std::int64_t i = 0; i < no; ++i) po[i] = op(pa[i], pb[i % nb]);
    } else if (nb == no && is_suffix(a.shape(), b.shape())) {
      for (std::int64_t i = 0; i < no; ++i) po[i] = op(pa[i % na], pb[i]);
    } else {
      for_each_broadcast(out_shape, broadcast_strides(a.shape(), out_shape),
                         broadcast_strides(b.shape(), out_shape),
                         [&](std::int64_t i, std::int64_t ia, std::int64_t ib) {
                           po[i] = op(pa[ia], pb[ib]);
                         });
    }
  });
  return out;
}

template <typename F>
Tensor unary_forward(const Tensor& x, const char* name, F f) {
  require_defined(x, name);
  Tensor out = A::make(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto px = x.data<T>();
    auto po = A::writable<T>(out);
    for (std::size_t i = 0; i < px.size(); ++i) po[i] = static_cast<T>(f(px[i]));
  });
  return out;
}

/// grad_out · d(x): elementwise product with a derivative computed from x (and y).
template <typename F>
Tensor unary_grad(const Tensor& g, const Tensor& x, const Tensor& y, F deriv) {
  Tensor out = A::make(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto pg = g.data<T>();
    auto px = x.data<T>();
    auto py = y.data<T>();
    auto po = A::writable<T>(out);
    for (std::size_t i = 0; i < px.size(); ++i) po[i] = static_cast<T>(pg[i] * deriv(px[i], py[i]));
  });
  return out;
}

}  // namespace

Tensor sum_to(const Tensor& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  const Shape check = broadcast_shape(shape, x.shape(), "sum_to");
  if (check != x.shape())
    throw_invalid("sum_to: " + to_string(shape) + " does not broadcast to " + to_string(x.shape()));
  Tensor out = A::make(shape, x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto px = x.data<T>();
    auto po = A::writable<T>(out);
    const auto n = static_cast<std::int64_t>(px.size());
    const auto m = static_cast<std::int64_t>(po.size());
    if (is_suffix(shape, x.shape())) {
      for (std::int64_t i = 0; i < n; ++i) po[i % m] += px[i];
    } else {
      std::vector<std::int64_t> zero(x.shape().size(), 0);
      for_each_broadcast(x.shape(), broadcast_strides(shape, x.shape()), zero,
                         [&](std::int64_t i, std::int64_t io, std::int64_t) { po[io] += px[i]; });
    }
  });
  if (A::needs_graph({&x})) {
    Shape src = x.shape();
    A::attach(out, "sum_to", {x}, [src](const Tensor& g) {
      return std::vector<Tensor>{add(Tensor::zeros(src, g.dtype()), g)};
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = binary_forward(a, b, "add", [](auto x, auto y) { return x + y; });
  if (A::needs_graph({&a, &b})) {
    A::attach(out, "add", {a, b}, [sa = a.shape(), sb = b.shape(), ra = a.requires_grad(),
                                   rb = b.requires_grad()](const Tensor& g) {
      return std::vector<Tensor>{ra ? sum_to(g, sa) : Tensor{}, rb ? sum_to(g, sb) : Tensor{}};
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tensor out = binary_forward(a, b, "sub", [](auto x, auto y) { return x - y; });
  if (A::needs_graph({&a, &b})) {
    A::attach(out, "sub", {a, b}, [sa = a.shape(), sb = b.shape(), ra = a.requires_grad(),
                                   rb = b.requires_grad()](const Tensor& g) {
      return std::vector<Tensor>{ra ? sum_to(g, sa) : Tensor{},
                                 rb ? scale(sum_to(g, sb), -1.0) : Tensor{}};
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tensor out = binary_forward(a, b, "mul", [](auto x, auto y) { return x * y; });
  if (A::needs_graph({&a, &b})) {
    A::attach(out, "mul", {a, b}, [a, b](const Tensor& g) {
      return std::vector<Tensor>{a.requires_grad() ? sum_to(mul(g, b.detach()), a.shape()) : Tensor{},
                                 b.requires_grad() ? sum_to(mul(g, a.detach()), b.shape()) : Tensor{}};
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  Tensor out = unary_forward(x, "scale", [factor](auto v) { return v * factor; });
  if (A::needs_graph({&x}))
    A::attach(out, "scale", {x},
              [factor](const Tensor& g) { return std::vector<Tensor>{scale(g, factor)}; });
  return out;
}

Tensor add_scalar(const Tensor& x, double value) {
  Tensor out = unary_forward(x, "add_scalar", [value](auto v) { return v + value; });
  if (A::needs_graph({&x}))
    A::attach(out, "add_scalar", {x}, [](const Tensor& g) { return std::vector<Tensor>{g}; });
  return out;
}

namespace {
thread_local GateTape* t_gate_tape = nullptr;
}  // namespace

GateTape::GateTape() : previous_(t_gate_tape) { t_gate_tape = this; }
GateTape::~GateTape() { t_gate_tape = previous_; }

GateTape* active_gate_tape() { return t_gate_tape; }

void GateTape::sync(std::vector<std::int64_t>& gates) {
  if (mode_ == Mode::record) {
    entries_.push_back(gates);
    return;
  }
  if (cursor_ >= entries_.size() || entries_[cursor_].size() != gates.size())
    throw_invalid("GateTape: replay does not match the recorded op sequence");
  gates = entries_[cursor_++];
}

Tensor relu(const Tensor& x) {
  require_defined(x, "relu");
  auto gates = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(x.numel()));
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto px = x.data<T>();
    for (std::size_t i = 0; i < px.size(); ++i) (*gates)[i] = px[i] <= 0 ? 0 : 1;  // NaN passes through
  });
  if (GateTape* tape = active_gate_tape()) tape->sync(*gates);
  Tensor out = A::make(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto px = x.data<T>();
    auto po = A::writable<T>(out);
    for (std::size_t i = 0; i < px.size(); ++i) po[i] = (*gates)[i] ? px[i] : T(0);
  });
  if (A::needs_graph({&x})) {
    A::attach(out, "relu", {x}, [gates](const Tensor& g) {
      Tensor gx = A::make(g.shape(), g.dtype());
      dispatch(g.dtype(), [&](auto tag) {
        using T = decltype(tag);
        auto pg = g.data<T>();
        auto po = A::writable<T>(gx);
        for (std::size_t i = 0; i < pg.size(); ++i) po[i] = (*gates)[i] ? pg[i] : T(0);
      });
      return std::vector<Tensor>{gx};
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out = unary_forward(x, "gelu", [](auto v) {
    using T = decltype(v);
    return T(0.5) * v * (T(1) + std::erf(v * T(std::numbers::sqrt2 / 2)));
  });
  if (A::needs_graph({&x})) {
    A::attach(out, "gelu", {x}, [xd = x.detach(), yd = out.detach()](const Tensor& g) {
      return std::vector<Tensor>{unary_grad(g, xd, yd, [](auto v, auto) {
        using T = decltype(v);
        const T cdf = T(0.5) * (T(1) + std::erf(v * T(std::numbers::sqrt2 / 2)));
        const T pdf = std::exp(T(-0.5) * v * v) * T(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
        return cdf + v * pdf;
      })};
    });
  }
  return out;
}

Tensor square(const Tensor& x) {
  Tensor out = unary_forward(x, "square", [](auto v) { return v * v; });
  if (A::needs_graph({&x})) {
    A::attach(out, "square", {x}, [xd = x.detach(), yd = out.detach()](const Tensor& g) {
      return std::vector<Tensor>{unary_grad(g, xd, yd, [](auto v, auto) { return v + v; })};
    });
  }
  return out;
}

Tensor sqrt(const Tensor& x) {
  Tensor out = unary_forward(x, "sqrt", [](auto v) { return std::sqrt(v); });
  if (A::needs_graph({&x})) {
    A::attach(out, "sqrt", {x}, [xd = x.detach(), yd = out.detach()](const Tensor& g) {
      return std::vector<Tensor>{
          unary_grad(g, xd, yd, [](auto, auto y) { return decltype(y)(0.5) / y; })};
    });
  }
  return out;
}

Tensor abs(const Tensor& x) {
  require_defined(x, "abs");
  auto signs = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(x.numel()));
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto px = x.data<T>();
    for (std::size_t i = 0; i < px.size(); ++i) (*signs)[i] = px[i] > 0 ? 1 : (px[i] < 0 ? -1 : 0);
  });
  if (GateTape* tape = active_gate_tape()) tape->sync(*signs);
  Tensor out = A::make(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto px = x.data<T>();
    auto po = A::writable<T>(out);
    for (std::size_t i = 0; i < px.size(); ++i) po[i] = static_cast<T>((*signs)[i]) * px[i];
  });
  if (A::needs_graph({&x})) {
    A::attach(out, "abs", {x}, [signs](const Tensor& g) {
      Tensor gx = A::make(g.shape(), g.dtype());
      dispatch(g.dtype(), [&](auto tag) {
        using T = decltype(tag);
        auto pg = g.data<T>();
        auto po = A::writable<T>(gx);
        for (std::size_t i = 0; i < pg.size(); ++i) po[i] = static_cast<T>((*signs)[i]) * pg[i];
      });
      return std::vector<Tensor>{gx};
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  Tensor out = A::make(Shape{}, x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    double acc = 0.0;
    for (T v : x.data<T>()) acc += v;
    A::writable<T>(out)[0] = static_cast<T>(acc);
  });
  if (A::needs_graph({&x})) {
    A::attach(out, "sum", {x}, [shape = x.shape()](const Tensor& g) {
      return std::vector<Tensor>{Tensor::full(shape, g.item(), g.dtype())};
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  require_defined(x, "mean");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

}  // namespace agb::nc

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

#include "agb/numcore/attention.hpp"
#include "agb/numcore/ops.hpp"

namespace agb::nc {

GradCheckReport check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                                std::vector<Tensor> leaves, Prng& rng, const GradCheckOptions& opts) {
  GradCheckReport report;
  report.name = name;
  for (auto& leaf : leaves) {
    if (leaf.dtype() != DType::f64) throw_invalid("check_gradients: leaves must be f64");
    leaf.zero_grad();
    leaf.set_requires_grad(true);
  }
  std::optional<GateTape> tape;
  if (opts.freeze_gates) tape.emplace();
  backward(loss_fn());

  auto eval = [&] {
    NoGradGuard guard;
    if (tape) tape->set_mode(GateTape::Mode::replay);
    return loss_fn().item();
  };
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = leaves[li];
    const Tensor g = leaf.grad();
    const auto n = leaf.numel();
    std::vector<std::int64_t> probe(static_cast<std::size_t>(n));
    std::iota(probe.begin(), probe.end(), 0);
    if (n > opts.max_entries_per_leaf) {
      rng.shuffle(probe.begin(), probe.end());
      probe.resize(static_cast<std::size_t>(opts.max_entries_per_leaf));
      std::sort(probe.begin(), probe.end());
    }
    for (auto idx : probe) {
      auto data = leaf.mutable_leaf_data<double>();
      const double orig = data[static_cast<std::size_t>(idx)];
      data[static_cast<std::size_t>(idx)] = orig + opts.step;
      const double up = eval();
      leaf.mutable_leaf_data<double>()[static_cast<std::size_t>(idx)] = orig - opts.step;
      const double down = eval();
      leaf.mutable_leaf_data<double>()[static_cast<std::size_t>(idx)] = orig;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double analytic = g.defined() ? g.value(idx) : 0.0;
      const double denom = std::max({std::abs(numeric), std::abs(analytic), opts.floor});
      double err = std::abs(numeric - analytic) / denom;
      if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
      if (err > report.max_rel_error || report.worst_leaf < 0) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        report.worst_leaf = static_cast<std::int64_t>(li);
        report.worst_index = idx;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
      ++report.entries;
      if (analytic != 0.0) ++report.nonzero_entries;
    }
    leaf.zero_grad();
  }
  report.passed = report.max_rel_error < opts.tolerance && report.nonzero_entries > 0;
  return report;
}

Tensor random_projection(const Tensor& out, Prng& rng) {
  std::vector<double> r(static_cast<std::size_t>(out.numel()));
  for (auto& v : r) v = rng.uniform(-1.0, 1.0);
  return Tensor::from(out.shape(), r, out.dtype());
}

namespace {

Tensor randn(Prng& rng, Shape shape, double sd = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(numel(shape)));
  for (auto& x : v) x = sd * rng.normal();
  return Tensor::from(std::move(shape), v, DType::f64);
}

Tensor positive(Prng& rng, Shape shape) {
  std::vector<double> v(static_cast<std::size_t>(numel(shape)));
  for (auto& x : v) x = rng.uniform(0.5, 2.0);
  return Tensor::from(std::move(shape), v, DType::f64);
}

std::vector<std::uint8_t> random_mask(Prng& rng, std::int64_t n, double p) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n));
  for (auto& v : m) v = rng.uniform() < p ? 1 : 0;
  m[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)))] = 1;
  return m;
}

using Builder = std::function<GradCheckReport(Prng&, const GradCheckOptions&)>;

/// Checks f(leaves) projected onto a fixed random direction.
GradCheckReport projected(const std::string& name, Prng& rng, const GradCheckOptions& opts,
                          std::vector<Tensor> leaves, const std::function<Tensor()>& f) {
  Tensor proj;
  {
    NoGradGuard guard;
    proj = random_projection(f(), rng);
  }
  return check_gradients(name, [&] { return sum(mul(f(), proj)); }, std::move(leaves), rng, opts);
}

const std::map<std::string, Builder>& registry() {
  static const std::map<std::string, Builder> r = {
      {"add", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {2, 3, 4}), b = randn(g, {3, 1});
         return projected("add", g, o, {a, b}, [&] { return add(a, b); });
       }},
      {"sub", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {3, 4}), b = randn(g, {4});
         return projected("sub", g, o, {a, b}, [&] { return sub(a, b); });
       }},
      {"mul", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {2, 3, 4}), b = randn(g, {2, 1, 4});
         return projected("mul", g, o, {a, b}, [&] { return mul(a, b); });
       }},
      {"scale", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {5});
         return projected("scale", g, o, {a}, [&] { return add_scalar(scale(a, -1.7), 0.3); });
       }},
      {"relu", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {4, 5});
         return projected("relu", g, o, {a}, [&] { return relu(a); });
       }},
      {"gelu", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {4, 5});
         return projected("gelu", g, o, {a}, [&] { return gelu(a); });
       }},
      {"square", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {6});
         return projected("square", g, o, {a}, [&] { return square(a); });
       }},
      {"sqrt", [](Prng& g, const GradCheckOptions& o) {
         auto a = positive(g, {6});
         return projected("sqrt", g, o, {a}, [&] { return sqrt(a); });
       }},
      {"abs", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {6});
         return projected("abs", g, o, {a}, [&] { return abs(a); });
       }},
      {"sum", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {3, 4});
         return check_gradients("sum", [&] { return sum(square(a)); }, {a}, g, o);
       }},
      {"mean", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {3, 4});
         return check_gradients("mean", [&] { return mean(square(a)); }, {a}, g, o);
       }},
      {"matmul", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {2, 3, 4}), b = randn(g, {2, 4, 5}), c = randn(g, {5, 2});
         return projected("matmul", g, o, {a, b, c}, [&] { return matmul(matmul(a, b), c); });
       }},
      {"linear", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {2, 3, 4}), w = randn(g, {5, 4}), b = randn(g, {5});
         return projected("linear", g, o, {x, w, b}, [&] { return linear(x, w, b); });
       }},
      {"conv2d", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {2, 3, 8, 8}), w = randn(g, {4, 3, 3, 3}), b = randn(g, {4});
         return projected("conv2d", g, o, {x, w, b}, [&] { return conv2d(x, w, b, 2, 1); });
       }},
      {"reshape", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {2, 6});
         return projected("reshape", g, o, {x}, [&] { return reshape(x, {3, 4}); });
       }},
      {"permute", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {2, 3, 4});
         return projected("permute", g, o, {x}, [&] { return permute(x, {2, 0, 1}); });
       }},
      {"roll", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {2, 5, 4});
         return projected("roll", g, o, {x}, [&] { return roll(x, {2, -1}, {1, 2}); });
       }},
      {"pad", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {2, 3});
         return projected("pad", g, o, {x}, [&] { return pad(x, 1, 1, 2); });
       }},
      {"slice", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {3, 5});
         return projected("slice", g, o, {x}, [&] { return slice(x, 1, 1, 3); });
       }},
      {"concat", [](Prng& g, const GradCheckOptions& o) {
         auto a = randn(g, {2, 3}), b = randn(g, {2, 2});
         return projected("concat", g, o, {a, b}, [&] { return concat({a, b}, 1); });
       }},
      {"pixel_shuffle", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {2, 8, 3, 2});
         return projected("pixel_shuffle", g, o, {x}, [&] { return pixel_shuffle(x, 2); });
       }},
      {"pixel_unshuffle", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {1, 2, 4, 6});
         return projected("pixel_unshuffle", g, o, {x}, [&] { return pixel_unshuffle(x, 2); });
       }},
      {"window_partition", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {1, 4, 4, 3});
         return projected("window_partition", g, o, {x}, [&] { return window_partition(x, 2, 1); });
       }},
      {"attention", [](Prng& g, const GradCheckOptions& o) {
         auto q = randn(g, {4, 4, 8}), k = randn(g, {4, 4, 8}), v = randn(g, {4, 4, 8});
         auto bias = randn(g, {2, 4, 4}, 0.5);
         Tensor mask = shifted_window_mask(4, 4, 2, 1, DType::f64);
         return projected("attention", g, o, {q, k, v, bias},
                          [&] { return multi_head_attention(q, k, v, 2, bias, mask); });
       }},
      {"layer_norm", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {3, 6}), w = randn(g, {6}), b = randn(g, {6});
         return projected("layer_norm", g, o, {x, w, b}, [&] { return layer_norm(x, w, b); });
       }},
      {"softmax", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {3, 5});
         return projected("softmax", g, o, {x}, [&] { return softmax(x); });
       }},
      {"max_pool2d", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {1, 2, 6, 6});
         return projected("max_pool2d", g, o, {x}, [&] { return max_pool2d(x, 2, 2); });
       }},
      {"avg_pool2d", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {1, 2, 5, 7});
         return projected("avg_pool2d", g, o, {x}, [&] { return adaptive_avg_pool2d(x, 3, 2); });
       }},
      {"bilinear_resize", [](Prng& g, const GradCheckOptions& o) {
         auto x = randn(g, {1, 2, 3, 4});
         return projected("bilinear_resize", g, o, {x}, [&] { return bilinear_resize(x, 7, 5); });
       }},
      {"gather_rows", [](Prng& g, const GradCheckOptions& o) {
         auto t = randn(g, {5, 3});
         std::vector<std::int64_t> idx{4, 0, 0, 2, 4, 1};
         return projected("gather_rows", g, o, {t}, [&] { return gather_rows(t, idx); });
       }},
      {"masked_rmse", [](Prng& g, const GradCheckOptions& o) {
         auto p = randn(g, {2, 1, 4, 4}), l = randn(g, {2, 1, 4, 4});
         auto m = random_mask(g, p.numel(), 0.4);
         return check_gradients("masked_rmse", [&] { return masked_rmse(p, l, m); }, {p, l}, g, o);
       }},
      {"masked_mean_abs", [](Prng& g, const GradCheckOptions& o) {
         auto p = randn(g, {2, 3, 4}), t = randn(g, {2, 3, 4});
         auto m = random_mask(g, p.numel(), 0.5);
         return check_gradients("masked_mean_abs", [&] { return masked_mean_abs(p, t, m); }, {p, t}, g, o);
       }},
  };
  return r;
}

}  // namespace

std::vector<std::string> primitive_check_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

GradCheckReport run_primitive_check(const std::string& name, std::uint64_t seed, const GradCheckOptions& opts) {
  const auto& r = registry();
  auto it = r.find(name);
  if (it == r.end()) throw_invalid("unknown grad-check op '" + name + "'");
  Prng rng(seed);
  return it->second(rng, opts);
}

}  // namespace agb::nc

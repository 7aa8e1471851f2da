// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "agb/error.hpp"

namespace agb::models {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'G', 'B', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void floats(const std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(v.data(), v.size() * sizeof(float));
    } else {
      for (float f : v) u32(std::bit_cast<std::uint32_t>(f));
    }
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> buf, std::string where) : buf_(std::move(buf)), where_(std::move(where)) {}
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw_data("E_CHECKPOINT", where_ + ": truncated checkpoint");
  }
  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  std::uint8_t u8() { return le<std::uint8_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(le<std::uint64_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<float> floats(std::size_t n) {
    need(n * 4);
    std::vector<float> v(n);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(v.data(), buf_.data() + pos_, n * 4);
      pos_ += n * 4;
    } else {
      for (auto& f : v) f = std::bit_cast<float>(u32());
    }
    return v;
  }
  const char* raw(std::size_t n) {
    need(n);
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::string where_;
  std::size_t pos_ = 0;
};

std::vector<float> as_floats(const nc::Tensor& t) {
  std::vector<float> out(static_cast<std::size_t>(t.numel()));
  nc::dispatch(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto d = t.template data<T>();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(d[i]);
  });
  return out;
}

}  // namespace

const ParamRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

void save_checkpoint(const fs::path& path, const CheckpointMeta& meta, const ParamStore& store,
                     const nc::AdamState* opt) {
  if (store.shape_only()) throw_invalid("cannot checkpoint a shape-only model");
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const json header = {{"kind", to_string(meta.kind)},
                       {"model", to_json(meta.config)},
                       {"config_hash", meta.config_hash},
                       {"seed", meta.seed},
                       {"epoch", meta.epoch},
                       {"extra", meta.extra}};
  w.str(header.dump());
  w.u32(static_cast<std::uint32_t>(store.entries().size()));
  for (const auto& e : store.entries()) {
    w.str(e.name);
    w.u8(static_cast<std::uint8_t>(e.component));
    w.u8(e.trainable ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) w.i64(d);
    w.floats(as_floats(e.value));
  }
  if (opt) {
    const auto names = store.trainable_names();
    if (opt->m.size() != names.size() && !opt->m.empty())
      throw_invalid("optimizer state does not match the trainable parameters");
    w.u8(1);
    w.i64(opt->t);
    w.f64(opt->beta1);
    w.f64(opt->beta2);
    w.f64(opt->eps);
    w.u32(static_cast<std::uint32_t>(opt->m.size()));
    for (std::size_t i = 0; i < opt->m.size(); ++i) {
      w.str(names[i]);
      w.floats(as_floats(opt->m[i]));
      w.floats(as_floats(opt->v[i]));
    }
  } else {
    w.u8(0);
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw_data("E_IO", "cannot write " + tmp.string());
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!out) throw_data("E_IO", "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("E_IO", "cannot open checkpoint " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(buf), path.string());
  if (std::memcmp(r.raw(sizeof kMagic), kMagic, sizeof kMagic) != 0)
    throw_data("E_CHECKPOINT", path.string() + ": not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw_data("E_CHECKPOINT", path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  try {
    const json h = json::parse(r.str());
    ck.meta.kind = parse_model_kind(h.at("kind").get<std::string>());
    ck.meta.config = model_config_from_json(h.at("model"));
    ck.meta.config_hash = h.value("config_hash", std::string{});
    ck.meta.seed = h.value("seed", std::uint64_t{0});
    ck.meta.epoch = h.value("epoch", std::int64_t{0});
    ck.meta.extra = h.value("extra", json::object());
  } catch (const json::exception& e) {
    throw_data("E_CHECKPOINT", path.string() + ": bad header: " + e.what());
  }
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    ParamRecord p;
    p.name = r.str();
    p.component = r.u8() == 0 ? Component::encoder : Component::decoder;
    p.trainable = r.u8() != 0;
    const auto nd = r.u32();
    for (std::uint32_t d = 0; d < nd; ++d) p.shape.push_back(r.i64());
    p.data = r.floats(static_cast<std::size_t>(nc::numel(p.shape)));
    ck.params.push_back(std::move(p));
  }
  if (r.u8() == 1) {
    nc::AdamState st;
    st.t = r.i64();
    st.beta1 = r.f64();
    st.beta2 = r.f64();
    st.eps = r.f64();
    const auto k = r.u32();
    for (std::uint32_t i = 0; i < k; ++i) {
      const std::string name = r.str();
      const ParamRecord* p = ck.find(name);
      if (!p) throw_data("E_CHECKPOINT", path.string() + ": optimizer state for unknown parameter " + name);
      const auto cnt = static_cast<std::size_t>(nc::numel(p->shape));
      st.m.push_back(nc::Tensor::from(p->shape, r.floats(cnt)));
      st.v.push_back(nc::Tensor::from(p->shape, r.floats(cnt)));
      ck.optimizer_names.push_back(name);
    }
    ck.optimizer = std::move(st);
  }
  if (!r.done()) throw_data("E_CHECKPOINT", path.string() + ": trailing bytes after checkpoint payload");
  return ck;
}

void load_params(const Checkpoint& ck, ParamStore& store, const std::string& prefix) {
  std::size_t matched = 0;
  for (auto& e : store.entries()) {
    if (e.name.rfind(prefix, 0) != 0) continue;
    const ParamRecord* p = ck.find(e.name);
    if (!p) throw_data("E_CHECKPOINT", "architecture mismatch: checkpoint lacks parameter " + e.name);
    if (p->shape != e.shape)
      throw_data("E_CHECKPOINT", "architecture mismatch for " + e.name + ": checkpoint has " +
                                     nc::to_string(p->shape) + ", model expects " + nc::to_string(e.shape));
    store.assign(e.name, nc::Tensor::from(p->shape, p->data));
    e.trainable = p->trainable;
    e.value.set_requires_grad(p->trainable);
    ++matched;
  }
  std::size_t available = 0;
  for (const auto& p : ck.params) available += p.name.rfind(prefix, 0) == 0;
  if (matched != available)
    throw_data("E_CHECKPOINT", "architecture mismatch: checkpoint holds " + std::to_string(available) +
                                   " parameters under '" + prefix + "', model has " + std::to_string(matched));
}

ModelBundle model_from_checkpoint(const Checkpoint& ck) {
  ModelBundle m = make_model(ck.meta.kind, ck.meta.config, ck.meta.seed);
  load_params(ck, *m.store);
  return m;
}

}  // namespace agb::models

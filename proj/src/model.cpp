#include "microtrain/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "microtrain/kernels.hpp"
#include "microtrain/ops.hpp"

namespace microtrain::model {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void write_u64(std::ostream& out, uint64_t v) {
  write_u32(out, static_cast<uint32_t>(v & 0xffffffffu));
  write_u32(out, static_cast<uint32_t>(v >> 32));
}

uint64_t read_u64(std::istream& in) {
  uint64_t lo = read_u32(in);
  uint64_t hi = read_u32(in);
  return lo | (hi << 32);
}

uint64_t fnv_bytes(uint64_t h, const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const char* level_name(ParamLevel level) {
  switch (level) {
    case ParamLevel::LowLevel:
      return "low";
    case ParamLevel::HighLevel:
      return "high";
    case ParamLevel::Head:
      return "head";
  }
  return "?";
}

std::string ConvSpec::str() const {
  std::ostringstream os;
  os << out_channels << "x" << kernel << "s" << stride << "p" << pad;
  return os.str();
}

ConvSpec ConvSpec::parse(const std::string& s) {
  ConvSpec spec;
  char xc = 0, sc = 0, pc = 0;
  std::istringstream is(s);
  if (!(is >> spec.out_channels >> xc >> spec.kernel >> sc >> spec.stride >>
        pc >> spec.pad) ||
      xc != 'x' || sc != 's' || pc != 'p' || !is.eof())
    throw std::invalid_argument("bad conv spec '" + s +
                                "' (expected e.g. 8x3s2p1)");
  if (spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1 ||
      spec.pad < 0)
    throw std::invalid_argument("bad conv spec values in '" + s + "'");
  return spec;
}

ModelConfig ModelConfig::defaults() {
  ModelConfig cfg;
  cfg.low_blocks = {ConvSpec::parse("8x3s2p1"), ConvSpec::parse("16x3s2p1")};
  cfg.high_blocks = {ConvSpec::parse("32x3s2p1"), ConvSpec::parse("32x3s1p1")};
  return cfg;
}

std::string ModelConfig::str() const {
  std::ostringstream os;
  os << "in_channels=" << in_channels << ";in_h=" << in_h << ";in_w=" << in_w
     << ";low=";
  for (size_t i = 0; i < low_blocks.size(); ++i)
    os << (i ? "," : "") << low_blocks[i].str();
  os << ";high=";
  for (size_t i = 0; i < high_blocks.size(); ++i)
    os << (i ? "," : "") << high_blocks[i].str();
  return os.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig cfg;
  cfg.low_blocks.clear();
  cfg.high_blocks.clear();
  std::istringstream is(text);
  std::string field;
  while (std::getline(is, field, ';')) {
    auto eq = field.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad model config field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    auto parse_blocks = [](const std::string& v) {
      std::vector<ConvSpec> specs;
      std::istringstream bs(v);
      std::string one;
      while (std::getline(bs, one, ','))
        if (!one.empty()) specs.push_back(ConvSpec::parse(one));
      return specs;
    };
    if (key == "in_channels")
      cfg.in_channels = std::stoi(val);
    else if (key == "in_h")
      cfg.in_h = std::stoi(val);
    else if (key == "in_w")
      cfg.in_w = std::stoi(val);
    else if (key == "low")
      cfg.low_blocks = parse_blocks(val);
    else if (key == "high")
      cfg.high_blocks = parse_blocks(val);
    else
      throw std::invalid_argument("unknown model config key '" + key + "'");
  }
  return cfg;
}

uint64_t parameter_checksum(const ParameterGroup& g) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const GradPair* p : g.params)
    h = fnv_bytes(h, p->value.data(),
                  static_cast<size_t>(p->value.size()) * sizeof(double));
  return h;
}

HybridModel::HybridModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.low_blocks.empty() || cfg_.high_blocks.empty())
    throw std::invalid_argument(
        "model: need at least one low and one high block");
  if (cfg_.in_channels < 1 || cfg_.in_h < 1 || cfg_.in_w < 1)
    throw std::invalid_argument("model: bad input geometry");

  // Walk the geometry once; conv2d_geometry throws on degenerate extents.
  int c = cfg_.in_channels, h = cfg_.in_h, w = cfg_.in_w;
  auto add_block = [&](const ConvSpec& spec) {
    const ops::Conv2dGeom g = ops::conv2d_geometry(
        {c, h, w}, {spec.out_channels, c, spec.kernel, spec.kernel},
        spec.stride, spec.pad);
    Block b;
    b.spec = spec;
    b.kernels =
        GradPair(Tensor({spec.out_channels, c, spec.kernel, spec.kernel}));
    blocks_.push_back(std::move(b));
    c = g.cout;
    h = g.hout;
    w = g.wout;
  };
  for (const ConvSpec& s : cfg_.low_blocks) add_block(s);
  n_low_ = static_cast<int>(blocks_.size());
  for (const ConvSpec& s : cfg_.high_blocks) add_block(s);

  d_ = c;
  feature_shape_ = {c, h, w};
  head_w_ = GradPair(Tensor({d_}));
  head_b_ = GradPair(Tensor({1}));
  build_groups();
}

void HybridModel::build_groups() {
  groups_.clear();
  for (size_t i = 0; i < blocks_.size(); ++i) {
    ParameterGroup g;
    const bool low = static_cast<int>(i) < n_low_;
    g.level = low ? ParamLevel::LowLevel : ParamLevel::HighLevel;
    g.name = std::string(low ? "low" : "high") +
             std::to_string(low ? i : i - static_cast<size_t>(n_low_));
    g.params = {&blocks_[i].kernels};
    groups_.push_back(std::move(g));
  }
  ParameterGroup head;
  head.name = "head";
  head.level = ParamLevel::Head;
  head.params = {&head_w_, &head_b_};
  groups_.push_back(std::move(head));
}

void HybridModel::init_he(Rng& rng) {
  for (Block& b : blocks_) {
    const int fan_in = b.kernels.value.extent(1) * b.spec.kernel * b.spec.kernel;
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (long long i = 0; i < b.kernels.value.size(); ++i)
      b.kernels.value[i] = scale * rng.normal();
  }
  const double head_scale = std::sqrt(2.0 / static_cast<double>(d_));
  for (long long i = 0; i < head_w_.value.size(); ++i)
    head_w_.value[i] = head_scale * rng.normal();
  head_b_.value[0] = 0.0;
}

ParameterGroup& HybridModel::group(const std::string& name) {
  for (ParameterGroup& g : groups_)
    if (g.name == name) return g;
  throw std::invalid_argument("model: no parameter group named '" + name + "'");
}

void HybridModel::check_batch_geometry(const Tensor& batch) const {
  if (batch.rank() != 4 || batch.extent(1) != cfg_.in_channels ||
      batch.extent(2) != cfg_.in_h || batch.extent(3) != cfg_.in_w)
    throw std::invalid_argument(
        "model: batch shape " + shape_str(batch.shape()) +
        " does not match configured input [Nx" +
        std::to_string(cfg_.in_channels) + "x" + std::to_string(cfg_.in_h) +
        "x" + std::to_string(cfg_.in_w) + "]");
}

Tensor HybridModel::forward_features(const Tensor& batch) {
  check_batch_geometry(batch);
  const int n = batch.extent(0);
  const long long sample_size =
      static_cast<long long>(cfg_.in_channels) * cfg_.in_h * cfg_.in_w;

  cache_blocks_.assign(static_cast<size_t>(n), {});
  Tensor z({n, d_});
  for (int i = 0; i < n; ++i) {
    Tensor x({cfg_.in_channels, cfg_.in_h, cfg_.in_w});
    std::memcpy(x.data(), batch.data() + i * sample_size,
                static_cast<size_t>(sample_size) * sizeof(double));
    auto& caches = cache_blocks_[static_cast<size_t>(i)];
    caches.reserve(blocks_.size());
    for (Block& b : blocks_) {
      Tensor pre = ops::conv2d(x, b.kernels.value, b.spec.stride, b.spec.pad);
      Tensor post = ops::relu(pre);
      caches.push_back(BlockCache{std::move(x), std::move(pre)});
      x = std::move(post);
    }
    Tensor zi = ops::global_avg_pool(x);
    std::memcpy(z.data() + static_cast<long long>(i) * d_, zi.data(),
                static_cast<size_t>(d_) * sizeof(double));
  }
  cache_z_ = z;
  cache_n_ = n;
  cache_valid_ = true;
  cache_probs_ = Tensor();  // features-only cache until forward() fills it
  return z;
}

Tensor HybridModel::forward(const Tensor& batch) {
  Tensor z = forward_features(batch);
  const int n = z.extent(0);
  Tensor logits({n});
  kernels::matmul(z.data(), head_w_.value.data(), logits.data(), n, d_, 1);
  for (int i = 0; i < n; ++i) logits[i] += head_b_.value[0];
  cache_probs_ = ops::sigmoid(logits);
  return cache_probs_;
}

void HybridModel::backward_features(const Tensor& dl_dz) {
  if (!cache_valid_)
    throw std::logic_error("model: backward called before forward");
  if (dl_dz.rank() != 2 || dl_dz.extent(0) != cache_n_ ||
      dl_dz.extent(1) != d_)
    throw std::invalid_argument("model: feature grad shape " +
                                shape_str(dl_dz.shape()) +
                                " does not match cached batch");

  for (int i = 0; i < cache_n_; ++i) {
    Tensor gz({d_});
    std::memcpy(gz.data(), dl_dz.data() + static_cast<long long>(i) * d_,
                static_cast<size_t>(d_) * sizeof(double));
    Tensor gact = ops::global_avg_pool_backward(gz, feature_shape_);
    auto& caches = cache_blocks_[static_cast<size_t>(i)];
    for (int bi = static_cast<int>(blocks_.size()) - 1; bi >= 0; --bi) {
      Block& b = blocks_[static_cast<size_t>(bi)];
      const BlockCache& cache = caches[static_cast<size_t>(bi)];
      Tensor dpre = ops::relu_backward(cache.pre, gact);
      const bool want_input_grad = bi > 0;
      const bool frozen = groups_[static_cast<size_t>(bi)].frozen;
      Tensor dx;
      if (want_input_grad) dx = Tensor(cache.input.shape());
      ops::conv2d_backward(cache.input, b.kernels.value, dpre, b.spec.stride,
                           b.spec.pad, want_input_grad ? &dx : nullptr,
                           frozen ? nullptr : &b.kernels.grad);
      if (want_input_grad) gact = std::move(dx);
    }
  }
}

void HybridModel::backward(const Tensor& dl_dprobs) {
  if (!cache_valid_ || cache_probs_.size() == 0)
    throw std::logic_error("model: backward called before forward");
  if (dl_dprobs.rank() != 1 || dl_dprobs.extent(0) != cache_n_)
    throw std::invalid_argument("model: dL/dprobs shape " +
                                shape_str(dl_dprobs.shape()) +
                                " does not match cached batch size " +
                                std::to_string(cache_n_));

  const int n = cache_n_;
  Tensor dlogit({n});
  for (int i = 0; i < n; ++i) {
    const double p = cache_probs_[i];
    dlogit[i] = dl_dprobs[i] * p * (1.0 - p);
  }

  const ParameterGroup& head = groups_.back();
  if (!head.frozen) {
    for (int i = 0; i < n; ++i) head_b_.grad[0] += dlogit[i];
    Tensor zt({d_, n});
    kernels::transpose(cache_z_.data(), zt.data(), n, d_);
    kernels::matmul_acc(zt.data(), dlogit.data(), head_w_.grad.data(), d_, n,
                        1);
  }

  Tensor dz({n, d_});
  kernels::matmul(dlogit.data(), head_w_.value.data(), dz.data(), n, 1, d_);
  backward_features(dz);
}

std::vector<GradPair*> HybridModel::trainable_parameters() {
  std::vector<GradPair*> out;
  for (ParameterGroup& g : groups_)
    if (!g.frozen)
      for (GradPair* p : g.params) out.push_back(p);
  return out;
}

long long HybridModel::trainable_scalar_count() const {
  long long count = 0;
  for (const ParameterGroup& g : groups_)
    if (!g.frozen)
      for (const GradPair* p : g.params) count += p->value.size();
  return count;
}

long long HybridModel::total_scalar_count() const {
  long long count = 0;
  for (const ParameterGroup& g : groups_)
    for (const GradPair* p : g.params) count += p->value.size();
  return count;
}

void HybridModel::zero_all_grads() {
  for (ParameterGroup& g : groups_)
    for (GradPair* p : g.params) p->zero_grad();
}

const Tensor& HybridModel::cached_probs() const {
  if (!cache_valid_ || cache_probs_.size() == 0)
    throw std::logic_error("model: no cached probabilities");
  return cache_probs_;
}

const Tensor& HybridModel::cached_features() const {
  if (!cache_valid_)
    throw std::logic_error("model: no cached features");
  return cache_z_;
}

void HybridModel::save_checkpoint(std::ostream& out) const {
  const std::string cfg_text = cfg_.str();
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u64(out, fnv1a64(cfg_text));
  write_u32(out, static_cast<uint32_t>(cfg_text.size()));
  out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));
  write_u32(out, static_cast<uint32_t>(groups_.size()));
  for (const ParameterGroup& g : groups_) {
    write_u32(out, static_cast<uint32_t>(g.name.size()));
    out.write(g.name.data(), static_cast<std::streamsize>(g.name.size()));
    out.put(static_cast<char>(g.level));
    out.put(g.frozen ? '\1' : '\0');
    write_u32(out, static_cast<uint32_t>(g.params.size()));
    for (const GradPair* p : g.params) p->value.write(out);
  }
}

std::unique_ptr<HybridModel> HybridModel::load_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic (expected MTCK)");
  const uint32_t version = read_u32(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  const uint64_t digest = read_u64(in);
  const uint32_t cfg_len = read_u32(in);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  if (!in) throw std::runtime_error("checkpoint: truncated config");
  if (fnv1a64(cfg_text) != digest)
    throw std::runtime_error("checkpoint: config digest mismatch");

  auto model = std::make_unique<HybridModel>(ModelConfig::parse(cfg_text));
  const uint32_t ngroups = read_u32(in);
  if (ngroups != model->groups_.size())
    throw std::runtime_error("checkpoint: group count mismatch");
  for (ParameterGroup& g : model->groups_) {
    const uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != g.name)
      throw std::runtime_error("checkpoint: group name mismatch, expected '" +
                               g.name + "'");
    const int level = in.get();
    const int frozen = in.get();
    if (level != static_cast<int>(g.level))
      throw std::runtime_error("checkpoint: level mismatch in group " + g.name);
    g.frozen = frozen != 0;
    const uint32_t nparams = read_u32(in);
    if (nparams != g.params.size())
      throw std::runtime_error("checkpoint: param count mismatch in group " +
                               g.name);
    for (GradPair* p : g.params) {
      Tensor t = Tensor::read(in);
      if (!t.same_shape(p->value))
        throw std::runtime_error("checkpoint: tensor shape mismatch in group " +
                                 g.name);
      p->value = std::move(t);
      p->zero_grad();
    }
  }
  return model;
}

void HybridModel::save_checkpoint_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path);
  save_checkpoint(out);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

std::unique_ptr<HybridModel> HybridModel::load_checkpoint_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace microtrain::model

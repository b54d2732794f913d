#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "microtrain/rng.hpp"
#include "microtrain/tensor.hpp"

// The hybrid network: a small convolutional backbone split into low-level
// and high-level blocks (conv -> relu, no bias, no normalization), global
// average pooling to a d-dimensional feature z, and a compact linear head
// sigma(w.z + b). Parameters live in named groups tagged with a plasticity
// level so training stages can freeze them selectively.

namespace microtrain::model {

enum class ParamLevel { LowLevel, HighLevel, Head };

const char* level_name(ParamLevel level);

struct ConvSpec {
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  std::string str() const;  // "8x3s2p1"
  static ConvSpec parse(const std::string& s);
};

struct ModelConfig {
  int in_channels = 1;
  int in_h = 32;
  int in_w = 32;
  std::vector<ConvSpec> low_blocks;
  std::vector<ConvSpec> high_blocks;

  static ModelConfig defaults();
  std::string str() const;  // canonical text used for checkpoint digests
  static ModelConfig parse(const std::string& text);
};

struct ParameterGroup {
  std::string name;
  ParamLevel level;
  bool frozen = false;
  std::vector<GradPair*> params;  // non-owning, into the model
};

/// Order-sensitive FNV-1a digest over the raw parameter bits of a group.
/// Equal digests across steps iff the values are bit-identical.
uint64_t parameter_checksum(const ParameterGroup& g);

class HybridModel {
 public:
  /// Zero-initialized parameters; call init_he for the standard init.
  explicit HybridModel(ModelConfig cfg);
  HybridModel(const HybridModel&) = delete;
  HybridModel& operator=(const HybridModel&) = delete;

  /// He fan-in normal init for conv and head weights, bias 0.
  void init_he(Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  int feature_dim() const { return d_; }

  std::vector<ParameterGroup>& groups() { return groups_; }
  const std::vector<ParameterGroup>& groups() const { return groups_; }
  ParameterGroup& group(const std::string& name);

  /// [N x C x H x W] -> [N] probabilities in (0,1). Caches activations for
  /// backward. Throws std::invalid_argument on geometry mismatch.
  Tensor forward(const Tensor& batch);

  /// Accumulates dL/dparam into every non-frozen group given dL/dprobs.
  /// Frozen groups keep zero grads. Throws std::logic_error if no forward
  /// cache is present.
  void backward(const Tensor& dl_dprobs);

  /// Backbone-only passes (used by pretext pretraining, which attaches its
  /// own throwaway head). forward_features caches for backward_features.
  Tensor forward_features(const Tensor& batch);  // -> [N x d]
  void backward_features(const Tensor& dl_dz);

  /// Parameters of non-frozen groups, in deterministic group order.
  std::vector<GradPair*> trainable_parameters();
  long long trainable_scalar_count() const;
  long long total_scalar_count() const;

  void zero_all_grads();

  /// Checkpoint: header with a digest of the model config plus per-group
  /// tensors in the PTNS format; round-trips bit-exactly.
  void save_checkpoint(std::ostream& out) const;
  static std::unique_ptr<HybridModel> load_checkpoint(std::istream& in);
  void save_checkpoint_file(const std::string& path) const;
  static std::unique_ptr<HybridModel> load_checkpoint_file(
      const std::string& path);

  /// Cached probabilities from the last forward (valid until next forward).
  const Tensor& cached_probs() const;
  const Tensor& cached_features() const;

 private:
  struct Block {
    ConvSpec spec;
    GradPair kernels;  // [out x in x k x k]
  };
  struct BlockCache {
    Tensor input;
    Tensor pre;  // conv output before relu
  };

  void build_groups();
  void check_batch_geometry(const Tensor& batch) const;

  ModelConfig cfg_;
  std::vector<Block> blocks_;  // low blocks then high blocks
  int n_low_ = 0;
  int d_ = 0;
  std::vector<int> feature_shape_;  // [d x Hf x Wf] after the last block
  GradPair head_w_;                 // [d]
  GradPair head_b_;                 // [1]
  std::vector<ParameterGroup> groups_;

  // forward cache
  bool cache_valid_ = false;
  int cache_n_ = 0;
  std::vector<std::vector<BlockCache>> cache_blocks_;  // [n][block]
  Tensor cache_z_;      // [N x d]
  Tensor cache_probs_;  // [N]
};

}  // namespace microtrain::model

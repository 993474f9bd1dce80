#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dann/layers.hpp"
#include "dann/tensor.hpp"

namespace dann {

/// Architecture dimensions. Defaults are the full-scale preset
/// (310 ms of 16 kHz audio); desk-scale experiments shrink everything.
struct ArchConfig {
  std::size_t input_length = 4960;  // samples per frame, T

  std::size_t conv1_width = 64;
  std::size_t conv1_maps = 256;
  std::size_t conv1_stride = 31;
  std::size_t conv2_width = 15;
  std::size_t conv2_maps = 128;
  std::size_t conv2_stride = 1;
  std::size_t pool = 2;

  // Dense layers per head, counting the logit layer. Both heads are
  // configurable with a shared default.
  std::size_t head_depth = 4;
  std::size_t head_width = 1024;

  std::size_t num_classes = 4;  // K_y

  void validate() const;

  /// Flattened feature width after conv1 -> pool -> relu -> conv2 ->
  /// pool -> relu, from the shape arithmetic alone.
  std::size_t feature_dim() const;
};

/// Y-shaped network: shared CNN feature extractor feeding a label head
/// directly and a domain head through a gradient-reversal layer.
class DannModel {
 public:
  DannModel(const ArchConfig& config, std::uint64_t seed);

  const ArchConfig& config() const { return config_; }

  void set_lambda(double lambda);
  double lambda() const { return grl_->lambda(); }

  // Whole-path forwards (no caches retained).
  Tensor extract_features(const Tensor& x) { return feature_forward(x, false); }
  Tensor forward_label(const Tensor& x);
  Tensor forward_domain(const Tensor& x);

  /// Argmax over label logits; the domain head is never evaluated.
  std::vector<int> predict(const Tensor& x);

  // Split-path train API. One feature_forward, then either/both head
  // forwards, head backwards, and a single feature_backward on the sum
  // of the head input-gradients.
  Tensor feature_forward(const Tensor& x, bool keep_cache);
  Tensor label_head_forward(const Tensor& features, bool keep_cache);
  Tensor domain_head_forward(const Tensor& features, bool keep_cache);
  Tensor label_head_backward(const Tensor& grad_logits);
  /// Returns the gradient w.r.t. the shared features, already reversed
  /// and scaled by -lambda by the GRL.
  Tensor domain_head_backward(const Tensor& grad_logits);
  void feature_backward(const Tensor& grad_features);

  std::vector<ParamRef> feature_params();
  std::vector<ParamRef> label_params();
  std::vector<ParamRef> domain_params();
  std::vector<ParamRef> all_params();

 private:
  ArchConfig config_;
  std::vector<std::unique_ptr<Layer>> feature_layers_;
  std::vector<std::unique_ptr<Layer>> label_layers_;
  GradientReversal* grl_ = nullptr;  // owned by domain_layers_[0]
  std::vector<std::unique_ptr<Layer>> domain_layers_;
};

}  // namespace dann

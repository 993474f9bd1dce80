#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dann/tensor.hpp"

namespace dann {

/// Borrowed view of one named parameter and its gradient slot.
/// Valid for the lifetime of the owning layer.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

/// A differentiable transform. forward() with keep_cache=true retains
/// whatever backward() needs; backward() consumes the cache, returns
/// d(loss)/d(input) and overwrites the parameter gradient slots.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& input, bool keep_cache) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect_params(const std::string&, std::vector<ParamRef>&) {}
};

/// Valid (no padding) 1-d convolution over [B x C_in x T].
/// Output length is floor((T - k) / stride) + 1. Linear only; the
/// activation is a separate layer.
class Conv1d : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t width,
         std::size_t stride, Rng& rng);

  Tensor forward(const Tensor& input, bool keep_cache) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  static std::size_t output_length(std::size_t input_length, std::size_t width,
                                   std::size_t stride);

  Tensor weight;  // [out x in x k]
  Tensor bias;    // [out]
  Tensor weight_grad;
  Tensor bias_grad;

 private:
  std::size_t width_;
  std::size_t stride_;
  Tensor cached_input_;
  bool has_cache_ = false;
};

/// Non-overlapping mean pooling along the last axis; trailing remainder
/// samples are dropped. Backward spreads each gradient as 1/pool per
/// covered position.
class AvgPool1d : public Layer {
 public:
  explicit AvgPool1d(std::size_t pool);

  Tensor forward(const Tensor& input, bool keep_cache) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::size_t pool_;
  std::vector<std::size_t> cached_input_shape_;
  bool has_cache_ = false;
};

class Relu : public Layer {
 public:
  Tensor forward(const Tensor& input, bool keep_cache) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor cached_input_;
  bool has_cache_ = false;
};

/// [B x C x T] -> [B x C*T]; backward restores the original shape.
class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& input, bool keep_cache) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<std::size_t> cached_input_shape_;
  bool has_cache_ = false;
};

/// out = input * W + b over [B x D_in].
class Dense : public Layer {
 public:
  Dense(std::size_t in_dim, std::size_t out_dim, Rng& rng);

  Tensor forward(const Tensor& input, bool keep_cache) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
  Tensor weight_grad;
  Tensor bias_grad;

 private:
  Tensor cached_input_;
  bool has_cache_ = false;
};

/// Identity forward; backward multiplies the upstream gradient by
/// -lambda, exactly.
class GradientReversal : public Layer {
 public:
  explicit GradientReversal(double lambda = 0.0);

  Tensor forward(const Tensor& input, bool keep_cache) override;
  Tensor backward(const Tensor& grad_out) override;

  void set_lambda(double lambda);
  double lambda() const { return lambda_; }

 private:
  double lambda_;
};

struct CrossEntropyResult {
  double loss;         // mean over contributing rows
  Tensor grad_logits;  // (softmax - onehot) / contributing-row count
};

/// Mean softmax cross-entropy over [B x K] with integer labels in [0, K).
CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels);

/// Same, restricted to rows where mask[b] != 0; unmasked rows get zero
/// gradient and their labels are ignored. Throws if no row is masked in.
CrossEntropyResult masked_softmax_cross_entropy(const Tensor& logits,
                                                const std::vector<int>& labels,
                                                const std::vector<std::uint8_t>& mask);

}  // namespace dann

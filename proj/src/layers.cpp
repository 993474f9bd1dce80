#include "dann/layers.hpp"

#include <algorithm>
#include <cmath>

#include "dann/errors.hpp"

namespace dann {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* who) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(who) + ": expected rank " + std::to_string(rank) +
                         " input, got " + shape_to_string(t.shape));
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t width,
               std::size_t stride, Rng& rng)
    : width_(width), stride_(stride) {
  if (width < 1 || stride < 1 || in_channels < 1 || out_channels < 1) {
    throw ArgumentError("Conv1d: channels, width and stride must be >= 1");
  }
  // Fan counts follow the receptive field, as for 2-d convs.
  weight = glorot_init(in_channels * width, out_channels * width,
                       {out_channels, in_channels, width}, rng);
  bias = Tensor({out_channels});
  weight_grad = Tensor::zeros_like(weight);
  bias_grad = Tensor::zeros_like(bias);
}

std::size_t Conv1d::output_length(std::size_t input_length, std::size_t width,
                                  std::size_t stride) {
  if (input_length < width) {
    throw DimensionError("conv1d: input length " + std::to_string(input_length) +
                         " shorter than filter width " + std::to_string(width));
  }
  return (input_length - width) / stride + 1;
}

Tensor Conv1d::forward(const Tensor& input, bool keep_cache) {
  require_rank(input, 3, "conv1d");
  const std::size_t batch = input.dim(0), in_ch = input.dim(1), in_len = input.dim(2);
  const std::size_t out_ch = weight.dim(0);
  if (in_ch != weight.dim(1)) {
    throw DimensionError("conv1d: input has " + std::to_string(in_ch) +
                         " channels, filter expects " + std::to_string(weight.dim(1)));
  }
  const std::size_t out_len = output_length(in_len, width_, stride_);

  Tensor out({batch, out_ch, out_len});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < out_ch; ++c) {
      for (std::size_t m = 0; m < out_len; ++m) {
        double acc = bias.data[c];
        for (std::size_t ci = 0; ci < in_ch; ++ci) {
          const double* w = &weight.data[(c * in_ch + ci) * width_];
          const double* x = &input.data[(b * in_ch + ci) * in_len + m * stride_];
          for (std::size_t j = 0; j < width_; ++j) acc += w[j] * x[j];
        }
        out.at(b, c, m) = acc;
      }
    }
  }
  if (keep_cache) {
    cached_input_ = input;
    has_cache_ = true;
  }
  return out;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("conv1d: backward called without a cached forward");
  const Tensor& input = cached_input_;
  const std::size_t batch = input.dim(0), in_ch = input.dim(1), in_len = input.dim(2);
  const std::size_t out_ch = weight.dim(0);
  const std::size_t out_len = output_length(in_len, width_, stride_);
  if (grad_out.shape != std::vector<std::size_t>{batch, out_ch, out_len}) {
    throw DimensionError("conv1d: grad shape " + shape_to_string(grad_out.shape) +
                         " does not match forward output");
  }

  weight_grad = Tensor::zeros_like(weight);
  bias_grad = Tensor::zeros_like(bias);
  Tensor grad_in = Tensor::zeros_like(input);

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < out_ch; ++c) {
      for (std::size_t m = 0; m < out_len; ++m) {
        const double g = grad_out.at(b, c, m);
        if (g == 0.0) continue;
        bias_grad.data[c] += g;
        for (std::size_t ci = 0; ci < in_ch; ++ci) {
          double* wg = &weight_grad.data[(c * in_ch + ci) * width_];
          const double* w = &weight.data[(c * in_ch + ci) * width_];
          const double* x = &input.data[(b * in_ch + ci) * in_len + m * stride_];
          double* gi = &grad_in.data[(b * in_ch + ci) * in_len + m * stride_];
          for (std::size_t j = 0; j < width_; ++j) {
            wg[j] += g * x[j];
            gi[j] += g * w[j];
          }
        }
      }
    }
  }
  has_cache_ = false;
  cached_input_ = Tensor();
  return grad_in;
}

void Conv1d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad});
  out.push_back({prefix + ".bias", &bias, &bias_grad});
}

// ------------------------------------------------------------- AvgPool1d

AvgPool1d::AvgPool1d(std::size_t pool) : pool_(pool) {
  if (pool < 1) throw ArgumentError("avgpool1d: pool size must be >= 1");
}

Tensor AvgPool1d::forward(const Tensor& input, bool keep_cache) {
  require_rank(input, 3, "avgpool1d");
  const std::size_t batch = input.dim(0), ch = input.dim(1), len = input.dim(2);
  if (pool_ > len) {
    throw DimensionError("avgpool1d: pool " + std::to_string(pool_) +
                         " exceeds input length " + std::to_string(len));
  }
  const std::size_t out_len = len / pool_;
  Tensor out({batch, ch, out_len});
  const double inv = 1.0 / static_cast<double>(pool_);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t m = 0; m < out_len; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < pool_; ++j) acc += input.at(b, c, m * pool_ + j);
        out.at(b, c, m) = acc * inv;
      }
    }
  }
  if (keep_cache) {
    cached_input_shape_ = input.shape;
    has_cache_ = true;
  }
  return out;
}

Tensor AvgPool1d::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("avgpool1d: backward called without a cached forward");
  Tensor grad_in(cached_input_shape_);
  const std::size_t batch = cached_input_shape_[0], ch = cached_input_shape_[1],
                    len = cached_input_shape_[2];
  const std::size_t out_len = len / pool_;
  const double inv = 1.0 / static_cast<double>(pool_);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t m = 0; m < out_len; ++m) {
        const double g = grad_out.at(b, c, m) * inv;
        for (std::size_t j = 0; j < pool_; ++j) grad_in.at(b, c, m * pool_ + j) = g;
      }
    }
  }
  has_cache_ = false;
  return grad_in;
}

// ------------------------------------------------------------------ Relu

Tensor Relu::forward(const Tensor& input, bool keep_cache) {
  Tensor out(input.shape);
  for (std::size_t i = 0; i < input.numel(); ++i)
    out.data[i] = input.data[i] > 0.0 ? input.data[i] : 0.0;
  if (keep_cache) {
    cached_input_ = input;
    has_cache_ = true;
  }
  return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("relu: backward called without a cached forward");
  if (!grad_out.same_shape(cached_input_)) {
    throw DimensionError("relu: grad shape " + shape_to_string(grad_out.shape) +
                         " does not match forward input");
  }
  Tensor grad_in(grad_out.shape);
  for (std::size_t i = 0; i < grad_out.numel(); ++i)
    grad_in.data[i] = cached_input_.data[i] > 0.0 ? grad_out.data[i] : 0.0;
  has_cache_ = false;
  cached_input_ = Tensor();
  return grad_in;
}

// --------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& input, bool keep_cache) {
  require_rank(input, 3, "flatten");
  if (keep_cache) {
    cached_input_shape_ = input.shape;
    has_cache_ = true;
  }
  return Tensor({input.dim(0), input.dim(1) * input.dim(2)}, input.data);
}

Tensor Flatten::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("flatten: backward called without a cached forward");
  Tensor grad_in(cached_input_shape_, grad_out.data);
  has_cache_ = false;
  return grad_in;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  weight = glorot_init(in_dim, out_dim, {in_dim, out_dim}, rng);
  bias = Tensor({out_dim});
  weight_grad = Tensor::zeros_like(weight);
  bias_grad = Tensor::zeros_like(bias);
}

Tensor Dense::forward(const Tensor& input, bool keep_cache) {
  require_rank(input, 2, "dense");
  if (input.dim(1) != weight.dim(0)) {
    throw DimensionError("dense: input width " + std::to_string(input.dim(1)) +
                         " does not match fan-in " + std::to_string(weight.dim(0)));
  }
  Tensor out = matmul(input, weight);
  for (std::size_t b = 0; b < out.dim(0); ++b)
    for (std::size_t j = 0; j < out.dim(1); ++j) out.at(b, j) += bias.data[j];
  if (keep_cache) {
    cached_input_ = input;
    has_cache_ = true;
  }
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("dense: backward called without a cached forward");
  const std::size_t batch = cached_input_.dim(0);
  if (grad_out.shape != std::vector<std::size_t>{batch, weight.dim(1)}) {
    throw DimensionError("dense: grad shape " + shape_to_string(grad_out.shape) +
                         " does not match forward output");
  }

  // W grad = X^T g, bias grad = column sums, input grad = g W^T.
  weight_grad = Tensor::zeros_like(weight);
  bias_grad = Tensor::zeros_like(bias);
  const std::size_t din = weight.dim(0), dout = weight.dim(1);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < din; ++i) {
      const double x = cached_input_.at(b, i);
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < dout; ++j) weight_grad.at(i, j) += x * grad_out.at(b, j);
    }
    for (std::size_t j = 0; j < dout; ++j) bias_grad.data[j] += grad_out.at(b, j);
  }

  Tensor grad_in({batch, din});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < dout; ++j) {
      const double g = grad_out.at(b, j);
      if (g == 0.0) continue;
      for (std::size_t i = 0; i < din; ++i) grad_in.at(b, i) += g * weight.at(i, j);
    }
  }
  has_cache_ = false;
  cached_input_ = Tensor();
  return grad_in;
}

void Dense::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad});
  out.push_back({prefix + ".bias", &bias, &bias_grad});
}

// ------------------------------------------------------- GradientReversal

GradientReversal::GradientReversal(double lambda) { set_lambda(lambda); }

void GradientReversal::set_lambda(double lambda) {
  if (lambda < 0.0) throw ArgumentError("gradient_reversal: lambda must be >= 0");
  lambda_ = lambda;
}

Tensor GradientReversal::forward(const Tensor& input, bool) { return input; }

Tensor GradientReversal::backward(const Tensor& grad_out) {
  Tensor grad_in(grad_out.shape);
  for (std::size_t i = 0; i < grad_out.numel(); ++i)
    grad_in.data[i] = -lambda_ * grad_out.data[i];
  return grad_in;
}

// --------------------------------------------------- softmax cross-entropy

CrossEntropyResult masked_softmax_cross_entropy(const Tensor& logits,
                                                const std::vector<int>& labels,
                                                const std::vector<std::uint8_t>& mask) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch || mask.size() != batch) {
    throw DimensionError("softmax_cross_entropy: labels/mask length does not match batch");
  }
  std::size_t active = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (!mask[b]) continue;
    ++active;
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= classes) {
      throw ArgumentError("softmax_cross_entropy: label " + std::to_string(labels[b]) +
                          " out of range [0, " + std::to_string(classes) + ")");
    }
  }
  if (active == 0) throw ArgumentError("softmax_cross_entropy: no rows selected by mask");

  CrossEntropyResult res{0.0, Tensor::zeros_like(logits)};
  const double inv = 1.0 / static_cast<double>(active);
  for (std::size_t b = 0; b < batch; ++b) {
    if (!mask[b]) continue;
    const double* row = &logits.data[b * classes];
    double mx = row[0];
    for (std::size_t k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
    double denom = 0.0;
    for (std::size_t k = 0; k < classes; ++k) denom += std::exp(row[k] - mx);
    const double log_denom = std::log(denom);
    res.loss += (log_denom - (row[static_cast<std::size_t>(labels[b])] - mx)) * inv;
    for (std::size_t k = 0; k < classes; ++k) {
      double p = std::exp(row[k] - mx) / denom;
      if (k == static_cast<std::size_t>(labels[b])) p -= 1.0;
      res.grad_logits.at(b, k) = p * inv;
    }
  }
  return res;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels) {
  return masked_softmax_cross_entropy(logits, labels,
                                      std::vector<std::uint8_t>(logits.dim(0), 1));
}

}  // namespace dann

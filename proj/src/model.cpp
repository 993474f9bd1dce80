#include "dann/model.hpp"

#include <algorithm>

#include "dann/errors.hpp"

namespace dann {

void ArchConfig::validate() const {
  if (input_length < 1 || conv1_width < 1 || conv1_maps < 1 || conv1_stride < 1 ||
      conv2_width < 1 || conv2_maps < 1 || conv2_stride < 1 || pool < 1 ||
      head_depth < 1 || head_width < 1) {
    throw ConfigError("architecture dimensions must all be positive");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  feature_dim();  // throws if the stack does not fit input_length
}

std::size_t ArchConfig::feature_dim() const {
  std::size_t len = Conv1d::output_length(input_length, conv1_width, conv1_stride);
  if (len < pool) throw ConfigError("input too short: conv1 output shorter than pool");
  len /= pool;
  len = Conv1d::output_length(len, conv2_width, conv2_stride);
  if (len < pool) throw ConfigError("input too short: conv2 output shorter than pool");
  len /= pool;
  return len * conv2_maps;
}

namespace {

std::vector<std::unique_ptr<Layer>> make_head(std::size_t in_dim, std::size_t hidden,
                                              std::size_t depth, std::size_t out_dim,
                                              Rng& rng) {
  std::vector<std::unique_ptr<Layer>> layers;
  std::size_t cur = in_dim;
  for (std::size_t i = 0; i + 1 < depth; ++i) {
    layers.push_back(std::make_unique<Dense>(cur, hidden, rng));
    layers.push_back(std::make_unique<Relu>());
    cur = hidden;
  }
  layers.push_back(std::make_unique<Dense>(cur, out_dim, rng));
  return layers;
}

Tensor run_forward(std::vector<std::unique_ptr<Layer>>& layers, const Tensor& x,
                   bool keep_cache) {
  Tensor cur = x;
  for (auto& layer : layers) cur = layer->forward(cur, keep_cache);
  return cur;
}

Tensor run_backward(std::vector<std::unique_ptr<Layer>>& layers, const Tensor& grad) {
  Tensor cur = grad;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

void collect(std::vector<std::unique_ptr<Layer>>& layers, const std::string& prefix,
             std::vector<ParamRef>& out) {
  std::size_t idx = 0;
  for (auto& layer : layers) {
    layer->collect_params(prefix + "." + std::to_string(idx), out);
    ++idx;
  }
}

}  // namespace

DannModel::DannModel(const ArchConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);

  feature_layers_.push_back(std::make_unique<Conv1d>(1, config_.conv1_maps,
                                                     config_.conv1_width,
                                                     config_.conv1_stride, rng));
  feature_layers_.push_back(std::make_unique<AvgPool1d>(config_.pool));
  feature_layers_.push_back(std::make_unique<Relu>());
  feature_layers_.push_back(std::make_unique<Conv1d>(config_.conv1_maps, config_.conv2_maps,
                                                     config_.conv2_width,
                                                     config_.conv2_stride, rng));
  feature_layers_.push_back(std::make_unique<AvgPool1d>(config_.pool));
  feature_layers_.push_back(std::make_unique<Relu>());
  feature_layers_.push_back(std::make_unique<Flatten>());

  const std::size_t feat = config_.feature_dim();
  label_layers_ = make_head(feat, config_.head_width, config_.head_depth,
                            config_.num_classes, rng);

  auto grl = std::make_unique<GradientReversal>(0.0);
  grl_ = grl.get();
  domain_layers_.push_back(std::move(grl));
  auto domain_tail = make_head(feat, config_.head_width, config_.head_depth, 2, rng);
  for (auto& layer : domain_tail) domain_layers_.push_back(std::move(layer));
}

void DannModel::set_lambda(double lambda) { grl_->set_lambda(lambda); }

Tensor DannModel::feature_forward(const Tensor& x, bool keep_cache) {
  if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != config_.input_length) {
    throw DimensionError("model input must be [B x 1 x " +
                         std::to_string(config_.input_length) + "], got " +
                         shape_to_string(x.shape));
  }
  return run_forward(feature_layers_, x, keep_cache);
}

Tensor DannModel::label_head_forward(const Tensor& features, bool keep_cache) {
  return run_forward(label_layers_, features, keep_cache);
}

Tensor DannModel::domain_head_forward(const Tensor& features, bool keep_cache) {
  return run_forward(domain_layers_, features, keep_cache);
}

Tensor DannModel::label_head_backward(const Tensor& grad_logits) {
  return run_backward(label_layers_, grad_logits);
}

Tensor DannModel::domain_head_backward(const Tensor& grad_logits) {
  return run_backward(domain_layers_, grad_logits);
}

void DannModel::feature_backward(const Tensor& grad_features) {
  run_backward(feature_layers_, grad_features);
}

Tensor DannModel::forward_label(const Tensor& x) {
  return label_head_forward(feature_forward(x, false), false);
}

Tensor DannModel::forward_domain(const Tensor& x) {
  return domain_head_forward(feature_forward(x, false), false);
}

std::vector<int> DannModel::predict(const Tensor& x) {
  Tensor logits = forward_label(x);
  std::vector<int> out(logits.dim(0));
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    const double* row = &logits.data[b * logits.dim(1)];
    out[b] = static_cast<int>(std::max_element(row, row + logits.dim(1)) - row);
  }
  return out;
}

std::vector<ParamRef> DannModel::feature_params() {
  std::vector<ParamRef> out;
  collect(feature_layers_, "feature", out);
  return out;
}

std::vector<ParamRef> DannModel::label_params() {
  std::vector<ParamRef> out;
  collect(label_layers_, "label", out);
  return out;
}

std::vector<ParamRef> DannModel::domain_params() {
  std::vector<ParamRef> out;
  collect(domain_layers_, "domain", out);
  return out;
}

std::vector<ParamRef> DannModel::all_params() {
  std::vector<ParamRef> out = feature_params();
  for (auto& p : label_params()) out.push_back(p);
  for (auto& p : domain_params()) out.push_back(p);
  return out;
}

}  // namespace dann

#include "dann/optim.hpp"

#include <cmath>

#include "dann/errors.hpp"
#include "dann/layers.hpp"

namespace dann {

void TrainConfig::validate() const {
  if (mu0 <= 0.0) throw ConfigError("mu0 must be > 0");
  if (flip_prob < 0.0 || flip_prob >= 1.0) throw ConfigError("flip_prob must be in [0, 1)");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (lambda_override && *lambda_override < 0.0)
    throw ConfigError("lambda_override must be >= 0");
}

namespace {

void check_progress(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ArgumentError("training progress must be in [0, 1], got " + std::to_string(p));
  }
}

}  // namespace

double lr_schedule(double p, const TrainConfig& cfg) {
  check_progress(p);
  return cfg.mu0 / std::pow(1.0 + cfg.alpha * p, cfg.beta);
}

double lambda_schedule(double p, const TrainConfig& cfg) {
  check_progress(p);
  return 2.0 / (1.0 + std::exp(-cfg.gamma * p)) - 1.0;
}

void MomentumState::step(const std::vector<ParamRef>& params, double mu, double momentum) {
  for (const ParamRef& p : params) {
    auto [it, inserted] = velocity_.try_emplace(p.name, Tensor::zeros_like(*p.value));
    Tensor& v = it->second;
    if (!v.same_shape(*p.value) || !p.grad->same_shape(*p.value)) {
      throw DimensionError("optimizer state shape mismatch for " + p.name);
    }
    for (std::size_t i = 0; i < v.numel(); ++i) {
      v.data[i] = momentum * v.data[i] + p.grad->data[i];
      p.value->data[i] -= mu * v.data[i];
    }
  }
}

std::vector<std::uint8_t> flip_domain_labels(const std::vector<std::uint8_t>& labels,
                                             double flip_prob, Rng& rng) {
  std::vector<std::uint8_t> out(labels.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool flip = flip_prob > 0.0 && unit(rng) < flip_prob;
    out[i] = flip ? static_cast<std::uint8_t>(1 - labels[i]) : labels[i];
  }
  return out;
}

Trainer::Trainer(DannModel& model, const TrainConfig& cfg, TrainMode mode)
    : model_(model), cfg_(cfg), mode_(mode), flip_rng_(cfg.seed ^ 0x9e3779b97f4a7c15ull) {
  cfg_.validate();
}

namespace {

double masked_accuracy(const Tensor& logits, const std::vector<int>& labels,
                       const std::vector<std::uint8_t>& mask) {
  std::size_t hits = 0, total = 0;
  const std::size_t classes = logits.dim(1);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    if (!mask[b]) continue;
    const double* row = &logits.data[b * classes];
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k)
      if (row[k] > row[best]) best = k;
    hits += static_cast<int>(best) == labels[b] ? 1 : 0;
    ++total;
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

}  // namespace

StepMetrics Trainer::train_step(const Batch& batch, std::size_t step) {
  const std::size_t batch_n = batch.size();
  if (batch_n == 0) throw ArgumentError("train_step: empty batch");

  std::vector<std::uint8_t> source_mask(batch_n);
  std::size_t source_count = 0;
  for (std::size_t b = 0; b < batch_n; ++b) {
    source_mask[b] = batch.domain_labels[b] == 0 ? 1 : 0;
    source_count += source_mask[b];
  }
  if (source_count == 0) {
    throw ArgumentError("train_step: batch has no source samples; label loss undefined");
  }

  StepMetrics m;
  m.p = static_cast<double>(step) / static_cast<double>(cfg_.total_steps);
  m.mu = lr_schedule(m.p, cfg_);
  const double lambda =
      mode_ == TrainMode::Dann
          ? (cfg_.lambda_override ? *cfg_.lambda_override : lambda_schedule(m.p, cfg_))
          : 0.0;
  m.lambda = lambda;

  Tensor features = model_.feature_forward(batch.frames, true);

  Tensor label_logits = model_.label_head_forward(features, true);
  CrossEntropyResult label_ce =
      masked_softmax_cross_entropy(label_logits, batch.class_labels, source_mask);
  m.label_loss = label_ce.loss;
  m.source_train_acc = masked_accuracy(label_logits, batch.class_labels, source_mask);

  Tensor feature_grad = model_.label_head_backward(label_ce.grad_logits);

  if (mode_ == TrainMode::Dann) {
    model_.set_lambda(lambda);
    Tensor domain_logits = model_.domain_head_forward(features, true);

    std::vector<int> domain_labels(batch_n);
    for (std::size_t b = 0; b < batch_n; ++b) domain_labels[b] = batch.domain_labels[b];
    m.domain_acc = masked_accuracy(domain_logits, domain_labels,
                                   std::vector<std::uint8_t>(batch_n, 1));

    std::vector<std::uint8_t> flipped =
        flip_domain_labels(batch.domain_labels, cfg_.flip_prob, flip_rng_);
    std::vector<int> flipped_int(batch_n);
    for (std::size_t b = 0; b < batch_n; ++b) flipped_int[b] = flipped[b];

    CrossEntropyResult domain_ce = softmax_cross_entropy(domain_logits, flipped_int);
    m.domain_loss_raw = domain_ce.loss;
    m.domain_loss_scaled = lambda * domain_ce.loss;

    // Head gradients stay un-negated; the GRL inside the domain path
    // hands back -lambda * dL_d/df for the shared trunk.
    Tensor reversed = model_.domain_head_backward(domain_ce.grad_logits);
    feature_grad = add(feature_grad, reversed);
  }

  model_.feature_backward(feature_grad);

  std::vector<ParamRef> params = model_.feature_params();
  for (auto& p : model_.label_params()) params.push_back(p);
  if (mode_ == TrainMode::Dann) {
    for (auto& p : model_.domain_params()) params.push_back(p);
  }
  momentum_.step(params, m.mu, cfg_.momentum);
  return m;
}

}  // namespace dann

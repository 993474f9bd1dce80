#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dann/data.hpp"
#include "dann/model.hpp"
#include "dann/tensor.hpp"

namespace dann {

struct TrainConfig {
  double mu0 = 0.01;
  double alpha = 10.0;
  double beta = 0.75;
  double gamma = 10.0;
  double momentum = 0.9;
  double flip_prob = 0.1;
  std::size_t total_steps = 1000;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;

  // Pins lambda to a constant instead of the sigmoid ramp (diagnostics
  // and the baseline-equivalence check).
  std::optional<double> lambda_override;

  void validate() const;
};

/// mu_p = mu0 / (1 + alpha * p)^beta, p in [0, 1].
double lr_schedule(double p, const TrainConfig& cfg);

/// lambda_p = 2 / (1 + exp(-gamma * p)) - 1, p in [0, 1].
double lambda_schedule(double p, const TrainConfig& cfg);

/// Heavy-ball velocities keyed by parameter name.
class MomentumState {
 public:
  /// v <- momentum * v + grad; value <- value - mu * v.
  void step(const std::vector<ParamRef>& params, double mu, double momentum);

 private:
  std::unordered_map<std::string, Tensor> velocity_;
};

std::vector<std::uint8_t> flip_domain_labels(const std::vector<std::uint8_t>& labels,
                                             double flip_prob, Rng& rng);

struct StepMetrics {
  double p = 0.0;
  double mu = 0.0;
  double lambda = 0.0;
  double label_loss = 0.0;
  double domain_loss_raw = 0.0;
  double domain_loss_scaled = 0.0;
  double source_train_acc = 0.0;
  double domain_acc = 0.0;  // on un-flipped labels
};

enum class TrainMode { Baseline, Dann };

/// One optimizer run: owns the momentum state and the label-flip RNG,
/// drives saddle-point steps on a borrowed model.
class Trainer {
 public:
  Trainer(DannModel& model, const TrainConfig& cfg, TrainMode mode);

  /// One SGD step on one batch; step counts from 0 so p = step/total_steps.
  StepMetrics train_step(const Batch& batch, std::size_t step);

  TrainMode mode() const { return mode_; }

 private:
  DannModel& model_;
  TrainConfig cfg_;
  TrainMode mode_;
  MomentumState momentum_;
  Rng flip_rng_;
};

}  // namespace dann
